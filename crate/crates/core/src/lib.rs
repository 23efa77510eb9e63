//! Specification pipeline: surface language, typed IL, algorithmic form,
//! an interpreter for the extracted algorithms, and renderers.

pub mod al;
pub mod corpus;
pub mod diag;
pub mod el;
pub mod harness;
pub mod il;
pub mod pipeline;
pub mod render;
pub mod runtime;
pub mod span;
