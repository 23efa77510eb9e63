//! Internal Language: typed IL, elaboration from EL, dependency analysis and
//! an independent re-checker.

pub mod ast;
pub mod deps;
pub mod elab;
pub mod types;
pub mod verify;

pub use ast::*;
pub use deps::dependency_groups;
pub use elab::{elaborate, infer_multiplicity, Elaboration};
pub use types::{IlType, IterKind, PrimType};
pub use verify::{verify, VerifyError};
