//! Algorithmic Language and the animation pass that produces it.

pub mod animate;
pub mod ast;
pub mod dataflow;
pub mod soundness;

pub use animate::{
    animate, animate_func, animate_rule_group, guard_partiality, is_context_constructor, AlProgram, AnimationError,
    TRAP, VALUE_SYNTAX,
};
pub use ast::*;
pub use dataflow::{premise_dataflow, CyclicDependency, PremiseClass};
pub use soundness::{check_binding, SoundnessError};
