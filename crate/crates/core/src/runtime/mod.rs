//! Interpreter for the extracted algorithms, with the Wasm subset they cover.

pub mod interp;
pub mod numeric;
pub mod prims;
pub mod rtval;
pub mod value;
pub mod wasm;

use thiserror::Error;

pub use interp::{Interpreter, Store, DEFAULT_FUEL};
pub use rtval::RtVal;
pub use value::{NumType, Value};

/// Outcome of invoking a function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TrapResult {
    Values(Vec<Value>),
    Trap,
}

impl std::fmt::Display for TrapResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrapResult::Trap => f.write_str("trap"),
            TrapResult::Values(vs) => {
                let shown: Vec<String> = vs.iter().map(ToString::to_string).collect();
                write!(f, "[{}]", shown.join(", "))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RuntimeError {
    /// An algorithm reached a state its assertions rule out.
    #[error("interpreter bug: {0}")]
    InterpreterBug(String),
    #[error("argument mismatch: {0}")]
    ArgumentMismatch(String),
    #[error("fuel exhausted")]
    Exhausted,
}
