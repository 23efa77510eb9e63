//! Functions declared without clauses: numeric operators and state accessors.

use crate::runtime::numeric;
use crate::runtime::rtval::RtVal;
use crate::runtime::value::{NumType, Value};
use crate::runtime::wasm::{lookup_op, OpClass};
use crate::runtime::RuntimeError;

/// Administrative context that holds the locals of the running function.
pub const FRAME_CONTEXT: &str = "FRAME_";
pub const FRAME: &str = "FRAME";

fn mismatch(name: &str, args: &[RtVal]) -> RuntimeError {
    let shown: Vec<String> = args.iter().map(ToString::to_string).collect();
    RuntimeError::ArgumentMismatch(format!("${name}({})", shown.join(", ")))
}

fn typed(nt: &RtVal, vals: &[RtVal]) -> Option<(NumType, Vec<Value>)> {
    let t = nt.as_numtype()?;
    let vs: Option<Vec<Value>> = vals
        .iter()
        .map(|v| match v {
            RtVal::Num(x) if x.ty() == t => Some(*x),
            _ => None,
        })
        .collect();
    Some((t, vs?))
}

fn class_of(name: &str, arity: usize) -> Option<OpClass> {
    [OpClass::Unop, OpClass::Binop, OpClass::Testop, OpClass::Relop]
        .into_iter()
        .find(|&c| {
            let n = if matches!(c, OpClass::Unop | OpClass::Testop) {
                1
            } else {
                2
            };
            n == arity && NumType::ALL.iter().any(|&t| lookup_op(c, t, name).is_some())
        })
}

/// Applies a numeric primitive to `(nt, c_1 [, c_2])`. `Ok(None)` is an
/// undefined result; ill-typed arguments are an error.
pub fn numeric(name: &str, args: &[RtVal]) -> Option<Result<Option<Value>, RuntimeError>> {
    let (nt, vals) = args.split_first()?;
    let class = class_of(name, vals.len())?;
    let Some((t, vs)) = typed(nt, vals) else {
        return Some(Err(mismatch(name, args)));
    };
    if lookup_op(class, t, name).is_none() {
        return Some(Err(mismatch(name, args)));
    }
    Some(Ok(match (class, vs.as_slice()) {
        (OpClass::Unop, [a]) => numeric::unop(name, *a),
        (OpClass::Testop, [a]) => numeric::testop(name, *a),
        (OpClass::Binop, [a, b]) => numeric::binop(name, *a, *b),
        (OpClass::Relop, [a, b]) => numeric::relop(name, *a, *b),
        _ => unreachable!("arity checked by class_of"),
    }))
}

/// State-free auxiliaries other than the numeric operators.
pub fn pure(name: &str, args: &[RtVal]) -> Option<Result<RtVal, RuntimeError>> {
    Some(match (name, args) {
        ("default", [t]) => match t.as_numtype() {
            Some(t) => Ok(RtVal::value(t.zero())),
            None => Err(mismatch(name, args)),
        },
        ("pred", [RtVal::Nat(l)]) if *l > 0 => Ok(RtVal::Nat(l - 1)),
        ("pred", _) | ("default", _) => Err(mismatch(name, args)),
        _ => return None,
    })
}

pub fn index(name: &str, args: &[RtVal], i: usize) -> Result<usize, RuntimeError> {
    match args.get(i) {
        Some(RtVal::Nat(n)) => Ok(*n as usize),
        _ => Err(mismatch(name, args)),
    }
}

pub fn out_of_range(name: &str, args: &[RtVal]) -> RuntimeError {
    mismatch(name, args)
}
