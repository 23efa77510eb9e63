//! Runtime terms manipulated by algorithms.

use std::fmt;

use crate::runtime::value::{NumType, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum RtVal {
    Nat(u64),
    Num(Value),
    Con(String, Vec<RtVal>),
    /// Lists and options alike.
    List(Vec<RtVal>),
    Tuple(Vec<RtVal>),
    /// Stands for the machine state; accessor primitives consult the config.
    State,
}

pub const CONST: &str = "CONST";

impl RtVal {
    pub fn con(name: &str, args: Vec<RtVal>) -> Self {
        RtVal::Con(name.to_string(), args)
    }

    pub fn numtype(t: NumType) -> Self {
        RtVal::con(t.constructor(), vec![])
    }

    /// The value instruction `CONST t c`.
    pub fn value(v: Value) -> Self {
        RtVal::con(CONST, vec![RtVal::numtype(v.ty()), RtVal::Num(v)])
    }

    pub fn as_value(&self) -> Option<Value> {
        match self {
            RtVal::Con(c, args) if c == CONST => match args.as_slice() {
                [RtVal::Con(t, _), RtVal::Num(v)] if NumType::from_constructor(t) == Some(v.ty()) => Some(*v),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn as_numtype(&self) -> Option<NumType> {
        match self {
            RtVal::Con(t, args) if args.is_empty() => NumType::from_constructor(t),
            _ => None,
        }
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self {
            RtVal::Nat(n) => Some(*n),
            _ => None,
        }
    }

    /// Equality where a natural literal equals an integer of the same value.
    pub fn same(&self, other: &RtVal) -> bool {
        match (self, other) {
            (RtVal::Nat(n), RtVal::Num(v)) | (RtVal::Num(v), RtVal::Nat(n)) => match v {
                Value::I32(x) => *x as u64 == *n,
                Value::I64(x) => *x == *n,
                _ => false,
            },
            (RtVal::Con(a, xs), RtVal::Con(b, ys)) => a == b && seq_same(xs, ys),
            (RtVal::List(xs), RtVal::List(ys)) | (RtVal::Tuple(xs), RtVal::Tuple(ys)) => seq_same(xs, ys),
            _ => self == other,
        }
    }
}

fn seq_same(xs: &[RtVal], ys: &[RtVal]) -> bool {
    xs.len() == ys.len() && xs.iter().zip(ys).all(|(a, b)| a.same(b))
}

impl fmt::Display for RtVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(v) = self.as_value() {
            return write!(f, "({v})");
        }
        match self {
            RtVal::Nat(n) => write!(f, "{n}"),
            RtVal::Num(v) => write!(f, "{}", v.bits()),
            RtVal::Con(c, args) if args.is_empty() => f.write_str(c),
            RtVal::Con(c, args) => {
                write!(f, "({c}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            RtVal::List(xs) => {
                f.write_str("[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
            RtVal::Tuple(xs) => {
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
            RtVal::State => f.write_str("<state>"),
        }
    }
}
