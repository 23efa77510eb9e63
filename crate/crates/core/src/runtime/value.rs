//! Wasm number values.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NumType {
    I32,
    I64,
    F32,
    F64,
}

impl NumType {
    pub const ALL: [NumType; 4] = [NumType::I32, NumType::I64, NumType::F32, NumType::F64];

    /// Constructor name in the specification, e.g. `I32`.
    pub fn constructor(self) -> &'static str {
        match self {
            NumType::I32 => "I32",
            NumType::I64 => "I64",
            NumType::F32 => "F32",
            NumType::F64 => "F64",
        }
    }

    pub fn from_constructor(s: &str) -> Option<Self> {
        NumType::ALL.into_iter().find(|t| t.constructor() == s)
    }

    /// Text-format name, e.g. `i32`.
    pub fn text(self) -> &'static str {
        match self {
            NumType::I32 => "i32",
            NumType::I64 => "i64",
            NumType::F32 => "f32",
            NumType::F64 => "f64",
        }
    }

    pub fn from_text(s: &str) -> Option<Self> {
        NumType::ALL.into_iter().find(|t| t.text() == s)
    }

    pub fn is_int(self) -> bool {
        matches!(self, NumType::I32 | NumType::I64)
    }

    pub fn zero(self) -> Value {
        match self {
            NumType::I32 => Value::I32(0),
            NumType::I64 => Value::I64(0),
            NumType::F32 => Value::F32(0),
            NumType::F64 => Value::F64(0),
        }
    }
}

impl fmt::Display for NumType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text())
    }
}

/// A number. Integers are stored as their bit pattern, floats as raw IEEE
/// bits so that NaN payloads survive unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    I32(u32),
    I64(u64),
    F32(u32),
    F64(u64),
}

impl Value {
    pub fn ty(self) -> NumType {
        match self {
            Value::I32(_) => NumType::I32,
            Value::I64(_) => NumType::I64,
            Value::F32(_) => NumType::F32,
            Value::F64(_) => NumType::F64,
        }
    }

    pub fn f32(x: f32) -> Self {
        Value::F32(x.to_bits())
    }

    pub fn f64(x: f64) -> Self {
        Value::F64(x.to_bits())
    }

    /// The raw bits, zero-extended.
    pub fn bits(self) -> u64 {
        match self {
            Value::I32(x) | Value::F32(x) => x as u64,
            Value::I64(x) | Value::F64(x) => x,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Value::I32(x) => write!(f, "i32.const {}", x as i32),
            Value::I64(x) => write!(f, "i64.const {}", x as i64),
            Value::F32(b) => {
                let x = f32::from_bits(b);
                if x.is_nan() {
                    let sign = if b >> 31 == 1 { "-" } else { "" };
                    write!(f, "f32.const {sign}nan:0x{:x}", b & 0x7f_ffff)
                } else {
                    write!(f, "f32.const {x:?}")
                }
            }
            Value::F64(b) => {
                let x = f64::from_bits(b);
                if x.is_nan() {
                    let sign = if b >> 63 == 1 { "-" } else { "" };
                    write!(f, "f64.const {sign}nan:0x{:x}", b & 0xf_ffff_ffff_ffff)
                } else {
                    write!(f, "f64.const {x:?}")
                }
            }
        }
    }
}
