//! Numeric primitives behind `$unop`, `$binop`, `$testop` and `$relop`.
//!
//! Every operation is total over well-typed operands; undefined results are
//! `None`. NaN results are canonical (positive, quiet, zero payload).

use crate::runtime::value::{NumType, Value};

pub const CANONICAL_NAN_32: u32 = 0x7fc0_0000;
pub const CANONICAL_NAN_64: u64 = 0x7ff8_0000_0000_0000;

fn canon32(x: f32) -> Value {
    if x.is_nan() {
        Value::F32(CANONICAL_NAN_32)
    } else {
        Value::f32(x)
    }
}

fn canon64(x: f64) -> Value {
    if x.is_nan() {
        Value::F64(CANONICAL_NAN_64)
    } else {
        Value::f64(x)
    }
}

fn bool32(b: bool) -> Value {
    Value::I32(b as u32)
}

/// `$clz`, `$ctz`, `$popcnt`, `$neg`, `$abs`, `$sqrt`.
pub fn unop(op: &str, v: Value) -> Option<Value> {
    Some(match (op, v) {
        ("clz", Value::I32(x)) => Value::I32(x.leading_zeros()),
        ("clz", Value::I64(x)) => Value::I64(x.leading_zeros() as u64),
        ("ctz", Value::I32(x)) => Value::I32(x.trailing_zeros()),
        ("ctz", Value::I64(x)) => Value::I64(x.trailing_zeros() as u64),
        ("popcnt", Value::I32(x)) => Value::I32(x.count_ones()),
        ("popcnt", Value::I64(x)) => Value::I64(x.count_ones() as u64),
        // Sign operations act on the bits and keep NaN payloads.
        ("neg", Value::F32(b)) => Value::F32(b ^ 0x8000_0000),
        ("neg", Value::F64(b)) => Value::F64(b ^ (1 << 63)),
        ("abs", Value::F32(b)) => Value::F32(b & 0x7fff_ffff),
        ("abs", Value::F64(b)) => Value::F64(b & !(1 << 63)),
        ("sqrt", Value::F32(b)) => canon32(f32::from_bits(b).sqrt()),
        ("sqrt", Value::F64(b)) => canon64(f64::from_bits(b).sqrt()),
        _ => return None,
    })
}

macro_rules! int_binop {
    ($op:expr, $a:expr, $b:expr, $u:ty, $s:ty, $wrap:path) => {{
        let (a, b): ($u, $u) = ($a, $b);
        let bits = <$u>::BITS;
        let r: $u = match $op {
            "add" => a.wrapping_add(b),
            "sub" => a.wrapping_sub(b),
            "mul" => a.wrapping_mul(b),
            "div_u" => a.checked_div(b)?,
            "rem_u" => a.checked_rem(b)?,
            "div_s" => (a as $s).checked_div(b as $s)? as $u,
            "rem_s" => {
                if b == 0 {
                    return None;
                }
                (a as $s).wrapping_rem(b as $s) as $u
            }
            "and" => a & b,
            "or" => a | b,
            "xor" => a ^ b,
            "shl" => a.wrapping_shl((b % bits as $u) as u32),
            "shr_u" => a.wrapping_shr((b % bits as $u) as u32),
            "shr_s" => (a as $s).wrapping_shr((b % bits as $u) as u32) as $u,
            "rotl" => a.rotate_left((b % bits as $u) as u32),
            "rotr" => a.rotate_right((b % bits as $u) as u32),
            _ => return None,
        };
        Some($wrap(r))
    }};
}

macro_rules! float_binop {
    ($op:expr, $a:expr, $b:expr, $f:ty, $canon:ident) => {{
        let (a, b): ($f, $f) = ($a, $b);
        let r = match $op {
            "add" => a + b,
            "sub" => a - b,
            "mul" => a * b,
            "div" => a / b,
            "min" | "max" => {
                if a.is_nan() || b.is_nan() {
                    <$f>::NAN
                } else if a == 0.0 && b == 0.0 {
                    // Signed zeros compare equal; pick by sign.
                    let neg = a.is_sign_negative();
                    let pick_a = if $op == "min" { neg } else { !neg };
                    if pick_a {
                        a
                    } else {
                        b
                    }
                } else if $op == "min" {
                    a.min(b)
                } else {
                    a.max(b)
                }
            }
            _ => return None,
        };
        Some($canon(r))
    }};
}

/// Binary arithmetic. `None` for division by zero and signed division overflow.
pub fn binop(op: &str, a: Value, b: Value) -> Option<Value> {
    match (a, b) {
        (Value::I32(x), Value::I32(y)) => int_binop!(op, x, y, u32, i32, Value::I32),
        (Value::I64(x), Value::I64(y)) => int_binop!(op, x, y, u64, i64, Value::I64),
        (Value::F32(x), Value::F32(y)) => {
            float_binop!(op, f32::from_bits(x), f32::from_bits(y), f32, canon32)
        }
        (Value::F64(x), Value::F64(y)) => {
            float_binop!(op, f64::from_bits(x), f64::from_bits(y), f64, canon64)
        }
        _ => None,
    }
}

pub fn testop(op: &str, v: Value) -> Option<Value> {
    match (op, v) {
        ("eqz", Value::I32(x)) => Some(bool32(x == 0)),
        ("eqz", Value::I64(x)) => Some(bool32(x == 0)),
        _ => None,
    }
}

/// Comparisons; the result is an `i32` 0 or 1.
pub fn relop(op: &str, a: Value, b: Value) -> Option<Value> {
    macro_rules! int_cmp {
        ($x:expr, $y:expr, $s:ty) => {{
            let (x, y) = ($x, $y);
            let (sx, sy) = (x as $s, y as $s);
            match op {
                "eq" => x == y,
                "ne" => x != y,
                "lt_u" => x < y,
                "gt_u" => x > y,
                "le_u" => x <= y,
                "ge_u" => x >= y,
                "lt_s" => sx < sy,
                "gt_s" => sx > sy,
                "le_s" => sx <= sy,
                "ge_s" => sx >= sy,
                _ => return None,
            }
        }};
    }
    macro_rules! float_cmp {
        ($x:expr, $y:expr) => {{
            let (x, y) = ($x, $y);
            match op {
                "eq" => x == y,
                "ne" => x != y,
                "lt" => x < y,
                "gt" => x > y,
                "le" => x <= y,
                "ge" => x >= y,
                _ => return None,
            }
        }};
    }
    let r = match (a, b) {
        (Value::I32(x), Value::I32(y)) => int_cmp!(x, y, i32),
        (Value::I64(x), Value::I64(y)) => int_cmp!(x, y, i64),
        (Value::F32(x), Value::F32(y)) => float_cmp!(f32::from_bits(x), f32::from_bits(y)),
        (Value::F64(x), Value::F64(y)) => float_cmp!(f64::from_bits(x), f64::from_bits(y)),
        _ => return None,
    };
    Some(bool32(r))
}

/// The operations a number type supports, as primitive names.
pub fn ops_for(
    t: NumType,
) -> (
    &'static [&'static str],
    &'static [&'static str],
    &'static [&'static str],
    &'static [&'static str],
) {
    const IU: &[&str] = &["clz", "ctz", "popcnt"];
    const FU: &[&str] = &["neg", "abs", "sqrt"];
    const IB: &[&str] = &[
        "add", "sub", "mul", "div_s", "div_u", "rem_s", "rem_u", "and", "or", "xor", "shl", "shr_s", "shr_u", "rotl",
        "rotr",
    ];
    const FB: &[&str] = &["add", "sub", "mul", "div", "min", "max"];
    const IT: &[&str] = &["eqz"];
    const IR: &[&str] = &[
        "eq", "ne", "lt_s", "lt_u", "gt_s", "gt_u", "le_s", "le_u", "ge_s", "ge_u",
    ];
    const FR: &[&str] = &["eq", "ne", "lt", "gt", "le", "ge"];
    if t.is_int() {
        (IU, IB, IT, IR)
    } else {
        (FU, FB, &[], FR)
    }
}
