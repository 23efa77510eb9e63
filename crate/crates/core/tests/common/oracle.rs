//! A reference interpreter written directly against the Wasm subset, with
//! its own numerics. It shares nothing with the extracted algorithms beyond
//! the module data types.

use spectec_core::runtime::wasm::{Func, Instr, Module};
use spectec_core::runtime::{NumType, TrapResult, Value};

const NAN32: u32 = 0x7fc0_0000;
const NAN64: u64 = 0x7ff8_0000_0000_0000;

fn width(t: NumType) -> u32 {
    match t {
        NumType::I32 | NumType::F32 => 32,
        NumType::I64 | NumType::F64 => 64,
    }
}

fn mask(w: u32) -> u64 {
    if w == 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

fn signed(x: u64, w: u32) -> i128 {
    let x = x & mask(w);
    if x >> (w - 1) & 1 == 1 {
        x as i128 - (1i128 << w)
    } else {
        x as i128
    }
}

fn int_value(t: NumType, x: u64) -> Value {
    match t {
        NumType::I32 => Value::I32((x & mask(32)) as u32),
        _ => Value::I64(x),
    }
}

fn fbits(v: Value) -> f64 {
    match v {
        Value::F32(b) => f32::from_bits(b) as f64,
        Value::F64(b) => f64::from_bits(b),
        _ => unreachable!(),
    }
}

fn float_value(t: NumType, x: f64) -> Value {
    match t {
        NumType::F32 if x.is_nan() => Value::F32(NAN32),
        NumType::F32 => Value::F32((x as f32).to_bits()),
        _ if x.is_nan() => Value::F64(NAN64),
        _ => Value::F64(x.to_bits()),
    }
}

fn sign_bit(t: NumType) -> u64 {
    1 << (width(t) - 1)
}

pub fn unop(t: NumType, op: &str, v: Value) -> Value {
    let w = width(t);
    let x = v.bits();
    if t.is_int() {
        let r = match op {
            "clz" => (0..w).rev().take_while(|i| x >> i & 1 == 0).count() as u64,
            "ctz" => (0..w).take_while(|i| x >> i & 1 == 0).count() as u64,
            "popcnt" => (0..w).filter(|i| x >> i & 1 == 1).count() as u64,
            _ => panic!("unknown unop {op}"),
        };
        return int_value(t, r);
    }
    let bits = match op {
        "neg" => x ^ sign_bit(t),
        "abs" => x & !sign_bit(t),
        "sqrt" => {
            // f32 square roots computed in f64 round correctly.
            return float_value(t, fbits(v).sqrt());
        }
        _ => panic!("unknown unop {op}"),
    };
    match t {
        NumType::F32 => Value::F32(bits as u32),
        _ => Value::F64(bits),
    }
}

/// `None` is a trap.
pub fn binop(t: NumType, op: &str, a: Value, b: Value) -> Option<Value> {
    let w = width(t);
    if t.is_int() {
        let (x, y) = (a.bits() as u128, b.bits() as u128);
        let (sx, sy) = (signed(a.bits(), w), signed(b.bits(), w));
        let k = (y % w as u128) as u32;
        let m = mask(w) as u128;
        let r: u128 = match op {
            "add" => x + y,
            "sub" => x + (m + 1) - y,
            "mul" => x * y,
            "div_u" if y == 0 => return None,
            "div_u" => x / y,
            "rem_u" if y == 0 => return None,
            "rem_u" => x % y,
            "div_s" if sy == 0 => return None,
            "div_s" => {
                let q = sx / sy;
                if q >= 1i128 << (w - 1) {
                    return None;
                }
                q as u128
            }
            "rem_s" if sy == 0 => return None,
            "rem_s" => (sx % sy) as u128,
            "and" => x & y,
            "or" => x | y,
            "xor" => x ^ y,
            "shl" => x << k,
            "shr_u" => x >> k,
            "shr_s" => (sx >> k) as u128,
            "rotl" => (x << k) | (x >> ((w - k) % w)),
            "rotr" => (x >> k) | (x << ((w - k) % w)),
            _ => panic!("unknown binop {op}"),
        };
        return Some(int_value(t, (r & m) as u64));
    }
    let (x, y) = (fbits(a), fbits(b));
    let r = match op {
        "add" => x + y,
        "sub" => x - y,
        "mul" => x * y,
        "div" => x / y,
        "min" | "max" => {
            if x.is_nan() || y.is_nan() {
                return Some(float_value(t, f64::NAN));
            }
            if x == 0.0 && y == 0.0 {
                let (sa, sb) = (a.bits() & sign_bit(t), b.bits() & sign_bit(t));
                let s = if op == "min" { sa | sb } else { sa & sb };
                return Some(match t {
                    NumType::F32 => Value::F32(s as u32),
                    _ => Value::F64(s),
                });
            }
            let pick_x = if op == "min" { x < y } else { x > y };
            return Some(if pick_x { a } else { b });
        }
        _ => panic!("unknown binop {op}"),
    };
    // Sums, products and quotients of two f32 values are exact in f64 up to
    // the final rounding, so one rounding to f32 gives the correct result.
    Some(float_value(t, r))
}

pub fn testop(op: &str, v: Value) -> Value {
    assert_eq!(op, "eqz");
    Value::I32((v.bits() == 0) as u32)
}

pub fn relop(t: NumType, op: &str, a: Value, b: Value) -> Value {
    let w = width(t);
    let r = if t.is_int() {
        let (x, y) = (a.bits(), b.bits());
        let (sx, sy) = (signed(x, w), signed(y, w));
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
            _ => panic!("unknown relop {op}"),
        }
    } else {
        let (x, y) = (fbits(a), fbits(b));
        match op {
            "eq" => x == y,
            "ne" => x != y,
            "lt" => x < y,
            "gt" => x > y,
            "le" => x <= y,
            "ge" => x >= y,
            _ => panic!("unknown relop {op}"),
        }
    };
    Value::I32(r as u32)
}

enum Ctl {
    Br(u32),
    Return,
    Trap,
    /// Step budget exhausted.
    Halt,
}

struct Machine<'m> {
    module: &'m Module,
    globals: Vec<Value>,
    steps: u64,
    depth: u32,
}

type Flow = Result<(), Ctl>;

impl Machine<'_> {
    fn call(&mut self, idx: u32, stack: &mut Vec<Value>) -> Flow {
        let f: &Func = &self.module.funcs[idx as usize];
        let at = stack.len() - f.params.len();
        let mut locals: Vec<Value> = stack.split_off(at);
        locals.extend(f.locals.iter().map(|t| t.zero()));
        if self.depth > 200 {
            return Err(Ctl::Halt);
        }
        self.depth += 1;
        let mut inner = Vec::new();
        let r = self.block(&f.body, f.results.len(), &mut locals, &mut inner);
        self.depth -= 1;
        match r {
            Ok(()) | Err(Ctl::Br(0)) | Err(Ctl::Return) => {
                let n = f.results.len();
                stack.extend_from_slice(&inner[inner.len() - n..]);
                Ok(())
            }
            Err(Ctl::Br(_)) => panic!("branch escaped a function"),
            Err(c) => Err(c),
        }
    }

    /// Runs `body` as a label of arity `arity` whose branch target is its end.
    fn block(&mut self, body: &[Instr], arity: usize, locals: &mut Vec<Value>, stack: &mut Vec<Value>) -> Flow {
        let base = stack.len();
        match self.seq(body, locals, stack) {
            Ok(()) => Ok(()),
            Err(Ctl::Br(0)) => {
                let keep = stack.split_off(stack.len() - arity);
                stack.truncate(base);
                stack.extend(keep);
                Ok(())
            }
            Err(Ctl::Br(n)) => Err(Ctl::Br(n - 1)),
            Err(c) => Err(c),
        }
    }

    fn seq(&mut self, body: &[Instr], locals: &mut Vec<Value>, stack: &mut Vec<Value>) -> Flow {
        for i in body {
            self.steps += 1;
            if self.steps > 2_000_000 {
                return Err(Ctl::Halt);
            }
            self.instr(i, locals, stack)?;
        }
        Ok(())
    }

    fn instr(&mut self, i: &Instr, locals: &mut Vec<Value>, stack: &mut Vec<Value>) -> Flow {
        let mut pop = || stack.pop().expect("validated operand");
        match i {
            Instr::Const(v) => stack.push(*v),
            Instr::Unop(t, op) => {
                let a = pop();
                stack.push(unop(*t, op, a));
            }
            Instr::Binop(t, op) => {
                let b = pop();
                let a = pop();
                stack.push(binop(*t, op, a, b).ok_or(Ctl::Trap)?);
            }
            Instr::Testop(_, op) => {
                let a = pop();
                stack.push(testop(op, a));
            }
            Instr::Relop(t, op) => {
                let b = pop();
                let a = pop();
                stack.push(relop(*t, op, a, b));
            }
            Instr::Nop => {}
            Instr::Unreachable => return Err(Ctl::Trap),
            Instr::Drop => {
                pop();
            }
            Instr::Select => {
                let c = pop();
                let b = pop();
                let a = pop();
                stack.push(if c.bits() != 0 { a } else { b });
            }
            Instr::LocalGet(x) => stack.push(locals[*x as usize]),
            Instr::LocalSet(x) => locals[*x as usize] = pop(),
            Instr::LocalTee(x) => {
                let v = *stack.last().expect("validated operand");
                locals[*x as usize] = v;
            }
            Instr::GlobalGet(x) => stack.push(self.globals[*x as usize]),
            Instr::GlobalSet(x) => self.globals[*x as usize] = pop(),
            Instr::Block(bt, body) => self.block(body, bt.iter().count(), locals, stack)?,
            Instr::Loop(_, body) => {
                let base = stack.len();
                loop {
                    match self.seq(body, locals, stack) {
                        Ok(()) => break,
                        Err(Ctl::Br(0)) => stack.truncate(base),
                        Err(Ctl::Br(n)) => return Err(Ctl::Br(n - 1)),
                        Err(c) => return Err(c),
                    }
                }
            }
            Instr::If(bt, a, b) => {
                let c = pop();
                let body = if c.bits() != 0 { a } else { b };
                self.block(body, bt.iter().count(), locals, stack)?;
            }
            Instr::Br(l) => return Err(Ctl::Br(*l)),
            Instr::BrIf(l) => {
                if pop().bits() != 0 {
                    return Err(Ctl::Br(*l));
                }
            }
            Instr::Return => return Err(Ctl::Return),
            Instr::Call(x) => self.call(*x, stack)?,
        }
        Ok(())
    }
}

/// Invokes function `idx` of a validated module. `None` when the step or
/// depth budget runs out.
pub fn invoke(module: &Module, idx: u32, args: &[Value]) -> Option<TrapResult> {
    let mut m = Machine {
        module,
        globals: module.globals.iter().map(|g| g.init).collect(),
        steps: 0,
        depth: 0,
    };
    let mut stack = args.to_vec();
    match m.call(idx, &mut stack) {
        Ok(()) => Some(TrapResult::Values(stack)),
        Err(Ctl::Trap) => Some(TrapResult::Trap),
        Err(Ctl::Halt) => None,
        Err(_) => panic!("control escaped the invocation"),
    }
}
