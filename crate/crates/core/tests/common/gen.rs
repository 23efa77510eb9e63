//! Seeded generator of well-typed modules over the covered instruction subset.

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectec_core::runtime::numeric::ops_for;
use spectec_core::runtime::wasm::{Func, Global, Instr, Module};
use spectec_core::runtime::{NumType, Value};

/// Counter locals reserved for generated loops, one per nesting level.
const LOOP_COUNTERS: usize = 2;

pub struct Program {
    pub module: Module,
    /// Index of the exported function.
    pub entry: u32,
    pub args: Vec<Value>,
}

pub struct Gen {
    rng: ChaCha8Rng,
    /// Size budget; shrinks as instructions are emitted.
    fuel: i32,
}

struct FnCtx<'a> {
    funcs: &'a [Func],
    globals: &'a [Global],
    /// Locals the generated code may read and write.
    locals: Vec<NumType>,
    /// Index of the first loop counter.
    counters: u32,
    results: Vec<NumType>,
    loops: usize,
}

pub fn value(rng: &mut impl Rng, t: NumType) -> Value {
    match t {
        NumType::I32 => Value::I32(match rng.gen_range(0..10) {
            0 => 0,
            1 => 1,
            2 => u32::MAX,
            3 => 0x8000_0000,
            4 => 0x7fff_ffff,
            5 => *[31u32, 32, 33, 63, 64].choose(rng).unwrap(),
            6 | 7 => rng.gen_range(0..16),
            _ => rng.gen(),
        }),
        NumType::I64 => Value::I64(match rng.gen_range(0..10) {
            0 => 0,
            1 => 1,
            2 => u64::MAX,
            3 => 1 << 63,
            4 => i64::MAX as u64,
            5 => *[31u64, 32, 63, 64, 65].choose(rng).unwrap(),
            6 | 7 => rng.gen_range(0..16),
            _ => rng.gen(),
        }),
        NumType::F32 => Value::F32(match rng.gen_range(0..12) {
            0 => 0,
            1 => 0x8000_0000,
            2 => 1f32.to_bits(),
            3 => (-1f32).to_bits(),
            4 => f32::INFINITY.to_bits(),
            5 => f32::NEG_INFINITY.to_bits(),
            6 => 0x7fc0_0000,
            7 => *[0x7fc0_0001u32, 0xffc0_0000, 0x7fa0_0000, 1, f32::MAX.to_bits()]
                .choose(rng)
                .unwrap(),
            8 | 9 => (rng.gen_range(-64i32..64) as f32 / 4.0).to_bits(),
            _ => rng.gen(),
        }),
        NumType::F64 => Value::F64(match rng.gen_range(0..12) {
            0 => 0,
            1 => 1 << 63,
            2 => 1f64.to_bits(),
            3 => (-1f64).to_bits(),
            4 => f64::INFINITY.to_bits(),
            5 => f64::NEG_INFINITY.to_bits(),
            6 => 0x7ff8_0000_0000_0000,
            7 => *[0x7ff8_0000_0000_0001u64, 0xfff8_0000_0000_0000, 1, f64::MAX.to_bits()]
                .choose(rng)
                .unwrap(),
            8 | 9 => (rng.gen_range(-64i32..64) as f64 / 4.0).to_bits(),
            _ => rng.gen(),
        }),
    }
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            fuel: 0,
        }
    }

    fn numtype(&mut self) -> NumType {
        *NumType::ALL.choose(&mut self.rng).unwrap()
    }

    fn int_type(&mut self) -> NumType {
        *[NumType::I32, NumType::I64].choose(&mut self.rng).unwrap()
    }

    fn op(&mut self, table: &[&'static str]) -> &'static str {
        table.choose(&mut self.rng).unwrap()
    }

    fn leaf(&mut self, cx: &FnCtx, t: NumType) -> Vec<Instr> {
        let locals: Vec<u32> = (0..cx.locals.len() as u32)
            .filter(|&i| cx.locals[i as usize] == t)
            .collect();
        let globals: Vec<u32> = (0..cx.globals.len() as u32)
            .filter(|&i| cx.globals[i as usize].ty == t)
            .collect();
        match self.rng.gen_range(0..4) {
            0 | 1 if !locals.is_empty() => vec![Instr::LocalGet(*locals.choose(&mut self.rng).unwrap())],
            2 if !globals.is_empty() => vec![Instr::GlobalGet(*globals.choose(&mut self.rng).unwrap())],
            _ => vec![Instr::Const(value(&mut self.rng, t))],
        }
    }

    /// Code that pushes exactly one value of type `t`.
    fn expr(&mut self, cx: &mut FnCtx, t: NumType, depth: u32) -> Vec<Instr> {
        self.fuel -= 1;
        if depth == 0 || self.fuel <= 0 {
            return self.leaf(cx, t);
        }
        let d = depth - 1;
        let (unops, binops, _, _) = ops_for(t);
        let mut out = Vec::new();
        match self.rng.gen_range(0..22) {
            0..=2 => return self.leaf(cx, t),
            3 | 4 => {
                out = self.expr(cx, t, d);
                out.push(Instr::Unop(t, self.op(unops)));
            }
            5..=8 => {
                out = self.expr(cx, t, d);
                out.extend(self.expr(cx, t, d));
                out.push(Instr::Binop(t, self.op(binops)));
            }
            9 if t == NumType::I32 => {
                let u = self.int_type();
                out = self.expr(cx, u, d);
                out.push(Instr::Testop(u, "eqz"));
            }
            10 if t == NumType::I32 => {
                let u = self.numtype();
                let (_, _, _, relops) = ops_for(u);
                out = self.expr(cx, u, d);
                out.extend(self.expr(cx, u, d));
                out.push(Instr::Relop(u, self.op(relops)));
            }
            11 => {
                out = self.expr(cx, t, d);
                out.extend(self.expr(cx, t, d));
                out.extend(self.expr(cx, NumType::I32, d));
                out.push(Instr::Select);
            }
            12 => {
                let mut body = self.stmts(cx, d);
                body.extend(self.expr(cx, t, d));
                out.push(Instr::Block(Some(t), body));
            }
            13 => {
                out = self.expr(cx, NumType::I32, d);
                let mut a = self.stmts(cx, d);
                a.extend(self.expr(cx, t, d));
                let mut b = self.stmts(cx, d);
                b.extend(self.expr(cx, t, d));
                out.push(Instr::If(Some(t), a, b));
            }
            14 => {
                // A conditional early exit from the block with a value.
                let mut body = self.expr(cx, t, d);
                body.extend(self.expr(cx, NumType::I32, d));
                body.push(Instr::BrIf(0));
                body.push(Instr::Drop);
                body.extend(self.expr(cx, t, d));
                out.push(Instr::Block(Some(t), body));
            }
            15 => {
                // A branch out of an inner block to the enclosing one.
                let mut inner = self.stmts(cx, d);
                inner.extend(self.expr(cx, t, d));
                inner.extend(self.expr(cx, NumType::I32, d));
                inner.push(Instr::BrIf(1));
                inner.push(Instr::Drop);
                let mut body = vec![Instr::Block(None, inner)];
                body.extend(self.expr(cx, t, d));
                out.push(Instr::Block(Some(t), body));
            }
            16 => {
                let mut body = self.stmts(cx, d);
                body.extend(self.expr(cx, t, d));
                body.push(Instr::Br(0));
                if self.rng.gen_bool(0.3) {
                    body.push(Instr::Nop);
                }
                out.push(Instr::Block(Some(t), body));
            }
            17 => {
                let xs: Vec<u32> = (0..cx.locals.len() as u32)
                    .filter(|&i| cx.locals[i as usize] == t)
                    .collect();
                match xs.choose(&mut self.rng) {
                    Some(&x) => {
                        out = self.expr(cx, t, d);
                        out.push(Instr::LocalTee(x));
                    }
                    None => return self.leaf(cx, t),
                }
            }
            18 => {
                let callees: Vec<u32> = (0..cx.funcs.len() as u32)
                    .filter(|&i| cx.funcs[i as usize].results == [t])
                    .collect();
                match callees.choose(&mut self.rng) {
                    Some(&f) => {
                        for p in cx.funcs[f as usize].params.clone() {
                            out.extend(self.expr(cx, p, d));
                        }
                        out.push(Instr::Call(f));
                    }
                    None => return self.leaf(cx, t),
                }
            }
            19 => {
                // A conditional return from the function.
                out = self.expr(cx, NumType::I32, d);
                let mut a = Vec::new();
                for r in cx.results.clone() {
                    a.extend(self.expr(cx, r, d));
                }
                a.push(Instr::Return);
                let b = self.expr(cx, t, d);
                out.push(Instr::If(Some(t), a, b));
            }
            20 if self.rng.gen_bool(0.2) => {
                out = self.expr(cx, NumType::I32, d);
                let a = vec![Instr::Unreachable];
                let b = self.expr(cx, t, d);
                out.push(Instr::If(Some(t), a, b));
            }
            _ => return self.leaf(cx, t),
        }
        out
    }

    /// Code with no net effect on the operand stack.
    fn stmts(&mut self, cx: &mut FnCtx, depth: u32) -> Vec<Instr> {
        let n = if depth == 0 || self.fuel <= 0 {
            0
        } else {
            self.rng.gen_range(0..3)
        };
        let mut out = Vec::new();
        for _ in 0..n {
            out.extend(self.stmt(cx, depth - 1));
        }
        out
    }

    fn stmt(&mut self, cx: &mut FnCtx, d: u32) -> Vec<Instr> {
        self.fuel -= 1;
        let mut out = Vec::new();
        match self.rng.gen_range(0..9) {
            0 | 1 if !cx.locals.is_empty() => {
                let x = self.rng.gen_range(0..cx.locals.len());
                out = self.expr(cx, cx.locals[x], d);
                out.push(Instr::LocalSet(x as u32));
            }
            2 => {
                let gs: Vec<u32> = (0..cx.globals.len() as u32)
                    .filter(|&i| cx.globals[i as usize].mutable)
                    .collect();
                if let Some(&g) = gs.choose(&mut self.rng) {
                    out = self.expr(cx, cx.globals[g as usize].ty, d);
                    out.push(Instr::GlobalSet(g));
                }
            }
            3 => {
                let t = self.numtype();
                out = self.expr(cx, t, d);
                out.push(Instr::Drop);
            }
            4 => out.push(Instr::Nop),
            5 => {
                out = self.expr(cx, NumType::I32, d);
                let a = self.stmts(cx, d);
                let b = self.stmts(cx, d);
                out.push(Instr::If(None, a, b));
            }
            6 | 7 if cx.loops < LOOP_COUNTERS => {
                let ctr = cx.counters + cx.loops as u32;
                cx.loops += 1;
                let mut body = vec![Instr::LocalGet(ctr), Instr::Testop(NumType::I32, "eqz"), Instr::BrIf(1)];
                body.extend(self.stmts(cx, d));
                body.extend([
                    Instr::LocalGet(ctr),
                    Instr::Const(Value::I32(1)),
                    Instr::Binop(NumType::I32, "sub"),
                    Instr::LocalSet(ctr),
                    Instr::Br(0),
                ]);
                cx.loops -= 1;
                out = vec![
                    Instr::Const(Value::I32(self.rng.gen_range(0..4))),
                    Instr::LocalSet(ctr),
                    Instr::Block(None, vec![Instr::Loop(None, body)]),
                ];
            }
            _ => out.push(Instr::Nop),
        }
        out
    }

    fn func(&mut self, funcs: &[Func], globals: &[Global]) -> Func {
        let params: Vec<NumType> = (0..self.rng.gen_range(0..4)).map(|_| self.numtype()).collect();
        let results: Vec<NumType> = (0..self.rng.gen_range(0..3)).map(|_| self.numtype()).collect();
        let extra: Vec<NumType> = (0..self.rng.gen_range(0..3)).map(|_| self.numtype()).collect();
        let mut cx = FnCtx {
            funcs,
            globals,
            locals: params.iter().chain(&extra).copied().collect(),
            counters: (params.len() + extra.len()) as u32,
            results: results.clone(),
            loops: 0,
        };
        self.fuel = self.rng.gen_range(4..40);
        let depth = self.rng.gen_range(1..5);
        let mut body = self.stmts(&mut cx, depth);
        for &r in &results {
            body.extend(self.expr(&mut cx, r, depth));
        }
        let mut locals = extra;
        locals.extend([NumType::I32; LOOP_COUNTERS]);
        Func {
            params,
            results,
            locals,
            body,
        }
    }

    pub fn program(&mut self) -> Program {
        let globals: Vec<Global> = (0..self.rng.gen_range(0..4))
            .map(|_| {
                let ty = self.numtype();
                Global {
                    ty,
                    mutable: self.rng.gen_bool(0.7),
                    init: value(&mut self.rng, ty),
                }
            })
            .collect();
        let mut funcs = Vec::new();
        for _ in 0..self.rng.gen_range(1..4) {
            let f = self.func(&funcs, &globals);
            funcs.push(f);
        }
        let entry = funcs.len() as u32 - 1;
        let args = funcs[entry as usize]
            .params
            .clone()
            .into_iter()
            .map(|t| value(&mut self.rng, t))
            .collect();
        let mut exports = IndexMap::new();
        exports.insert("main".to_string(), entry);
        Program {
            module: Module {
                funcs,
                globals,
                exports,
            },
            entry,
            args,
        }
    }
}
