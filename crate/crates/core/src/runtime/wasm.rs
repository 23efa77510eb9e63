//! Wasm functions and modules over the covered instruction subset, a minimal
//! validator, and lowering to specification terms.

use std::fmt;

use indexmap::IndexMap;

use crate::runtime::numeric::ops_for;
use crate::runtime::rtval::RtVal;
use crate::runtime::value::{NumType, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum Instr {
    Const(Value),
    /// Operator names are the primitive names, e.g. `clz`, `add`, `lt_s`.
    Unop(NumType, &'static str),
    Binop(NumType, &'static str),
    Testop(NumType, &'static str),
    Relop(NumType, &'static str),
    Nop,
    Unreachable,
    Drop,
    Select,
    LocalGet(u32),
    LocalSet(u32),
    LocalTee(u32),
    GlobalGet(u32),
    GlobalSet(u32),
    Block(Option<NumType>, Vec<Instr>),
    Loop(Option<NumType>, Vec<Instr>),
    If(Option<NumType>, Vec<Instr>, Vec<Instr>),
    Br(u32),
    BrIf(u32),
    Return,
    Call(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpClass {
    Unop,
    Binop,
    Testop,
    Relop,
}

/// Resolves an operator name for a type to its interned form.
pub fn lookup_op(class: OpClass, t: NumType, name: &str) -> Option<&'static str> {
    let (u, b, te, r) = ops_for(t);
    let table = match class {
        OpClass::Unop => u,
        OpClass::Binop => b,
        OpClass::Testop => te,
        OpClass::Relop => r,
    };
    table.iter().copied().find(|&o| o == name)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Func {
    pub params: Vec<NumType>,
    pub results: Vec<NumType>,
    pub locals: Vec<NumType>,
    pub body: Vec<Instr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Global {
    pub ty: NumType,
    pub mutable: bool,
    pub init: Value,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Module {
    pub funcs: Vec<Func>,
    pub globals: Vec<Global>,
    /// Export name to function index.
    pub exports: IndexMap<String, u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationError {
    pub func: Option<u32>,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.func {
            Some(i) => write!(f, "function {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ValidationError {}

struct Ctrl {
    label: Vec<NumType>,
    results: Vec<NumType>,
    height: usize,
    unreachable: bool,
}

struct Validator<'a> {
    module: &'a Module,
    locals: Vec<NumType>,
    results: Vec<NumType>,
    stack: Vec<Option<NumType>>,
    ctrls: Vec<Ctrl>,
}

type VResult<T> = Result<T, String>;

impl Validator<'_> {
    fn push(&mut self, t: NumType) {
        self.stack.push(Some(t));
    }

    fn pop(&mut self) -> VResult<Option<NumType>> {
        let c = self.ctrls.last().unwrap();
        if self.stack.len() == c.height {
            return if c.unreachable {
                Ok(None)
            } else {
                Err("operand stack underflow".into())
            };
        }
        Ok(self.stack.pop().unwrap())
    }

    fn pop_expect(&mut self, t: NumType) -> VResult<()> {
        match self.pop()? {
            Some(u) if u != t => Err(format!("expected {t} but found {u}")),
            _ => Ok(()),
        }
    }

    fn pop_all(&mut self, ts: &[NumType]) -> VResult<()> {
        for t in ts.iter().rev() {
            self.pop_expect(*t)?;
        }
        Ok(())
    }

    fn unreachable(&mut self) {
        let c = self.ctrls.last_mut().unwrap();
        self.stack.truncate(c.height);
        c.unreachable = true;
    }

    fn label(&self, l: u32) -> VResult<Vec<NumType>> {
        let n = self.ctrls.len();
        if (l as usize) < n {
            Ok(self.ctrls[n - 1 - l as usize].label.clone())
        } else {
            Err(format!("unknown label {l}"))
        }
    }

    fn local(&self, x: u32) -> VResult<NumType> {
        self.locals
            .get(x as usize)
            .copied()
            .ok_or_else(|| format!("unknown local {x}"))
    }

    fn global(&self, x: u32) -> VResult<&Global> {
        self.module
            .globals
            .get(x as usize)
            .ok_or_else(|| format!("unknown global {x}"))
    }

    fn block(&mut self, label: Vec<NumType>, results: Vec<NumType>, body: &[Instr]) -> VResult<()> {
        self.ctrls.push(Ctrl {
            label,
            results: results.clone(),
            height: self.stack.len(),
            unreachable: false,
        });
        for i in body {
            self.instr(i)?;
        }
        self.pop_all(&results)?;
        let c = self.ctrls.pop().unwrap();
        if self.stack.len() != c.height {
            return Err("values left on the stack at the end of a block".into());
        }
        for t in c.results {
            self.push(t);
        }
        Ok(())
    }

    fn instr(&mut self, i: &Instr) -> VResult<()> {
        let check_op = |class, t: NumType, op: &str| {
            lookup_op(class, t, op)
                .map(|_| ())
                .ok_or_else(|| format!("{t}.{op} is not an instruction"))
        };
        match i {
            Instr::Const(v) => self.push(v.ty()),
            Instr::Unop(t, op) => {
                check_op(OpClass::Unop, *t, op)?;
                self.pop_expect(*t)?;
                self.push(*t);
            }
            Instr::Binop(t, op) => {
                check_op(OpClass::Binop, *t, op)?;
                self.pop_expect(*t)?;
                self.pop_expect(*t)?;
                self.push(*t);
            }
            Instr::Testop(t, op) => {
                check_op(OpClass::Testop, *t, op)?;
                self.pop_expect(*t)?;
                self.push(NumType::I32);
            }
            Instr::Relop(t, op) => {
                check_op(OpClass::Relop, *t, op)?;
                self.pop_expect(*t)?;
                self.pop_expect(*t)?;
                self.push(NumType::I32);
            }
            Instr::Nop => {}
            Instr::Unreachable => self.unreachable(),
            Instr::Drop => {
                self.pop()?;
            }
            Instr::Select => {
                self.pop_expect(NumType::I32)?;
                let a = self.pop()?;
                let b = self.pop()?;
                let t = match (a, b) {
                    (Some(x), Some(y)) if x != y => return Err("select operands differ in type".into()),
                    (Some(x), _) | (_, Some(x)) => Some(x),
                    _ => None,
                };
                self.stack.push(t);
            }
            Instr::LocalGet(x) => {
                let t = self.local(*x)?;
                self.push(t);
            }
            Instr::LocalSet(x) => {
                let t = self.local(*x)?;
                self.pop_expect(t)?;
            }
            Instr::LocalTee(x) => {
                let t = self.local(*x)?;
                self.pop_expect(t)?;
                self.push(t);
            }
            Instr::GlobalGet(x) => {
                let t = self.global(*x)?.ty;
                self.push(t);
            }
            Instr::GlobalSet(x) => {
                let g = self.global(*x)?;
                if !g.mutable {
                    return Err(format!("global {x} is immutable"));
                }
                let t = g.ty;
                self.pop_expect(t)?;
            }
            Instr::Block(bt, body) => {
                let r: Vec<NumType> = bt.iter().copied().collect();
                self.block(r.clone(), r, body)?;
            }
            Instr::Loop(bt, body) => {
                let r: Vec<NumType> = bt.iter().copied().collect();
                self.block(vec![], r, body)?;
            }
            Instr::If(bt, a, b) => {
                self.pop_expect(NumType::I32)?;
                let r: Vec<NumType> = bt.iter().copied().collect();
                let h = self.stack.len();
                self.block(r.clone(), r.clone(), a)?;
                self.stack.truncate(h);
                self.block(r.clone(), r, b)?;
            }
            Instr::Br(l) => {
                let ts = self.label(*l)?;
                self.pop_all(&ts)?;
                self.unreachable();
            }
            Instr::BrIf(l) => {
                self.pop_expect(NumType::I32)?;
                let ts = self.label(*l)?;
                self.pop_all(&ts)?;
                for t in ts {
                    self.push(t);
                }
            }
            Instr::Return => {
                let ts = self.results.clone();
                self.pop_all(&ts)?;
                self.unreachable();
            }
            Instr::Call(x) => {
                let f = self
                    .module
                    .funcs
                    .get(*x as usize)
                    .ok_or_else(|| format!("unknown function {x}"))?;
                let (ps, rs) = (f.params.clone(), f.results.clone());
                self.pop_all(&ps)?;
                for t in rs {
                    self.push(t);
                }
            }
        }
        Ok(())
    }
}

/// Checks operand types, label and local indices, and result arities: enough
/// to guarantee that the assertions of the extracted algorithms hold.
pub fn validate(module: &Module) -> Result<(), ValidationError> {
    for (name, &idx) in &module.exports {
        if idx as usize >= module.funcs.len() {
            return Err(ValidationError {
                func: None,
                message: format!("export `{name}` names unknown function {idx}"),
            });
        }
    }
    for (i, g) in module.globals.iter().enumerate() {
        if g.init.ty() != g.ty {
            return Err(ValidationError {
                func: None,
                message: format!("global {i} initializer has the wrong type"),
            });
        }
    }
    for (i, f) in module.funcs.iter().enumerate() {
        let mut v = Validator {
            module,
            locals: f.params.iter().chain(&f.locals).copied().collect(),
            results: f.results.clone(),
            stack: vec![],
            ctrls: vec![],
        };
        v.block(f.results.clone(), f.results.clone(), &f.body)
            .map_err(|message| ValidationError {
                func: Some(i as u32),
                message,
            })?;
    }
    Ok(())
}

fn types(ts: &[NumType]) -> RtVal {
    RtVal::List(ts.iter().map(|t| RtVal::numtype(*t)).collect())
}

fn opt(t: &Option<NumType>) -> RtVal {
    RtVal::List(t.iter().map(|t| RtVal::numtype(*t)).collect())
}

fn op(name: &str) -> RtVal {
    RtVal::con(&name.to_ascii_uppercase(), vec![])
}

/// The instruction as a specification term.
pub fn lower_instr(i: &Instr) -> RtVal {
    let con = RtVal::con;
    match i {
        Instr::Const(v) => RtVal::value(*v),
        Instr::Unop(t, o) => con("UNOP", vec![RtVal::numtype(*t), op(o)]),
        Instr::Binop(t, o) => con("BINOP", vec![RtVal::numtype(*t), op(o)]),
        Instr::Testop(t, o) => con("TESTOP", vec![RtVal::numtype(*t), op(o)]),
        Instr::Relop(t, o) => con("RELOP", vec![RtVal::numtype(*t), op(o)]),
        Instr::Nop => con("NOP", vec![]),
        Instr::Unreachable => con("UNREACHABLE", vec![]),
        Instr::Drop => con("DROP", vec![]),
        Instr::Select => con("SELECT", vec![]),
        Instr::LocalGet(x) => con("LOCAL.GET", vec![RtVal::Nat(*x as u64)]),
        Instr::LocalSet(x) => con("LOCAL.SET", vec![RtVal::Nat(*x as u64)]),
        Instr::LocalTee(x) => con("LOCAL.TEE", vec![RtVal::Nat(*x as u64)]),
        Instr::GlobalGet(x) => con("GLOBAL.GET", vec![RtVal::Nat(*x as u64)]),
        Instr::GlobalSet(x) => con("GLOBAL.SET", vec![RtVal::Nat(*x as u64)]),
        Instr::Block(bt, body) => con("BLOCK", vec![opt(bt), lower_body(body)]),
        Instr::Loop(bt, body) => con("LOOP", vec![opt(bt), lower_body(body)]),
        Instr::If(bt, a, b) => con("IF", vec![opt(bt), lower_body(a), lower_body(b)]),
        Instr::Br(l) => con("BR", vec![RtVal::Nat(*l as u64)]),
        Instr::BrIf(l) => con("BR_IF", vec![RtVal::Nat(*l as u64)]),
        Instr::Return => con("RETURN", vec![]),
        Instr::Call(x) => con("CALL", vec![RtVal::Nat(*x as u64)]),
    }
}

pub fn lower_body(body: &[Instr]) -> RtVal {
    RtVal::List(body.iter().map(lower_instr).collect())
}

/// `FUNC (FT params results) locals body`.
pub fn lower_func(f: &Func) -> RtVal {
    RtVal::con(
        "FUNC",
        vec![
            RtVal::con("FT", vec![types(&f.params), types(&f.results)]),
            types(&f.locals),
            lower_body(&f.body),
        ],
    )
}
