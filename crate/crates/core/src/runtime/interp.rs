//! Executes instruction sequences by running the algorithm of each instruction
//! against a stack of contexts.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::al::{
    is_context_constructor, AlAlgorithm, AlCond, AlExpr, AlInstr, AlIter, AlProgram, CmpKind, TRAP, VALUE_SYNTAX,
};
use crate::el::ast::Ident;
use crate::il::ast::{IlCase, IlScript};
use crate::il::types::{IlType, IterKind};
use crate::runtime::prims::{self, FRAME, FRAME_CONTEXT};
use crate::runtime::rtval::RtVal;
use crate::runtime::value::{NumType, Value};
use crate::runtime::wasm::{lower_func, Module};
use crate::runtime::{RuntimeError, TrapResult};

/// Steps allowed per invocation unless configured otherwise.
pub const DEFAULT_FUEL: u64 = 5_000_000;
const MAX_DEPTH: usize = 50_000;

/// Functions and globals of an instantiated module, as terms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Store {
    pub funcs: Vec<RtVal>,
    pub globals: Vec<RtVal>,
}

impl Store {
    pub fn instantiate(module: &Module) -> Self {
        Store {
            funcs: module.funcs.iter().map(lower_func).collect(),
            globals: module.globals.iter().map(|g| RtVal::value(g.init)).collect(),
        }
    }
}

#[derive(Debug)]
struct Ctx {
    /// `None` for the outermost context.
    kind: Option<String>,
    fields: Vec<RtVal>,
    stack: Vec<RtVal>,
    pending: VecDeque<RtVal>,
}

struct Config<'s> {
    store: &'s mut Store,
    ctxs: Vec<Ctx>,
}

impl Config<'_> {
    fn top(&mut self) -> &mut Ctx {
        self.ctxs.last_mut().expect("root context")
    }

    fn frame_locals(&mut self) -> Option<&mut Vec<RtVal>> {
        let ctx = self
            .ctxs
            .iter_mut()
            .rev()
            .find(|c| c.kind.as_deref() == Some(FRAME_CONTEXT))?;
        match ctx.fields.get_mut(1)? {
            RtVal::Con(c, args) if c == FRAME => match args.first_mut()? {
                RtVal::List(vs) => Some(vs),
                _ => None,
            },
            _ => None,
        }
    }
}

enum Flow {
    Continue,
    Return(RtVal),
    Trap,
}

type Env = HashMap<Ident, RtVal>;
type R<T> = Result<T, RuntimeError>;

fn bug(msg: impl Into<String>) -> RuntimeError {
    RuntimeError::InterpreterBug(msg.into())
}

/// Runs algorithms extracted from a script.
pub struct Interpreter {
    program: AlProgram,
    values: HashSet<String>,
    contexts: HashSet<String>,
    /// Primitives whose result is an option.
    partial: HashSet<String>,
    pub fuel: u64,
}

impl Interpreter {
    pub fn new(il: &IlScript, program: AlProgram) -> Self {
        let cons = |s: &str| -> Vec<String> {
            il.syntaxes
                .get(s)
                .map(|s| {
                    s.cases
                        .iter()
                        .filter_map(|c| match c {
                            IlCase::Con { name, .. } => Some(name.clone()),
                            IlCase::Include(_) => None,
                        })
                        .collect()
                })
                .unwrap_or_default()
        };
        let contexts = il
            .syntaxes
            .values()
            .flat_map(|s| s.cases.iter())
            .filter_map(|c| match c {
                IlCase::Con { name, .. } if is_context_constructor(il, name) => Some(name.clone()),
                _ => None,
            })
            .collect();
        let partial = il
            .funcs
            .values()
            .filter(|f| f.clauses.is_empty() && matches!(&f.result, IlType::Iter(_, IterKind::Opt)))
            .map(|f| f.name.trim_start_matches('$').to_string())
            .collect();
        Interpreter {
            program,
            values: cons(VALUE_SYNTAX).into_iter().collect(),
            contexts,
            partial,
            fuel: DEFAULT_FUEL,
        }
    }

    pub fn program(&self) -> &AlProgram {
        &self.program
    }

    /// Runs `instrs` on an empty stack and returns the final stack.
    pub fn run_instrs(&self, store: &mut Store, instrs: Vec<RtVal>) -> R<Result<Vec<RtVal>, ()>> {
        self.run(store, vec![], instrs)
    }

    /// Calls function `idx` of the store with `args`.
    pub fn invoke(&self, store: &mut Store, idx: u32, args: &[Value]) -> R<TrapResult> {
        let (params, results) = func_type(store, idx)?;
        if params.len() != args.len() || params.iter().zip(args).any(|(t, a)| *t != a.ty()) {
            return Err(RuntimeError::ArgumentMismatch(format!(
                "function {idx} expects ({}) but got ({})",
                params.iter().map(|t| t.text()).collect::<Vec<_>>().join(" "),
                args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ")
            )));
        }
        let stack = args.iter().map(|v| RtVal::value(*v)).collect();
        let call = RtVal::con("CALL", vec![RtVal::Nat(idx as u64)]);
        match self.run(store, stack, vec![call])? {
            Err(()) => Ok(TrapResult::Trap),
            Ok(stack) => {
                let vals: Option<Vec<Value>> = stack.iter().map(RtVal::as_value).collect();
                match vals {
                    Some(vs) if vs.len() == results.len() && vs.iter().zip(&results).all(|(v, t)| v.ty() == *t) => {
                        Ok(TrapResult::Values(vs))
                    }
                    _ => Err(bug(format!(
                        "function {idx} left [{}] on the stack, expected {} result(s)",
                        stack.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
                        results.len()
                    ))),
                }
            }
        }
    }

    /// `Err(())` in the inner result is a trap.
    fn run(&self, store: &mut Store, stack: Vec<RtVal>, instrs: Vec<RtVal>) -> R<Result<Vec<RtVal>, ()>> {
        let mut cfg = Config {
            store,
            ctxs: vec![Ctx {
                kind: None,
                fields: vec![],
                stack,
                pending: instrs.into(),
            }],
        };
        let mut fuel = self.fuel;
        loop {
            if fuel == 0 || cfg.ctxs.len() > MAX_DEPTH {
                return Err(RuntimeError::Exhausted);
            }
            fuel -= 1;
            let next = cfg.top().pending.pop_front();
            let flow = match next {
                Some(term) => self.step(&mut cfg, term)?,
                None if cfg.ctxs.len() == 1 => break,
                None => {
                    let kind = cfg.top().kind.clone().unwrap_or_default();
                    let algo = self
                        .program
                        .context_exit(&kind)
                        .ok_or_else(|| bug(format!("no exit algorithm for {kind}")))?;
                    self.exec(&mut cfg, algo, &mut Env::new(), &algo.body)?
                }
            };
            if let Flow::Trap = flow {
                return Ok(Err(()));
            }
        }
        let root = cfg.ctxs.pop().expect("root context");
        Ok(Ok(root.stack))
    }

    fn step(&self, cfg: &mut Config, term: RtVal) -> R<Flow> {
        let RtVal::Con(name, args) = term else {
            return Err(bug(format!("not an instruction: {term}")));
        };
        if self.values.contains(&name) {
            cfg.top().stack.push(RtVal::Con(name, args));
            return Ok(Flow::Continue);
        }
        if name == TRAP {
            return Ok(Flow::Trap);
        }
        if self.contexts.contains(&name) {
            let mut fields = args;
            let body = match fields.pop() {
                Some(RtVal::List(b)) => b,
                _ => return Err(bug(format!("malformed {name} context"))),
            };
            cfg.ctxs.push(Ctx {
                kind: Some(name),
                fields,
                stack: vec![],
                pending: body.into(),
            });
            return Ok(Flow::Continue);
        }
        let algo = self
            .program
            .instr(&name)
            .ok_or_else(|| bug(format!("no algorithm for instruction {name}")))?;
        let mut env = Env::new();
        self.bind_params(cfg, algo, &args, &mut env)?;
        self.exec(cfg, algo, &mut env, &algo.body)
    }

    fn bind_params(&self, cfg: &mut Config, algo: &AlAlgorithm, args: &[RtVal], env: &mut Env) -> R<()> {
        if algo.params.len() != args.len() {
            return Err(RuntimeError::ArgumentMismatch(format!(
                "{} takes {} argument(s), got {}",
                algo.name,
                algo.params.len(),
                args.len()
            )));
        }
        for (p, a) in algo.params.iter().zip(args) {
            if !self.matches(cfg, p, a, env)? {
                return Err(RuntimeError::ArgumentMismatch(format!(
                    "{} does not accept {a} for {p}",
                    algo.name
                )));
            }
        }
        Ok(())
    }

    fn exec(&self, cfg: &mut Config, algo: &AlAlgorithm, env: &mut Env, body: &[AlInstr]) -> R<Flow> {
        for instr in body {
            match instr {
                AlInstr::Assert(c) => {
                    if !self.cond(cfg, c, env)? {
                        return Err(bug(format!("assertion {c} failed in {}", algo.header())));
                    }
                }
                AlInstr::Pop(pat) => {
                    let v = match pat {
                        AlExpr::Iter(_, _, AlIter::Pow(n)) => {
                            let n = self.eval(cfg, n, env)?;
                            let n = n.as_nat().ok_or_else(|| bug(format!("length {n} is not a number")))? as usize;
                            let stack = &mut cfg.top().stack;
                            if stack.len() < n {
                                return Err(bug(format!("stack underflow in {}", algo.name)));
                            }
                            RtVal::List(stack.split_off(stack.len() - n))
                        }
                        _ => cfg
                            .top()
                            .stack
                            .pop()
                            .ok_or_else(|| bug(format!("stack underflow in {}", algo.name)))?,
                    };
                    self.bind(cfg, pat, &v, env)?;
                }
                AlInstr::PopAll(pat) => {
                    let v = RtVal::List(std::mem::take(&mut cfg.top().stack));
                    self.bind(cfg, pat, &v, env)?;
                }
                AlInstr::Push(e) => match self.eval(cfg, e, env)? {
                    RtVal::List(vs) => cfg.top().stack.extend(vs),
                    v => cfg.top().stack.push(v),
                },
                AlInstr::Let(p, e) => {
                    let v = self.eval(cfg, e, env)?;
                    self.bind(cfg, p, &v, env)?;
                }
                AlInstr::If(c, t, e) => {
                    let branch = if self.cond(cfg, c, env)? { t } else { e };
                    // Bindings made inside a branch do not escape it.
                    let mut inner = env.clone();
                    match self.exec(cfg, algo, &mut inner, branch)? {
                        Flow::Continue => {}
                        other => return Ok(other),
                    }
                }
                AlInstr::Trap => return Ok(Flow::Trap),
                AlInstr::Return(e) => {
                    let v = match e {
                        Some(e) => self.eval(cfg, e, env)?,
                        None => RtVal::Tuple(vec![]),
                    };
                    return Ok(Flow::Return(v));
                }
                AlInstr::Execute(e) => {
                    let items = match self.eval(cfg, e, env)? {
                        RtVal::List(vs) => vs,
                        v => vec![v],
                    };
                    let pending = &mut cfg.top().pending;
                    for item in items.into_iter().rev() {
                        pending.push_front(item);
                    }
                }
                AlInstr::Exit(k) => {
                    if cfg.ctxs.len() < 2 || cfg.top().kind.as_deref() != Some(k.as_str()) {
                        return Err(bug(format!("cannot exit {k} in {}", algo.name)));
                    }
                    cfg.ctxs.pop();
                }
                AlInstr::Perform(f, args) => {
                    let args = args.iter().map(|a| self.eval(cfg, a, env)).collect::<R<Vec<_>>>()?;
                    self.perform(cfg, f, &args)?;
                }
                AlInstr::Nop => {}
            }
        }
        Ok(Flow::Continue)
    }

    fn perform(&self, cfg: &mut Config, f: &str, args: &[RtVal]) -> R<()> {
        let i = prims::index(f, args, 1)?;
        let v = args.get(2).cloned().ok_or_else(|| prims::out_of_range(f, args))?;
        let slot = match f {
            "with_local" => cfg.frame_locals().and_then(|ls| ls.get_mut(i)),
            "with_global" => cfg.store.globals.get_mut(i),
            _ => return Err(bug(format!("unknown state update ${f}"))),
        };
        *slot.ok_or_else(|| prims::out_of_range(f, args))? = v;
        Ok(())
    }

    fn cond(&self, cfg: &mut Config, c: &AlCond, env: &mut Env) -> R<bool> {
        Ok(match c {
            AlCond::Compare(k, a, b) => {
                let (a, b) = (self.eval(cfg, a, env)?, self.eval(cfg, b, env)?);
                match k {
                    CmpKind::Is => a.same(&b),
                    CmpKind::Ne => !a.same(&b),
                    _ => {
                        let (x, y) = (as_number(&a)?, as_number(&b)?);
                        match k {
                            CmpKind::Lt => x < y,
                            CmpKind::Le => x <= y,
                            CmpKind::Gt => x > y,
                            _ => x >= y,
                        }
                    }
                }
            }
            AlCond::TopValue(t) => {
                let t = t.as_ref().map(|t| self.eval(cfg, t, env)).transpose()?;
                match cfg.top().stack.last() {
                    Some(RtVal::Con(c, args)) if self.values.contains(c) => match &t {
                        Some(t) => args.first().is_some_and(|a| a.same(t)),
                        None => true,
                    },
                    _ => false,
                }
            }
            AlCond::TopValues(n) => {
                let n = self.eval(cfg, n, env)?;
                let n = as_number(&n)? as usize;
                let stack = &cfg.top().stack;
                stack.len() >= n
                    && stack[stack.len() - n..]
                        .iter()
                        .all(|v| matches!(v, RtVal::Con(c, _) if self.values.contains(c)))
            }
            AlCond::TopContext(k) => cfg.ctxs.len() > 1 && cfg.top().kind.as_deref() == Some(k.as_str()),
            AlCond::Not(c) => !self.cond(cfg, c, env)?,
            AlCond::And(cs) => {
                for c in cs {
                    if !self.cond(cfg, c, env)? {
                        return Ok(false);
                    }
                }
                true
            }
        })
    }

    fn eval(&self, cfg: &mut Config, e: &AlExpr, env: &mut Env) -> R<RtVal> {
        Ok(match e {
            AlExpr::Name(x) => env.get(x).cloned().ok_or_else(|| bug(format!("{x} is unbound")))?,
            AlExpr::Nat(n) => RtVal::Nat(*n),
            AlExpr::App(f, args) => {
                let args = args.iter().map(|a| self.eval(cfg, a, env)).collect::<R<Vec<_>>>()?;
                self.apply(cfg, f, args)?
            }
            AlExpr::List(es) => RtVal::List(es.iter().map(|e| self.eval(cfg, e, env)).collect::<R<_>>()?),
            AlExpr::Tuple(es) => RtVal::Tuple(es.iter().map(|e| self.eval(cfg, e, env)).collect::<R<_>>()?),
            AlExpr::Construct(c, args) => {
                let args = args.iter().map(|a| self.eval(cfg, a, env)).collect::<R<Vec<_>>>()?;
                construct(c, args)
            }
            AlExpr::Length(e) => match self.eval(cfg, e, env)? {
                RtVal::List(vs) => RtVal::Nat(vs.len() as u64),
                v => return Err(bug(format!("length of non-list {v}"))),
            },
            AlExpr::Iter(body, vars, it) => {
                if let (AlExpr::Name(x), [y]) = (&**body, vars.as_slice()) {
                    if x == y && !matches!(it, AlIter::Pow(_)) {
                        return self.eval(cfg, body, env);
                    }
                }
                let lists = vars
                    .iter()
                    .map(|v| match env.get(v) {
                        Some(RtVal::List(vs)) => Ok(vs.clone()),
                        _ => Err(bug(format!("iteration variable {v} is not a list"))),
                    })
                    .collect::<R<Vec<_>>>()?;
                let len = match (it, lists.first()) {
                    (AlIter::Pow(n), _) => as_number(&self.eval(cfg, n, env)?)? as usize,
                    (_, Some(l)) => l.len(),
                    (_, None) => return Err(bug("iteration without variables")),
                };
                if lists.iter().any(|l| l.len() != len) {
                    return Err(bug(format!("iteration over lists of different lengths in {e}")));
                }
                let saved: Vec<Option<RtVal>> = vars.iter().map(|v| env.get(v).cloned()).collect();
                let mut out = Vec::with_capacity(len);
                let mut result = Ok(());
                for i in 0..len {
                    for (v, l) in vars.iter().zip(&lists) {
                        env.insert(v.clone(), l[i].clone());
                    }
                    match self.eval(cfg, body, env) {
                        Ok(x) => out.push(x),
                        Err(err) => {
                            result = Err(err);
                            break;
                        }
                    }
                }
                for (v, s) in vars.iter().zip(saved) {
                    match s {
                        Some(s) => env.insert(v.clone(), s),
                        None => env.remove(v),
                    };
                }
                result?;
                RtVal::List(out)
            }
            AlExpr::Cat(es) => {
                let mut out = Vec::new();
                for e in es {
                    match self.eval(cfg, e, env)? {
                        RtVal::List(vs) => out.extend(vs),
                        v => out.push(v),
                    }
                }
                RtVal::List(out)
            }
            AlExpr::CurrentState => RtVal::State,
            AlExpr::CurrentContext(k) => {
                let ctx = cfg.top();
                if ctx.kind.as_deref() != Some(k.as_str()) {
                    return Err(bug(format!("current context is not {k}")));
                }
                RtVal::con(k, ctx.fields.clone())
            }
        })
    }

    fn apply(&self, cfg: &mut Config, f: &str, args: Vec<RtVal>) -> R<RtVal> {
        if let Some(algo) = self.program.func(f) {
            let mut env = Env::new();
            self.bind_params(cfg, algo, &args, &mut env)?;
            return match self.exec(cfg, algo, &mut env, &algo.body)? {
                Flow::Return(v) => Ok(v),
                _ => Err(RuntimeError::ArgumentMismatch(format!(
                    "no clause of ${f} applies to ({})",
                    args.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
                ))),
            };
        }
        if let Some(r) = prims::numeric(f, &args) {
            let r = r?;
            return if self.partial.contains(f) {
                Ok(RtVal::List(r.map(RtVal::Num).into_iter().collect()))
            } else {
                r.map(RtVal::Num).ok_or_else(|| prims::out_of_range(f, &args))
            };
        }
        if let Some(r) = prims::pure(f, &args) {
            return r;
        }
        let i = prims::index(f, &args, 1)?;
        let found = match f {
            "local" => cfg.frame_locals().and_then(|ls| ls.get(i).cloned()),
            "global" => cfg.store.globals.get(i).cloned(),
            "func" => cfg.store.funcs.get(i).cloned(),
            _ => return Err(bug(format!("unknown function ${f}"))),
        };
        found.ok_or_else(|| prims::out_of_range(f, &args))
    }

    fn bind(&self, cfg: &mut Config, pat: &AlExpr, v: &RtVal, env: &mut Env) -> R<()> {
        if self.matches(cfg, pat, v, env)? {
            Ok(())
        } else {
            Err(bug(format!("{v} does not match {pat}")))
        }
    }

    /// Matches `v` against `pat`, binding unbound names.
    fn matches(&self, cfg: &mut Config, pat: &AlExpr, v: &RtVal, env: &mut Env) -> R<bool> {
        match (pat, v) {
            (AlExpr::Name(x), _) => match env.get(x) {
                Some(old) => Ok(old.same(v)),
                None => {
                    env.insert(x.clone(), v.clone());
                    Ok(true)
                }
            },
            (AlExpr::Construct(c, ps), RtVal::Con(d, vs)) => {
                if c != d || ps.len() != vs.len() {
                    return Ok(false);
                }
                self.all_match(cfg, ps, vs, env)
            }
            (AlExpr::List(ps), RtVal::List(vs)) | (AlExpr::Tuple(ps), RtVal::Tuple(vs)) => {
                if ps.len() != vs.len() {
                    return Ok(false);
                }
                self.all_match(cfg, ps, vs, env)
            }
            (AlExpr::Iter(body, vars, it), RtVal::List(vs)) => {
                match it {
                    AlIter::Opt if vs.len() > 1 => return Ok(false),
                    AlIter::Pow(n) => {
                        let len = RtVal::Nat(vs.len() as u64);
                        if !self.matches(cfg, n, &len, env)? {
                            return Ok(false);
                        }
                    }
                    _ => {}
                }
                if let (AlExpr::Name(x), [y]) = (&**body, vars.as_slice()) {
                    if x == y {
                        return self.matches(cfg, body, v, env);
                    }
                }
                let mut cols: Vec<Vec<RtVal>> = vec![Vec::with_capacity(vs.len()); vars.len()];
                for item in vs {
                    let mut inner = env.clone();
                    for x in vars {
                        inner.remove(x);
                    }
                    if !self.matches(cfg, body, item, &mut inner)? {
                        return Ok(false);
                    }
                    for (x, col) in vars.iter().zip(&mut cols) {
                        col.push(inner.remove(x).ok_or_else(|| bug(format!("{x} not bound by {pat}")))?);
                    }
                }
                for (x, col) in vars.iter().zip(cols) {
                    if !self.matches(cfg, &AlExpr::Name(x.clone()), &RtVal::List(col), env)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            (AlExpr::Construct(..) | AlExpr::List(_) | AlExpr::Tuple(_) | AlExpr::Iter(..), _) => Ok(false),
            _ => {
                let expected = self.eval(cfg, pat, env)?;
                Ok(expected.same(v))
            }
        }
    }

    fn all_match(&self, cfg: &mut Config, ps: &[AlExpr], vs: &[RtVal], env: &mut Env) -> R<bool> {
        for (p, v) in ps.iter().zip(vs) {
            if !self.matches(cfg, p, v, env)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Builds a constructor term, giving literal payloads of `CONST` their type.
fn construct(c: &str, mut args: Vec<RtVal>) -> RtVal {
    if c == crate::runtime::rtval::CONST {
        if let [t, RtVal::Nat(n)] = args.as_slice() {
            if let Some(t) = t.as_numtype() {
                let v = match t {
                    NumType::I32 => Value::I32(*n as u32),
                    NumType::I64 => Value::I64(*n),
                    NumType::F32 => Value::f32(*n as f32),
                    NumType::F64 => Value::f64(*n as f64),
                };
                args[1] = RtVal::Num(v);
            }
        }
    }
    RtVal::Con(c.to_string(), args)
}

fn as_number(v: &RtVal) -> R<u64> {
    match v {
        RtVal::Nat(n) => Ok(*n),
        RtVal::Num(Value::I32(x)) => Ok(*x as u64),
        RtVal::Num(Value::I64(x)) => Ok(*x),
        _ => Err(bug(format!("{v} is not a number"))),
    }
}

fn func_type(store: &Store, idx: u32) -> R<(Vec<NumType>, Vec<NumType>)> {
    let types = |v: &RtVal| match v {
        RtVal::List(ts) => ts.iter().map(RtVal::as_numtype).collect::<Option<Vec<_>>>(),
        _ => None,
    };
    let f = store
        .funcs
        .get(idx as usize)
        .ok_or_else(|| RuntimeError::ArgumentMismatch(format!("no function {idx}")))?;
    match f {
        RtVal::Con(c, args) if c == "FUNC" => match args.first() {
            Some(RtVal::Con(ft, ps)) if ft == "FT" && ps.len() == 2 => types(&ps[0])
                .zip(types(&ps[1]))
                .ok_or_else(|| bug(format!("malformed function type {f}"))),
            _ => Err(bug(format!("malformed function {f}"))),
        },
        _ => Err(bug(format!("malformed function {f}"))),
    }
}
