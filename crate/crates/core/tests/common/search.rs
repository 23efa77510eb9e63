//! Brute-force relational search over the reduction rules of an IL script.
//!
//! Every rule is tried against every window `val* instr` ending at the first
//! non-value of a configuration, and inside `LABEL_` and `FRAME_` bodies.
//! Left-hand sides are matched structurally, enumerating every split of a
//! sequence among iterated patterns. Premises are solved by generate and
//! test: unbound scalar variables range over a finite universe made of an
//! operand set, small naturals, nullary constructors and the values of the
//! calls that can already be evaluated. Structured variables (lists, function
//! bodies) are bound by matching an evaluated side of an equation. Function
//! clauses are tried in order. Numeric primitives come from the oracle.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use spectec_core::el::ast::{CmpOp, Ident};
use spectec_core::il::ast::{IlCase, IlExp, IlExpKind, IlIter, IlPremise, IlRule, IlRuleBody, IlScript};
use spectec_core::il::types::{IlType, IterKind, PrimType};
use spectec_core::runtime::{NumType, RtVal, Value};

use super::oracle;

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub funcs: Vec<Term>,
    pub globals: Vec<Term>,
    /// Locals of the innermost frame, if any.
    pub locals: Option<Vec<Term>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Nat(u64),
    Num(Value),
    Con(String, Vec<Term>),
    /// Lists and options.
    List(Vec<Term>),
    Tuple(Vec<Term>),
    State(Box<State>),
}

impl Term {
    pub fn con(c: &str, args: Vec<Term>) -> Term {
        Term::Con(c.to_string(), args)
    }

    pub fn value(v: Value) -> Term {
        Term::con("CONST", vec![Term::con(v.ty().constructor(), vec![]), Term::Num(v)])
    }

    pub fn from_rt(v: &RtVal) -> Term {
        match v {
            RtVal::Nat(n) => Term::Nat(*n),
            RtVal::Num(x) => Term::Num(*x),
            RtVal::Con(c, xs) => Term::Con(c.clone(), xs.iter().map(Term::from_rt).collect()),
            RtVal::List(xs) => Term::List(xs.iter().map(Term::from_rt).collect()),
            RtVal::Tuple(xs) => Term::Tuple(xs.iter().map(Term::from_rt).collect()),
            RtVal::State => panic!("no state terms at runtime"),
        }
    }

    pub fn to_rt(&self) -> RtVal {
        match self {
            Term::Nat(n) => RtVal::Nat(*n),
            Term::Num(x) => RtVal::Num(*x),
            Term::Con(c, xs) => RtVal::Con(c.clone(), xs.iter().map(Term::to_rt).collect()),
            Term::List(xs) => RtVal::List(xs.iter().map(Term::to_rt).collect()),
            Term::Tuple(xs) => RtVal::Tuple(xs.iter().map(Term::to_rt).collect()),
            Term::State(_) => panic!("state has no runtime form"),
        }
    }

    fn is_value(&self) -> bool {
        matches!(self, Term::Con(c, _) if c == "CONST")
    }

    fn nat(&self) -> Option<u64> {
        match self {
            Term::Nat(n) => Some(*n),
            Term::Num(Value::I32(x)) => Some(*x as u64),
            Term::Num(Value::I64(x)) => Some(*x),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::State(_) => f.write_str("<state>"),
            t => write!(f, "{}", t.to_rt()),
        }
    }
}

/// Equality where a natural literal equals the machine integer of the same value.
pub fn same(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::Nat(n), Term::Num(_)) | (Term::Num(_), Term::Nat(n)) => {
            matches!(a, Term::Num(Value::I32(_) | Value::I64(_)) | Term::Nat(_))
                && matches!(b, Term::Num(Value::I32(_) | Value::I64(_)) | Term::Nat(_))
                && a.nat() == Some(*n)
                && b.nat() == Some(*n)
        }
        (Term::Con(x, xs), Term::Con(y, ys)) => x == y && all_same(xs, ys),
        (Term::List(xs), Term::List(ys)) | (Term::Tuple(xs), Term::Tuple(ys)) => all_same(xs, ys),
        _ => a == b,
    }
}

fn all_same(xs: &[Term], ys: &[Term]) -> bool {
    xs.len() == ys.len() && xs.iter().zip(ys).all(|(a, b)| same(a, b))
}

type Env = HashMap<Ident, Term>;

/// How a configuration ended.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Values(Vec<Term>, Vec<Term>),
    Trap(Vec<Term>),
    Stuck(String),
}

impl Outcome {
    pub fn same(&self, other: &Outcome) -> bool {
        match (self, other) {
            (Outcome::Values(a, g), Outcome::Values(b, h)) => all_same(a, b) && all_same(g, h),
            (Outcome::Trap(g), Outcome::Trap(h)) => all_same(g, h),
            (Outcome::Stuck(a), Outcome::Stuck(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |xs: &[Term]| xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
        match self {
            Outcome::Values(vs, gs) => write!(f, "values [{}] globals [{}]", list(vs), list(gs)),
            Outcome::Trap(gs) => write!(f, "trap globals [{}]", list(gs)),
            Outcome::Stuck(why) => write!(f, "stuck: {why}"),
        }
    }
}

/// Every derivation from one configuration: the rules of its first step and
/// its final outcome.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub first_rules: Vec<String>,
    pub outcome: Outcome,
}

pub struct Search<'a> {
    il: &'a IlScript,
    rules: Vec<&'a IlRule>,
    universe: Vec<Term>,
    pub max_configs: usize,
    /// Every rule that has fired so far.
    pub fired: RefCell<BTreeSet<String>>,
}

enum Step {
    Done,
    Trap,
    Next(Vec<(String, State, Vec<Term>)>),
}

fn is_splice(e: &IlExp) -> bool {
    matches!(e.ty, IlType::Iter(..)) && !matches!(e.kind, IlExpKind::Epsilon)
}

fn flatten<'e>(e: &'e IlExp, out: &mut Vec<&'e IlExp>) {
    match &e.kind {
        IlExpKind::Seq(es) => es.iter().for_each(|x| flatten(x, out)),
        IlExpKind::Epsilon => {}
        IlExpKind::Cast(inner) if matches!(inner.kind, IlExpKind::Seq(_)) => flatten(inner, out),
        _ => out.push(e),
    }
}

impl<'a> Search<'a> {
    /// `operands` joins small naturals and nullary constructors in the
    /// universe that unbound premise variables range over.
    pub fn new(il: &'a IlScript, operands: &[Value]) -> Self {
        let mut universe: Vec<Term> = operands.iter().map(|v| Term::Num(*v)).collect();
        universe.extend((0..=8).map(Term::Nat));
        for s in il.syntaxes.values() {
            for c in &s.cases {
                if let IlCase::Con { name, args } = c {
                    if args.is_empty() {
                        universe.push(Term::con(name, vec![]));
                    }
                }
            }
        }
        Search {
            il,
            rules: il.reduction_rules().collect(),
            universe,
            max_configs: 200_000,
            fired: RefCell::default(),
        }
    }

    fn member(&self, t: &Term, ty: &IlType) -> bool {
        match (ty, t) {
            (IlType::Prim(PrimType::Nat), Term::Nat(_)) => true,
            (IlType::Prim(PrimType::Int32), Term::Num(Value::I32(_))) => true,
            (IlType::Prim(PrimType::Int64), Term::Num(Value::I64(_))) => true,
            (IlType::Prim(PrimType::Float32), Term::Num(Value::F32(_))) => true,
            (IlType::Prim(PrimType::Float64), Term::Num(Value::F64(_))) => true,
            (IlType::Prim(_), _) => false,
            (IlType::Iter(inner, kind), Term::List(xs)) => {
                (*kind == IterKind::List || xs.len() <= 1) && xs.iter().all(|x| self.member(x, inner))
            }
            (IlType::Iter(..), _) => false,
            (IlType::Tuple(ts), Term::Tuple(xs)) => {
                ts.len() == xs.len() && xs.iter().zip(ts).all(|(x, t)| self.member(x, t))
            }
            (IlType::Tuple(_), _) => false,
            (IlType::Syn(name), _) => match self.il.syntaxes.get(name) {
                None => true,
                Some(s) if s.cases.is_empty() => matches!(t, Term::State(_)),
                Some(s) => s.cases.iter().any(|c| match (c, t) {
                    (IlCase::Con { name, args }, Term::Con(c, xs)) => name == c && args.len() == xs.len(),
                    (IlCase::Include(inner), _) => self.member(t, inner),
                    _ => false,
                }),
            },
        }
    }

    // ---- evaluation ----

    fn eval(&self, e: &IlExp, env: &Env) -> Option<Term> {
        Some(match &e.kind {
            IlExpKind::Var(x) => env.get(x)?.clone(),
            IlExpKind::Nat(n) => Term::Nat(*n),
            IlExpKind::Epsilon => Term::List(vec![]),
            IlExpKind::Con(c, args) => Term::Con(
                c.clone(),
                args.iter().map(|a| self.eval(a, env)).collect::<Option<_>>()?,
            ),
            IlExpKind::Seq(es) | IlExpKind::List(es) => {
                let mut out = Vec::new();
                for x in es {
                    match (is_splice(x), self.eval(x, env)?) {
                        (true, Term::List(vs)) => out.extend(vs),
                        (true, _) => return None,
                        (false, v) => out.push(v),
                    }
                }
                Term::List(out)
            }
            IlExpKind::Tuple(es) => Term::Tuple(es.iter().map(|a| self.eval(a, env)).collect::<Option<_>>()?),
            IlExpKind::Iter(body, it, vars) => {
                let want = match it {
                    IlIter::Pow(n) => Some(self.eval(n, env)?.nat()? as usize),
                    _ => None,
                };
                if vars.is_empty() {
                    let v = self.eval(body, env)?;
                    return Some(Term::List(vec![v; want?]));
                }
                let lists: Vec<&Vec<Term>> = vars
                    .iter()
                    .map(|x| match env.get(x)? {
                        Term::List(vs) => Some(vs),
                        _ => None,
                    })
                    .collect::<Option<_>>()?;
                let len = lists[0].len();
                if lists.iter().any(|l| l.len() != len) || want.is_some_and(|n| n != len) {
                    return None;
                }
                let mut out = Vec::with_capacity(len);
                let mut inner = env.clone();
                for i in 0..len {
                    for (x, l) in vars.iter().zip(&lists) {
                        inner.insert(x.clone(), l[i].clone());
                    }
                    out.push(self.eval(body, &inner)?);
                }
                Term::List(out)
            }
            IlExpKind::Len(x) => match self.eval(x, env)? {
                Term::List(vs) => Term::Nat(vs.len() as u64),
                _ => return None,
            },
            IlExpKind::Cast(x) => self.eval(x, env)?,
            IlExpKind::OptSome(x) => Term::List(vec![self.eval(x, env)?]),
            IlExpKind::Call(f, args) => {
                let vals: Vec<Term> = args.iter().map(|a| self.eval(a, env)).collect::<Option<_>>()?;
                self.call(f, &vals)?
            }
        })
    }

    fn call(&self, name: &str, args: &[Term]) -> Option<Term> {
        let func = self.il.funcs.get(name)?;
        if func.clauses.is_empty() {
            let r = primitive(name.trim_start_matches('$'), args)?;
            return match (&func.result, r) {
                (IlType::Iter(_, IterKind::Opt), Prim::Partial(v)) => Some(Term::List(v.into_iter().collect())),
                (_, Prim::Partial(v)) => v,
                (_, Prim::Total(v)) => Some(v),
            };
        }
        for clause in &func.clauses {
            for env in self.match_fields(&clause.args, args, Env::new()) {
                for env in self.solve(&clause.premises, env) {
                    if let Some(v) = self.eval(&clause.result, &env) {
                        return Some(v);
                    }
                }
            }
        }
        None
    }

    // ---- matching ----

    fn match_fields(&self, pats: &[IlExp], terms: &[Term], env: Env) -> Vec<Env> {
        if pats.len() != terms.len() {
            return vec![];
        }
        let mut envs = vec![env];
        for (p, t) in pats.iter().zip(terms) {
            envs = envs.into_iter().flat_map(|e| self.match_field(p, t, e)).collect();
        }
        envs
    }

    fn match_field(&self, p: &IlExp, t: &Term, env: Env) -> Vec<Env> {
        if is_splice(p) || matches!(p.kind, IlExpKind::Epsilon) {
            let Term::List(items) = t else { return vec![] };
            let mut pats = Vec::new();
            flatten(p, &mut pats);
            return self.match_seq(&pats, items, env);
        }
        self.match_one(p, t, env)
    }

    fn match_seq(&self, pats: &[&IlExp], terms: &[Term], env: Env) -> Vec<Env> {
        let Some((p, rest)) = pats.split_first() else {
            return if terms.is_empty() { vec![env] } else { vec![] };
        };
        if !is_splice(p) {
            let Some((t, ts)) = terms.split_first() else {
                return vec![];
            };
            return self
                .match_one(p, t, env)
                .into_iter()
                .flat_map(|e| self.match_seq(rest, ts, e))
                .collect();
        }
        let lens: Vec<usize> = match &p.kind {
            IlExpKind::Iter(_, IlIter::Pow(n), _) => match self.eval(n, &env).and_then(|v| v.nat()) {
                Some(n) if n as usize <= terms.len() => vec![n as usize],
                Some(_) => vec![],
                None => (0..=terms.len()).collect(),
            },
            IlExpKind::Iter(_, IlIter::Opt, _) => (0..=terms.len().min(1)).collect(),
            _ => (0..=terms.len()).collect(),
        };
        let mut out = Vec::new();
        for l in lens {
            for e in self.match_splice(p, &terms[..l], env.clone()) {
                out.extend(self.match_seq(rest, &terms[l..], e));
            }
        }
        out
    }

    fn match_splice(&self, p: &IlExp, items: &[Term], env: Env) -> Vec<Env> {
        match &p.kind {
            IlExpKind::Iter(body, it, vars) => {
                let mut env = env;
                if let IlIter::Pow(n) = it {
                    match self.eval(n, &env) {
                        Some(v) if v.nat() == Some(items.len() as u64) => {}
                        Some(_) => return vec![],
                        None => match &n.kind {
                            IlExpKind::Var(x) => {
                                env.insert(x.clone(), Term::Nat(items.len() as u64));
                            }
                            _ => return vec![],
                        },
                    }
                }
                // Each element binds the iteration variables afresh.
                let mut partial: Vec<(Env, Vec<Vec<Term>>)> = vec![(env.clone(), vec![Vec::new(); vars.len()])];
                for item in items {
                    let mut next = Vec::new();
                    for (outer, cols) in partial {
                        let mut inner = outer.clone();
                        for x in vars {
                            inner.remove(x);
                        }
                        for e in self.match_one(body, item, inner) {
                            let mut cols = cols.clone();
                            let mut outer = outer.clone();
                            for (i, x) in vars.iter().enumerate() {
                                match e.get(x) {
                                    Some(v) => cols[i].push(v.clone()),
                                    None => continue,
                                }
                            }
                            for (k, v) in &e {
                                if !vars.contains(k) {
                                    outer.insert(k.clone(), v.clone());
                                }
                            }
                            next.push((outer, cols));
                        }
                    }
                    partial = next;
                }
                let mut out = Vec::new();
                'each: for (mut e, cols) in partial {
                    for (x, col) in vars.iter().zip(cols) {
                        let v = Term::List(col);
                        match e.get(x) {
                            Some(old) if !same(old, &v) => continue 'each,
                            _ => {
                                e.insert(x.clone(), v);
                            }
                        }
                    }
                    out.push(e);
                }
                out
            }
            _ => self.match_one(p, &Term::List(items.to_vec()), env),
        }
    }

    fn match_one(&self, p: &IlExp, t: &Term, mut env: Env) -> Vec<Env> {
        let ok = |b: bool, env: Env| if b { vec![env] } else { vec![] };
        match &p.kind {
            IlExpKind::Var(x) => match env.get(x) {
                Some(v) => {
                    let b = same(v, t);
                    ok(b, env)
                }
                None if self.member(t, &p.ty) => {
                    env.insert(x.clone(), t.clone());
                    vec![env]
                }
                None => vec![],
            },
            IlExpKind::Nat(n) => ok(same(&Term::Nat(*n), t), env),
            IlExpKind::Epsilon => ok(matches!(t, Term::List(v) if v.is_empty()), env),
            IlExpKind::Con(c, args) => match t {
                Term::Con(d, xs) if c == d => self.match_fields(args, xs, env),
                _ => vec![],
            },
            IlExpKind::Cast(x) => self.match_one(x, t, env),
            IlExpKind::OptSome(x) => match t {
                Term::List(v) if v.len() == 1 => self.match_one(x, &v[0], env),
                _ => vec![],
            },
            IlExpKind::Seq(_) | IlExpKind::List(_) | IlExpKind::Iter(..) => match t {
                Term::List(items) => {
                    let mut pats = Vec::new();
                    match &p.kind {
                        IlExpKind::List(es) => es.iter().for_each(|e| flatten(e, &mut pats)),
                        _ => flatten(p, &mut pats),
                    }
                    self.match_seq(&pats, items, env)
                }
                _ => vec![],
            },
            IlExpKind::Tuple(es) => match t {
                Term::Tuple(xs) => self.match_fields(es, xs, env),
                _ => vec![],
            },
            IlExpKind::Call(..) | IlExpKind::Len(_) => match self.eval(p, &env) {
                Some(v) => ok(same(&v, t), env),
                None => vec![],
            },
        }
    }

    // ---- premises ----

    fn holds(&self, lhs: &IlExp, op: CmpOp, rhs: &IlExp, env: &Env) -> bool {
        let (Some(a), Some(b)) = (self.eval(lhs, env), self.eval(rhs, env)) else {
            return false;
        };
        match op {
            CmpOp::Eq => same(&a, &b),
            CmpOp::Ne => !same(&a, &b),
            _ => match (a.nat(), b.nat()) {
                (Some(x), Some(y)) => match op {
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    _ => x >= y,
                },
                _ => false,
            },
        }
    }

    fn enumerable(&self, ty: &IlType) -> bool {
        match ty {
            IlType::Prim(_) => true,
            IlType::Syn(name) => self.il.syntaxes.get(name).is_some_and(|s| {
                s.cases.iter().all(|c| match c {
                    IlCase::Con { args, .. } => args.is_empty(),
                    IlCase::Include(t) => self.enumerable(t),
                })
            }),
            _ => false,
        }
    }

    fn solve(&self, premises: &[IlPremise], env: Env) -> Vec<Env> {
        let mut envs = vec![env];
        for p in premises {
            envs = envs.into_iter().flat_map(|e| self.premise(p, e)).collect();
        }
        envs
    }

    fn premise(&self, p: &IlPremise, env: Env) -> Vec<Env> {
        match p {
            IlPremise::Else { .. } => vec![env],
            IlPremise::Iter { body, vars, .. } => {
                let lists: Option<Vec<Vec<Term>>> = vars
                    .iter()
                    .map(|x| match env.get(x) {
                        Some(Term::List(v)) => Some(v.clone()),
                        _ => None,
                    })
                    .collect();
                let Some(lists) = lists else { return vec![] };
                let len = lists.first().map_or(0, Vec::len);
                for i in 0..len {
                    let mut inner = env.clone();
                    for (x, l) in vars.iter().zip(&lists) {
                        inner.insert(x.clone(), l[i].clone());
                    }
                    if self.premise(body, inner).is_empty() {
                        return vec![];
                    }
                }
                vec![env]
            }
            IlPremise::If { lhs, op, rhs, .. } => {
                let unbound: Vec<(Ident, IlType)> = {
                    let mut out: Vec<(Ident, IlType)> = Vec::new();
                    for e in [lhs, rhs] {
                        e.walk(&mut |x| {
                            if let IlExpKind::Var(v) = &x.kind {
                                if !env.contains_key(v) && !out.iter().any(|(w, _)| w == v) {
                                    out.push((v.clone(), x.ty.clone()));
                                }
                            }
                        });
                    }
                    out
                };
                if unbound.is_empty() {
                    return if self.holds(lhs, *op, rhs, &env) {
                        vec![env]
                    } else {
                        vec![]
                    };
                }
                if unbound.len() <= 2 && unbound.iter().all(|(_, t)| self.enumerable(t)) {
                    return self.generate_and_test(lhs, *op, rhs, &unbound, env);
                }
                if *op != CmpOp::Eq {
                    return vec![];
                }
                if let Some(v) = self.eval(lhs, &env) {
                    return self.match_field(rhs, &v, env);
                }
                if let Some(v) = self.eval(rhs, &env) {
                    return self.match_field(lhs, &v, env);
                }
                vec![]
            }
        }
    }

    fn generate_and_test(&self, lhs: &IlExp, op: CmpOp, rhs: &IlExp, vars: &[(Ident, IlType)], env: Env) -> Vec<Env> {
        let mut pool = self.universe.clone();
        for e in [lhs, rhs] {
            e.walk(&mut |x| {
                if let IlExpKind::Call(..) = x.kind {
                    match self.eval(x, &env) {
                        Some(Term::List(vs)) => pool.extend(vs),
                        Some(v) => pool.push(v),
                        None => {}
                    }
                }
            });
        }
        let mut envs = vec![env];
        for (x, ty) in vars {
            let domain: Vec<&Term> = pool.iter().filter(|t| self.member(t, ty)).collect();
            envs = envs
                .into_iter()
                .flat_map(|e| {
                    domain.iter().map(move |v| {
                        let mut e = e.clone();
                        e.insert(x.clone(), (*v).clone());
                        e
                    })
                })
                .collect();
        }
        let mut out: Vec<Env> = Vec::new();
        for e in envs {
            if self.holds(lhs, op, rhs, &e) && !out.iter().any(|o| vars.iter().all(|(x, _)| same(&o[x], &e[x]))) {
                out.push(e);
            }
        }
        out
    }

    // ---- rules ----

    /// Results of applying `rule` to exactly `window`.
    fn apply(&self, rule: &IlRule, state: &State, window: &[Term]) -> Vec<(State, Vec<Term>)> {
        let IlRuleBody::Reduction {
            state: sp,
            lhs,
            rhs_state,
            rhs,
        } = &rule.body
        else {
            return vec![];
        };
        let mut env = Env::new();
        if let Some(sp) = sp {
            match &sp.kind {
                IlExpKind::Var(z) => {
                    env.insert(z.clone(), Term::State(Box::new(state.clone())));
                }
                _ => return vec![],
            }
        }
        let mut pats = Vec::new();
        flatten(lhs, &mut pats);
        let mut out: Vec<(State, Vec<Term>)> = Vec::new();
        for env in self.match_seq(&pats, window, env) {
            for env in self.solve(&rule.premises, env) {
                let Some(Term::List(instrs)) = self.eval(rhs, &env) else {
                    continue;
                };
                let st = match rhs_state {
                    Some(e) => match self.eval(e, &env) {
                        Some(Term::State(s)) => *s,
                        _ => continue,
                    },
                    None => state.clone(),
                };
                if !out.iter().any(|(s, is)| *s == st && all_same(is, &instrs)) {
                    out.push((st, instrs));
                }
            }
        }
        out
    }

    fn rule_applies(&self, rule: &IlRule, state: &State, window: &[Term]) -> bool {
        !self.apply(rule, state, window).is_empty()
    }

    /// `otherwise` holds when no earlier rule of the same relation and family
    /// (the id up to its last `-`) applies.
    fn otherwise_blocked(&self, idx: usize, state: &State, window: &[Term]) -> bool {
        let rule = self.rules[idx];
        let family = |r: &IlRule| r.id.rsplit_once('-').map_or(r.id.clone(), |(f, _)| f.to_string());
        self.rules[..idx]
            .iter()
            .filter(|r| r.relation == rule.relation && family(r) == family(rule))
            .any(|r| self.rule_applies(r, state, window))
    }

    fn step(&self, state: &State, instrs: &[Term]) -> Step {
        let Some(i) = instrs.iter().position(|t| !t.is_value()) else {
            return Step::Done;
        };
        if matches!(&instrs[i], Term::Con(c, _) if c == "TRAP") {
            return Step::Trap;
        }
        let mut next = Vec::new();
        for j in 0..=i {
            let window = &instrs[j..=i];
            for (k, rule) in self.rules.iter().enumerate() {
                let has_else = rule.premises.iter().any(|p| matches!(p, IlPremise::Else { .. }));
                let results = self.apply(rule, state, window);
                if results.is_empty() || (has_else && self.otherwise_blocked(k, state, window)) {
                    continue;
                }
                self.fired.borrow_mut().insert(format!("{}/{}", rule.relation, rule.id));
                for (st, rhs) in results {
                    let mut out = instrs[..j].to_vec();
                    out.extend(rhs);
                    out.extend_from_slice(&instrs[i + 1..]);
                    next.push((format!("{}/{}", rule.relation, rule.id), st, out));
                }
            }
        }
        // Evaluation contexts.
        if let Term::Con(c, fields) = &instrs[i] {
            let inner = match (c.as_str(), fields.as_slice()) {
                ("LABEL_", [_, _, Term::List(body)]) => Some((state.clone(), body)),
                ("FRAME_", [_, Term::Con(f, fv), Term::List(body)]) if f == "FRAME" => match fv.as_slice() {
                    [Term::List(locals)] => Some((
                        State {
                            locals: Some(locals.clone()),
                            ..state.clone()
                        },
                        body,
                    )),
                    _ => None,
                },
                _ => None,
            };
            if let Some((inner_state, body)) = inner {
                match self.step(&inner_state, body) {
                    Step::Done => {}
                    Step::Trap => return Step::Trap,
                    Step::Next(steps) => {
                        for (id, st, body2) in steps {
                            let (outer, node) = if c == "FRAME_" {
                                let frame = Term::con("FRAME", vec![Term::List(st.locals.clone().unwrap_or_default())]);
                                let outer = State {
                                    locals: state.locals.clone(),
                                    ..st
                                };
                                (
                                    outer,
                                    Term::con("FRAME_", vec![fields[0].clone(), frame, Term::List(body2)]),
                                )
                            } else {
                                (
                                    st,
                                    Term::con("LABEL_", vec![fields[0].clone(), fields[1].clone(), Term::List(body2)]),
                                )
                            };
                            let mut out = instrs[..i].to_vec();
                            out.push(node);
                            out.extend_from_slice(&instrs[i + 1..]);
                            next.push((id, outer, out));
                        }
                    }
                }
            }
        }
        Step::Next(next)
    }

    /// Explores every reduction sequence from `(state, instrs)` and returns
    /// the distinct derivations found.
    pub fn run(&self, state: State, instrs: Vec<Term>) -> Vec<Derivation> {
        let mut work: Vec<(Vec<String>, State, Vec<Term>)> = vec![(vec![], state, instrs)];
        let mut done: Vec<Derivation> = Vec::new();
        let mut seen = 0;
        while let Some((first, st, instrs)) = work.pop() {
            seen += 1;
            if seen > self.max_configs {
                done.push(Derivation {
                    first_rules: first,
                    outcome: Outcome::Stuck("search budget exhausted".into()),
                });
                break;
            }
            let outcome = match self.step(&st, &instrs) {
                Step::Done => Outcome::Values(instrs, st.globals),
                Step::Trap => Outcome::Trap(st.globals),
                Step::Next(v) if v.is_empty() => Outcome::Stuck(format!(
                    "no rule applies to [{}]",
                    instrs.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
                )),
                Step::Next(v) => {
                    let mut distinct: Vec<(String, State, Vec<Term>)> = Vec::new();
                    for (id, s, is) in v {
                        if !distinct.iter().any(|(_, s2, is2)| *s2 == s && all_same(is2, &is)) {
                            distinct.push((id, s, is));
                        }
                    }
                    for (id, s, is) in distinct {
                        let f = if first.is_empty() { vec![id] } else { first.clone() };
                        work.push((f, s, is));
                    }
                    continue;
                }
            };
            if !done.iter().any(|d| d.first_rules == first && d.outcome.same(&outcome)) {
                done.push(Derivation {
                    first_rules: first,
                    outcome,
                });
            }
        }
        done
    }
}

enum Prim {
    Total(Term),
    Partial(Option<Term>),
}

fn state_of(t: &Term) -> Option<&State> {
    match t {
        Term::State(s) => Some(s),
        _ => None,
    }
}

fn primitive(name: &str, args: &[Term]) -> Option<Prim> {
    let numtype = |t: &Term| match t {
        Term::Con(c, xs) if xs.is_empty() => NumType::from_constructor(c),
        _ => None,
    };
    let num = |t: &Term, ty: NumType| match t {
        Term::Num(v) if v.ty() == ty => Some(*v),
        _ => None,
    };
    const UNOPS: &[&str] = &["clz", "ctz", "popcnt", "neg", "abs", "sqrt"];
    const RELOPS: &[&str] = &[
        "eq", "ne", "lt_s", "lt_u", "gt_s", "gt_u", "le_s", "le_u", "ge_s", "ge_u", "lt", "gt", "le", "ge",
    ];
    match (name, args) {
        ("default", [t]) => Some(Prim::Total(Term::value(numtype(t)?.zero()))),
        ("pred", [l]) => Some(Prim::Total(Term::Nat(l.nat()?.checked_sub(1)?))),
        ("local", [z, x]) => Some(Prim::Total(
            state_of(z)?.locals.as_ref()?.get(x.nat()? as usize)?.clone(),
        )),
        ("global", [z, x]) => Some(Prim::Total(state_of(z)?.globals.get(x.nat()? as usize)?.clone())),
        ("func", [z, x]) => Some(Prim::Total(state_of(z)?.funcs.get(x.nat()? as usize)?.clone())),
        ("with_local", [z, x, v]) => {
            let mut s = state_of(z)?.clone();
            *s.locals.as_mut()?.get_mut(x.nat()? as usize)? = v.clone();
            Some(Prim::Total(Term::State(Box::new(s))))
        }
        ("with_global", [z, x, v]) => {
            let mut s = state_of(z)?.clone();
            *s.globals.get_mut(x.nat()? as usize)? = v.clone();
            Some(Prim::Total(Term::State(Box::new(s))))
        }
        ("eqz", [t, a]) => {
            let t = numtype(t).filter(|t| t.is_int())?;
            Some(Prim::Total(Term::Num(oracle::testop("eqz", num(a, t)?))))
        }
        (op, [t, a]) if UNOPS.contains(&op) => {
            let t = numtype(t)?;
            let int_op = matches!(op, "clz" | "ctz" | "popcnt");
            if int_op != t.is_int() {
                return None;
            }
            Some(Prim::Total(Term::Num(oracle::unop(t, op, num(a, t)?))))
        }
        (op, [t, a, b]) if RELOPS.contains(&op) => {
            let t = numtype(t)?;
            let int_op = op.contains('_') || matches!(op, "eq" | "ne");
            let float_op = !op.contains('_');
            if !(if t.is_int() { int_op } else { float_op }) {
                return None;
            }
            Some(Prim::Total(Term::Num(oracle::relop(t, op, num(a, t)?, num(b, t)?))))
        }
        (op, [t, a, b]) => {
            let t = numtype(t)?;
            let int_ops = [
                "add", "sub", "mul", "div_s", "div_u", "rem_s", "rem_u", "and", "or", "xor", "shl", "shr_s", "shr_u",
                "rotl", "rotr",
            ];
            let float_ops = ["add", "sub", "mul", "div", "min", "max"];
            let valid = if t.is_int() {
                int_ops.contains(&op)
            } else {
                float_ops.contains(&op)
            };
            if !valid {
                return None;
            }
            Some(Prim::Partial(
                oracle::binop(t, op, num(a, t)?, num(b, t)?).map(Term::Num),
            ))
        }
        _ => None,
    }
}
