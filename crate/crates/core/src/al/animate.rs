//! Relational reduction rules to algorithms.

use std::collections::{HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;

use crate::al::ast::*;
use crate::al::dataflow::{PremiseClass, Scheduler};
use crate::diag::{codes, Diagnostic};
use crate::el::ast::{CmpOp, Ident};
use crate::il::ast::*;
use crate::il::types::{IlType, IterKind};
use crate::span::SourceSpan;

/// Syntax whose members are pushed rather than executed.
pub const VALUE_SYNTAX: &str = "val";
/// Constructor that aborts execution.
pub const TRAP: &str = "TRAP";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnimationError {
    /// Header of the algorithm being built, e.g. `execution_of_BR`.
    pub algorithm: String,
    pub rule: Option<String>,
    pub span: SourceSpan,
    pub message: String,
}

impl fmt::Display for AnimationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Some(r) => write!(f, "{} (rule {r}): {}", self.algorithm, self.message),
            None => write!(f, "{}: {}", self.algorithm, self.message),
        }
    }
}

impl std::error::Error for AnimationError {}

impl AnimationError {
    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic::error(codes::ANIMATION, self.span, self.to_string())
    }
}

/// Every algorithm extracted from a script.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlProgram {
    pub algorithms: Vec<AlAlgorithm>,
    index: IndexMap<(AlgoKindKey, String), usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum AlgoKindKey {
    Instr,
    Exit,
    Func,
}

fn key_of(k: AlgoKind) -> AlgoKindKey {
    match k {
        AlgoKind::Instr => AlgoKindKey::Instr,
        AlgoKind::ContextExit => AlgoKindKey::Exit,
        AlgoKind::Func => AlgoKindKey::Func,
    }
}

impl AlProgram {
    pub fn new(algorithms: Vec<AlAlgorithm>) -> Self {
        let index = algorithms
            .iter()
            .enumerate()
            .map(|(i, a)| ((key_of(a.kind), a.name.clone()), i))
            .collect();
        AlProgram { algorithms, index }
    }

    fn get(&self, k: AlgoKindKey, name: &str) -> Option<&AlAlgorithm> {
        self.index.get(&(k, name.to_string())).map(|&i| &self.algorithms[i])
    }

    pub fn instr(&self, name: &str) -> Option<&AlAlgorithm> {
        self.get(AlgoKindKey::Instr, name)
    }

    pub fn context_exit(&self, name: &str) -> Option<&AlAlgorithm> {
        self.get(AlgoKindKey::Exit, name)
    }

    /// Function algorithm by name, with or without `$`.
    pub fn func(&self, name: &str) -> Option<&AlAlgorithm> {
        self.get(AlgoKindKey::Func, name.trim_start_matches('$'))
    }

    /// Names of instructions with an execution algorithm.
    pub fn instr_names(&self) -> impl Iterator<Item = &str> {
        self.algorithms
            .iter()
            .filter(|a| a.kind == AlgoKind::Instr)
            .map(|a| a.name.as_str())
    }

    /// All algorithms in constructor syntax, separated by blank lines.
    pub fn dump(&self) -> String {
        self.algorithms
            .iter()
            .map(AlAlgorithm::dump)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Animates every reduction rule and every function defined by clauses.
pub fn animate(il: &IlScript) -> Result<AlProgram, Vec<AnimationError>> {
    let mut groups: IndexMap<(AlgoKindKey, String), Vec<&IlRule>> = IndexMap::new();
    let mut errors = Vec::new();
    for rule in il.reduction_rules() {
        match target(il, rule) {
            Ok((kind, name)) => groups.entry((key_of(kind), name)).or_default().push(rule),
            Err(e) => errors.push(e),
        }
    }
    let mut algos = Vec::new();
    for rules in groups.values() {
        match animate_rule_group(il, rules) {
            Ok(a) => algos.push(a),
            Err(e) => errors.push(e),
        }
    }
    for f in il.funcs.values().filter(|f| !f.clauses.is_empty()) {
        match animate_func(il, f) {
            Ok(a) => algos.push(a),
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(AlProgram::new(algos))
    } else {
        Err(errors)
    }
}

/// Whether constructor `name` is an evaluation context: its name ends in `_`
/// and its last argument is the code running inside it.
pub fn is_context_constructor(il: &IlScript, name: &str) -> bool {
    name.ends_with('_')
        && il.constructor(name).is_some_and(|(syn, args)| {
            matches!(args.last(), Some(IlType::Iter(t, IterKind::List)) if **t == IlType::Syn(syn.name.clone()))
        })
}

fn flatten(e: &IlExp) -> Vec<&IlExp> {
    match &e.kind {
        IlExpKind::Seq(es) => es.iter().flat_map(flatten).collect(),
        IlExpKind::Epsilon => vec![],
        _ => vec![e],
    }
}

/// Whether `e` denotes values (or a run of values) before any cast.
fn value_like(e: &IlExp) -> bool {
    let e = e.uncast();
    match &e.kind {
        IlExpKind::Iter(body, _, _) => value_like(body),
        _ => e.ty == IlType::syn(VALUE_SYNTAX) || e.ty.strip(e.ty.depth()) == &IlType::syn(VALUE_SYNTAX),
    }
}

/// Left-hand side decomposition of a reduction rule.
struct Shape<'a> {
    context: Option<(&'a str, &'a [IlExp])>,
    /// `None` for a context's completion rule.
    instr: Option<(&'a str, &'a [IlExp])>,
    /// Bottom of the stack first.
    values: Vec<&'a IlExp>,
}

fn err(algorithm: &str, rule: Option<&IlRule>, span: SourceSpan, message: impl Into<String>) -> AnimationError {
    AnimationError {
        algorithm: algorithm.to_string(),
        rule: rule.map(|r| format!("{}/{}", r.relation, r.id)),
        span,
        message: message.into(),
    }
}

fn lhs_of(rule: &IlRule) -> Option<(&Option<IlExp>, &IlExp, &Option<IlExp>, &IlExp)> {
    match &rule.body {
        IlRuleBody::Reduction {
            state,
            lhs,
            rhs_state,
            rhs,
        } => Some((state, lhs, rhs_state, rhs)),
        IlRuleBody::Typing { .. } => None,
    }
}

fn shape<'a>(il: &IlScript, rule: &'a IlRule) -> Result<Shape<'a>, AnimationError> {
    let fail = |m: &str| err("?", Some(rule), rule.span, m);
    let (_, lhs, _, _) = lhs_of(rule).ok_or_else(|| fail("not a reduction rule"))?;
    let items = flatten(lhs);
    if let [single] = items.as_slice() {
        if let IlExpKind::Con(k, args) = &single.uncast().kind {
            if is_context_constructor(il, k) {
                let (body, fields) = args.split_last().ok_or_else(|| fail("context without body"))?;
                let body = flatten(body);
                let pos = body.iter().position(|e| !value_like(e));
                let (values, instr) = match pos {
                    None => (body, None),
                    Some(i) => {
                        let IlExpKind::Con(name, iargs) = &body[i].uncast().kind else {
                            return Err(fail("expected an instruction inside the context"));
                        };
                        if body.len() > i + 2 || (body.len() == i + 2 && !body[i + 1].ty.is_iter()) {
                            return Err(fail("only a trailing instruction sequence may follow the instruction"));
                        }
                        (body[..i].to_vec(), Some((name.as_str(), iargs.as_slice())))
                    }
                };
                return Ok(Shape {
                    context: Some((k.as_str(), fields)),
                    instr,
                    values,
                });
            }
        }
    }
    let (last, values) = items.split_last().ok_or_else(|| fail("empty left-hand side"))?;
    let IlExpKind::Con(name, args) = &last.uncast().kind else {
        return Err(fail("left-hand side must end in an instruction"));
    };
    if let Some(v) = values.iter().find(|v| !value_like(v)) {
        return Err(err("?", Some(rule), v.span, "only values may precede the instruction"));
    }
    Ok(Shape {
        context: None,
        instr: Some((name.as_str(), args.as_slice())),
        values: values.to_vec(),
    })
}

fn target(il: &IlScript, rule: &IlRule) -> Result<(AlgoKind, String), AnimationError> {
    let s = shape(il, rule)?;
    Ok(match (s.instr, s.context) {
        (Some((name, _)), _) => (AlgoKind::Instr, name.to_string()),
        (None, Some((k, _))) => (AlgoKind::ContextExit, k.to_string()),
        (None, None) => unreachable!(),
    })
}

// ---------------------------------------------------------------------------
// Expressions

/// IL expression to AL. Casts disappear and options become lists.
pub fn exp(e: &IlExp) -> AlExpr {
    match &e.kind {
        IlExpKind::Var(x) => AlExpr::Name(x.clone()),
        IlExpKind::Nat(n) => AlExpr::Nat(*n),
        IlExpKind::Epsilon => AlExpr::List(vec![]),
        IlExpKind::Con(c, args) => AlExpr::Construct(c.clone(), args.iter().map(exp).collect()),
        IlExpKind::Call(f, args) => AlExpr::App(f.trim_start_matches('$').to_string(), args.iter().map(exp).collect()),
        IlExpKind::Seq(items) => seq(items, e.ty.strip(1)),
        IlExpKind::Tuple(es) => AlExpr::Tuple(es.iter().map(exp).collect()),
        IlExpKind::Iter(body, it, vars) => AlExpr::Iter(Box::new(exp(body)), vars.clone(), iter(it)),
        IlExpKind::List(es) => AlExpr::List(es.iter().map(exp).collect()),
        IlExpKind::Len(x) => AlExpr::Length(Box::new(exp(x))),
        IlExpKind::Cast(x) => exp(x),
        IlExpKind::OptSome(x) => AlExpr::List(vec![exp(x)]),
    }
}

fn iter(it: &IlIter) -> AlIter {
    match it {
        IlIter::List => AlIter::List,
        IlIter::Opt => AlIter::Opt,
        IlIter::Pow(n) => AlIter::Pow(Box::new(exp(n))),
    }
}

/// A sequence: runs of single elements become `ListE`, spliced parts stay.
fn seq<'a>(items: impl IntoIterator<Item = &'a IlExp>, elem: &IlType) -> AlExpr {
    let mut parts: Vec<AlExpr> = Vec::new();
    let mut run: Vec<AlExpr> = Vec::new();
    for it in items {
        if &it.ty == elem {
            run.push(exp(it));
        } else {
            if !run.is_empty() {
                parts.push(AlExpr::List(std::mem::take(&mut run)));
            }
            parts.push(exp(it));
        }
    }
    if !run.is_empty() || parts.is_empty() {
        parts.push(AlExpr::List(run));
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        AlExpr::Cat(parts)
    }
}

fn cmp_kind(op: CmpOp) -> CmpKind {
    match op {
        CmpOp::Eq => CmpKind::Is,
        CmpOp::Ne => CmpKind::Ne,
        CmpOp::Lt => CmpKind::Lt,
        CmpOp::Le => CmpKind::Le,
        CmpOp::Gt => CmpKind::Gt,
        CmpOp::Ge => CmpKind::Ge,
    }
}

/// The condition under which binding `pattern` to `expr` cannot fail, for an
/// expression of list or option type matched against a list of fixed length.
pub fn guard_partiality(pattern: &AlExpr, expr: &AlExpr, expr_ty: &IlType) -> Option<AlCond> {
    match pattern {
        AlExpr::List(ps) if expr_ty.is_iter() => Some(AlCond::Compare(
            CmpKind::Is,
            AlExpr::Length(Box::new(expr.clone())),
            AlExpr::Nat(ps.len() as u64),
        )),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Renaming

fn rename_exp(e: &IlExp, m: &HashMap<Ident, Ident>) -> IlExp {
    let r = |x: &IlExp| rename_exp(x, m);
    let rv = |x: &Ident| m.get(x).cloned().unwrap_or_else(|| x.clone());
    let kind = match &e.kind {
        IlExpKind::Var(x) => IlExpKind::Var(rv(x)),
        IlExpKind::Nat(n) => IlExpKind::Nat(*n),
        IlExpKind::Epsilon => IlExpKind::Epsilon,
        IlExpKind::Con(c, a) => IlExpKind::Con(c.clone(), a.iter().map(r).collect()),
        IlExpKind::Call(c, a) => IlExpKind::Call(c.clone(), a.iter().map(r).collect()),
        IlExpKind::Seq(a) => IlExpKind::Seq(a.iter().map(r).collect()),
        IlExpKind::Tuple(a) => IlExpKind::Tuple(a.iter().map(r).collect()),
        IlExpKind::List(a) => IlExpKind::List(a.iter().map(r).collect()),
        IlExpKind::Iter(b, it, vs) => IlExpKind::Iter(
            Box::new(r(b)),
            match it {
                IlIter::Pow(n) => IlIter::Pow(Box::new(r(n))),
                other => other.clone(),
            },
            vs.iter().map(rv).collect(),
        ),
        IlExpKind::Len(x) => IlExpKind::Len(Box::new(r(x))),
        IlExpKind::Cast(x) => IlExpKind::Cast(Box::new(r(x))),
        IlExpKind::OptSome(x) => IlExpKind::OptSome(Box::new(r(x))),
    };
    IlExp::new(kind, e.ty.clone(), e.span)
}

fn rename_premise(p: &IlPremise, m: &HashMap<Ident, Ident>) -> IlPremise {
    match p {
        IlPremise::If { lhs, op, rhs, span } => IlPremise::If {
            lhs: rename_exp(lhs, m),
            op: *op,
            rhs: rename_exp(rhs, m),
            span: *span,
        },
        IlPremise::Else { span } => IlPremise::Else { span: *span },
        IlPremise::Iter { body, iter, vars, span } => IlPremise::Iter {
            body: Box::new(rename_premise(body, m)),
            iter: match iter {
                IlIter::Pow(n) => IlIter::Pow(Box::new(rename_exp(n, m))),
                other => other.clone(),
            },
            vars: vars
                .iter()
                .map(|v| m.get(v).cloned().unwrap_or_else(|| v.clone()))
                .collect(),
            span: *span,
        },
    }
}

fn rename_rule(rule: &IlRule, m: &HashMap<Ident, Ident>) -> IlRule {
    let body = match &rule.body {
        IlRuleBody::Reduction {
            state,
            lhs,
            rhs_state,
            rhs,
        } => IlRuleBody::Reduction {
            state: state.as_ref().map(|e| rename_exp(e, m)),
            lhs: rename_exp(lhs, m),
            rhs_state: rhs_state.as_ref().map(|e| rename_exp(e, m)),
            rhs: rename_exp(rhs, m),
        },
        other => other.clone(),
    };
    IlRule {
        body,
        premises: rule.premises.iter().map(|p| rename_premise(p, m)).collect(),
        vars: rule
            .vars
            .iter()
            .map(|(k, t)| (m.get(k).cloned().unwrap_or_else(|| k.clone()), t.clone()))
            .collect(),
        lhs_vars: rule
            .lhs_vars
            .iter()
            .map(|v| m.get(v).cloned().unwrap_or_else(|| v.clone()))
            .collect(),
        ..rule.clone()
    }
}

/// Variables or iterations of variables: the argument forms that can name a
/// parameter.
fn var_like(e: &IlExp) -> bool {
    match &e.uncast().kind {
        IlExpKind::Var(_) => true,
        IlExpKind::Iter(b, IlIter::List | IlIter::Opt, _) => var_like(b),
        _ => false,
    }
}

/// Pairs up the variables of two var-like expressions of the same shape.
fn align(a: &IlExp, b: &IlExp, out: &mut Vec<(Ident, Ident)>) -> bool {
    match (&a.uncast().kind, &b.uncast().kind) {
        (IlExpKind::Var(x), IlExpKind::Var(y)) => {
            out.push((y.clone(), x.clone()));
            true
        }
        (IlExpKind::Iter(ba, ia, _), IlExpKind::Iter(bb, ib, _)) if ia == ib => align(ba, bb, out),
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Steps

#[derive(Clone, Debug, PartialEq)]
enum Step {
    Do(AlInstr),
    Guard(AlCond),
    Otherwise,
}

struct Params {
    patterns: Vec<IlExp>,
    exprs: Vec<AlExpr>,
}

fn choose_params(arg_lists: &[&[IlExp]], types: &[IlType]) -> Params {
    let mut patterns = Vec::new();
    for (i, ty) in types.iter().enumerate() {
        let chosen = arg_lists
            .iter()
            .filter_map(|a| a.get(i))
            .find(|a| var_like(a))
            .cloned()
            .unwrap_or_else(|| {
                let name = Ident::plain(ty.strip(ty.depth()).to_string());
                IlExp::new(IlExpKind::Var(name), ty.clone(), SourceSpan::dummy())
            });
        patterns.push(chosen);
    }
    let exprs = patterns.iter().map(exp).collect();
    Params { patterns, exprs }
}

/// Argument positions paired with `"guard"` or `"bind"`.
type ArgTests = Vec<(usize, &'static str)>;

/// Renames `args`' variables to the parameter names and returns the steps that
/// test or destructure non-variable arguments.
fn bind_params(
    algo: &str,
    rule: Option<&IlRule>,
    params: &Params,
    args: &[IlExp],
    all_vars: &[Ident],
) -> Result<(HashMap<Ident, Ident>, ArgTests), AnimationError> {
    let mut map = HashMap::new();
    let mut tests = Vec::new();
    for (i, (p, a)) in params.patterns.iter().zip(args).enumerate() {
        let mut pairs = Vec::new();
        if var_like(a) && align(p, a, &mut pairs) {
            for (from, to) in pairs {
                map.insert(from, to);
            }
        } else {
            tests.push((i, if a.free_vars().is_empty() { "guard" } else { "let" }));
        }
    }
    for (from, to) in &map {
        if from != to && all_vars.contains(to) && !map.contains_key(to) {
            return Err(err(
                algo,
                rule,
                rule.map(|r| r.span).unwrap_or_default(),
                format!("renaming `{from}` to parameter `{to}` would capture another variable"),
            ));
        }
    }
    Ok((map, tests))
}

fn premise_cond(p: &IlPremise) -> Result<AlCond, String> {
    match p {
        IlPremise::If { lhs, op, rhs, .. } => Ok(AlCond::Compare(cmp_kind(*op), exp(lhs), exp(rhs))),
        IlPremise::Iter {
            body, iter: it, vars, ..
        } => match &**body {
            IlPremise::If { lhs, op, rhs, .. } if matches!(op, CmpOp::Eq | CmpOp::Ne) => Ok(AlCond::Compare(
                cmp_kind(*op),
                AlExpr::Iter(Box::new(exp(lhs)), vars.clone(), iter(it)),
                AlExpr::Iter(Box::new(exp(rhs)), vars.clone(), iter(it)),
            )),
            _ => Err("only iterated equations are supported".into()),
        },
        IlPremise::Else { .. } => Err("`otherwise` must be the only premise".into()),
    }
}

/// Steps for an equation chosen to bind variables.
fn binding_steps(p: &IlPremise, pattern_on_left: bool) -> Vec<Step> {
    let IlPremise::If { lhs, rhs, .. } = p else {
        unreachable!("only equations bind")
    };
    let (pat, e) = if pattern_on_left { (lhs, rhs) } else { (rhs, lhs) };
    let (pat_al, e_al) = (exp(pat), exp(e));
    let mut out = Vec::new();
    if let Some(g) = guard_partiality(&pat_al, &e_al, &e.ty) {
        out.push(Step::Guard(g));
    }
    out.push(Step::Do(AlInstr::Let(pat_al, e_al)));
    out
}

struct PopItem {
    instrs: Vec<AlInstr>,
    needs: Vec<Ident>,
    binds: Vec<Ident>,
}

fn pop_item(v: &IlExp, bound: &HashSet<Ident>) -> Result<PopItem, String> {
    let u = v.uncast();
    let binds = u.free_vars();
    match &u.kind {
        IlExpKind::Iter(_, IlIter::Pow(n), _) => Ok(PopItem {
            instrs: vec![AlInstr::Assert(AlCond::TopValues(exp(n))), AlInstr::Pop(exp(u))],
            needs: n.free_vars(),
            binds,
        }),
        IlExpKind::Iter(_, IlIter::List, _) => Ok(PopItem {
            instrs: vec![AlInstr::PopAll(exp(u))],
            needs: vec![],
            binds,
        }),
        IlExpKind::Iter(_, IlIter::Opt, _) => Err("optional values cannot be popped".into()),
        IlExpKind::Con(_, args) => {
            // The first argument of a value constructor is its type.
            let ty = args
                .first()
                .filter(|t| t.free_vars().iter().all(|x| bound.contains(x)))
                .map(exp);
            Ok(PopItem {
                instrs: vec![AlInstr::Assert(AlCond::TopValue(ty)), AlInstr::Pop(exp(u))],
                needs: vec![],
                binds,
            })
        }
        _ => Ok(PopItem {
            instrs: vec![AlInstr::Assert(AlCond::TopValue(None)), AlInstr::Pop(exp(u))],
            needs: vec![],
            binds,
        }),
    }
}

/// Schedules pops (top of stack first) and premises. Checks over variables in
/// `early_scope` run before any pop; an `otherwise` runs after all pops.
fn schedule(
    pops: &[&IlExp],
    premises: &[IlPremise],
    bound: HashSet<Ident>,
    steps: &mut Vec<Step>,
) -> Result<HashSet<Ident>, String> {
    let otherwise = premises.iter().any(|p| matches!(p, IlPremise::Else { .. }));
    if otherwise && premises.len() > 1 {
        return Err("`otherwise` must be the only premise".into());
    }
    let real: &[IlPremise] = if otherwise { &[] } else { premises };
    let early_scope = bound.clone();
    let mut sched = Scheduler::new(real, bound);
    let mut next_pop = 0;
    loop {
        while let Some(i) = sched.next_check_within(&early_scope) {
            steps.push(Step::Guard(premise_cond(&real[i])?));
        }
        if next_pop < pops.len() {
            let item = pop_item(pops[next_pop], &sched.bound)?;
            if item.needs.iter().all(|v| sched.bound.contains(v)) {
                if matches!(item.instrs[0], AlInstr::PopAll(_)) && next_pop + 1 != pops.len() {
                    return Err("a run of unknown length must be the last value popped".into());
                }
                steps.extend(item.instrs.into_iter().map(Step::Do));
                sched.bound.extend(item.binds);
                next_pop += 1;
                continue;
            }
        }
        match sched.next_premise(false) {
            Some((i, PremiseClass::Checks)) => steps.push(Step::Guard(premise_cond(&real[i])?)),
            Some((i, PremiseClass::Binds { pattern_on_left, .. })) => {
                steps.extend(binding_steps(&real[i], pattern_on_left))
            }
            None => break,
        }
    }
    if next_pop < pops.len() {
        let item = pop_item(pops[next_pop], &sched.bound)?;
        let missing: Vec<String> = item
            .needs
            .iter()
            .filter(|v| !sched.bound.contains(v))
            .map(|v| v.to_string())
            .collect();
        return Err(format!(
            "cannot pop values: length {} is never bound",
            missing.join(", ")
        ));
    }
    sched.finish().map_err(|e| e.to_string())?;
    if otherwise {
        steps.push(Step::Otherwise);
    }
    Ok(sched.bound)
}

fn rhs_steps(rhs: &IlExp, steps: &mut Vec<Step>) {
    let items = flatten(rhs);
    if let [one] = items.as_slice() {
        if matches!(&one.uncast().kind, IlExpKind::Con(c, _) if c == TRAP) {
            steps.push(Step::Do(AlInstr::Trap));
            return;
        }
    }
    let split = items.iter().position(|e| !value_like(e)).unwrap_or(items.len());
    for v in &items[..split] {
        steps.push(Step::Do(AlInstr::Push(exp(v))));
    }
    let rest = &items[split..];
    match rest {
        [] => {}
        [one] if !one.ty.is_iter() => steps.push(Step::Do(AlInstr::Execute(exp(one)))),
        _ => steps.push(Step::Do(AlInstr::Execute(seq(rest.iter().copied(), rhs.ty.strip(1))))),
    }
}

fn rule_steps(il: &IlScript, header: &str, rule: &IlRule, params: &Params) -> Result<Vec<Step>, AnimationError> {
    let shape0 = shape(il, rule)?;
    let args: Vec<IlExp> = shape0.instr.map(|(_, a)| a.to_vec()).unwrap_or_default();
    let all_vars: Vec<Ident> = rule.vars.keys().cloned().collect();
    let (map, tests) = bind_params(header, Some(rule), params, &args, &all_vars)?;
    let rule = rename_rule(rule, &map);
    let s = shape(il, &rule)?;
    let fail = |m: String| err(header, Some(&rule), rule.span, m);
    let (state, _, rhs_state, rhs) = lhs_of(&rule).unwrap();

    let mut steps = Vec::new();
    let mut bound: HashSet<Ident> = params.patterns.iter().flat_map(|p| p.free_vars()).collect();
    if let Some((k, fields)) = s.context {
        steps.push(Step::Guard(AlCond::TopContext(k.to_string())));
        steps.push(Step::Do(AlInstr::Let(
            AlExpr::Construct(k.to_string(), fields.iter().map(exp).collect()),
            AlExpr::CurrentContext(k.to_string()),
        )));
        bound.extend(fields.iter().flat_map(|f| f.free_vars()));
    }
    let state_var = match state {
        Some(z) => match &z.kind {
            IlExpKind::Var(x) => {
                steps.push(Step::Do(AlInstr::Let(AlExpr::Name(x.clone()), AlExpr::CurrentState)));
                bound.insert(x.clone());
                Some(x.clone())
            }
            _ => return Err(fail("the state must be a variable".into())),
        },
        None => None,
    };
    let renamed_args: Vec<IlExp> = s.instr.map(|(_, a)| a.to_vec()).unwrap_or_default();
    for (i, how) in tests {
        let a = &renamed_args[i];
        if how == "guard" {
            steps.push(Step::Guard(AlCond::Compare(
                CmpKind::Is,
                params.exprs[i].clone(),
                exp(a),
            )));
        } else {
            steps.push(Step::Do(AlInstr::Let(exp(a), params.exprs[i].clone())));
            bound.extend(a.free_vars());
        }
    }
    let pops: Vec<&IlExp> = s.values.iter().rev().copied().collect();
    let bound = schedule(&pops, &rule.premises, bound, &mut steps).map_err(fail)?;
    let rhs_vars = rhs
        .free_vars()
        .into_iter()
        .chain(rhs_state.iter().flat_map(|e| e.free_vars()));
    if let Some(x) = rhs_vars.filter(|x| !bound.contains(x)).min() {
        return Err(fail(format!("`{x}` in the result is never bound")));
    }
    if let Some((k, _)) = s.context {
        steps.push(Step::Do(AlInstr::Exit(k.to_string())));
    }
    if let Some(rs) = rhs_state {
        match &rs.uncast().kind {
            IlExpKind::Var(x) if Some(x) == state_var.as_ref() => {}
            IlExpKind::Call(f, args) => steps.push(Step::Do(AlInstr::Perform(
                f.trim_start_matches('$').to_string(),
                args.iter().map(exp).collect(),
            ))),
            _ => return Err(fail("the resulting state must be the input state or a call".into())),
        }
    }
    rhs_steps(rhs, &mut steps);
    Ok(steps)
}

fn conj(guards: Vec<AlCond>) -> AlCond {
    if guards.len() == 1 {
        guards.into_iter().next().unwrap()
    } else {
        AlCond::And(guards)
    }
}

fn non_empty(mut v: Vec<AlInstr>) -> Vec<AlInstr> {
    if v.is_empty() {
        v.push(AlInstr::Nop);
    }
    v
}

fn nest(steps: &[Step], otherwise: &Option<AlCond>) -> Vec<AlInstr> {
    match steps.split_first() {
        None => vec![],
        Some((Step::Do(i), rest)) => {
            let mut v = vec![i.clone()];
            v.extend(nest(rest, otherwise));
            v
        }
        Some((Step::Guard(c), rest)) => vec![AlInstr::If(c.clone(), non_empty(nest(rest, otherwise)), vec![])],
        Some((Step::Otherwise, rest)) => vec![AlInstr::If(
            otherwise.clone().expect("checked by merge"),
            non_empty(nest(rest, otherwise)),
            vec![],
        )],
    }
}

fn is_context_guard(s: &Step) -> bool {
    matches!(s, Step::Guard(c) if c.reads_context())
}

/// Appends `sec` to `body`, chaining it into the else branch of a preceding
/// context test when both inspect the context.
fn append_section(body: &mut Vec<AlInstr>, sec: Vec<AlInstr>) {
    let chains = matches!(sec.as_slice(), [AlInstr::If(c, _, _)] if c.reads_context());
    if chains {
        if let Some(AlInstr::If(c, _, _)) = body.last() {
            if c.reads_context() {
                let mut slot = body.last_mut().unwrap();
                while let AlInstr::If(_, _, e) = slot {
                    if e.is_empty() {
                        *e = sec;
                        return;
                    }
                    slot = e.last_mut().unwrap();
                }
            }
        }
    }
    body.extend(sec);
}

/// Merges per-rule step lists: hoists the common unconditional prefix and
/// turns each remainder into a guarded section.
fn merge(header: &str, names: &[String], lists: Vec<Vec<Step>>, strict: bool) -> Result<Vec<AlInstr>, AnimationError> {
    let fail = |m: String| AnimationError {
        algorithm: header.to_string(),
        rule: None,
        span: SourceSpan::dummy(),
        message: m,
    };
    let hoistable = |s: &Step| matches!(s, Step::Do(_)) || is_context_guard(s);
    let p = if lists.len() == 1 {
        lists[0].iter().take_while(|s| hoistable(s)).count()
    } else {
        let mut p = 0;
        while lists
            .iter()
            .all(|l| l.len() > p && l[p] == lists[0][p] && hoistable(&l[p]))
        {
            p += 1;
        }
        p
    };
    let mut body: Vec<AlInstr> = lists[0][..p]
        .iter()
        .map(|s| match s {
            Step::Do(i) => i.clone(),
            Step::Guard(c) => AlInstr::Assert(c.clone()),
            Step::Otherwise => unreachable!(),
        })
        .collect();
    let mut earlier: Vec<AlCond> = Vec::new();
    for (i, list) in lists.iter().enumerate() {
        let rest = &list[p..];
        if lists.len() > 1 && strict {
            match rest.first() {
                None => return Err(fail(format!("rule {} is subsumed by the others", names[i]))),
                Some(Step::Do(_)) => {
                    return Err(fail(format!("rule {} acts before its first condition", names[i])));
                }
                _ => {}
            }
        }
        let otherwise = if rest.contains(&Step::Otherwise) {
            if earlier.is_empty() {
                return Err(fail(format!("rule {}: `otherwise` needs an earlier rule", names[i])));
            }
            Some(conj(earlier.clone()))
        } else {
            None
        };
        let guards: Vec<AlCond> = rest
            .iter()
            .filter_map(|s| match s {
                Step::Guard(c) => Some(c.clone()),
                _ => None,
            })
            .collect();
        if !guards.is_empty() {
            earlier.push(AlCond::Not(Box::new(conj(guards))));
        }
        append_section(&mut body, nest(rest, &otherwise));
    }
    Ok(non_empty(body))
}

/// Animates every rule of one instruction (or one context's completion) into
/// a single algorithm.
pub fn animate_rule_group(il: &IlScript, rules: &[&IlRule]) -> Result<AlAlgorithm, AnimationError> {
    let first = rules.first().expect("non-empty rule group");
    let s = shape(il, first)?;
    let (kind, name, types): (AlgoKind, String, Vec<IlType>) = match (s.instr, s.context) {
        (Some((n, _)), _) => {
            let types = il.constructor(n).map(|(_, a)| a.to_vec()).unwrap_or_default();
            (AlgoKind::Instr, n.to_string(), types)
        }
        (None, Some((k, _))) => (AlgoKind::ContextExit, k.to_string(), vec![]),
        (None, None) => unreachable!(),
    };
    let shapes: Vec<Shape> = rules.iter().map(|r| shape(il, r)).collect::<Result<_, _>>()?;
    let arg_lists: Vec<&[IlExp]> = shapes.iter().map(|s| s.instr.map(|(_, a)| a).unwrap_or(&[])).collect();
    let params = choose_params(&arg_lists, &types);
    let mut algo = AlAlgorithm {
        kind,
        name,
        params: params.exprs.clone(),
        body: vec![],
        sources: rules.iter().map(|r| format!("{}/{}", r.relation, r.id)).collect(),
    };
    let header = algo.header();
    let lists = rules
        .iter()
        .map(|r| rule_steps(il, &header, r, &params))
        .collect::<Result<Vec<_>, _>>()?;
    algo.body = merge(&header, &algo.sources, lists, true)?;
    Ok(algo)
}

/// Animates a function defined by clauses; clauses are tried in order.
pub fn animate_func(il: &IlScript, f: &IlFunc) -> Result<AlAlgorithm, AnimationError> {
    let _ = il;
    let arg_lists: Vec<&[IlExp]> = f.clauses.iter().map(|c| c.args.as_slice()).collect();
    let params = choose_params(&arg_lists, &f.params);
    let mut algo = AlAlgorithm {
        kind: AlgoKind::Func,
        name: f.name.trim_start_matches('$').to_string(),
        params: params.exprs.clone(),
        body: vec![],
        sources: (1..=f.clauses.len()).map(|i| format!("{}#{i}", f.name)).collect(),
    };
    let header = algo.header();
    let mut lists = Vec::new();
    for c in &f.clauses {
        let all_vars: Vec<Ident> = c.vars.keys().cloned().collect();
        let (map, tests) = bind_params(&header, None, &params, &c.args, &all_vars)?;
        let fail = |m: String| err(&header, None, c.span, m);
        let args: Vec<IlExp> = c.args.iter().map(|a| rename_exp(a, &map)).collect();
        let premises: Vec<IlPremise> = c.premises.iter().map(|p| rename_premise(p, &map)).collect();
        let result = rename_exp(&c.result, &map);
        let mut steps = Vec::new();
        let mut bound: HashSet<Ident> = params.patterns.iter().flat_map(|p| p.free_vars()).collect();
        for (i, how) in tests {
            if how == "guard" {
                steps.push(Step::Guard(AlCond::Compare(
                    CmpKind::Is,
                    params.exprs[i].clone(),
                    exp(&args[i]),
                )));
            } else {
                steps.push(Step::Do(AlInstr::Let(exp(&args[i]), params.exprs[i].clone())));
                bound.extend(args[i].free_vars());
            }
        }
        let bound = schedule(&[], &premises, bound, &mut steps).map_err(fail)?;
        if let Some(x) = result.free_vars().into_iter().filter(|x| !bound.contains(x)).min() {
            return Err(fail(format!("`{x}` in the result is never bound")));
        }
        steps.push(Step::Do(AlInstr::Return(Some(exp(&result)))));
        lists.push(steps);
    }
    algo.body = merge(&header, &algo.sources, lists, false)?;
    Ok(algo)
}
