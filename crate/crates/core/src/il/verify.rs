//! Independent re-check of an elaborated script.
//!
//! Every node's type is re-derived from its children and compared with the
//! stored annotation; every name must resolve.

use std::collections::HashMap;

use indexmap::IndexMap;

use crate::el::ast::Ident;
use crate::il::ast::*;
use crate::il::types::{IlType, IterKind, PrimType};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyError {
    /// `relation/rule` or function name.
    pub context: String,
    pub message: String,
}

pub fn verify(il: &IlScript) -> Result<(), Vec<VerifyError>> {
    let mut v = Verifier {
        il,
        errors: Vec::new(),
        context: String::new(),
    };
    v.script();
    if v.errors.is_empty() {
        Ok(())
    } else {
        Err(v.errors)
    }
}

struct Verifier<'a> {
    il: &'a IlScript,
    errors: Vec<VerifyError>,
    context: String,
}

struct Scope<'v> {
    vars: &'v IndexMap<Ident, IlType>,
    /// How many enclosing iterations iterate each variable.
    stripped: HashMap<Ident, usize>,
}

impl<'a> Verifier<'a> {
    fn fail(&mut self, message: impl Into<String>) {
        self.errors.push(VerifyError {
            context: self.context.clone(),
            message: message.into(),
        });
    }

    fn ty(&mut self, t: &IlType) {
        match t {
            IlType::Prim(_) => {}
            IlType::Syn(s) => {
                if !self.il.syntaxes.contains_key(s) {
                    self.fail(format!("dangling syntax `{s}`"));
                }
            }
            IlType::Tuple(ts) => ts.iter().for_each(|t| self.ty(t)),
            IlType::Iter(inner, _) => {
                if !t.is_well_formed() {
                    self.fail(format!("ill-formed type `{t}`"));
                }
                self.ty(inner)
            }
        }
    }

    fn script(&mut self) {
        for s in self.il.syntaxes.values() {
            self.context = s.name.clone();
            for c in &s.cases {
                match c {
                    IlCase::Con { args, .. } => args.iter().for_each(|t| self.ty(t)),
                    IlCase::Include(t) => self.ty(t),
                }
            }
        }
        for t in self.il.vars.values() {
            self.ty(t);
        }
        for f in self.il.funcs.values() {
            self.context = f.name.clone();
            f.params.iter().chain([&f.result]).for_each(|t| self.ty(t));
            for c in &f.clauses {
                let mut sc = Scope {
                    vars: &c.vars,
                    stripped: HashMap::new(),
                };
                if c.args.len() != f.params.len() {
                    self.fail("clause arity differs from declaration");
                }
                for (a, p) in c.args.iter().zip(&f.params) {
                    self.expect(a, p, &mut sc);
                }
                self.expect(&c.result, &f.result, &mut sc);
                c.premises.iter().for_each(|p| self.premise(p, &mut sc));
            }
        }
        for r in self.il.relations.values() {
            for rule in &r.rules {
                self.context = format!("{}/{}", r.name, rule.id);
                if rule.relation != r.name {
                    self.fail("rule filed under the wrong relation");
                }
                let mut sc = Scope {
                    vars: &rule.vars,
                    stripped: HashMap::new(),
                };
                match (&rule.body, &r.shape) {
                    (
                        IlRuleBody::Reduction {
                            state,
                            lhs,
                            rhs_state,
                            rhs,
                        },
                        IlShape::Reduction {
                            state: st,
                            lhs: lt,
                            rhs_state: rst,
                            rhs: rt,
                        },
                    ) => {
                        for (e, t) in [(state, st), (rhs_state, rst)] {
                            match (e, t) {
                                (Some(e), Some(t)) => self.expect(e, t, &mut sc),
                                (None, None) => {}
                                _ => self.fail("state does not match relation shape"),
                            }
                        }
                        self.expect(lhs, lt, &mut sc);
                        self.expect(rhs, rt, &mut sc);
                    }
                    (
                        IlRuleBody::Typing { context, subject, ty },
                        IlShape::Typing {
                            context: ct,
                            subject: st,
                            ty: tt,
                        },
                    ) => {
                        self.expect(context, ct, &mut sc);
                        self.expect(subject, st, &mut sc);
                        self.expect(ty, tt, &mut sc);
                    }
                    _ => self.fail("rule body does not match relation shape"),
                }
                rule.premises.iter().for_each(|p| self.premise(p, &mut sc));
                for x in &rule.lhs_vars {
                    if !rule.vars.contains_key(x) {
                        self.fail(format!("left-hand-side variable `{x}` has no type"));
                    }
                }
            }
        }
        let mut seen: Vec<&str> = Vec::new();
        for g in &self.il.recursion_groups {
            for n in &g.names {
                let known = self.il.syntaxes.contains_key(n)
                    || self.il.funcs.contains_key(n)
                    || self.il.relations.contains_key(n);
                if !known || seen.contains(&n.as_str()) {
                    self.context = n.clone();
                    self.fail("recursion groups do not partition the definitions");
                }
                seen.push(n);
            }
        }
    }

    fn expect(&mut self, e: &IlExp, t: &IlType, sc: &mut Scope) {
        let got = self.exp(e, sc);
        if &got != t {
            self.fail(format!("`{e}` has type `{got}`, expected `{t}`"));
        }
    }

    fn premise(&mut self, p: &IlPremise, sc: &mut Scope) {
        match p {
            IlPremise::If { lhs, rhs, .. } => {
                let l = self.exp(lhs, sc);
                let r = self.exp(rhs, sc);
                if l != r {
                    self.fail(format!("premise compares `{l}` with `{r}`"));
                }
            }
            IlPremise::Else { .. } => {}
            IlPremise::Iter { body, iter, vars, .. } => {
                if let IlIter::Pow(n) = iter {
                    self.expect(n, &IlType::Prim(PrimType::Nat), sc);
                }
                for x in vars {
                    *sc.stripped.entry(x.clone()).or_default() += 1;
                }
                self.premise(body, sc);
                for x in vars {
                    *sc.stripped.get_mut(x).unwrap() -= 1;
                }
            }
        }
    }

    fn includes(&self, sup: &IlType, sub: &IlType) -> bool {
        match sup {
            IlType::Syn(s) => self.il.includes(s, sub),
            _ => false,
        }
    }

    /// Derives the type of `e` and checks it against the stored annotation.
    fn exp(&mut self, e: &IlExp, sc: &mut Scope) -> IlType {
        let derived = self.derive(e, sc);
        if derived != e.ty {
            self.fail(format!("`{e}` is annotated `{}` but derives `{derived}`", e.ty));
        }
        e.ty.clone()
    }

    fn derive(&mut self, e: &IlExp, sc: &mut Scope) -> IlType {
        match &e.kind {
            IlExpKind::Var(x) => match sc.vars.get(x) {
                Some(full) => {
                    let n = sc.stripped.get(x).copied().unwrap_or(0);
                    full.strip(n).clone()
                }
                None => {
                    self.fail(format!("dangling variable `{x}`"));
                    e.ty.clone()
                }
            },
            IlExpKind::Nat(_) => {
                if !matches!(e.ty, IlType::Prim(p) if p.admits_literal()) {
                    self.fail(format!("literal annotated `{}`", e.ty));
                }
                e.ty.clone()
            }
            IlExpKind::Epsilon => {
                if !e.ty.is_iter() {
                    self.fail(format!("epsilon annotated `{}`", e.ty));
                }
                e.ty.clone()
            }
            IlExpKind::Con(c, args) => {
                let Some((syn, sig)) = self.il.constructor(c) else {
                    self.fail(format!("dangling constructor `{c}`"));
                    return e.ty.clone();
                };
                let (owner, sig) = (syn.name.clone(), sig.to_vec());
                if sig.len() != args.len() {
                    self.fail(format!("constructor `{c}` applied to {} arguments", args.len()));
                }
                for (a, t) in args.iter().zip(&sig) {
                    self.expect(a, t, sc);
                }
                IlType::Syn(owner)
            }
            IlExpKind::Call(f, args) => {
                let Some(func) = self.il.funcs.get(f) else {
                    self.fail(format!("dangling function `{f}`"));
                    return e.ty.clone();
                };
                if func.params.len() != args.len() {
                    self.fail(format!("`{f}` applied to {} arguments", args.len()));
                }
                for (a, t) in args.iter().zip(&func.params) {
                    self.expect(a, t, sc);
                }
                func.result.clone()
            }
            IlExpKind::Seq(items) => {
                let Some((elem, IterKind::List)) = e.ty.as_iter() else {
                    self.fail(format!("sequence annotated `{}`", e.ty));
                    return e.ty.clone();
                };
                let elem = elem.clone();
                for i in items {
                    let t = self.exp(i, sc);
                    let ok = t == elem || t.as_iter().is_some_and(|(u, _)| *u == elem);
                    if !ok {
                        self.fail(format!("sequence item `{i}` of type `{t}` in `{}`", e.ty));
                    }
                }
                e.ty.clone()
            }
            IlExpKind::Tuple(items) => IlType::Tuple(items.iter().map(|i| self.exp(i, sc)).collect()),
            IlExpKind::Iter(body, iter, vars) => {
                if let IlIter::Pow(n) = iter {
                    self.expect(n, &IlType::Prim(PrimType::Nat), sc);
                }
                for x in vars {
                    *sc.stripped.entry(x.clone()).or_default() += 1;
                }
                let t = self.exp(body, sc);
                for x in vars {
                    *sc.stripped.get_mut(x).unwrap() -= 1;
                }
                t.iter(iter.kind())
            }
            IlExpKind::List(items) => {
                let Some((elem, IterKind::List)) = e.ty.as_iter() else {
                    self.fail(format!("list annotated `{}`", e.ty));
                    return e.ty.clone();
                };
                let elem = elem.clone();
                for i in items {
                    self.expect(i, &elem, sc);
                }
                e.ty.clone()
            }
            IlExpKind::Len(inner) => {
                let t = self.exp(inner, sc);
                if !t.is_iter() {
                    self.fail(format!("length of `{t}`"));
                }
                IlType::Prim(PrimType::Nat)
            }
            IlExpKind::Cast(inner) => {
                let from = self.exp(inner, sc);
                let ok = self.includes(&e.ty, &from)
                    || matches!((&e.ty, &from), (IlType::Iter(u, k), IlType::Iter(t, k2))
                        if k == k2 && self.includes(u, t));
                if !ok {
                    self.fail(format!("cast from `{from}` to `{}` is not an upcast", e.ty));
                }
                e.ty.clone()
            }
            IlExpKind::OptSome(inner) => {
                let t = self.exp(inner, sc);
                if t.is_iter() {
                    self.fail(format!("option of iterated `{t}`"));
                }
                t.opt()
            }
        }
    }
}
