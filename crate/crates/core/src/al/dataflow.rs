//! Premise scheduling: which equations bind variables and in what order.

use std::collections::HashSet;
use std::fmt;

use crate::el::ast::{CmpOp, Ident};
use crate::il::ast::{IlExp, IlExpKind, IlIter, IlPremise};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PremiseClass {
    /// An equation read as an assignment to the listed variables.
    Binds {
        vars: Vec<Ident>,
        pattern_on_left: bool,
    },
    Checks,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicDependency {
    /// Variables no ordering of the remaining premises can bind.
    pub vars: Vec<Ident>,
}

impl fmt::Display for CyclicDependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("cannot order premises; unbound: ")?;
        for (i, v) in self.vars.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for CyclicDependency {}

fn unbound(e: &IlExp, bound: &HashSet<Ident>) -> Vec<Ident> {
    e.free_vars().into_iter().filter(|v| !bound.contains(v)).collect()
}

/// Whether matching a value against `e` can bind its unbound variables.
/// Calls and lengths must be fully bound, since they are evaluated.
pub(crate) fn is_pattern(e: &IlExp, bound: &HashSet<Ident>) -> bool {
    match &e.kind {
        IlExpKind::Var(_) | IlExpKind::Nat(_) | IlExpKind::Epsilon => true,
        IlExpKind::Con(_, es) | IlExpKind::Tuple(es) | IlExpKind::List(es) => es.iter().all(|x| is_pattern(x, bound)),
        IlExpKind::Seq(es) => {
            // At most one spliced item may have an unknown length.
            let open = es
                .iter()
                .filter(|x| x.ty != elem_of(&e.ty) && !has_known_len(x, bound))
                .count();
            open <= 1 && es.iter().all(|x| is_pattern(x, bound))
        }
        IlExpKind::Cast(x) | IlExpKind::OptSome(x) => is_pattern(x, bound),
        IlExpKind::Iter(body, it, _) => {
            let len_ok = match it {
                IlIter::Pow(n) => matches!(n.kind, IlExpKind::Var(_)) || unbound(n, bound).is_empty(),
                _ => true,
            };
            len_ok && is_pattern(body, bound)
        }
        IlExpKind::Call(..) | IlExpKind::Len(_) => unbound(e, bound).is_empty(),
    }
}

fn elem_of(t: &crate::il::IlType) -> crate::il::IlType {
    t.strip(1).clone()
}

fn has_known_len(e: &IlExp, bound: &HashSet<Ident>) -> bool {
    match &e.kind {
        IlExpKind::Iter(_, IlIter::Pow(n), _) => unbound(n, bound).is_empty(),
        IlExpKind::Cast(x) => has_known_len(x, bound),
        IlExpKind::Epsilon => true,
        _ => false,
    }
}

/// Classifies `p` under the currently bound variables, or `None` if it is not
/// yet ready. A side that is a closed constant never drives a binding.
pub fn classify(p: &IlPremise, bound: &HashSet<Ident>) -> Option<PremiseClass> {
    match p {
        IlPremise::Else { .. } => Some(PremiseClass::Checks),
        IlPremise::Iter { .. } => p
            .free_vars()
            .iter()
            .all(|v| bound.contains(v))
            .then_some(PremiseClass::Checks),
        IlPremise::If { lhs, op, rhs, .. } => {
            let (l, r) = (unbound(lhs, bound), unbound(rhs, bound));
            if l.is_empty() && r.is_empty() {
                return Some(PremiseClass::Checks);
            }
            if *op != CmpOp::Eq {
                return None;
            }
            let closed = |e: &IlExp| e.free_vars().is_empty();
            if r.is_empty() && is_pattern(lhs, bound) && !closed(rhs) {
                return Some(PremiseClass::Binds {
                    vars: l,
                    pattern_on_left: true,
                });
            }
            if l.is_empty() && is_pattern(rhs, bound) && !closed(lhs) {
                return Some(PremiseClass::Binds {
                    vars: r,
                    pattern_on_left: false,
                });
            }
            None
        }
    }
}

/// Orders `premises` so every binding premise's other side is bound by the
/// time it runs. Checks go as early as they are ready, otherwise source order
/// is kept.
pub fn premise_dataflow<'a>(
    premises: &'a [IlPremise],
    initially_bound: &[Ident],
) -> Result<Vec<(&'a IlPremise, PremiseClass)>, CyclicDependency> {
    let mut sched = Scheduler::new(premises, initially_bound.iter().cloned().collect());
    let mut out = Vec::new();
    while let Some((i, class)) = sched.next_premise(true) {
        out.push((&premises[i], class));
    }
    sched.finish()?;
    Ok(out)
}

/// Incremental form of [`premise_dataflow`] that lets the caller interleave
/// its own binding steps (stack pops).
pub(crate) struct Scheduler<'a> {
    premises: &'a [IlPremise],
    done: Vec<bool>,
    pub bound: HashSet<Ident>,
}

impl<'a> Scheduler<'a> {
    pub fn new(premises: &'a [IlPremise], bound: HashSet<Ident>) -> Self {
        Scheduler {
            premises,
            done: vec![false; premises.len()],
            bound,
        }
    }

    /// The earliest ready check that mentions only variables in `scope`.
    pub fn next_check_within(&mut self, scope: &HashSet<Ident>) -> Option<usize> {
        let i = (0..self.premises.len()).find(|&i| {
            !self.done[i]
                && !matches!(self.premises[i], IlPremise::Else { .. })
                && self.premises[i].free_vars().iter().all(|v| scope.contains(v))
                && classify(&self.premises[i], &self.bound) == Some(PremiseClass::Checks)
        })?;
        self.done[i] = true;
        Some(i)
    }

    /// The earliest ready premise; checks are preferred when `checks_first`.
    pub fn next_premise(&mut self, checks_first: bool) -> Option<(usize, PremiseClass)> {
        let ready: Vec<(usize, PremiseClass)> = (0..self.premises.len())
            .filter(|&i| !self.done[i])
            .filter_map(|i| classify(&self.premises[i], &self.bound).map(|c| (i, c)))
            .collect();
        let pick = if checks_first {
            ready
                .iter()
                .find(|(_, c)| *c == PremiseClass::Checks)
                .or(ready.first())
                .cloned()
        } else {
            ready.first().cloned()
        }?;
        self.done[pick.0] = true;
        if let PremiseClass::Binds { vars, .. } = &pick.1 {
            self.bound.extend(vars.iter().cloned());
        }
        Some(pick)
    }

    pub fn finish(&self) -> Result<(), CyclicDependency> {
        let mut vars: Vec<Ident> = Vec::new();
        for (i, p) in self.premises.iter().enumerate() {
            if !self.done[i] {
                for v in p.free_vars() {
                    if !self.bound.contains(&v) && !vars.contains(&v) {
                        vars.push(v);
                    }
                }
            }
        }
        if self.done.iter().all(|d| *d) {
            Ok(())
        } else {
            vars.sort();
            Err(CyclicDependency { vars })
        }
    }
}
