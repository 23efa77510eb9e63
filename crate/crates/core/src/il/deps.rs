//! Definition dependency graph and its strongly connected components.

use indexmap::{IndexMap, IndexSet};

use crate::il::ast::{IlCase, IlExp, IlExpKind, IlScript, IlShape, RecGroup};
use crate::il::types::IlType;

fn type_refs(t: &IlType, out: &mut IndexSet<String>) {
    match t {
        IlType::Prim(_) => {}
        IlType::Syn(s) => {
            out.insert(s.clone());
        }
        IlType::Tuple(ts) => ts.iter().for_each(|t| type_refs(t, out)),
        IlType::Iter(t, _) => type_refs(t, out),
    }
}

fn exp_refs(e: &IlExp, out: &mut IndexSet<String>) {
    e.walk(&mut |e| {
        if let IlExpKind::Call(f, _) = &e.kind {
            out.insert(f.clone());
        }
    });
}

/// Direct references of every definition: syntaxes through their case types,
/// functions through their signatures and calls, relations through their shape
/// and the calls in their rules.
pub fn dependency_graph(il: &IlScript) -> IndexMap<String, IndexSet<String>> {
    let mut g = IndexMap::new();
    for s in il.syntaxes.values() {
        let mut out = IndexSet::new();
        for c in &s.cases {
            match c {
                IlCase::Con { args, .. } => args.iter().for_each(|t| type_refs(t, &mut out)),
                IlCase::Include(t) => type_refs(t, &mut out),
            }
        }
        g.insert(s.name.clone(), out);
    }
    for f in il.funcs.values() {
        let mut out = IndexSet::new();
        f.params.iter().chain([&f.result]).for_each(|t| type_refs(t, &mut out));
        for c in &f.clauses {
            c.args.iter().chain([&c.result]).for_each(|e| exp_refs(e, &mut out));
            c.premises
                .iter()
                .for_each(|p| p.walk_exps(&mut |e| exp_refs(e, &mut out)));
        }
        g.insert(f.name.clone(), out);
    }
    for r in il.relations.values() {
        let mut out = IndexSet::new();
        match &r.shape {
            IlShape::Reduction {
                state,
                lhs,
                rhs_state,
                rhs,
            } => state
                .iter()
                .chain([lhs])
                .chain(rhs_state.iter())
                .chain([rhs])
                .for_each(|t| type_refs(t, &mut out)),
            IlShape::Typing { context, subject, ty } => {
                [context, subject, ty].into_iter().for_each(|t| type_refs(t, &mut out))
            }
        }
        for rule in &r.rules {
            rule.body_exps().into_iter().for_each(|e| exp_refs(e, &mut out));
            rule.premises
                .iter()
                .for_each(|p| p.walk_exps(&mut |e| exp_refs(e, &mut out)));
        }
        g.insert(r.name.clone(), out);
    }
    g
}

/// Strongly connected components of the definition graph, dependencies first.
///
/// Within a group, names keep definition order.
pub fn dependency_groups(il: &IlScript) -> Vec<RecGroup> {
    let g = dependency_graph(il);
    let succ: Vec<Vec<usize>> = g
        .values()
        .map(|out| out.iter().filter_map(|n| g.get_index_of(n)).collect())
        .collect();
    let mut groups = Vec::new();
    for comp in tarjan(&succ) {
        let mut comp = comp;
        comp.sort_unstable();
        let recursive = comp.len() > 1 || succ[comp[0]].contains(&comp[0]);
        groups.push(RecGroup {
            names: comp.iter().map(|&i| g.get_index(i).unwrap().0.clone()).collect(),
            recursive,
        });
    }
    groups
}

/// Iterative Tarjan; components come out in reverse topological order.
fn tarjan(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n = succ.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut out = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        // (node, next successor position)
        let mut work = vec![(root, 0usize)];
        while let Some(&mut (v, ref mut pos)) = work.last_mut() {
            if *pos == 0 && index[v] == UNSEEN {
                index[v] = next;
                low[v] = next;
                next += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = succ[v].get(*pos) {
                *pos += 1;
                if index[w] == UNSEEN {
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                out.push(comp);
            }
        }
    }
    out
}
