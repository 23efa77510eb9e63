//! Property suites shared by the property tests and the acceptance run.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestError, TestRng, TestRunner};

use spectec_core::al::{animate, check_binding};
use spectec_core::corpus::builtin_sources;
use spectec_core::el::ast::*;
use spectec_core::el::lexer::tokenize;
use spectec_core::el::parser::parse_script;
use spectec_core::el::pretty::pretty_el;
use spectec_core::il::{elaborate, verify};
use spectec_core::pipeline::{builtin_interpreter, parse_sources};
use spectec_core::runtime::{RuntimeError, Store};
use spectec_core::span::{FileId, SourceSpan};

use super::gen::Gen;

/// A property suite run to completion.
pub type Suite = fn() -> Result<(), String>;

fn sp() -> SourceSpan {
    SourceSpan::dummy()
}

fn e(kind: ElExpKind) -> ElExp {
    ElExp::new(kind, sp())
}

/// Runs `test` on `cases` values of `strategy` with a fixed seed.
pub fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| match e {
        TestError::Fail(why, value) => format!("{why}\nminimal input: {value:#?}"),
        TestError::Abort(why) => format!("aborted: {why}"),
    })
}

// ---- surface scripts ----

fn ident() -> impl Strategy<Value = Ident> {
    (
        prop::sample::select(vec!["c", "x", "val", "instr", "t", "n", "nt", "z", "c_numtype"]),
        prop::sample::select(vec![None, Some("1"), Some("2"), Some("k")]),
        0u8..3,
    )
        .prop_map(|(base, sub, primes)| Ident {
            base: base.to_string(),
            sub: if base.contains('_') {
                None
            } else {
                sub.map(str::to_string)
            },
            primes,
        })
}

fn con_name() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["NOP", "CONST", "LOCAL.GET", "LABEL_", "I32", "BR_IF", "FT"]).prop_map(str::to_string)
}

fn leaf() -> impl Strategy<Value = ElExp> {
    prop_oneof![
        3 => ident().prop_map(|x| e(ElExpKind::Var(x))),
        1 => (0u64..300).prop_map(|n| e(ElExpKind::Nat(n))),
        1 => Just(e(ElExpKind::Epsilon)),
        1 => con_name().prop_map(|c| e(ElExpKind::Con(c, vec![]))),
    ]
}

fn not_seq(x: &ElExp) -> bool {
    !matches!(x.kind, ElExpKind::Seq(_))
}

/// Expressions in the canonical shapes the printer produces: sequences have
/// at least two items, never nest directly and start with a variable, so a
/// parenthesised sequence cannot be read as a constructor application.
pub fn el_exp() -> impl Strategy<Value = ElExp> {
    leaf().prop_recursive(4, 40, 4, |inner| {
        let item = inner.clone().prop_filter("sequence item", not_seq);
        prop_oneof![
            (con_name(), prop::collection::vec(item.clone(), 1..4)).prop_map(|(c, args)| e(ElExpKind::Con(c, args))),
            (
                prop::sample::select(vec!["$f", "$binop", "$with_local"]),
                prop::collection::vec(inner.clone(), 0..3)
            )
                .prop_map(|(f, args)| e(ElExpKind::Call(f.to_string(), args))),
            (ident(), prop::collection::vec(item.clone(), 1..4)).prop_map(|(x, rest)| {
                let mut items = vec![e(ElExpKind::Var(x))];
                items.extend(rest);
                e(ElExpKind::Seq(items))
            }),
            prop::collection::vec(inner.clone(), 2..4).prop_map(|xs| e(ElExpKind::Tuple(xs))),
            (
                item.clone(),
                prop_oneof![Just(None), Just(Some(ElIter::List)), Just(Some(ElIter::Opt)),],
                ident()
            )
                .prop_map(|(body, it, n)| {
                    let it = it.unwrap_or_else(|| ElIter::Pow(Box::new(e(ElExpKind::Var(n)))));
                    e(ElExpKind::Iter(Box::new(body), it))
                }),
            prop::collection::vec(item, 0..3).prop_map(|xs| e(ElExpKind::List(xs))),
            inner.prop_map(|x| e(ElExpKind::Len(Box::new(x)))),
        ]
    })
}

fn el_type() -> impl Strategy<Value = ElType> {
    (
        prop::sample::select(vec!["nat", "instr", "val", "numtype", "c_numtype"]),
        prop::collection::vec(prop_oneof![Just(TypeIter::List), Just(TypeIter::Opt)], 0..2),
    )
        .prop_map(|(name, iters)| ElType {
            name: name.to_string(),
            iters,
            span: sp(),
        })
}

fn premise() -> impl Strategy<Value = ElPremise> {
    let cmp = prop::sample::select(vec![CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge]);
    let simple = prop_oneof![
        4 => (el_exp(), cmp, el_exp()).prop_map(|(lhs, op, rhs)| ElPremise::If { lhs, op, rhs, span: sp() }),
        1 => Just(ElPremise::Else { span: sp() }),
    ];
    prop_oneof![
        4 => simple.clone(),
        1 => (simple, prop_oneof![Just(ElIter::List), Just(ElIter::Opt)]).prop_filter_map("iterated otherwise", |(p, iter)| {
            match p {
                ElPremise::Else { .. } => None,
                p => Some(ElPremise::Iter { body: Box::new(p), iter, span: sp() }),
            }
        }),
    ]
}

fn syntax_case() -> impl Strategy<Value = SyntaxCase> {
    prop_oneof![
        (con_name(), prop::collection::vec(el_type(), 0..3)).prop_map(|(name, args)| SyntaxCase::Con {
            name,
            args,
            span: sp()
        }),
        prop::sample::select(vec!["val", "nat", "numtype"]).prop_map(|n| SyntaxCase::Include {
            name: n.to_string(),
            span: sp()
        }),
    ]
}

fn el_def() -> impl Strategy<Value = ElDef> {
    let state = || prop::option::of(el_exp());
    prop_oneof![
        (
            prop::sample::select(vec!["instr", "val", "abc"]),
            prop::collection::vec(syntax_case(), 0..4)
        )
            .prop_map(|(name, cases)| ElDef::Syntax {
                name: name.to_string(),
                cases,
                span: sp()
            }),
        (prop::sample::select(vec!["x", "c", "val"]), el_type()).prop_map(|(name, ty)| ElDef::Var {
            name: name.to_string(),
            ty,
            span: sp()
        }),
        (prop::collection::vec(el_type(), 0..3), el_type()).prop_map(|(params, result)| ElDef::FuncDecl {
            name: "$f".into(),
            params,
            result,
            span: sp()
        }),
        (
            prop::collection::vec(el_exp(), 0..3),
            el_exp(),
            prop::collection::vec(premise(), 0..3)
        )
            .prop_map(|(args, result, premises)| ElDef::FuncClause {
                name: "$f".into(),
                args,
                result,
                premises,
                span: sp()
            }),
        (
            prop::option::of(el_type()),
            el_type(),
            prop::option::of(el_type()),
            el_type()
        )
            .prop_map(|(state, lhs, rhs_state, rhs)| ElDef::Relation {
                name: "Step_pure".into(),
                shape: RelShape::Reduction {
                    state,
                    lhs,
                    rhs_state,
                    rhs
                },
                span: sp()
            }),
        (el_type(), el_type(), el_type()).prop_map(|(context, subject, ty)| ElDef::Relation {
            name: "Instr_ok".into(),
            shape: RelShape::Typing { context, subject, ty },
            span: sp()
        }),
        (
            prop::sample::select(vec!["binop-val", "local.get", "br_if-true", "x1"]),
            state(),
            el_exp(),
            state(),
            el_exp(),
            prop::collection::vec(premise(), 0..3)
        )
            .prop_map(|(id, state, lhs, rhs_state, rhs, premises)| ElDef::Rule {
                relation: "Step".into(),
                id: id.to_string(),
                body: RuleBody::Reduction {
                    state,
                    lhs,
                    rhs_state,
                    rhs
                },
                premises,
                span: sp()
            }),
        (el_exp(), el_exp(), el_exp(), prop::collection::vec(premise(), 0..2)).prop_map(
            |(context, subject, ty, premises)| ElDef::Rule {
                relation: "Instr_ok".into(),
                id: "t".into(),
                body: RuleBody::Typing { context, subject, ty },
                premises,
                span: sp()
            }
        ),
    ]
}

pub fn el_script() -> impl Strategy<Value = ElScript> {
    prop::collection::vec(el_def(), 0..6).prop_map(|defs| ElScript { defs })
}

/// Printing and re-parsing gives back the same script.
pub fn parser_round_trip(cases: u32) -> Result<(), String> {
    check(cases, el_script(), |script| {
        let text = pretty_el(&script);
        let tokens = tokenize(&text, FileId(0)).map_err(|e| TestCaseError::fail(format!("lex: {e:?}\n{text}")))?;
        let parsed = parse_script(&tokens).map_err(|e| TestCaseError::fail(format!("parse: {e:?}\n{text}")))?;
        prop_assert_eq!(parsed.strip_spans(), script.strip_spans(), "{}", text);
        Ok(())
    })
}

// ---- corpus variants ----

/// Edits to the corpus: `(def index, kind)` where kind 0 drops the
/// definition and 1 to 3 reverse, truncate or flip a rule's premises.
pub type Edits = Vec<(usize, u8)>;

pub fn corpus() -> ElScript {
    parse_sources(&builtin_sources()).expect("corpus parses")
}

pub fn corpus_edits(base: &ElScript) -> impl Strategy<Value = Edits> {
    prop::collection::vec((0..base.defs.len(), 0u8..4), 0..4)
}

pub fn apply_edits(base: &ElScript, edits: &Edits) -> ElScript {
    let mut defs: Vec<Option<ElDef>> = base.defs.iter().cloned().map(Some).collect();
    for &(i, edit) in edits {
        let Some(def) = &mut defs[i] else { continue };
        match (def, edit) {
            (_, 0) => defs[i] = None,
            (ElDef::Rule { premises, .. }, 1) => premises.reverse(),
            (ElDef::Rule { premises, .. }, 2) => {
                premises.pop();
            }
            (ElDef::Rule { premises, .. }, _) => {
                if let Some(ElPremise::If { lhs, rhs, .. }) = premises.first_mut() {
                    std::mem::swap(lhs, rhs);
                }
            }
            _ => {}
        }
    }
    ElScript {
        defs: defs.into_iter().flatten().collect(),
    }
}

fn describe(base: &ElScript, edits: &Edits) -> String {
    let what = |d: &ElDef| match d {
        ElDef::Rule { relation, id, .. } => format!("rule {relation}/{id}"),
        ElDef::Syntax { name, .. } | ElDef::Var { name, .. } | ElDef::Relation { name, .. } => name.clone(),
        ElDef::FuncDecl { name, .. } | ElDef::FuncClause { name, .. } => name.clone(),
    };
    let kinds = [
        "drop",
        "reverse premises of",
        "drop last premise of",
        "flip first premise of",
    ];
    edits
        .iter()
        .map(|&(i, k)| format!("{} {}", kinds[k as usize], what(&base.defs[i])))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Whatever elaborates also passes the independent IL checker.
pub fn elaboration_rechecks(cases: u32) -> Result<(), String> {
    let base = corpus();
    let accepted = std::cell::Cell::new(0u32);
    check(cases, corpus_edits(&base), |edits| {
        if let Ok(el) = elaborate(&apply_edits(&base, &edits)) {
            accepted.set(accepted.get() + 1);
            let errs = verify(&el.script).err().unwrap_or_default();
            prop_assert!(errs.is_empty(), "{}: {:?}", describe(&base, &edits), errs);
        }
        Ok(())
    })?;
    if accepted.get() == 0 {
        return Err("no variant elaborated".into());
    }
    Ok(())
}

/// Every extracted algorithm binds each variable before it is read.
pub fn binding_soundness(cases: u32) -> Result<(), String> {
    let base = corpus();
    check(cases, corpus_edits(&base), |edits| {
        let Ok(el) = elaborate(&apply_edits(&base, &edits)) else {
            return Ok(());
        };
        let Ok(al) = animate(&el.script) else { return Ok(()) };
        for algo in &al.algorithms {
            let r = check_binding(algo);
            prop_assert!(r.is_ok(), "{}: {}: {:?}", describe(&base, &edits), algo.header(), r);
        }
        Ok(())
    })
}

/// Valid programs never drive the interpreter into a state its algorithms'
/// assertions rule out, and leave exactly their results on the stack.
pub fn stack_discipline(cases: u32) -> Result<(), String> {
    let interp = builtin_interpreter();
    check(cases, any::<u64>(), |seed| {
        let p = Gen::new(seed).program();
        prop_assume!(spectec_core::runtime::wasm::validate(&p.module).is_ok());
        let mut store = Store::instantiate(&p.module);
        match interp.invoke(&mut store, p.entry, &p.args) {
            Err(RuntimeError::InterpreterBug(msg)) => Err(TestCaseError::fail(msg)),
            Err(e) => Err(TestCaseError::fail(e.to_string())),
            Ok(_) => Ok(()),
        }
    })
}
