//! Agreement between the extracted algorithms and brute-force search over
//! the rules they were extracted from.

use spectec_core::il::IlScript;
use spectec_core::runtime::numeric::ops_for;
use spectec_core::runtime::wasm::lower_func;
use spectec_core::runtime::{Interpreter, NumType, Store, Value};

use super::gen::Gen;
use super::search::{Outcome, Search, State, Term};

/// Integers 0, 1, 2, -1, MIN and MAX; floats ±0, ±1, ±inf and NaN.
pub fn operand_set(t: NumType) -> Vec<Value> {
    match t {
        NumType::I32 => [0, 1, 2, u32::MAX, 0x8000_0000, 0x7fff_ffff].map(Value::I32).to_vec(),
        NumType::I64 => [0, 1, 2, u64::MAX, 1 << 63, i64::MAX as u64].map(Value::I64).to_vec(),
        NumType::F32 => [0.0f32, -0.0, 1.0, -1.0, f32::INFINITY, f32::NEG_INFINITY, f32::NAN]
            .map(Value::f32)
            .to_vec(),
        NumType::F64 => [0.0f64, -0.0, 1.0, -1.0, f64::INFINITY, f64::NEG_INFINITY, f64::NAN]
            .map(Value::f64)
            .to_vec(),
    }
}

pub fn all_operands() -> Vec<Value> {
    NumType::ALL.into_iter().flat_map(operand_set).collect()
}

pub struct Case {
    pub label: String,
    pub funcs: Vec<Term>,
    pub globals: Vec<Term>,
    pub instrs: Vec<Term>,
    /// The instruction whose algorithm must account for the first step.
    pub first: Option<String>,
}

impl Case {
    fn bare(label: String, instrs: Vec<Term>) -> Case {
        let first = match instrs.last() {
            Some(Term::Con(c, _)) => Some(c.clone()),
            _ => None,
        };
        Case {
            label,
            funcs: vec![],
            globals: vec![],
            instrs,
            first,
        }
    }
}

fn con(c: &str, args: Vec<Term>) -> Term {
    Term::con(c, args)
}

fn nat(n: u64) -> Term {
    Term::Nat(n)
}

fn ty(t: NumType) -> Term {
    con(t.constructor(), vec![])
}

/// Every numeric instruction of every type on every operand combination.
pub fn numeric_cases() -> Vec<Case> {
    let mut out = Vec::new();
    for t in NumType::ALL {
        let set = operand_set(t);
        let (unops, binops, testops, relops) = ops_for(t);
        let one = |class: &str, op: &str, out: &mut Vec<Case>| {
            for &a in &set {
                let instr = con(class, vec![ty(t), con(&op.to_ascii_uppercase(), vec![])]);
                out.push(Case::bare(format!("{t}.{op} {a}"), vec![Term::value(a), instr]));
            }
        };
        let two = |class: &str, op: &str, out: &mut Vec<Case>| {
            for &a in &set {
                for &b in &set {
                    let instr = con(class, vec![ty(t), con(&op.to_ascii_uppercase(), vec![])]);
                    out.push(Case::bare(
                        format!("{t}.{op} {a} {b}"),
                        vec![Term::value(a), Term::value(b), instr],
                    ));
                }
            }
        };
        unops.iter().for_each(|op| one("UNOP", op, &mut out));
        testops.iter().for_each(|op| one("TESTOP", op, &mut out));
        binops.iter().for_each(|op| two("BINOP", op, &mut out));
        relops.iter().for_each(|op| two("RELOP", op, &mut out));
    }
    out
}

/// NOP, UNREACHABLE, DROP and SELECT.
pub fn parametric_cases() -> Vec<Case> {
    let mut out = vec![
        Case::bare("nop".into(), vec![con("NOP", vec![])]),
        Case::bare("unreachable".into(), vec![con("UNREACHABLE", vec![])]),
    ];
    for v in all_operands() {
        out.push(Case::bare(
            format!("drop {v}"),
            vec![Term::value(v), con("DROP", vec![])],
        ));
    }
    for t in NumType::ALL {
        let set = operand_set(t);
        for (a, b) in [(set[0], set[1]), (set[2], set[3]), (set[5], set[4])] {
            for c in operand_set(NumType::I32) {
                out.push(Case::bare(
                    format!("select {a} {b} {c}"),
                    vec![Term::value(a), Term::value(b), Term::value(c), con("SELECT", vec![])],
                ));
            }
        }
    }
    out
}

fn frame(results: u64, locals: &[Value], body: Vec<Term>) -> Term {
    let vals = locals.iter().map(|v| Term::value(*v)).collect();
    con(
        "FRAME_",
        vec![nat(results), con("FRAME", vec![Term::List(vals)]), Term::List(body)],
    )
}

/// Local and global accesses, run inside a frame.
pub fn variable_cases() -> Vec<Case> {
    let mut out = Vec::new();
    let locals: Vec<Value> = NumType::ALL.iter().map(|&t| operand_set(t)[3]).collect();
    for (x, t) in NumType::ALL.into_iter().enumerate() {
        let x = x as u64;
        let get = con("LOCAL.GET", vec![nat(x)]);
        for v in operand_set(t) {
            let body = vec![Term::value(v), con("LOCAL.SET", vec![nat(x)]), get.clone()];
            out.push(Case {
                first: None,
                ..Case::bare(format!("local.set {x} {v}"), vec![frame(1, &locals, body)])
            });
            let body = vec![Term::value(v), con("LOCAL.TEE", vec![nat(x)]), get.clone()];
            out.push(Case {
                first: None,
                ..Case::bare(format!("local.tee {x} {v}"), vec![frame(2, &locals, body)])
            });
            let mut c = Case::bare(
                format!("global.set {x} {v}"),
                vec![Term::value(v), con("GLOBAL.SET", vec![nat(x)])],
            );
            c.globals = locals.iter().map(|v| Term::value(*v)).collect();
            out.push(c);
        }
        out.push(Case {
            first: None,
            ..Case::bare(format!("local.get {x}"), vec![frame(1, &locals, vec![get])])
        });
        let mut c = Case::bare(format!("global.get {x}"), vec![con("GLOBAL.GET", vec![nat(x)])]);
        c.globals = locals.iter().map(|v| Term::value(*v)).collect();
        out.push(c);
    }
    out
}

/// Generated functions called with generated arguments: blocks, loops,
/// branches, returns and calls in combination.
pub fn control_cases(seeds: std::ops::Range<u64>) -> Vec<Case> {
    seeds
        .map(|seed| {
            let p = Gen::new(seed).program();
            let mut instrs: Vec<Term> = p.args.iter().map(|v| Term::value(*v)).collect();
            instrs.push(con("CALL", vec![nat(p.entry as u64)]));
            Case {
                label: format!("program {seed}"),
                funcs: p.module.funcs.iter().map(|f| Term::from_rt(&lower_func(f))).collect(),
                globals: p.module.globals.iter().map(|g| Term::value(g.init)).collect(),
                instrs,
                first: Some("CALL".into()),
            }
        })
        .collect()
}

pub fn al_outcome(interp: &Interpreter, case: &Case) -> Outcome {
    let mut store = Store {
        funcs: case.funcs.iter().map(Term::to_rt).collect(),
        globals: case.globals.iter().map(Term::to_rt).collect(),
    };
    let instrs = case.instrs.iter().map(Term::to_rt).collect();
    let result = interp.run_instrs(&mut store, instrs);
    let globals: Vec<Term> = store.globals.iter().map(Term::from_rt).collect();
    match result {
        Ok(Ok(stack)) => Outcome::Values(stack.iter().map(Term::from_rt).collect(), globals),
        Ok(Err(())) => Outcome::Trap(globals),
        Err(e) => Outcome::Stuck(e.to_string()),
    }
}

/// `Err` describes the disagreement.
pub fn check_case(interp: &Interpreter, search: &Search, case: &Case) -> Result<(), String> {
    let expected = al_outcome(interp, case);
    let state = State {
        funcs: case.funcs.clone(),
        globals: case.globals.clone(),
        locals: None,
    };
    let derivations = search.run(state, case.instrs.clone());
    if derivations.is_empty() {
        return Err(format!("{}: no derivation", case.label));
    }
    for d in &derivations {
        if !d.outcome.same(&expected) {
            return Err(format!(
                "{}: rules give {} via {:?}, algorithm gives {}",
                case.label, d.outcome, d.first_rules, expected
            ));
        }
        if let Some(instr) = &case.first {
            let algo = interp
                .program()
                .instr(instr)
                .ok_or_else(|| format!("{}: no algorithm for {instr}", case.label))?;
            if let Some(r) = d.first_rules.iter().find(|r| !algo.sources.contains(r)) {
                return Err(format!(
                    "{}: rule {r} is not among the sources of {}",
                    case.label, algo.name
                ));
            }
        }
    }
    Ok(())
}

pub struct Agreement {
    pub cases: usize,
    pub failures: Vec<String>,
    /// Reduction rules that never fired.
    pub unfired: Vec<String>,
}

pub fn agreement(il: &IlScript, interp: &Interpreter, programs: u64) -> Agreement {
    let search = Search::new(il, &all_operands());
    let mut cases = numeric_cases();
    cases.extend(parametric_cases());
    cases.extend(variable_cases());
    cases.extend(control_cases(0..programs));
    let failures: Vec<String> = cases
        .iter()
        .filter_map(|c| check_case(interp, &search, c).err())
        .collect();
    let fired = search.fired.borrow();
    let unfired = il
        .reduction_rules()
        .map(|r| format!("{}/{}", r.relation, r.id))
        .filter(|r| !fired.contains(r))
        .collect();
    Agreement {
        cases: cases.len(),
        failures,
        unfired,
    }
}
