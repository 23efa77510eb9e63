//! Inputs shared by the pipeline benchmarks.

use spectec_core::corpus::{builtin_sources, builtin_suite, TestScript};
use spectec_core::el::ElScript;
use spectec_core::il::IlScript;
use spectec_core::pipeline::{check, parse_sources};
use spectec_core::runtime::wasm::{Func, Instr, Module};
use spectec_core::runtime::{Interpreter, NumType, Value};
use spectec_core::span::SourceMap;

/// Every stage's output for the embedded corpus, so each benchmark can start
/// from the stage before the one it measures.
pub struct Fixture {
    pub sources: SourceMap,
    pub el: ElScript,
    pub il: IlScript,
    pub suite: Vec<(String, TestScript)>,
}

impl Fixture {
    pub fn builtin() -> Self {
        let sources = builtin_sources();
        let el = parse_sources(&sources).expect("corpus parses");
        let il = check(&sources).expect("corpus elaborates").il;
        Fixture {
            sources,
            el,
            il,
            suite: builtin_suite(),
        }
    }

    pub fn interpreter(&self) -> Interpreter {
        let al = spectec_core::al::animate(&self.il).expect("corpus animates");
        Interpreter::new(&self.il, al)
    }
}

/// A module whose export sums `1..=n` in a loop: about `6n` instructions run
/// per call.
pub fn counting_loop() -> Module {
    use Instr::*;
    let i32c = |n: u32| Const(Value::I32(n));
    let add = || Binop(NumType::I32, "add");
    let body = vec![
        Block(
            None,
            vec![Loop(
                None,
                vec![
                    LocalGet(0),
                    Testop(NumType::I32, "eqz"),
                    BrIf(1),
                    LocalGet(1),
                    LocalGet(0),
                    add(),
                    LocalSet(1),
                    LocalGet(0),
                    i32c(1),
                    Binop(NumType::I32, "sub"),
                    LocalSet(0),
                    Br(0),
                ],
            )],
        ),
        LocalGet(1),
    ];
    let mut exports = indexmap::IndexMap::new();
    exports.insert("sum".to_string(), 0);
    Module {
        exports,
        funcs: vec![Func {
            params: vec![NumType::I32],
            results: vec![NumType::I32],
            locals: vec![NumType::I32],
            body,
        }],
        globals: vec![],
    }
}
