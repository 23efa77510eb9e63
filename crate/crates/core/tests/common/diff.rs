//! The extracted interpreter against the reference one on generated programs.

use spectec_core::pipeline::builtin_interpreter;
use spectec_core::runtime::wasm::validate;
use spectec_core::runtime::Store;

use super::gen::Gen;
use super::oracle;

/// Runs `count` generated programs from `first_seed` through both
/// interpreters; returns the seeds that disagree with a description.
pub fn divergences(first_seed: u64, count: u64) -> Vec<String> {
    let interp = builtin_interpreter();
    let mut out = Vec::new();
    for seed in first_seed..first_seed + count {
        let p = Gen::new(seed).program();
        if let Err(e) = validate(&p.module) {
            out.push(format!("seed {seed}: generated an invalid module: {e}"));
            continue;
        }
        let Some(expected) = oracle::invoke(&p.module, p.entry, &p.args) else {
            continue;
        };
        let mut store = Store::instantiate(&p.module);
        match interp.invoke(&mut store, p.entry, &p.args) {
            Ok(actual) if actual == expected => {}
            other => out.push(format!(
                "seed {seed}: expected {expected}, got {other:?}\n{:#?}",
                p.module
            )),
        }
    }
    out
}
