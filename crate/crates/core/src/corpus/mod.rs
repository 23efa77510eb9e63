//! The embedded specification corpus and its conformance suite.

pub mod coverage;
pub mod manifest;
pub mod minwast;

pub use manifest::{builtin_sources, builtin_suite, load_corpus, CorpusError, Manifest};
pub use minwast::{parse_test_script, TestParseError, TestScript};
