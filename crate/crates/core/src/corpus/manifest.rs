//! Corpus manifest and file loading.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::corpus::minwast::{parse_test_script, TestScript};
use crate::span::SourceMap;

#[derive(Clone, Debug, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: String,
    /// `.spectec` files, in elaboration order.
    pub files: Vec<String>,
    /// Instructions defined by reduction rules.
    pub instructions: Vec<String>,
    #[serde(default)]
    pub values: Vec<String>,
    #[serde(default)]
    pub administrative: Vec<String>,
    /// `.minwast` test scripts.
    #[serde(default)]
    pub suite: Vec<String>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing corpus file `{0}`")]
    MissingFile(String),
    #[error("invalid manifest: {0}")]
    Manifest(#[from] toml::de::Error),
}

const EMBEDDED: &[(&str, &str)] = &[
    ("manifest.toml", include_str!("../../corpus/manifest.toml")),
    ("syntax.spectec", include_str!("../../corpus/syntax.spectec")),
    ("numerics.spectec", include_str!("../../corpus/numerics.spectec")),
    ("state.spectec", include_str!("../../corpus/state.spectec")),
    ("exec.spectec", include_str!("../../corpus/exec.spectec")),
    ("valid.spectec", include_str!("../../corpus/valid.spectec")),
    (
        "suite/numeric_i32.minwast",
        include_str!("../../corpus/suite/numeric_i32.minwast"),
    ),
    (
        "suite/numeric_i64.minwast",
        include_str!("../../corpus/suite/numeric_i64.minwast"),
    ),
    (
        "suite/numeric_f32.minwast",
        include_str!("../../corpus/suite/numeric_f32.minwast"),
    ),
    (
        "suite/numeric_f64.minwast",
        include_str!("../../corpus/suite/numeric_f64.minwast"),
    ),
    (
        "suite/parametric.minwast",
        include_str!("../../corpus/suite/parametric.minwast"),
    ),
    (
        "suite/variables.minwast",
        include_str!("../../corpus/suite/variables.minwast"),
    ),
    (
        "suite/control.minwast",
        include_str!("../../corpus/suite/control.minwast"),
    ),
];

/// A corpus file compiled into the library, by manifest-relative path.
pub fn embedded(name: &str) -> Option<&'static str> {
    EMBEDDED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        Ok(toml::from_str(text)?)
    }

    /// The manifest shipped with the library.
    pub fn builtin() -> Self {
        Self::parse(embedded("manifest.toml").unwrap()).expect("embedded manifest is valid")
    }

    /// Reads a manifest from disk.
    pub fn read(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|_| CorpusError::MissingFile(path.display().to_string()))?;
        Self::parse(&text)
    }
}

/// Loads the manifest's files in order. `read` resolves a manifest-relative
/// name to its text.
pub fn load_corpus(
    manifest: &Manifest,
    mut read: impl FnMut(&str) -> Option<String>,
) -> Result<SourceMap, CorpusError> {
    let mut sources = SourceMap::new();
    for name in &manifest.files {
        let text = read(name).ok_or_else(|| CorpusError::MissingFile(name.clone()))?;
        sources.add(name.clone(), text);
    }
    Ok(sources)
}

/// The conformance scripts of the builtin manifest, parsed, with their
/// manifest-relative paths.
pub fn builtin_suite() -> Vec<(String, TestScript)> {
    Manifest::builtin()
        .suite
        .iter()
        .map(|p| {
            let text = embedded(p).expect("embedded suite file");
            (p.clone(), parse_test_script(text).unwrap_or_else(|e| panic!("{p}:{e}")))
        })
        .collect()
}

/// The embedded corpus.
pub fn builtin_sources() -> SourceMap {
    load_corpus(&Manifest::builtin(), |n| embedded(n).map(str::to_string)).expect("embedded corpus is complete")
}
