//! Resolving command-line paths into spec sources and test scripts.

use std::fs;
use std::path::{Path, PathBuf};

use spectec_core::corpus::{load_corpus, parse_test_script, Manifest, TestScript};
use spectec_core::span::SourceMap;

use crate::Failure;

/// Spec sources plus the suite listed by a manifest, if any.
pub struct SpecInput {
    pub sources: SourceMap,
    pub suite: Vec<PathBuf>,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read `{}`: {e}", path.display())))
}

fn files_with_extension(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, Failure> {
    let entries = fs::read_dir(dir).map_err(|e| Failure::usage(format!("cannot read `{}`: {e}", dir.display())))?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    out.sort();
    Ok(out)
}

fn load_manifest(manifest_path: &Path, sources: &mut SourceMap, suite: &mut Vec<PathBuf>) -> Result<(), Failure> {
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let manifest =
        Manifest::read(manifest_path).map_err(|e| Failure::usage(format!("{}: {e}", manifest_path.display())))?;
    let loaded = load_corpus(&manifest, |name| fs::read_to_string(dir.join(name)).ok())
        .map_err(|e| Failure::usage(format!("{}: {e}", manifest_path.display())))?;
    for (_, f) in loaded.files() {
        sources.add(dir.join(&f.name).display().to_string(), f.text.clone());
    }
    suite.extend(manifest.suite.iter().map(|s| dir.join(s)));
    Ok(())
}

/// Loads spec paths in order. A directory with a `manifest.toml` loads the
/// manifest's files; any other directory loads its `.spectec` files by name.
pub fn load_spec(paths: &[PathBuf]) -> Result<SpecInput, Failure> {
    if paths.is_empty() {
        return Err(Failure::usage("no input files"));
    }
    let mut sources = SourceMap::new();
    let mut suite = Vec::new();
    for p in paths {
        if p.is_dir() {
            let manifest = p.join("manifest.toml");
            if manifest.is_file() {
                load_manifest(&manifest, &mut sources, &mut suite)?;
            } else {
                for f in files_with_extension(p, "spectec")? {
                    sources.add(f.display().to_string(), read(&f)?);
                }
            }
        } else if p.file_name().is_some_and(|n| n == "manifest.toml") {
            load_manifest(p, &mut sources, &mut suite)?;
        } else {
            sources.add(p.display().to_string(), read(p)?);
        }
    }
    Ok(SpecInput { sources, suite })
}

/// Reads and parses test scripts; directories contribute their `.minwast`
/// files by name.
pub fn load_scripts(paths: &[PathBuf]) -> Result<Vec<(String, TestScript)>, Failure> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            files.extend(files_with_extension(p, "minwast")?);
        } else {
            files.push(p.clone());
        }
    }
    files
        .iter()
        .map(|f| {
            let name = f.display().to_string();
            let script = parse_test_script(&read(f)?).map_err(|e| Failure::usage(format!("{name}:{e}")))?;
            Ok((name, script))
        })
        .collect()
}
