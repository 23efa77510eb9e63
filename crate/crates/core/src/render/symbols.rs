//! The symbol table mapping constructor and function names to LaTeX templates.

use std::collections::BTreeMap;

use serde::Deserialize;

const BUILTIN: &str = include_str!("../../data/symbols.toml");

#[derive(Clone, Debug, Default, Deserialize)]
pub struct SymbolTable {
    #[serde(default)]
    pub constructors: BTreeMap<String, String>,
    #[serde(default)]
    pub functions: BTreeMap<String, String>,
}

impl SymbolTable {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN).expect("embedded symbol table parses")
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn constructor(&self, name: &str) -> Option<&str> {
        self.constructors.get(name).map(String::as_str)
    }

    /// Template for a function, looked up without its `$`.
    pub fn function(&self, name: &str) -> Option<&str> {
        self.functions.get(name.trim_start_matches('$')).map(String::as_str)
    }
}

/// Fills `#1`..`#9` with `args`. Arguments beyond the highest placeholder are
/// appended, separated by `~`.
pub fn instantiate(template: &str, args: &[String]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut used = 0;
    let mut chars = template.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, chars.peek().and_then(|d| d.to_digit(10))) {
            ('#', Some(d)) if d > 0 => {
                chars.next();
                let i = d as usize;
                used = used.max(i);
                if let Some(a) = args.get(i - 1) {
                    out.push_str(a);
                }
            }
            _ => out.push(c),
        }
    }
    for a in args.iter().skip(used) {
        out.push('~');
        out.push_str(a);
    }
    out
}
