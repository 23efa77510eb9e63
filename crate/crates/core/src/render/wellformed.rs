//! A mechanical well-formedness check for generated LaTeX, used where no
//! TeX toolchain is available.
//!
//! It checks brace and environment balance, math-mode pairing, that `_`,
//! `^` and math commands occur only in math, that `&` occurs only inside
//! `array`, that no `#` survives template expansion, and that every command
//! is on an allowlist of standard LaTeX, amsmath and amssymb commands.

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct LatexError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

/// Commands valid only in math mode.
const MATH_COMMANDS: &[&str] = &[
    "mathit",
    "mathsf",
    "mathrm",
    "mathtt",
    "mathbb",
    "hookrightarrow",
    "rightarrow",
    "epsilon",
    "vdash",
    "times",
    "neq",
    "leq",
    "geq",
    "ast",
    "ldots",
];

/// Commands valid in either mode.
const ANY_COMMANDS: &[&str] = &["mbox", "textsc", "scriptsize", "label"];

/// Commands valid only in text mode.
const TEXT_COMMANDS: &[&str] = &["documentclass", "usepackage"];

/// Commands whose single braced argument is a name, not content.
const NAME_ARGUMENT: &[&str] = &["documentclass", "usepackage", "label"];

/// Commands whose argument is typeset in text mode.
const TEXT_ARGUMENT: &[&str] = &["mbox", "textsc"];

const ENVIRONMENTS: &[&str] = &["document", "array"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Text,
    Math,
}

#[derive(Clone, Debug)]
enum Frame {
    Brace(Mode),
    Env(String, Mode),
    Display,
    Inline,
}

struct Scanner {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    frames: Vec<(Frame, u32, u32)>,
    errors: Vec<LatexError>,
    pending: Option<Mode>,
}

impl Scanner {
    fn mode(&self) -> Mode {
        match self.frames.last() {
            Some((Frame::Brace(m) | Frame::Env(_, m), _, _)) => *m,
            Some((Frame::Display | Frame::Inline, _, _)) => Mode::Math,
            None => Mode::Text,
        }
    }

    fn error(&mut self, line: u32, col: u32, message: impl Into<String>) {
        self.errors.push(LatexError {
            line,
            col,
            message: message.into(),
        });
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    /// Reads `{text}` verbatim, without interpreting it. Inner braces must balance.
    fn raw_argument(&mut self, (line, col): (u32, u32), cmd: &str) -> Option<String> {
        if self.peek() != Some('{') {
            self.error(line, col, format!("`\\{cmd}` expects a braced argument"));
            return None;
        }
        self.bump();
        let mut s = String::new();
        let mut depth = 0;
        loop {
            match self.bump() {
                Some('}') if depth == 0 => return Some(s),
                Some(c @ ('{' | '}')) => {
                    depth = if c == '{' { depth + 1 } else { depth - 1 };
                    s.push(c);
                }
                None => {
                    self.error(line, col, format!("malformed argument to `\\{cmd}`"));
                    return None;
                }
                Some(c) => s.push(c),
            }
        }
    }

    fn pop(&mut self, line: u32, col: u32, what: &str, ok: impl Fn(&Frame) -> bool) {
        match self.frames.last() {
            Some((f, _, _)) if ok(f) => {
                self.frames.pop();
            }
            Some((f, l, c)) => {
                let msg = format!("{what} does not close {f:?} opened at {l}:{c}");
                self.error(line, col, msg);
            }
            None => self.error(line, col, format!("unmatched {what}")),
        }
    }

    fn command(&mut self, line: u32, col: u32) {
        let mut name = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_alphabetic) {
            name.push(c);
            self.bump();
        }
        if name.is_empty() {
            match self.bump() {
                Some('[') => {
                    if self.mode() == Mode::Math {
                        self.error(line, col, "`\\[` inside math mode");
                    }
                    self.frames.push((Frame::Display, line, col));
                }
                Some(']') => self.pop(line, col, "`\\]`", |f| matches!(f, Frame::Display)),
                Some('\\' | ' ' | '\n' | ',' | ';' | '{' | '}' | '_' | '%' | '&' | '#' | '$') => {}
                other => self.error(
                    line,
                    col,
                    format!("unknown control symbol `\\{}`", other.unwrap_or(' ')),
                ),
            }
            return;
        }
        let mode = self.mode();
        if MATH_COMMANDS.contains(&name.as_str()) {
            if mode != Mode::Math {
                self.error(line, col, format!("`\\{name}` outside math mode"));
            }
        } else if TEXT_COMMANDS.contains(&name.as_str()) {
            if mode != Mode::Text {
                self.error(line, col, format!("`\\{name}` inside math mode"));
            }
        } else if name == "begin" || name == "end" {
            let Some(env) = self.raw_argument((line, col), &name) else {
                return;
            };
            if !ENVIRONMENTS.contains(&env.as_str()) {
                self.error(line, col, format!("unknown environment `{env}`"));
            }
            if name == "end" {
                self.pop(
                    line,
                    col,
                    &format!("`\\end{{{env}}}`"),
                    |f| matches!(f, Frame::Env(e, _) if *e == env),
                );
                return;
            }
            let inner = match env.as_str() {
                "array" => {
                    if mode != Mode::Math {
                        self.error(line, col, "`array` outside math mode");
                    }
                    self.raw_argument((line, col), "begin{array}");
                    Mode::Math
                }
                _ => Mode::Text,
            };
            self.frames.push((Frame::Env(env, inner), line, col));
            return;
        } else if !ANY_COMMANDS.contains(&name.as_str()) {
            self.error(line, col, format!("unknown command `\\{name}`"));
            return;
        }
        if NAME_ARGUMENT.contains(&name.as_str()) {
            self.raw_argument((line, col), &name);
        } else if TEXT_ARGUMENT.contains(&name.as_str()) {
            self.pending = Some(Mode::Text);
        } else if name.starts_with("math") {
            self.pending = Some(Mode::Math);
        }
    }

    fn run(&mut self) {
        while let Some(c) = self.peek() {
            let (line, col) = (self.line, self.col);
            self.bump();
            let pending = self.pending.take();
            match c {
                '%' => {
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                '\\' => self.command(line, col),
                '{' => {
                    let m = pending.unwrap_or_else(|| self.mode());
                    self.frames.push((Frame::Brace(m), line, col));
                }
                '}' => self.pop(line, col, "`}`", |f| matches!(f, Frame::Brace(_))),
                '$' => {
                    if matches!(self.frames.last(), Some((Frame::Inline, _, _))) {
                        self.frames.pop();
                    } else if self.mode() == Mode::Math {
                        self.error(line, col, "`$` inside math mode");
                    } else {
                        self.frames.push((Frame::Inline, line, col));
                    }
                }
                '_' | '^' if self.mode() != Mode::Math => self.error(line, col, format!("`{c}` outside math mode")),
                '&' => {
                    let in_array = self
                        .frames
                        .iter()
                        .any(|(f, _, _)| matches!(f, Frame::Env(e, _) if e == "array"));
                    if !in_array || self.mode() != Mode::Math {
                        self.error(line, col, "`&` outside an array");
                    }
                }
                '#' => self.error(line, col, "stray `#` (unfilled template placeholder?)"),
                _ => {}
            }
        }
        for (f, line, col) in std::mem::take(&mut self.frames) {
            self.error(line, col, format!("unclosed {f:?}"));
        }
    }
}

/// Checks `tex`, returning every problem found.
pub fn check_well_formed(tex: &str) -> Result<(), Vec<LatexError>> {
    let mut s = Scanner {
        chars: tex.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        frames: Vec::new(),
        errors: Vec::new(),
        pending: None,
    };
    s.run();
    if s.errors.is_empty() {
        Ok(())
    } else {
        Err(s.errors)
    }
}
