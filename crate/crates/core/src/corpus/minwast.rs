//! Parser for `.minwast` conformance scripts: a small s-expression subset of
//! the Wasm text format with `module`, `invoke`, `assert_return` and
//! `assert_trap` commands.

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;

use crate::runtime::value::{NumType, Value};
use crate::runtime::wasm::{lookup_op, Func, Global, Instr, Module, OpClass};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TestScript {
    pub commands: Vec<Command>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Command {
    pub line: u32,
    pub col: u32,
    pub kind: CommandKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CommandKind {
    Module(Module),
    Invoke(Invoke),
    AssertReturn { invoke: Invoke, expected: Vec<Expected> },
    AssertTrap { invoke: Invoke, message: Option<String> },
}

impl CommandKind {
    pub fn is_assertion(&self) -> bool {
        matches!(self, CommandKind::AssertReturn { .. } | CommandKind::AssertTrap { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Module(_) => "module",
            CommandKind::Invoke(_) => "invoke",
            CommandKind::AssertReturn { .. } => "assert_return",
            CommandKind::AssertTrap { .. } => "assert_trap",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Invoke {
    pub name: String,
    pub args: Vec<Value>,
}

impl fmt::Display for Invoke {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(invoke {:?}", self.name)?;
        for a in &self.args {
            write!(f, " ({a})")?;
        }
        f.write_str(")")
    }
}

/// An expected result. NaN patterns accept any NaN of the stated class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expected {
    Value(Value),
    CanonicalNan(NumType),
    ArithmeticNan(NumType),
}

impl Expected {
    pub fn matches(&self, v: Value) -> bool {
        let (nan, quiet) = match v {
            Value::F32(b) => (f32::from_bits(b).is_nan(), b & 0x7f_ffff == 0x40_0000),
            Value::F64(b) => (f64::from_bits(b).is_nan(), b & 0xf_ffff_ffff_ffff == 0x8_0000_0000_0000),
            _ => (false, false),
        };
        let quiet_bit = match v {
            Value::F32(b) => b & 0x40_0000 != 0,
            Value::F64(b) => b & 0x8_0000_0000_0000 != 0,
            _ => false,
        };
        match *self {
            Expected::Value(e) => e == v,
            Expected::CanonicalNan(t) => v.ty() == t && nan && quiet,
            Expected::ArithmeticNan(t) => v.ty() == t && nan && quiet_bit,
        }
    }
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expected::Value(v) => write!(f, "{v}"),
            Expected::CanonicalNan(t) => write!(f, "{t}.const nan:canonical"),
            Expected::ArithmeticNan(t) => write!(f, "{t}.const nan:arithmetic"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for TestParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for TestParseError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: u32,
    col: u32,
}

#[derive(Clone, Debug)]
enum Sexp {
    Atom(String, Pos),
    Str(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::Str(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, _) => Some(a),
            _ => None,
        }
    }

    /// The head keyword of a list.
    fn head(&self) -> Option<&str> {
        match self {
            Sexp::List(items, _) => items.first().and_then(Sexp::atom),
            _ => None,
        }
    }
}

type PResult<T> = Result<T, TestParseError>;

fn err<T>(pos: Pos, message: impl Into<String>) -> PResult<T> {
    Err(TestParseError {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    })
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) -> PResult<()> {
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some(';') => {
                    let start = self.pos;
                    self.bump();
                    if self.bump() != Some(';') {
                        return err(start, "unexpected `;`");
                    }
                    while !matches!(self.chars.peek(), None | Some('\n')) {
                        self.bump();
                    }
                }
                Some('(') => {
                    let mut ahead = self.chars.clone();
                    ahead.next();
                    if ahead.next() != Some(';') {
                        return Ok(());
                    }
                    let start = self.pos;
                    self.bump();
                    self.bump();
                    let mut depth = 1;
                    while depth > 0 {
                        match self.bump() {
                            None => return err(start, "unterminated block comment"),
                            Some(';') if self.chars.peek() == Some(&')') => {
                                self.bump();
                                depth -= 1;
                            }
                            Some('(') if self.chars.peek() == Some(&';') => {
                                self.bump();
                                depth += 1;
                            }
                            _ => {}
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn sexp(&mut self) -> PResult<Option<Sexp>> {
        self.skip_trivia()?;
        let start = self.pos;
        match self.chars.peek().copied() {
            None => Ok(None),
            Some(')') => err(start, "unexpected `)`"),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia()?;
                    match self.chars.peek() {
                        None => return err(start, "unclosed `(`"),
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexp::List(items, start)));
                        }
                        _ => items.push(self.sexp()?.expect("input remains")),
                    }
                }
            }
            Some('"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None | Some('\n') => return err(start, "unterminated string"),
                        Some('"') => return Ok(Some(Sexp::Str(s, start))),
                        Some('\\') => match self.bump() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(c @ ('"' | '\\' | '\'')) => s.push(c),
                            _ => return err(start, "unsupported string escape"),
                        },
                        Some(c) => s.push(c),
                    }
                }
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' || c == ';' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Some(Sexp::Atom(s, start)))
            }
        }
    }
}

fn read_all(text: &str) -> PResult<Vec<Sexp>> {
    let mut r = Reader {
        chars: text.chars().peekable(),
        pos: Pos { line: 1, col: 1 },
    };
    let mut out = Vec::new();
    while let Some(s) = r.sexp()? {
        out.push(s);
    }
    Ok(out)
}

/// Parses an integer literal of `bits` width (signed or unsigned range) to
/// its bit pattern.
pub fn parse_int(s: &str, bits: u32) -> Option<u64> {
    let (neg, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    if body.starts_with('_') || body.ends_with('_') || body.contains("__") {
        return None;
    }
    let digits: String = body.chars().filter(|&c| c != '_').collect();
    let mag = match digits.strip_prefix("0x") {
        Some(h) if !h.is_empty() => u128::from_str_radix(h, 16).ok()?,
        Some(_) => return None,
        None if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) => digits.parse::<u128>().ok()?,
        None => return None,
    };
    let umax = (1u128 << bits) - 1;
    let mask = umax as u64;
    if neg {
        if mag > 1u128 << (bits - 1) {
            return None;
        }
        Some((mag as u64).wrapping_neg() & mask)
    } else if mag <= umax {
        Some(mag as u64)
    } else {
        None
    }
}

/// Parses a float literal to raw bits: decimal, hexadecimal, `inf`, `nan`
/// and `nan:0x<payload>`.
pub fn parse_float(s: &str, t: NumType) -> Option<u64> {
    let wide = t == NumType::F64;
    let (neg, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (exp_mask, frac_bits, sign_bit) = if wide {
        (0x7ff0_0000_0000_0000u64, 52, 1u64 << 63)
    } else {
        (0x7f80_0000u64, 23, 1u64 << 31)
    };
    let magnitude = if body == "inf" {
        exp_mask
    } else if body == "nan" {
        exp_mask | 1 << (frac_bits - 1)
    } else if let Some(p) = body.strip_prefix("nan:0x") {
        let payload = u64::from_str_radix(&p.replace('_', ""), 16).ok()?;
        if payload == 0 || payload >> frac_bits != 0 {
            return None;
        }
        exp_mask | payload
    } else if body.starts_with("0x") {
        let mut lit: String = body.chars().filter(|&c| c != '_').collect();
        if !lit.contains(['p', 'P']) {
            lit.push_str("p0");
        }
        if wide {
            hexf_parse::parse_hexf64(&lit, false).ok()?.to_bits()
        } else {
            hexf_parse::parse_hexf32(&lit, false).ok()?.to_bits() as u64
        }
    } else {
        let lit: String = body.chars().filter(|&c| c != '_').collect();
        if lit.is_empty()
            || !lit
                .bytes()
                .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'+' | b'-'))
        {
            return None;
        }
        let bits = if wide {
            lit.parse::<f64>().ok()?.to_bits()
        } else {
            lit.parse::<f32>().ok()?.to_bits() as u64
        };
        if bits & exp_mask == exp_mask {
            return None;
        }
        bits
    };
    Some(if neg { magnitude | sign_bit } else { magnitude })
}

fn numtype(s: &Sexp) -> PResult<NumType> {
    match s.atom().and_then(NumType::from_text) {
        Some(t) => Ok(t),
        None => err(s.pos(), "expected a number type"),
    }
}

fn literal(t: NumType, s: &Sexp) -> PResult<Value> {
    let Some(text) = s.atom() else {
        return err(s.pos(), "expected a number literal");
    };
    let v = match t {
        NumType::I32 => parse_int(text, 32).map(|b| Value::I32(b as u32)),
        NumType::I64 => parse_int(text, 64).map(Value::I64),
        NumType::F32 => parse_float(text, t).map(|b| Value::F32(b as u32)),
        NumType::F64 => parse_float(text, t).map(Value::F64),
    };
    match v {
        Some(v) => Ok(v),
        None => err(s.pos(), format!("invalid {t} literal `{text}`")),
    }
}

/// `(t.const lit)`.
fn const_expr(s: &Sexp) -> PResult<Value> {
    if let Sexp::List(items, pos) = s {
        if let [head, lit] = items.as_slice() {
            if let Some(t) = head
                .atom()
                .and_then(|h| h.strip_suffix(".const"))
                .and_then(NumType::from_text)
            {
                return literal(t, lit);
            }
        }
        return err(*pos, "expected a constant such as `(i32.const 0)`");
    }
    err(s.pos(), "expected a constant such as `(i32.const 0)`")
}

fn expected(s: &Sexp) -> PResult<Expected> {
    if let Sexp::List(items, _) = s {
        if let [head, lit] = items.as_slice() {
            if let Some(t) = head
                .atom()
                .and_then(|h| h.strip_suffix(".const"))
                .and_then(NumType::from_text)
            {
                match lit.atom() {
                    Some("nan:canonical") if !t.is_int() => return Ok(Expected::CanonicalNan(t)),
                    Some("nan:arithmetic") if !t.is_int() => return Ok(Expected::ArithmeticNan(t)),
                    _ => {}
                }
            }
        }
    }
    const_expr(s).map(Expected::Value)
}

/// Name and index tables of the module being parsed.
#[derive(Default)]
struct Names {
    funcs: HashMap<String, u32>,
    globals: HashMap<String, u32>,
}

struct FuncParser<'a> {
    names: &'a Names,
    locals: HashMap<String, u32>,
    labels: Vec<Option<String>>,
}

fn index(s: Option<&Sexp>, table: &HashMap<String, u32>, what: &str, at: Pos) -> PResult<u32> {
    let Some(s) = s else {
        return err(at, format!("expected a {what} index"));
    };
    match s.atom() {
        Some(a) if a.starts_with('$') => match table.get(a) {
            Some(&i) => Ok(i),
            None => err(s.pos(), format!("unknown {what} `{a}`")),
        },
        Some(a) => match parse_int(a, 32) {
            Some(i) if !a.starts_with('-') => Ok(i as u32),
            _ => err(s.pos(), format!("expected a {what} index")),
        },
        None => err(s.pos(), format!("expected a {what} index")),
    }
}

fn op_instr(name: &str) -> Option<Instr> {
    let (t, op) = name.split_once('.')?;
    let t = NumType::from_text(t)?;
    for (class, make) in [
        (OpClass::Unop, Instr::Unop as fn(NumType, &'static str) -> Instr),
        (OpClass::Binop, Instr::Binop),
        (OpClass::Testop, Instr::Testop),
        (OpClass::Relop, Instr::Relop),
    ] {
        if let Some(op) = lookup_op(class, t, op) {
            return Some(make(t, op));
        }
    }
    None
}

impl FuncParser<'_> {
    fn label(&self, s: Option<&Sexp>, at: Pos) -> PResult<u32> {
        if let Some(name) = s.and_then(Sexp::atom).filter(|a| a.starts_with('$')) {
            return match self.labels.iter().rev().position(|l| l.as_deref() == Some(name)) {
                Some(i) => Ok(i as u32),
                None => err(s.unwrap().pos(), format!("unknown label `{name}`")),
            };
        }
        index(s, &HashMap::new(), "label", at)
    }

    /// Optional `$label` then optional `(result t)`.
    fn block_header(&mut self, items: &[Sexp], i: &mut usize) -> PResult<Option<NumType>> {
        let label = match items.get(*i).and_then(Sexp::atom) {
            Some(a) if a.starts_with('$') => {
                *i += 1;
                Some(a.to_string())
            }
            _ => None,
        };
        self.labels.push(label);
        match items.get(*i) {
            Some(Sexp::List(r, pos)) if items[*i].head() == Some("result") => {
                *i += 1;
                match r.as_slice() {
                    [_] => Ok(None),
                    [_, t] => numtype(t).map(Some),
                    _ => err(*pos, "a block has at most one result"),
                }
            }
            _ => Ok(None),
        }
    }

    /// Plain instructions from `items[*i..]` up to one of `stops`.
    fn seq(&mut self, items: &[Sexp], i: &mut usize, stops: &[&str], out: &mut Vec<Instr>) -> PResult<Option<String>> {
        while *i < items.len() {
            let s = &items[*i];
            if let Some(a) = s.atom() {
                if stops.contains(&a) {
                    *i += 1;
                    return Ok(Some(a.to_string()));
                }
            }
            *i += 1;
            match s {
                Sexp::List(..) => self.folded(s, out)?,
                Sexp::Atom(a, pos) => self.plain(a, *pos, items, i, out)?,
                Sexp::Str(_, pos) => return err(*pos, "unexpected string in function body"),
            }
        }
        Ok(None)
    }

    fn plain(&mut self, a: &str, pos: Pos, items: &[Sexp], i: &mut usize, out: &mut Vec<Instr>) -> PResult<()> {
        let mut imm = || {
            let s = items.get(*i);
            *i += 1;
            s
        };
        let instr = match a {
            "nop" => Instr::Nop,
            "unreachable" => Instr::Unreachable,
            "drop" => Instr::Drop,
            "select" => Instr::Select,
            "return" => Instr::Return,
            "local.get" => Instr::LocalGet(index(imm(), &self.locals, "local", pos)?),
            "local.set" => Instr::LocalSet(index(imm(), &self.locals, "local", pos)?),
            "local.tee" => Instr::LocalTee(index(imm(), &self.locals, "local", pos)?),
            "global.get" => Instr::GlobalGet(index(imm(), &self.names.globals, "global", pos)?),
            "global.set" => Instr::GlobalSet(index(imm(), &self.names.globals, "global", pos)?),
            "call" => Instr::Call(index(imm(), &self.names.funcs, "function", pos)?),
            "br" => Instr::Br(self.label(imm(), pos)?),
            "br_if" => Instr::BrIf(self.label(imm(), pos)?),
            "block" | "loop" | "if" => {
                let bt = self.block_header(items, i)?;
                let mut body = Vec::new();
                let stops: &[&str] = if a == "if" { &["else", "end"] } else { &["end"] };
                let stop = self.seq(items, i, stops, &mut body)?;
                let mut alt = Vec::new();
                match stop.as_deref() {
                    Some("else") => {
                        if self.seq(items, i, &["end"], &mut alt)?.is_none() {
                            return err(pos, format!("`{a}` without `end`"));
                        }
                    }
                    Some(_) => {}
                    None => return err(pos, format!("`{a}` without `end`")),
                }
                self.labels.pop();
                match a {
                    "block" => Instr::Block(bt, body),
                    "loop" => Instr::Loop(bt, body),
                    _ => Instr::If(bt, body, alt),
                }
            }
            _ => {
                if let Some(t) = a.strip_suffix(".const").and_then(NumType::from_text) {
                    let Some(lit) = imm() else {
                        return err(pos, format!("`{a}` needs a literal"));
                    };
                    Instr::Const(literal(t, lit)?)
                } else if let Some(instr) = op_instr(a) {
                    instr
                } else {
                    return err(pos, format!("unknown instruction `{a}`"));
                }
            }
        };
        out.push(instr);
        Ok(())
    }

    /// `(op operand*)` with operands evaluated first.
    fn folded(&mut self, s: &Sexp, out: &mut Vec<Instr>) -> PResult<()> {
        let Sexp::List(items, pos) = s else { unreachable!() };
        let Some(head) = items.first().and_then(Sexp::atom) else {
            return err(*pos, "expected an instruction");
        };
        match head {
            "block" | "loop" => {
                let mut i = 1;
                let bt = self.block_header(items, &mut i)?;
                let mut body = Vec::new();
                if let Some(stop) = self.seq(items, &mut i, &[], &mut body)? {
                    return err(*pos, format!("unexpected `{stop}`"));
                }
                self.labels.pop();
                out.push(if head == "block" {
                    Instr::Block(bt, body)
                } else {
                    Instr::Loop(bt, body)
                });
            }
            "if" => {
                let mut i = 1;
                let bt = self.block_header(items, &mut i)?;
                let (mut then, mut alt) = (Vec::new(), Vec::new());
                let mut saw_then = false;
                for s in &items[i..] {
                    match s.head() {
                        Some("then") if !saw_then => {
                            saw_then = true;
                            let Sexp::List(b, _) = s else { unreachable!() };
                            let mut j = 1;
                            self.seq(b, &mut j, &[], &mut then)?;
                        }
                        Some("else") if saw_then => {
                            let Sexp::List(b, _) = s else { unreachable!() };
                            let mut j = 1;
                            self.seq(b, &mut j, &[], &mut alt)?;
                        }
                        _ if !saw_then => {
                            // The condition, evaluated outside the new label.
                            let label = self.labels.pop();
                            self.folded(s, out)?;
                            self.labels.push(label.flatten());
                        }
                        _ => return err(s.pos(), "unexpected item after `then`"),
                    }
                }
                if !saw_then {
                    return err(*pos, "folded `if` needs a `(then ...)` clause");
                }
                self.labels.pop();
                out.push(Instr::If(bt, then, alt));
            }
            _ => {
                // Immediates are leading atoms, operands are lists.
                let split = items[1..]
                    .iter()
                    .position(|s| matches!(s, Sexp::List(..)))
                    .map_or(items.len(), |p| p + 1);
                for operand in &items[split..] {
                    self.folded(operand, out)?;
                }
                let mut i = 1;
                self.plain(head, *pos, &items[..split], &mut i, out)?;
                if i < split {
                    return err(items[i].pos(), "unexpected immediate");
                }
            }
        }
        Ok(())
    }
}

fn exports_of(items: &[Sexp]) -> Vec<(String, Pos)> {
    items
        .iter()
        .filter(|s| s.head() == Some("export"))
        .filter_map(|s| match s {
            Sexp::List(xs, p) => match xs.get(1) {
                Some(Sexp::Str(name, _)) => Some((name.clone(), *p)),
                _ => None,
            },
            _ => None,
        })
        .collect()
}

fn module(items: &[Sexp]) -> PResult<Module> {
    let mut names = Names::default();
    let fields = &items[1..];
    // First pass: indices of named functions and globals.
    let (mut nf, mut ng) = (0u32, 0u32);
    for f in fields {
        let Sexp::List(xs, _) = f else {
            return err(f.pos(), "expected a module field");
        };
        let id = xs
            .get(1)
            .and_then(Sexp::atom)
            .filter(|a| a.starts_with('$'))
            .map(str::to_string);
        match f.head() {
            Some("func") => {
                if let Some(id) = id {
                    names.funcs.insert(id, nf);
                }
                nf += 1;
            }
            Some("global") => {
                if let Some(id) = id {
                    names.globals.insert(id, ng);
                }
                ng += 1;
            }
            Some("export") => {}
            _ => return err(f.pos(), "expected `func`, `global` or `export`"),
        }
    }
    let mut m = Module::default();
    let add_export = |m: &mut Module, name: String, idx: u32, p: Pos| -> PResult<()> {
        if m.exports.insert(name.clone(), idx).is_some() {
            return err(p, format!("duplicate export `{name}`"));
        }
        Ok(())
    };
    for f in fields {
        let Sexp::List(xs, fpos) = f else { unreachable!() };
        let mut i = 1;
        if xs.get(1).and_then(Sexp::atom).is_some_and(|a| a.starts_with('$')) {
            i = 2;
        }
        match f.head() {
            Some("func") => {
                let idx = m.funcs.len() as u32;
                let mut params: Vec<(Option<String>, NumType)> = Vec::new();
                let mut locals: Vec<(Option<String>, NumType)> = Vec::new();
                let mut results = Vec::new();
                while let Some(s @ Sexp::List(ys, p)) = xs.get(i) {
                    match s.head() {
                        Some("export") => {}
                        Some(kind @ ("param" | "local")) => {
                            let target = if kind == "param" { &mut params } else { &mut locals };
                            match ys.get(1).and_then(Sexp::atom) {
                                Some(id) if id.starts_with('$') => {
                                    let [_, _, t] = ys.as_slice() else {
                                        return err(*p, format!("a named {kind} has exactly one type"));
                                    };
                                    target.push((Some(id.to_string()), numtype(t)?));
                                }
                                _ => {
                                    for t in &ys[1..] {
                                        target.push((None, numtype(t)?));
                                    }
                                }
                            }
                        }
                        Some("result") => {
                            for t in &ys[1..] {
                                results.push(numtype(t)?);
                            }
                        }
                        _ => break,
                    }
                    i += 1;
                }
                let table = params
                    .iter()
                    .chain(&locals)
                    .enumerate()
                    .filter_map(|(n, (id, _))| id.clone().map(|id| (id, n as u32)))
                    .collect();
                let mut fp = FuncParser {
                    names: &names,
                    locals: table,
                    labels: vec![],
                };
                let mut body = Vec::new();
                if let Some(stop) = fp.seq(xs, &mut i, &[], &mut body)? {
                    return err(*fpos, format!("unexpected `{stop}`"));
                }
                for (name, p) in exports_of(xs) {
                    add_export(&mut m, name, idx, p)?;
                }
                m.funcs.push(Func {
                    params: params.into_iter().map(|(_, t)| t).collect(),
                    results,
                    locals: locals.into_iter().map(|(_, t)| t).collect(),
                    body,
                });
            }
            Some("global") => {
                let rest: Vec<&Sexp> = xs[i..].iter().filter(|s| s.head() != Some("export")).collect();
                let [ty, init] = rest.as_slice() else {
                    return err(*fpos, "expected `(global type (t.const c))`");
                };
                let (mutable, t) = match ty {
                    Sexp::List(ys, _) if ty.head() == Some("mut") && ys.len() == 2 => (true, numtype(&ys[1])?),
                    _ => (false, numtype(ty)?),
                };
                m.globals.push(Global {
                    ty: t,
                    mutable,
                    init: const_expr(init)?,
                });
            }
            Some("export") => {
                let (name, target) = match xs.as_slice() {
                    [_, Sexp::Str(name, _), Sexp::List(t, _)] if t.first().and_then(Sexp::atom) == Some("func") => {
                        (name.clone(), t.get(1))
                    }
                    _ => return err(*fpos, "expected `(export \"name\" (func idx))`"),
                };
                let idx = index(target, &names.funcs, "function", *fpos)?;
                add_export(&mut m, name, idx, *fpos)?;
            }
            _ => unreachable!("checked in the first pass"),
        }
    }
    Ok(m)
}

fn invoke(s: &Sexp, exports: Option<&IndexMap<String, u32>>) -> PResult<Invoke> {
    let Sexp::List(items, pos) = s else {
        return err(s.pos(), "expected `(invoke \"name\" arg*)`");
    };
    let (Some("invoke"), Some(Sexp::Str(name, npos))) = (s.head(), items.get(1)) else {
        return err(*pos, "expected `(invoke \"name\" arg*)`");
    };
    match exports {
        None => return err(*pos, "invoke before any module"),
        Some(e) if !e.contains_key(name) => {
            return err(*npos, format!("no export named `{name}` in the current module"))
        }
        _ => {}
    }
    Ok(Invoke {
        name: name.clone(),
        args: items[2..].iter().map(const_expr).collect::<PResult<_>>()?,
    })
}

/// Parses a test script. Every invoke must name an export of the most recent
/// module.
pub fn parse_test_script(text: &str) -> Result<TestScript, TestParseError> {
    let mut commands = Vec::new();
    let mut current: Option<IndexMap<String, u32>> = None;
    for s in read_all(text)? {
        let Sexp::List(items, pos) = &s else {
            return err(s.pos(), "expected a command");
        };
        let kind = match s.head() {
            Some("module") => {
                let m = module(items)?;
                current = Some(m.exports.clone());
                CommandKind::Module(m)
            }
            Some("invoke") => CommandKind::Invoke(invoke(&s, current.as_ref())?),
            Some("assert_return") => {
                let Some(inv) = items.get(1) else {
                    return err(*pos, "assert_return needs an invoke");
                };
                CommandKind::AssertReturn {
                    invoke: invoke(inv, current.as_ref())?,
                    expected: items[2..].iter().map(expected).collect::<PResult<_>>()?,
                }
            }
            Some("assert_trap") => {
                let (inv, message) = match items.as_slice() {
                    [_, inv] => (inv, None),
                    [_, inv, Sexp::Str(m, _)] => (inv, Some(m.clone())),
                    _ => return err(*pos, "expected `(assert_trap (invoke ...) \"message\"?)`"),
                };
                CommandKind::AssertTrap {
                    invoke: invoke(inv, current.as_ref())?,
                    message,
                }
            }
            Some(other) => return err(*pos, format!("unknown command `{other}`")),
            None => return err(*pos, "expected a command"),
        };
        commands.push(Command {
            line: pos.line,
            col: pos.col,
            kind,
        });
    }
    Ok(TestScript { commands })
}

impl TestScript {
    pub fn assertion_count(&self) -> usize {
        self.commands.iter().filter(|c| c.kind.is_assertion()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ADD: &str = r#"
(module
  (func (export "add") (param i32 i32) (result i32)
    local.get 0 local.get 1 i32.add)
  (func (export "div") (param i32 i32) (result i32)
    (i32.div_u (local.get 0) (local.get 1))))
(assert_return (invoke "add" (i32.const 1) (i32.const 2)) (i32.const 3))
(assert_trap (invoke "div" (i32.const 1) (i32.const 0)) "integer divide by zero")
"#;

    #[test]
    fn commands_in_order() {
        let s = parse_test_script(ADD).unwrap();
        assert_eq!(s.commands.len(), 3);
        assert_eq!(s.assertion_count(), 2);
        let CommandKind::Module(m) = &s.commands[0].kind else {
            panic!()
        };
        assert_eq!(
            m.funcs[1].body,
            vec![
                Instr::LocalGet(0),
                Instr::LocalGet(1),
                Instr::Binop(NumType::I32, "div_u")
            ]
        );
        assert_eq!(
            s.commands[1].kind,
            CommandKind::AssertReturn {
                invoke: Invoke {
                    name: "add".into(),
                    args: vec![Value::I32(1), Value::I32(2)]
                },
                expected: vec![Expected::Value(Value::I32(3))],
            }
        );
        assert_eq!((s.commands[2].line, s.commands[2].col), (8, 1));
    }

    #[test]
    fn empty_script() {
        assert_eq!(parse_test_script("").unwrap(), TestScript::default());
        assert_eq!(
            parse_test_script(";; nothing (; here ;)\n").unwrap(),
            TestScript::default()
        );
    }

    #[test]
    fn error_positions() {
        let e = parse_test_script("(module)\n  (assert_return (invoke \"f\"))").unwrap_err();
        assert_eq!((e.line, e.col), (2, 26));
        let e = parse_test_script("(module (func i32.bogus))").unwrap_err();
        assert_eq!((e.line, e.col), (1, 15));
        assert!(parse_test_script("(module").is_err());
    }

    #[test]
    fn integer_literals() {
        assert_eq!(parse_int("-1", 32), Some(0xffff_ffff));
        assert_eq!(parse_int("0xffff_ffff", 32), Some(0xffff_ffff));
        assert_eq!(parse_int("-2147483648", 32), Some(0x8000_0000));
        assert_eq!(parse_int("4294967296", 32), None);
        assert_eq!(parse_int("-2147483649", 32), None);
        assert_eq!(parse_int("1__0", 32), None);
        assert_eq!(parse_int("-9223372036854775808", 64), Some(1 << 63));
    }

    #[test]
    fn float_literals_are_bit_exact() {
        use NumType::*;
        assert_eq!(parse_float("0x1.8p1", F32), Some(3.0f32.to_bits() as u64));
        assert_eq!(parse_float("-0x1p-149", F32), Some(0x8000_0001));
        assert_eq!(parse_float("0x1.fffffffffffffp1023", F64), Some(f64::MAX.to_bits()));
        assert_eq!(parse_float("-0", F64), Some(1 << 63));
        assert_eq!(parse_float("nan", F32), Some(0x7fc0_0000));
        assert_eq!(parse_float("-nan:0x1", F32), Some(0xff80_0001));
        assert_eq!(parse_float("inf", F64), Some(0x7ff0_0000_0000_0000));
        assert_eq!(parse_float("0.1", F32), Some(0.1f32.to_bits() as u64));
        assert_eq!(parse_float("1e400", F64), None);
        assert_eq!(parse_float("nan:0x0", F32), None);
    }

    #[test]
    fn nan_patterns() {
        let canon = Expected::CanonicalNan(NumType::F32);
        assert!(canon.matches(Value::F32(0x7fc0_0000)));
        assert!(canon.matches(Value::F32(0xffc0_0000)));
        assert!(!canon.matches(Value::F32(0x7fc0_0001)));
        assert!(Expected::ArithmeticNan(NumType::F32).matches(Value::F32(0x7fc0_0001)));
        assert!(!canon.matches(Value::F64(0x7ff8_0000_0000_0000)));
    }

    #[test]
    fn structured_control_and_names() {
        let s = parse_test_script(
            r#"(module
  (global $g (mut i64) (i64.const 0))
  (func $f (param $x i32) (result i32)
    block $out (result i32)
      loop $top
        local.get $x br_if $out
        br $top
      end
      i32.const 0
    end)
  (func (export "g") (result i32)
    (if (result i32) (i32.const 1) (then (i32.const 2)) (else (call $f (i32.const 3)))))
  (export "f" (func $f)))"#,
        )
        .unwrap();
        let CommandKind::Module(m) = &s.commands[0].kind else {
            panic!()
        };
        assert_eq!(m.exports.get("f"), Some(&0));
        assert_eq!(
            m.funcs[0].body,
            vec![Instr::Block(
                Some(NumType::I32),
                vec![
                    Instr::Loop(None, vec![Instr::LocalGet(0), Instr::BrIf(1), Instr::Br(0)]),
                    Instr::Const(Value::I32(0)),
                ]
            )]
        );
        assert_eq!(
            m.funcs[1].body,
            vec![
                Instr::Const(Value::I32(1)),
                Instr::If(
                    Some(NumType::I32),
                    vec![Instr::Const(Value::I32(2))],
                    vec![Instr::Const(Value::I32(3)), Instr::Call(0)]
                )
            ]
        );
    }
}
