//! Tokenizer for `.spectec` sources.

use std::fmt;

use thiserror::Error;

use crate::el::ast::Ident;
use crate::span::{FileId, SourceSpan};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    KwSyntax,
    KwRule,
    KwDef,
    KwRelation,
    KwVar,
    KwIf,
    KwOtherwise,
    KwEpsilon,
    /// `~>`
    Arrow,
    /// `|-`
    Turnstile,
    /// `--`
    DashDash,
    Eq,
    /// `=/=`
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Star,
    Quest,
    Caret,
    Slash,
    Colon,
    Semi,
    Bar,
    /// Upper-case identifier: constructors and relation names.
    Upper(String),
    /// Lower-case identifier: metavariables, type names, rule ids.
    Lower(Ident),
    /// `$`-prefixed function name (the `$` is kept).
    Dollar(String),
    Nat(u64),
}

impl TokenKind {
    /// Keyword tokens can double as rule identifiers (`rule Step/if: ...`).
    pub fn keyword_text(&self) -> Option<&'static str> {
        Some(match self {
            TokenKind::KwSyntax => "syntax",
            TokenKind::KwRule => "rule",
            TokenKind::KwDef => "def",
            TokenKind::KwRelation => "relation",
            TokenKind::KwVar => "var",
            TokenKind::KwIf => "if",
            TokenKind::KwOtherwise => "otherwise",
            TokenKind::KwEpsilon => "epsilon",
            _ => return None,
        })
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(kw) = self.keyword_text() {
            return write!(f, "`{kw}`");
        }
        let s = match self {
            TokenKind::Arrow => "`~>`",
            TokenKind::Turnstile => "`|-`",
            TokenKind::DashDash => "`--`",
            TokenKind::Eq => "`=`",
            TokenKind::Ne => "`=/=`",
            TokenKind::Lt => "`<`",
            TokenKind::Le => "`<=`",
            TokenKind::Gt => "`>`",
            TokenKind::Ge => "`>=`",
            TokenKind::LParen => "`(`",
            TokenKind::RParen => "`)`",
            TokenKind::LBrack => "`[`",
            TokenKind::RBrack => "`]`",
            TokenKind::Comma => "`,`",
            TokenKind::Star => "`*`",
            TokenKind::Quest => "`?`",
            TokenKind::Caret => "`^`",
            TokenKind::Slash => "`/`",
            TokenKind::Colon => "`:`",
            TokenKind::Semi => "`;`",
            TokenKind::Bar => "`|`",
            TokenKind::Upper(s) => return write!(f, "constructor `{s}`"),
            TokenKind::Lower(i) => return write!(f, "identifier `{i}`"),
            TokenKind::Dollar(s) => return write!(f, "function `{s}`"),
            TokenKind::Nat(n) => return write!(f, "number `{n}`"),
            _ => unreachable!(),
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{span}: unexpected character `{ch}`")]
pub struct LexError {
    pub ch: char,
    pub span: SourceSpan,
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    file: FileId,
}

impl Cursor {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `source` into tokens. `;;` starts a comment running to end of line.
pub fn tokenize(source: &str, file: FileId) -> Result<Vec<Token>, Vec<LexError>> {
    let mut cur = Cursor {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        file,
    };
    let mut tokens = Vec::new();
    let mut errors = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == ';' && cur.peek_at(1) == Some(';') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let (line, col) = (cur.line, cur.col);
        let kind = lex_one(&mut cur);
        let span = SourceSpan::new(cur.file, line, col, cur.line, cur.col - 1);
        match kind {
            Some(kind) => tokens.push(Token { kind, span }),
            None => errors.push(LexError { ch: c, span }),
        }
    }

    if errors.is_empty() {
        Ok(tokens)
    } else {
        Err(errors)
    }
}

fn lex_one(cur: &mut Cursor) -> Option<TokenKind> {
    let c = cur.bump()?;
    let two = |cur: &mut Cursor, next: char, yes: TokenKind, no: Option<TokenKind>| {
        if cur.peek() == Some(next) {
            cur.bump();
            Some(yes)
        } else {
            no
        }
    };
    match c {
        '(' => Some(TokenKind::LParen),
        ')' => Some(TokenKind::RParen),
        '[' => Some(TokenKind::LBrack),
        ']' => Some(TokenKind::RBrack),
        ',' => Some(TokenKind::Comma),
        '*' => Some(TokenKind::Star),
        '?' => Some(TokenKind::Quest),
        '^' => Some(TokenKind::Caret),
        '/' => Some(TokenKind::Slash),
        ':' => Some(TokenKind::Colon),
        ';' => Some(TokenKind::Semi),
        '≤' => Some(TokenKind::Le),
        '≥' => Some(TokenKind::Ge),
        '~' => two(cur, '>', TokenKind::Arrow, None),
        '|' => two(cur, '-', TokenKind::Turnstile, Some(TokenKind::Bar)),
        '-' => two(cur, '-', TokenKind::DashDash, None),
        '<' => two(cur, '=', TokenKind::Le, Some(TokenKind::Lt)),
        '>' => two(cur, '=', TokenKind::Ge, Some(TokenKind::Gt)),
        '=' => {
            if cur.peek() == Some('/') && cur.peek_at(1) == Some('=') {
                cur.bump();
                cur.bump();
                Some(TokenKind::Ne)
            } else {
                Some(TokenKind::Eq)
            }
        }
        '$' => {
            let mut name = String::from("$");
            match cur.peek() {
                Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
                _ => return None,
            }
            while let Some(c) = cur.peek().filter(|&c| is_ident_continue(c)) {
                name.push(c);
                cur.bump();
            }
            Some(TokenKind::Dollar(name))
        }
        c if c.is_ascii_digit() => {
            let mut n: u64 = c.to_digit(10)? as u64;
            while let Some(d) = cur.peek().and_then(|c| c.to_digit(10)) {
                n = n.checked_mul(10)?.checked_add(d as u64)?;
                cur.bump();
            }
            Some(TokenKind::Nat(n))
        }
        c if c.is_ascii_uppercase() => {
            let mut name = String::from(c);
            loop {
                match cur.peek() {
                    Some(c) if is_ident_continue(c) => {
                        name.push(c);
                        cur.bump();
                    }
                    // `LOCAL.GET`: a dot continues the name only before another upper-case letter.
                    Some('.') if cur.peek_at(1).is_some_and(|c| c.is_ascii_uppercase()) => {
                        name.push('.');
                        cur.bump();
                    }
                    _ => break,
                }
            }
            Some(TokenKind::Upper(name))
        }
        c if c.is_ascii_lowercase() => {
            let mut text = String::from(c);
            loop {
                match cur.peek() {
                    Some(c) if is_ident_continue(c) => {
                        text.push(c);
                        cur.bump();
                    }
                    // Rule ids such as `binop-val` and `local.get`.
                    Some(sep @ ('-' | '.')) if cur.peek_at(1).is_some_and(|c| c.is_ascii_lowercase()) => {
                        text.push(sep);
                        cur.bump();
                    }
                    _ => break,
                }
            }
            while cur.peek() == Some('\'') {
                text.push('\'');
                cur.bump();
            }
            Some(match text.as_str() {
                "syntax" => TokenKind::KwSyntax,
                "rule" => TokenKind::KwRule,
                "def" => TokenKind::KwDef,
                "relation" => TokenKind::KwRelation,
                "var" => TokenKind::KwVar,
                "if" => TokenKind::KwIf,
                "otherwise" => TokenKind::KwOtherwise,
                "epsilon" => TokenKind::KwEpsilon,
                _ => TokenKind::Lower(Ident::from_text(&text)),
            })
        }
        _ => None,
    }
}
