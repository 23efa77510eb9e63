//! Recursive-descent parser from tokens to [`ElScript`].
//!
//! Definitions are delimited by their leading keyword, so after an error the
//! parser skips to the next `syntax`/`var`/`def`/`relation`/`rule` token and
//! keeps going.

use std::fmt;

use thiserror::Error;

use crate::el::ast::*;
use crate::el::lexer::{Token, TokenKind};
use crate::span::SourceSpan;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "expected {}, found {}", self.expected.join(" or "), self.found)
    }
}

type PResult<T> = Result<T, ParseError>;

pub fn parse_script(tokens: &[Token]) -> Result<ElScript, Vec<ParseError>> {
    let mut p = Parser { tokens, pos: 0 };
    let mut defs = Vec::new();
    let mut errors = Vec::new();
    while !p.at_end() {
        match p.def() {
            Ok(d) => defs.push(d),
            Err(e) => {
                errors.push(e);
                p.recover();
            }
        }
    }
    if errors.is_empty() {
        Ok(ElScript { defs })
    } else {
        Err(errors)
    }
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

fn is_def_start(k: &TokenKind) -> bool {
    matches!(
        k,
        TokenKind::KwSyntax | TokenKind::KwVar | TokenKind::KwDef | TokenKind::KwRelation | TokenKind::KwRule
    )
}

fn starts_atom(k: &TokenKind) -> bool {
    matches!(
        k,
        TokenKind::LParen
            | TokenKind::LBrack
            | TokenKind::Bar
            | TokenKind::Upper(_)
            | TokenKind::Lower(_)
            | TokenKind::Dollar(_)
            | TokenKind::Nat(_)
            | TokenKind::KwEpsilon
    )
}

impl<'t> Parser<'t> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn span_here(&self) -> SourceSpan {
        match self.tokens.get(self.pos) {
            Some(t) => t.span,
            None => self
                .tokens
                .last()
                .map(|t| {
                    SourceSpan::new(
                        t.span.file,
                        t.span.line_end,
                        t.span.col_end + 1,
                        t.span.line_end,
                        t.span.col_end + 1,
                    )
                })
                .unwrap_or_default(),
        }
    }

    fn prev_span(&self) -> SourceSpan {
        self.tokens[self.pos - 1].span
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError {
            span: self.span_here(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self
                .peek()
                .map(|k| k.to_string())
                .unwrap_or_else(|| "end of input".to_string()),
        })
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<SourceSpan> {
        if self.peek() == Some(&kind) {
            Ok(self.bump().span)
        } else {
            self.error(&[&kind.to_string()])
        }
    }

    fn recover(&mut self) {
        // Always make progress, then stop at the next definition keyword.
        if !self.at_end() {
            self.pos += 1;
        }
        while let Some(k) = self.peek() {
            if is_def_start(k) {
                break;
            }
            self.pos += 1;
        }
    }

    fn lower_name(&mut self) -> PResult<String> {
        match self.peek() {
            Some(TokenKind::Lower(id)) => {
                self.pos += 1;
                Ok(id.to_string())
            }
            _ => self.error(&["lower-case identifier"]),
        }
    }

    fn def(&mut self) -> PResult<ElDef> {
        let start = self.span_here();
        match self.peek() {
            Some(TokenKind::KwSyntax) => {
                self.pos += 1;
                let name = self.lower_name()?;
                let mut cases = Vec::new();
                if self.eat(&TokenKind::Eq) {
                    // A leading bar allows one case per line.
                    self.eat(&TokenKind::Bar);
                    cases.push(self.syntax_case()?);
                    while self.eat(&TokenKind::Bar) {
                        cases.push(self.syntax_case()?);
                    }
                }
                Ok(ElDef::Syntax {
                    name,
                    cases,
                    span: start.to(self.prev_span()),
                })
            }
            Some(TokenKind::KwVar) => {
                self.pos += 1;
                let name = self.lower_name()?;
                self.expect(TokenKind::Colon)?;
                let ty = self.ty()?;
                Ok(ElDef::Var {
                    name,
                    ty,
                    span: start.to(self.prev_span()),
                })
            }
            Some(TokenKind::KwRelation) => {
                self.pos += 1;
                let name = match self.peek() {
                    Some(TokenKind::Upper(n)) => {
                        self.pos += 1;
                        n.clone()
                    }
                    _ => return self.error(&["relation name"]),
                };
                self.expect(TokenKind::Colon)?;
                let shape = self.shape()?;
                Ok(ElDef::Relation {
                    name,
                    shape,
                    span: start.to(self.prev_span()),
                })
            }
            Some(TokenKind::KwDef) => {
                self.pos += 1;
                self.func_def(start)
            }
            Some(TokenKind::KwRule) => {
                self.pos += 1;
                self.rule_def(start)
            }
            _ => self.error(&["`syntax`", "`var`", "`def`", "`relation`", "`rule`"]),
        }
    }

    fn syntax_case(&mut self) -> PResult<SyntaxCase> {
        let start = self.span_here();
        match self.peek() {
            Some(TokenKind::Upper(name)) => {
                self.pos += 1;
                let mut args = Vec::new();
                while let Some(TokenKind::Lower(_)) = self.peek() {
                    args.push(self.ty()?);
                }
                Ok(SyntaxCase::Con {
                    name: name.clone(),
                    args,
                    span: start.to(self.prev_span()),
                })
            }
            Some(TokenKind::Lower(_)) => {
                let name = self.lower_name()?;
                Ok(SyntaxCase::Include { name, span: start })
            }
            _ => self.error(&["constructor", "syntax name"]),
        }
    }

    fn ty(&mut self) -> PResult<ElType> {
        let start = self.span_here();
        let name = self.lower_name()?;
        let mut iters = Vec::new();
        loop {
            if self.eat(&TokenKind::Star) {
                iters.push(TypeIter::List);
            } else if self.eat(&TokenKind::Quest) {
                iters.push(TypeIter::Opt);
            } else {
                break;
            }
        }
        Ok(ElType {
            name,
            iters,
            span: start.to(self.prev_span()),
        })
    }

    fn shape(&mut self) -> PResult<RelShape> {
        let first = self.ty()?;
        let (state, lhs) = if self.eat(&TokenKind::Semi) {
            (Some(first), self.ty()?)
        } else {
            (None, first)
        };
        if self.eat(&TokenKind::Arrow) {
            let second = self.ty()?;
            let (rhs_state, rhs) = if self.eat(&TokenKind::Semi) {
                (Some(second), self.ty()?)
            } else {
                (None, second)
            };
            Ok(RelShape::Reduction {
                state,
                lhs,
                rhs_state,
                rhs,
            })
        } else if state.is_none() && self.eat(&TokenKind::Turnstile) {
            let subject = self.ty()?;
            self.expect(TokenKind::Colon)?;
            let ty = self.ty()?;
            Ok(RelShape::Typing {
                context: lhs,
                subject,
                ty,
            })
        } else {
            self.error(&["`~>`", "`|-`", "`;`"])
        }
    }

    fn func_def(&mut self, start: SourceSpan) -> PResult<ElDef> {
        let name = match self.peek() {
            Some(TokenKind::Dollar(n)) => {
                self.pos += 1;
                n.clone()
            }
            _ => return self.error(&["function name"]),
        };
        self.expect(TokenKind::LParen)?;
        let mut args = Vec::new();
        if !self.eat(&TokenKind::RParen) {
            loop {
                args.push(self.seq()?);
                if self.eat(&TokenKind::RParen) {
                    break;
                }
                self.expect(TokenKind::Comma)?;
            }
        }
        if self.eat(&TokenKind::Colon) {
            let params = args.into_iter().map(exp_to_type).collect::<PResult<Vec<_>>>()?;
            let result = self.ty()?;
            Ok(ElDef::FuncDecl {
                name,
                params,
                result,
                span: start.to(self.prev_span()),
            })
        } else if self.eat(&TokenKind::Eq) {
            let result = self.seq()?;
            let premises = self.premises()?;
            Ok(ElDef::FuncClause {
                name,
                args,
                result,
                premises,
                span: start.to(self.prev_span()),
            })
        } else {
            self.error(&["`:`", "`=`"])
        }
    }

    fn rule_def(&mut self, start: SourceSpan) -> PResult<ElDef> {
        let relation = match self.peek() {
            Some(TokenKind::Upper(n)) => {
                self.pos += 1;
                n.clone()
            }
            _ => return self.error(&["relation name"]),
        };
        self.expect(TokenKind::Slash)?;
        let id = match self.peek() {
            Some(TokenKind::Lower(id)) => id.to_string(),
            Some(k) if k.keyword_text().is_some() => k.keyword_text().unwrap().to_string(),
            _ => return self.error(&["rule identifier"]),
        };
        self.pos += 1;
        self.expect(TokenKind::Colon)?;

        let first = self.seq()?;
        let (state, lhs) = if self.eat(&TokenKind::Semi) {
            (Some(first), self.seq()?)
        } else {
            (None, first)
        };
        let body = if self.eat(&TokenKind::Arrow) {
            let second = self.seq()?;
            let (rhs_state, rhs) = if self.eat(&TokenKind::Semi) {
                (Some(second), self.seq()?)
            } else {
                (None, second)
            };
            RuleBody::Reduction {
                state,
                lhs,
                rhs_state,
                rhs,
            }
        } else if state.is_none() && self.eat(&TokenKind::Turnstile) {
            let subject = self.seq()?;
            self.expect(TokenKind::Colon)?;
            let ty = self.seq()?;
            RuleBody::Typing {
                context: lhs,
                subject,
                ty,
            }
        } else {
            return self.error(&["`~>`", "`|-`"]);
        };
        let premises = self.premises()?;
        Ok(ElDef::Rule {
            relation,
            id,
            body,
            premises,
            span: start.to(self.prev_span()),
        })
    }

    fn premises(&mut self) -> PResult<Vec<ElPremise>> {
        let mut out = Vec::new();
        while self.peek() == Some(&TokenKind::DashDash) {
            let start = self.bump().span;
            out.push(self.premise(start)?);
        }
        Ok(out)
    }

    fn premise(&mut self, start: SourceSpan) -> PResult<ElPremise> {
        match self.peek() {
            Some(TokenKind::KwOtherwise) => {
                let end = self.bump().span;
                Ok(ElPremise::Else { span: start.to(end) })
            }
            Some(TokenKind::KwIf) => {
                self.pos += 1;
                self.if_premise(start)
            }
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let inner_start = self.expect(TokenKind::KwIf)?;
                let body = self.if_premise(inner_start)?;
                self.expect(TokenKind::RParen)?;
                let iter = self
                    .iter_suffix()?
                    .map_or_else(|| self.error(&["`*`", "`?`", "`^`"]), Ok)?;
                Ok(ElPremise::Iter {
                    body: Box::new(body),
                    iter,
                    span: start.to(self.prev_span()),
                })
            }
            _ => self.error(&["`if`", "`otherwise`", "`(`"]),
        }
    }

    fn if_premise(&mut self, start: SourceSpan) -> PResult<ElPremise> {
        let lhs = self.seq()?;
        let op = match self.peek() {
            Some(TokenKind::Eq) => CmpOp::Eq,
            Some(TokenKind::Ne) => CmpOp::Ne,
            Some(TokenKind::Lt) => CmpOp::Lt,
            Some(TokenKind::Le) => CmpOp::Le,
            Some(TokenKind::Gt) => CmpOp::Gt,
            Some(TokenKind::Ge) => CmpOp::Ge,
            _ => return self.error(&["comparison operator"]),
        };
        self.pos += 1;
        let rhs = self.seq()?;
        Ok(ElPremise::If {
            lhs,
            op,
            rhs,
            span: start.to(self.prev_span()),
        })
    }

    fn iter_suffix(&mut self) -> PResult<Option<ElIter>> {
        Ok(Some(match self.peek() {
            Some(TokenKind::Star) => {
                self.pos += 1;
                ElIter::List
            }
            Some(TokenKind::Quest) => {
                self.pos += 1;
                ElIter::Opt
            }
            Some(TokenKind::Caret) => {
                self.pos += 1;
                ElIter::Pow(Box::new(self.primary(false)?))
            }
            _ => return Ok(None),
        }))
    }

    /// One or more juxtaposed atoms; a single atom is returned unwrapped.
    fn seq(&mut self) -> PResult<ElExp> {
        self.seq_inner(false)
    }

    fn seq_inner(&mut self, in_len: bool) -> PResult<ElExp> {
        let mut items = Vec::new();
        while let Some(k) = self.peek() {
            if !starts_atom(k) || (in_len && *k == TokenKind::Bar) {
                break;
            }
            items.push(self.atom(in_len)?);
        }
        match items.len() {
            0 => self.error(&["expression"]),
            1 => Ok(items.pop().unwrap()),
            _ => Ok(make_seq(items)),
        }
    }

    fn atom(&mut self, in_len: bool) -> PResult<ElExp> {
        let mut e = self.primary(in_len)?;
        while let Some(it) = self.iter_suffix()? {
            let span = e.span.to(self.prev_span());
            e = ElExp::new(ElExpKind::Iter(Box::new(e), it), span);
        }
        Ok(e)
    }

    fn primary(&mut self, in_len: bool) -> PResult<ElExp> {
        let start = self.span_here();
        let Some(kind) = self.peek() else {
            return self.error(&["expression"]);
        };
        match kind {
            TokenKind::Lower(id) => {
                self.pos += 1;
                Ok(ElExp::new(ElExpKind::Var(id.clone()), start))
            }
            TokenKind::Nat(n) => {
                self.pos += 1;
                Ok(ElExp::new(ElExpKind::Nat(*n), start))
            }
            TokenKind::KwEpsilon => {
                self.pos += 1;
                Ok(ElExp::new(ElExpKind::Epsilon, start))
            }
            TokenKind::Upper(name) => {
                self.pos += 1;
                Ok(ElExp::new(ElExpKind::Con(name.clone(), Vec::new()), start))
            }
            TokenKind::Dollar(name) => {
                self.pos += 1;
                self.expect(TokenKind::LParen)?;
                let mut args = Vec::new();
                if !self.eat(&TokenKind::RParen) {
                    loop {
                        args.push(self.seq()?);
                        if self.eat(&TokenKind::RParen) {
                            break;
                        }
                        self.expect(TokenKind::Comma)?;
                    }
                }
                Ok(ElExp::new(
                    ElExpKind::Call(name.clone(), args),
                    start.to(self.prev_span()),
                ))
            }
            TokenKind::LBrack => {
                self.pos += 1;
                let mut items = Vec::new();
                while self.peek().is_some_and(starts_atom) {
                    items.push(self.atom(false)?);
                }
                self.expect(TokenKind::RBrack)?;
                Ok(ElExp::new(ElExpKind::List(flatten(items)), start.to(self.prev_span())))
            }
            TokenKind::Bar if !in_len => {
                self.pos += 1;
                let inner = self.seq_inner(true)?;
                self.expect(TokenKind::Bar)?;
                Ok(ElExp::new(ElExpKind::Len(Box::new(inner)), start.to(self.prev_span())))
            }
            TokenKind::LParen => {
                self.pos += 1;
                self.paren(start)
            }
            _ => self.error(&["expression"]),
        }
    }

    /// After `(`: constructor application, grouping, or tuple.
    fn paren(&mut self, start: SourceSpan) -> PResult<ElExp> {
        if self.eat(&TokenKind::RParen) {
            return Ok(ElExp::new(ElExpKind::Tuple(Vec::new()), start.to(self.prev_span())));
        }
        // `(C a b)` applies a constructor; `(C* ...)` iterates a nullary one.
        let suffixed = matches!(
            self.tokens.get(self.pos + 1).map(|t| &t.kind),
            Some(TokenKind::Star | TokenKind::Quest | TokenKind::Caret)
        );
        let first = if let (Some(TokenKind::Upper(name)), false) = (self.peek(), suffixed) {
            let con_start = self.bump().span;
            let mut args = Vec::new();
            while self.peek().is_some_and(starts_atom) {
                args.push(self.atom(false)?);
            }
            ElExp::new(ElExpKind::Con(name.clone(), args), con_start.to(self.prev_span()))
        } else {
            self.seq()?
        };
        if self.peek() == Some(&TokenKind::Comma) {
            let mut items = vec![first];
            while self.eat(&TokenKind::Comma) {
                items.push(self.seq()?);
            }
            self.expect(TokenKind::RParen)?;
            return Ok(ElExp::new(ElExpKind::Tuple(items), start.to(self.prev_span())));
        }
        self.expect(TokenKind::RParen)?;
        let span = start.to(self.prev_span());
        Ok(match first.kind {
            ElExpKind::Con(..) | ElExpKind::Seq(_) => ElExp { span, ..first },
            // Plain grouping keeps the inner node's own span.
            _ => first,
        })
    }
}

fn flatten(items: Vec<ElExp>) -> Vec<ElExp> {
    let mut out = Vec::with_capacity(items.len());
    for it in items {
        match it.kind {
            ElExpKind::Seq(inner) => out.extend(inner),
            _ => out.push(it),
        }
    }
    out
}

fn make_seq(items: Vec<ElExp>) -> ElExp {
    let span = items[0].span.to(items[items.len() - 1].span);
    ElExp::new(ElExpKind::Seq(flatten(items)), span)
}

fn exp_to_type(e: ElExp) -> PResult<ElType> {
    let mut iters = Vec::new();
    let mut cur = e.clone();
    loop {
        match cur.kind {
            ElExpKind::Iter(body, ElIter::List) => {
                iters.push(TypeIter::List);
                cur = *body;
            }
            ElExpKind::Iter(body, ElIter::Opt) => {
                iters.push(TypeIter::Opt);
                cur = *body;
            }
            ElExpKind::Var(id) => {
                iters.reverse();
                return Ok(ElType {
                    name: id.to_string(),
                    iters,
                    span: e.span,
                });
            }
            _ => {
                return Err(ParseError {
                    span: e.span,
                    expected: vec!["type".to_string()],
                    found: "expression".to_string(),
                })
            }
        }
    }
}
