//! LaTeX rendering of checked scripts.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use thiserror::Error;

use crate::diag::{codes, Diagnostic};
use crate::el::ast::{
    CmpOp, ElDef, ElExp, ElExpKind, ElIter, ElPremise, ElType, Ident, RelShape, RuleBody, SyntaxCase, TypeIter,
};
use crate::pipeline::{check, Checked};
use crate::render::symbols::{instantiate, SymbolTable};
use crate::span::{SourceMap, SourceSpan};

pub const PREAMBLE: &str = "\\documentclass{article}\n\\usepackage{amsmath}\n\\usepackage{amssymb}\n";

const ARRAY_COLUMNS: &str = "{@{}l@{}lcl}";

/// Syntax cases per row before the alternation wraps.
const CASES_PER_ROW: usize = 6;

/// Definitions per display; arrays do not break across pages.
const BLOCKS_PER_DISPLAY: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Syntax,
    Var,
    FuncDecl,
    FuncClause,
    Relation,
    Rule,
}

impl BlockKind {
    fn label_kind(self) -> &'static str {
        match self {
            BlockKind::Syntax => "syntax",
            BlockKind::Var => "var",
            BlockKind::FuncDecl => "func",
            BlockKind::FuncClause => "clause",
            BlockKind::Relation => "relation",
            BlockKind::Rule => "rule",
        }
    }
}

/// One rendered definition: array rows, each ending in `\\`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatexBlock {
    pub kind: BlockKind,
    /// Definition key, e.g. `numtype`, `$binop/2` or `Step_pure/binop-val`.
    pub key: String,
    pub label: String,
    pub rows: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatexDoc {
    pub preamble: String,
    pub blocks: Vec<LatexBlock>,
    /// Definition key to label.
    pub anchors: IndexMap<String, String>,
    /// Constructors without a symbol-table entry.
    pub warnings: Vec<Diagnostic>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("rendering refused: the script has {} diagnostic(s)", diagnostics.len())]
pub struct RenderRefused {
    pub diagnostics: Vec<Diagnostic>,
}

impl LatexDoc {
    /// Displays in source order. Consecutive definitions of the same kind
    /// share one array.
    pub fn body(&self) -> String {
        let mut out = String::new();
        let mut i = 0;
        while i < self.blocks.len() {
            let kind = self.blocks[i].kind;
            let mut j = i;
            while j < self.blocks.len() && self.blocks[j].kind == kind && j - i < BLOCKS_PER_DISPLAY {
                j += 1;
            }
            let group = &self.blocks[i..j];
            for b in group {
                out.push_str(&format!("% {}\n\\label{{{}}}\n", b.key, b.label));
            }
            out.push_str(&format!("\\[\n\\begin{{array}}{ARRAY_COLUMNS}\n"));
            for b in group {
                out.push_str(&b.rows);
            }
            out.push_str("\\end{array}\n\\]\n\n");
            i = j;
        }
        out
    }

    /// The complete, standalone document.
    pub fn to_tex(&self) -> String {
        format!(
            "{}\\begin{{document}}\n\n{}\\end{{document}}\n",
            self.preamble,
            self.body()
        )
    }
}

/// Renders a checked script with the built-in symbol table.
pub fn render_latex(checked: &Checked) -> LatexDoc {
    render_latex_with(checked, &SymbolTable::builtin())
}

pub fn render_latex_with(checked: &Checked, symbols: &SymbolTable) -> LatexDoc {
    let mut r = Renderer {
        symbols,
        warned: BTreeSet::new(),
        warnings: Vec::new(),
    };
    let mut clause_counts: IndexMap<String, usize> = IndexMap::new();
    let mut blocks = Vec::new();
    for def in &checked.el.defs {
        let (kind, key, rows) = match def {
            ElDef::Syntax { name, cases, .. } => (BlockKind::Syntax, name.clone(), r.syntax(name, cases)),
            ElDef::Var { name, ty, .. } => (
                BlockKind::Var,
                name.clone(),
                format!("& {} & : & {} \\\\\n", var(&Ident::from_text(name)), ty_tex(ty)),
            ),
            ElDef::FuncDecl {
                name, params, result, ..
            } => {
                let mut sig: Vec<String> = params.iter().map(ty_tex).collect();
                if sig.is_empty() {
                    sig.push(String::new());
                }
                let arrow = if params.is_empty() { "" } else { " \\rightarrow " };
                (
                    BlockKind::FuncDecl,
                    name.clone(),
                    format!(
                        "& {} & : & {}{arrow}{} \\\\\n",
                        func_name(name),
                        sig.join(" \\times "),
                        ty_tex(result)
                    ),
                )
            }
            ElDef::FuncClause {
                name,
                args,
                result,
                premises,
                ..
            } => {
                let n = clause_counts.entry(name.clone()).or_default();
                *n += 1;
                let mut rows = format!("& {} &=& {} \\\\\n", r.call(name, args), r.exp(result));
                r.premise_rows(&mut rows, premises);
                (BlockKind::FuncClause, format!("{name}/{n}"), rows)
            }
            ElDef::Relation { name, shape, .. } => {
                let judgement = match shape {
                    RelShape::Reduction {
                        state,
                        lhs,
                        rhs_state,
                        rhs,
                    } => format!(
                        "{} \\hookrightarrow {}",
                        with_state(state.as_ref().map(ty_tex), ty_tex(lhs)),
                        with_state(rhs_state.as_ref().map(ty_tex), ty_tex(rhs))
                    ),
                    RelShape::Typing { context, subject, ty } => {
                        format!("{} \\vdash {} : {}", ty_tex(context), ty_tex(subject), ty_tex(ty))
                    }
                };
                (
                    BlockKind::Relation,
                    name.clone(),
                    format!("& \\mbox{{{}}} & : & {judgement} \\\\\n", escape(name)),
                )
            }
            ElDef::Rule {
                relation,
                id,
                body,
                premises,
                ..
            } => {
                let (prefix, lhs, mid, rhs) = match body {
                    RuleBody::Reduction {
                        state,
                        lhs,
                        rhs_state,
                        rhs,
                    } => {
                        let l = r.exp(lhs);
                        let l = with_state(state.as_ref().map(|s| r.exp(s)), l);
                        let rr = r.exp(rhs);
                        let rr = with_state(rhs_state.as_ref().map(|s| r.exp(s)), rr);
                        ("E", l, "\\hookrightarrow", rr)
                    }
                    RuleBody::Typing { context, subject, ty } => (
                        "T",
                        r.exp(context),
                        "\\vdash",
                        format!("{} : {}", r.exp(subject), r.exp(ty)),
                    ),
                };
                let mut rows = format!("{} \\ \\\n & {lhs}\n &{mid}& {rhs} \\\\\n", rule_tag(prefix, id));
                r.premise_rows(&mut rows, premises);
                (BlockKind::Rule, format!("{relation}/{id}"), rows)
            }
        };
        let label = format!("def-{}-{}", kind.label_kind(), label_name(&key));
        blocks.push(LatexBlock { kind, key, label, rows });
    }
    let anchors = blocks.iter().map(|b| (b.key.clone(), b.label.clone())).collect();
    LatexDoc {
        preamble: PREAMBLE.to_string(),
        blocks,
        anchors,
        warnings: r.warnings,
    }
}

/// Checks `sources` and renders them; any error refuses rendering.
pub fn latex_from_sources(sources: &SourceMap) -> Result<LatexDoc, RenderRefused> {
    let checked = check(sources).map_err(|diagnostics| RenderRefused { diagnostics })?;
    Ok(render_latex(&checked))
}

struct Renderer<'a> {
    symbols: &'a SymbolTable,
    warned: BTreeSet<String>,
    warnings: Vec<Diagnostic>,
}

impl Renderer<'_> {
    fn constructor(&mut self, name: &str, args: &[String], span: SourceSpan) -> String {
        match self.symbols.constructor(name) {
            Some(t) => instantiate(t, args),
            None => {
                if self.warned.insert(name.to_string()) {
                    self.warnings.push(Diagnostic::warning(
                        codes::SYMBOL,
                        span,
                        format!("no symbol for constructor `{name}`; using typewriter font"),
                    ));
                }
                instantiate(&format!("\\mathtt{{{}}}", escape(name)), args)
            }
        }
    }

    fn syntax(&mut self, name: &str, cases: &[SyntaxCase]) -> String {
        let head = format!("& \\mathit{{{}}} & ::= & ", escape(name));
        if cases.is_empty() {
            return format!("{head}\\ldots \\\\\n");
        }
        let rendered: Vec<String> = cases
            .iter()
            .map(|c| match c {
                SyntaxCase::Con { name, args, span } => {
                    let args: Vec<String> = args.iter().map(ty_tex).collect();
                    self.constructor(name, &args, *span)
                }
                SyntaxCase::Include { name, .. } => format!("\\mathit{{{}}}", escape(name)),
            })
            .collect();
        let mut rows = String::new();
        for (i, chunk) in rendered.chunks(CASES_PER_ROW).enumerate() {
            rows.push_str(if i == 0 { &head } else { "& & | & " });
            rows.push_str(&chunk.join(" ~|~ "));
            rows.push_str(" \\\\\n");
        }
        rows
    }

    fn call(&mut self, name: &str, args: &[ElExp]) -> String {
        let args: Vec<String> = args.iter().map(|a| self.exp(a)).collect();
        match self.symbols.function(name) {
            Some(t) => instantiate(t, &args),
            None => format!("{}({})", func_name(name), args.join(",\\, ")),
        }
    }

    fn exp(&mut self, e: &ElExp) -> String {
        match &e.kind {
            ElExpKind::Var(x) => var(x),
            ElExpKind::Nat(n) => n.to_string(),
            ElExpKind::Epsilon => "\\epsilon".into(),
            ElExpKind::Con(c, args) => {
                let rendered: Vec<String> = args.iter().map(|a| self.exp(a)).collect();
                let body = self.constructor(c, &rendered, e.span);
                if args.is_empty() {
                    body
                } else {
                    format!("({body})")
                }
            }
            ElExpKind::Call(f, args) => self.call(f, args),
            ElExpKind::Seq(es) if es.is_empty() => "\\epsilon".into(),
            ElExpKind::Seq(es) => self.join(es, "~"),
            ElExpKind::Tuple(es) => format!("({})", self.join(es, ",\\, ")),
            ElExpKind::Iter(body, it) => {
                let b = self.exp(body);
                format!("{{{b}}}^{{{}}}", self.iter(it))
            }
            ElExpKind::List(es) => format!("[{}]", self.join(es, "~")),
            ElExpKind::Len(inner) => format!("{{|{}|}}", self.exp(inner)),
        }
    }

    fn join(&mut self, es: &[ElExp], sep: &str) -> String {
        es.iter().map(|e| self.exp(e)).collect::<Vec<_>>().join(sep)
    }

    fn iter(&mut self, it: &ElIter) -> String {
        match it {
            ElIter::List => "\\ast".into(),
            ElIter::Opt => "?".into(),
            ElIter::Pow(n) => self.exp(n),
        }
    }

    fn premise(&mut self, p: &ElPremise) -> String {
        match p {
            ElPremise::If { lhs, op, rhs, .. } => {
                format!("{} {} {}", self.exp(lhs), cmp(*op), self.exp(rhs))
            }
            ElPremise::Else { .. } => "\\mbox{otherwise}".into(),
            ElPremise::Iter { body, iter, .. } => {
                let b = self.premise(body);
                format!("{{({b})}}^{{{}}}", self.iter(iter))
            }
        }
    }

    fn premise_rows(&mut self, rows: &mut String, premises: &[ElPremise]) {
        for p in premises {
            let text = self.premise(p);
            if matches!(p, ElPremise::Else { .. }) {
                rows.push_str(&format!("& {text} \\\\\n"));
            } else {
                rows.push_str(&format!("& \\mbox{{if}}~{text} \\\\\n"));
            }
        }
    }
}

fn cmp(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "=",
        CmpOp::Ne => "\\neq",
        CmpOp::Lt => "<",
        CmpOp::Le => "\\leq",
        CmpOp::Gt => ">",
        CmpOp::Ge => "\\geq",
    }
}

fn with_state(state: Option<String>, rest: String) -> String {
    match state {
        Some(s) => format!("{s} ; {rest}"),
        None => rest,
    }
}

/// Escapes characters that are special in LaTeX text and math.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '_' | '&' | '%' | '#' | '$' | '{' | '}' => {
                out.push('\\');
                out.push(c);
            }
            _ => out.push(c),
        }
    }
    out
}

fn var(x: &Ident) -> String {
    let mut s = format!("\\mathit{{{}}}", escape(&x.base));
    if let Some(sub) = &x.sub {
        s.push_str(&format!("_{{{sub}}}"));
    }
    for _ in 0..x.primes {
        s.push('\'');
    }
    s
}

fn ty_tex(t: &ElType) -> String {
    let mut s = format!("\\mathit{{{}}}", escape(&t.name));
    for it in &t.iters {
        let sym = match it {
            TypeIter::List => "\\ast",
            TypeIter::Opt => "?",
        };
        s = format!("{{{s}}}^{{{sym}}}");
    }
    s
}

fn func_name(name: &str) -> String {
    format!("\\mathrm{{{}}}", escape(name.trim_start_matches('$')))
}

/// `{[\textsc{\scriptsize E{-}binop{-}val}]}`
fn rule_tag(prefix: &str, id: &str) -> String {
    let id = escape(id).replace('-', "{-}");
    format!("{{[\\textsc{{\\scriptsize {prefix}{{-}}{id}}}]}}")
}

/// Label-safe form of a definition key.
fn label_name(key: &str) -> String {
    key.trim_start_matches('$')
        .chars()
        .map(|c| match c {
            '/' => '-',
            '$' => '-',
            c => c,
        })
        .collect()
}
