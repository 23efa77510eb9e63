//! Source locations shared by every representation in the pipeline.

use std::fmt;

use serde::Serialize;

/// Index of a file registered in a [`SourceMap`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FileId(pub u32);

/// A 1-based, inclusive line/column range inside one file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct SourceSpan {
    pub file: FileId,
    pub line_start: u32,
    pub col_start: u32,
    pub line_end: u32,
    pub col_end: u32,
}

impl SourceSpan {
    pub fn new(file: FileId, line_start: u32, col_start: u32, line_end: u32, col_end: u32) -> Self {
        debug_assert!(
            line_end > line_start || (line_end == line_start && col_end >= col_start),
            "inverted span"
        );
        SourceSpan {
            file,
            line_start,
            col_start,
            line_end,
            col_end,
        }
    }

    /// Placeholder span used for synthesized nodes and span-insensitive comparison.
    pub fn dummy() -> Self {
        SourceSpan {
            file: FileId(0),
            line_start: 0,
            col_start: 0,
            line_end: 0,
            col_end: 0,
        }
    }

    /// Smallest span covering both `self` and `other` (same file assumed).
    pub fn to(self, other: SourceSpan) -> SourceSpan {
        let (ls, cs) = if (other.line_start, other.col_start) < (self.line_start, self.col_start) {
            (other.line_start, other.col_start)
        } else {
            (self.line_start, self.col_start)
        };
        let (le, ce) = if (other.line_end, other.col_end) > (self.line_end, self.col_end) {
            (other.line_end, other.col_end)
        } else {
            (self.line_end, self.col_end)
        };
        SourceSpan {
            file: self.file,
            line_start: ls,
            col_start: cs,
            line_end: le,
            col_end: ce,
        }
    }

    pub fn sort_key(&self) -> (FileId, u32, u32) {
        (self.file, self.line_start, self.col_start)
    }

    /// True when `inner` lies entirely within `self`.
    pub fn contains(&self, inner: &SourceSpan) -> bool {
        self.file == inner.file
            && (self.line_start, self.col_start) <= (inner.line_start, inner.col_start)
            && (inner.line_end, inner.col_end) <= (self.line_end, self.col_end)
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line_start, self.col_start)
    }
}

#[derive(Clone, Debug)]
pub struct SourceFile {
    pub name: String,
    pub text: String,
}

/// Registry of every file fed to the pipeline, so diagnostics can name them.
#[derive(Clone, Debug, Default)]
pub struct SourceMap {
    files: Vec<SourceFile>,
}

impl SourceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, text: impl Into<String>) -> FileId {
        self.files.push(SourceFile {
            name: name.into(),
            text: text.into(),
        });
        FileId(self.files.len() as u32 - 1)
    }

    pub fn get(&self, id: FileId) -> Option<&SourceFile> {
        self.files.get(id.0 as usize)
    }

    pub fn name(&self, id: FileId) -> &str {
        self.get(id).map(|f| f.name.as_str()).unwrap_or("<unknown>")
    }

    pub fn files(&self) -> impl Iterator<Item = (FileId, &SourceFile)> {
        self.files.iter().enumerate().map(|(i, f)| (FileId(i as u32), f))
    }

    /// The exact text covered by `span`, if the span is in range.
    pub fn snippet(&self, span: &SourceSpan) -> Option<String> {
        let file = self.get(span.file)?;
        let lines: Vec<&str> = file.text.split('\n').collect();
        let mut out = String::new();
        for line_no in span.line_start..=span.line_end {
            let line: Vec<char> = lines
                .get(line_no as usize - 1)?
                .trim_end_matches('\r')
                .chars()
                .collect();
            let from = if line_no == span.line_start {
                span.col_start as usize - 1
            } else {
                0
            };
            let to = if line_no == span.line_end {
                span.col_end as usize
            } else {
                line.len()
            };
            if from > line.len() || to > line.len() || from > to {
                return None;
            }
            out.extend(&line[from..to]);
            if line_no != span.line_end {
                out.push('\n');
            }
        }
        Some(out)
    }
}
