//! Human-facing artifacts: LaTeX rules from the surface syntax and prose
//! pseudocode from the algorithms.

pub mod latex;
pub mod prose;
pub mod symbols;
pub mod wellformed;

pub use latex::{latex_from_sources, render_latex, render_latex_with, LatexBlock, LatexDoc, RenderRefused};
pub use prose::{render_prose, ProseDoc, ProseSection, ProseStyle, Step};
pub use symbols::SymbolTable;
pub use wellformed::{check_well_formed, LatexError};
