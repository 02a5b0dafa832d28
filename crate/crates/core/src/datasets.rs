//! Bundled example data.

use crate::format::TableDocument;

/// Source text of `dysmenorrhea.tbl`.
pub const DYSMENORRHEA_TBL: &str = include_str!("../data/dysmenorrhea.tbl");

/// Three-period crossover study of dysmenorrhea treatments (n = 86).
///
/// Axes are (A, B, C) = (placebo, low dose, high dose); responses are
/// 1 = no relief, 2 = moderate relief, 3 = complete relief.
pub fn dysmenorrhea() -> TableDocument {
    TableDocument::parse(DYSMENORRHEA_TBL).expect("bundled table parses")
}
