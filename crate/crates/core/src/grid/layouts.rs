//! Layouts shipped with the crate.

use thiserror::Error;

use super::spec::{parse_grid, GridSpec, ParseError};

const BUILTIN: &[(&str, &str)] = &[
    ("fig_sparse_4x4", include_str!("../../layouts/fig_sparse_4x4.grid")),
    ("fig_owsp_4x4", include_str!("../../layouts/fig_owsp_4x4.grid")),
    ("fig_now_2x2", include_str!("../../layouts/fig_now_2x2.grid")),
    ("fig_tradeoff_4x4", include_str!("../../layouts/fig_tradeoff_4x4.grid")),
    ("maze7_sparse", include_str!("../../layouts/maze7_sparse.grid")),
    ("maze7_inter", include_str!("../../layouts/maze7_inter.grid")),
    ("door3", include_str!("../../layouts/door3.grid")),
    ("door4", include_str!("../../layouts/door4.grid")),
];

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("unknown layout `{name}` (known: {known})")]
    Unknown { name: String, known: String },
    #[error("layout `{name}`: {source}")]
    Parse {
        name: String,
        #[source]
        source: ParseError,
    },
}

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(n, _)| *n)
}

/// Raw text of a built-in layout.
pub fn builtin_text(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn builtin_layout(name: &str) -> Result<GridSpec, LayoutError> {
    let text = builtin_text(name).ok_or_else(|| LayoutError::Unknown {
        name: name.to_string(),
        known: builtin_names().collect::<Vec<_>>().join(", "),
    })?;
    parse_grid(text).map_err(|source| LayoutError::Parse { name: name.to_string(), source })
}
