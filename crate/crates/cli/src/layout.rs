//! Resolving `--layout NAME` and positional file arguments to compiled grids.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hiplan::grid::{builtin_layout, compile, parse_grid, CompiledGrid, GridSpec};

pub const LAYOUT_DIR_VAR: &str = "HIPLAN_LAYOUT_DIR";

/// Names accepted for convenience in place of a built-in layout name.
fn alias(name: &str) -> &str {
    match name {
        "maze7" => "maze7_inter",
        other => other,
    }
}

/// Where a layout came from, for manifests and CSV columns.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub label: String,
    pub source: String,
    pub spec: GridSpec,
}

pub fn load(name: Option<&str>, file: Option<&Path>) -> Result<Loaded> {
    match (name, file) {
        (Some(_), Some(_)) => bail!("give either --layout or a layout file, not both"),
        (None, None) => bail!("a layout is required (--layout NAME or a file path)"),
        (None, Some(path)) => load_file(path),
        (Some(name), None) => {
            let name = alias(name);
            if let Some(dir) = std::env::var_os(LAYOUT_DIR_VAR) {
                let path = PathBuf::from(dir).join(format!("{name}.grid"));
                if path.is_file() {
                    return load_file(&path);
                }
            }
            let spec = builtin_layout(name)?;
            Ok(Loaded { label: name.to_string(), source: format!("builtin:{name}"), spec })
        }
    }
}

fn load_file(path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = parse_grid(&text).with_context(|| format!("parsing {}", path.display()))?;
    let label = spec
        .name
        .clone()
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "layout".to_string());
    Ok(Loaded { label, source: path.display().to_string(), spec })
}

pub fn compile_loaded(loaded: &Loaded) -> Result<CompiledGrid> {
    compile(&loaded.spec).with_context(|| format!("compiling {}", loaded.label))
}
