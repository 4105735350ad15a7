//! ASCII overlays of per-state values on the grid they were compiled from.

use crate::grid::{CellKind, CompiledGrid};

/// Per-cell value: the maximum over every product state at that position.
/// `None` for walls and for cells no reachable state occupies.
pub fn position_values(grid: &CompiledGrid, values: &[f64]) -> Vec<Vec<Option<f64>>> {
    let spec = &grid.spec;
    let mut out = vec![vec![None; spec.width]; spec.height];
    for (i, &v) in values.iter().enumerate() {
        let (x, y) = grid.position_of(crate::mdp::StateId(i));
        let slot = &mut out[y][x];
        *slot = Some(slot.map_or(v, |old: f64| old.max(v)));
    }
    out
}

/// Renders `position_values` as fixed-width columns; walls print as `#`, the goal as
/// `G` and unoccupied floor as `.`.
pub fn render_values(grid: &CompiledGrid, values: &[f64], precision: usize) -> String {
    let cells = position_values(grid, values);
    let spec = &grid.spec;
    let text: Vec<Vec<String>> = (0..spec.height)
        .map(|y| {
            (0..spec.width)
                .map(|x| match (spec.cell(x, y), cells[y][x]) {
                    (CellKind::Wall, _) => "#".to_string(),
                    (CellKind::Goal, _) => "G".to_string(),
                    (_, Some(v)) => format!("{v:.precision$}"),
                    (_, None) => ".".to_string(),
                })
                .collect()
        })
        .collect();
    let width = text.iter().flatten().map(|s| s.len()).max().unwrap_or(1);
    let mut s = String::new();
    for row in text {
        let line: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
        s.push_str(line.join(" ").trim_end());
        s.push('\n');
    }
    s
}
