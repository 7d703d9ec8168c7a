//! Shared setup helpers for the criterion benchmarks.

use henle_core::grid::Grid1D;
use henle_core::{presets, Params, ProblemData};

/// Desk-scale setup: unit parameters at the given cell count with the smooth
/// bump data.
pub fn desk(n: usize, eps: f64) -> (Params, Grid1D, ProblemData) {
    let p = Params { eps, ..Params::default() };
    let g = Grid1D::new(&p, n).expect("valid desk grid");
    let d = presets::bump(p.length, p.t_final);
    (p, g, d)
}
