//! One-dimensional connections between two wells.

use super::descent::MinimizeConfig;
use super::{minimize_cascade, MinimizeResult};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, InitMode};
use crate::potential::Potential;

#[derive(Debug, Clone)]
pub struct Connection {
    pub result: MinimizeResult,
    /// Physical extent of `{delta > snap_tol}`.
    pub support: (f64, f64),
    pub support_width: f64,
    /// Node indices of the first and last interface node.
    pub support_nodes: (usize, usize),
    /// `max |U'^2/2 - W(U)|` away from the two free-boundary nodes.
    pub equipartition_defect: f64,
}

/// Minimizes the 1D energy on `[-half_length, half_length]` with ends fixed
/// at wells `i` and `j` (0-based), solving on a ladder of coarser grids first.
pub fn connect_1d(
    p: &Potential,
    i: usize,
    j: usize,
    half_length: f64,
    nodes: usize,
    cfg: &MinimizeConfig,
) -> Result<Connection> {
    if p.num_wells() < 2 {
        return Err(Error::InvalidArgument("a connection needs two wells".into()));
    }
    if i == j || i >= p.num_wells() || j >= p.num_wells() {
        return Err(Error::InvalidArgument(format!(
            "connection needs two distinct wells, got {i} and {j}"
        )));
    }
    let spec = GridSpec::centered(1, nodes, half_length)?;
    let init = InitMode::Ramp {
        from: p.well(i).to_vec(),
        to: p.well(j).to_vec(),
    };
    let result = minimize_cascade(p, &spec, &init, cfg, 257)?;
    let f = &result.field;
    let snap_tol = cfg.snap_tol_for(p);
    let delta: Vec<f64> = (0..nodes).map(|k| p.well_distance(f.node(k)).1).collect();
    let lo = delta.iter().position(|&d| d > snap_tol);
    let hi = delta.iter().rposition(|&d| d > snap_tol);
    let (lo, hi) = match (lo, hi) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => (0, nodes - 1),
    };
    if p.alpha() < 2.0 && (lo <= 1 || hi + 2 >= nodes) {
        return Err(Error::DomainTooSmall);
    }
    let h = spec.h;
    let x = |k: usize| spec.coords(k)[0];
    let mut defect = 0.0f64;
    for k in 1..nodes - 1 {
        if k + 1 >= lo && k <= lo + 1 || k + 1 >= hi && k <= hi + 1 {
            continue;
        }
        let du2: f64 = f
            .node(k + 1)
            .iter()
            .zip(f.node(k - 1))
            .map(|(a, b)| ((a - b) / (2.0 * h)).powi(2))
            .sum();
        defect = defect.max((0.5 * du2 - p.eval_w(f.node(k))).abs());
    }
    Ok(Connection {
        support: (x(lo), x(hi)),
        support_width: x(hi) - x(lo),
        support_nodes: (lo, hi),
        equipartition_defect: defect,
        result,
    })
}
