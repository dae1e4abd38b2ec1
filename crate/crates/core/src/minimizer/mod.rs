//! Energy evaluation, descent and residuals.

pub mod connect;
pub mod descent;
pub mod energy;
pub mod residual;

use serde::Serialize;

pub use connect::{connect_1d, Connection};
pub use descent::{projected_gradient_norm, radial_prox, MinimizeConfig, Scheme, StopReason};
pub use energy::{energy, energy_with, gradient, PotentialForm};
pub use residual::{el_residual, el_residual_with, ForcingForm};

use crate::error::Result;
use crate::grid::{init_field, prolong, GridSpec, InitMode, VectorField};
use crate::potential::Potential;

#[derive(Debug, Clone, Serialize)]
pub struct MinimizeResult {
    #[serde(skip)]
    pub field: VectorField,
    /// Objective after every accepted iteration (entry 0 is the start).
    pub energy_trace: Vec<f64>,
    pub final_grad_norm: f64,
    pub el_residual_interior: f64,
    pub forcing_form: ForcingForm,
    /// `(iteration, nodes clamped)` per accepted clamping sweep.
    pub snap_count_trace: Vec<(usize, usize)>,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// Leading iterations spent on the smoothed surrogate (their trace
    /// entries are surrogate energies).
    pub smoothing_iterations: usize,
}

/// Descends from `f`; frozen nodes never move.
pub fn minimize(f: &VectorField, p: &Potential, cfg: &MinimizeConfig) -> Result<MinimizeResult> {
    let out = descent::descend(f.clone(), p, cfg)?;
    let (res, form) = el_residual_with(&out.field, p, cfg.snap_tol_for(p));
    Ok(MinimizeResult {
        converged: out.stop_reason == StopReason::Converged,
        field: out.field,
        energy_trace: out.energy_trace,
        final_grad_norm: out.final_grad_norm,
        el_residual_interior: res,
        forcing_form: form,
        snap_count_trace: out.snap_count_trace,
        iterations: out.iterations,
        stop_reason: out.stop_reason,
        smoothing_iterations: out.smoothing_iterations,
    })
}

/// Coarser grids covering the same box, halving the node count per axis
/// until it is at most `coarsest`.
pub fn coarse_ladder(spec: &GridSpec, coarsest: usize) -> Vec<GridSpec> {
    let mut out = vec![spec.clone()];
    loop {
        let last = out.last().unwrap();
        let max_ext = *last.extents.iter().max().unwrap();
        if max_ext <= coarsest || last.extents.iter().any(|&e| e < 9) {
            break;
        }
        let extents: Vec<usize> = last.extents.iter().map(|&e| (e - 1).div_ceil(2) + 1).collect();
        let span = (spec.extents[0] - 1) as f64 * spec.h;
        let h = span / (extents[0] - 1) as f64;
        out.push(GridSpec {
            n: spec.n,
            extents,
            h,
            origin: spec.origin.clone(),
        });
    }
    out.reverse();
    out
}

/// Minimizes on successively finer grids, interpolating each solution as the
/// next starting point. Boundary data always come from `init` on the
/// current grid.
pub fn minimize_cascade(
    p: &Potential,
    spec: &GridSpec,
    init: &InitMode,
    cfg: &MinimizeConfig,
    coarsest: usize,
) -> Result<MinimizeResult> {
    let ladder = coarse_ladder(spec, coarsest);
    let mut current: Option<VectorField> = None;
    let mut total_iters = 0;
    let mut last = None;
    for level in &ladder {
        let base = init_field(level.clone(), p, init)?;
        let start = match &current {
            None => base,
            Some(c) => {
                let mut f = prolong(c, level);
                for idx in 0..f.num_nodes() {
                    if base.dirichlet[idx] {
                        f.node_mut(idx).copy_from_slice(base.node(idx));
                    }
                }
                f.dirichlet.clone_from(&base.dirichlet);
                f
            }
        };
        let r = minimize(&start, p, cfg)?;
        total_iters += r.iterations;
        current = Some(r.field.clone());
        last = Some(r);
    }
    let mut r = last.expect("ladder is never empty");
    r.iterations = total_iters;
    Ok(r)
}
