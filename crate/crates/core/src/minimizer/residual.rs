//! Euler-Lagrange residuals of discrete fields.

use serde::{Deserialize, Serialize};

use super::energy::{coupling, dirichlet_grad_at};
use crate::grid::VectorField;
use crate::potential::{Potential, SingularityPolicy};

/// Which form of the forcing term the residual measured at contact nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingForm {
    /// `alpha > 1`: `W_u` is continuous and vanishes on the wells.
    Classical,
    /// `alpha = 1`: at contact nodes `Lap u` must lie in the ball of radius
    /// `G_i(a_i)` (the subdifferential of the cone).
    Characteristic,
    /// `alpha < 1`: the subdifferential at a well is unbounded, so only
    /// nodes off the contact set are constrained.
    OpenSetOnly,
}

impl ForcingForm {
    pub fn for_alpha(alpha: f64) -> Self {
        if alpha > 1.0 {
            ForcingForm::Classical
        } else if alpha == 1.0 {
            ForcingForm::Characteristic
        } else {
            ForcingForm::OpenSetOnly
        }
    }
}

/// Per-node residual `|-Lap_h u + W_u(u)|` on free nodes; contact nodes
/// (`delta <= snap_tol`) report the distance of `Lap_h u` to the
/// subdifferential of `W` at the well. Frozen nodes report 0.
pub fn residual_map(f: &VectorField, p: &Potential, snap_tol: f64) -> Vec<f64> {
    let m = f.m;
    let spec = &f.spec;
    let k = coupling(spec);
    let hn = spec.cell_volume();
    let form = ForcingForm::for_alpha(p.alpha());
    let mut dg = vec![0.0; m];
    let mut wu = vec![0.0; m];
    let mut gg = vec![0.0; m];
    (0..f.num_nodes())
        .map(|idx| {
            if f.dirichlet[idx] {
                return 0.0;
            }
            let lam = hn * spec.node_weight(idx);
            dirichlet_grad_at(f, idx, k, &mut dg);
            let u = f.node(idx);
            let (i, d) = p.well_distance(u);
            let q = dg.iter().map(|v| v * v).sum::<f64>().sqrt() / lam;
            if d <= snap_tol {
                match form {
                    ForcingForm::OpenSetOnly => return 0.0,
                    ForcingForm::Characteristic => {
                        let g = p.local_g_with_grad(p.well(i), i, &mut gg);
                        return (q - g).max(0.0);
                    }
                    ForcingForm::Classical => {}
                }
            }
            p.eval_grad_w(u, SingularityPolicy::SubgradientZero, &mut wu);
            dg.iter()
                .zip(&wu)
                .map(|(a, b)| {
                    let r = a / lam + b;
                    r * r
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Max Euler-Lagrange residual over free nodes and the forcing form used.
pub fn el_residual_with(f: &VectorField, p: &Potential, snap_tol: f64) -> (f64, ForcingForm) {
    let r = residual_map(f, p, snap_tol).into_iter().fold(0.0, f64::max);
    (r, ForcingForm::for_alpha(p.alpha()))
}

pub fn el_residual(f: &VectorField, p: &Potential) -> (f64, ForcingForm) {
    el_residual_with(f, p, super::descent::default_snap_tol(p))
}
