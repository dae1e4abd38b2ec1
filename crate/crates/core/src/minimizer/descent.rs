//! Descent schemes for the discrete energy.
//!
//! The default scheme is an accelerated proximal gradient method with
//! momentum restarts and monotone acceptance. Around the nearest well `a_i`
//! each node potential is split as `W = |u - a_i|^alpha G_i(u)`; the
//! Dirichlet term and `|u - a_i|^alpha grad G_i` are stepped explicitly, and
//! the cone `|u - a_i|^alpha` (weighted by the frozen `G_i`) is handled by
//! its radial proximal map. The prox lands nodes exactly on wells, which is
//! how exact contact sets appear on the grid.

use serde::{Deserialize, Serialize};

use super::energy::{
    apply_dirichlet_hessian, coupling, dirichlet_grad_at, dot, energy_change, energy_change_on, energy_with,
    gradient_into, PotentialForm,
};
use crate::error::{Error, Result};
use crate::exec::{chunked_map_sum, Exec};
use crate::grid::VectorField;
use crate::potential::{Potential, SingularityPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    GradientDescentBb,
    SemiImplicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeConfig {
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Defaults to `1e-4 * r0_well` (or `1e-4` for a single well).
    #[serde(default)]
    pub snap_tol: Option<f64>,
    /// Iteration stride of the clamping sweep; 0 disables clamping. Ignored
    /// for `alpha > 1`, where `W` is differentiable at the wells and a clamped
    /// node is pushed straight back out by the gradient.
    #[serde(default = "default_snap_every")]
    pub snap_every: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub policy: SingularityPolicy,
    #[serde(skip)]
    pub exec: Exec,
}

fn default_max_iters() -> usize {
    20_000
}

fn default_snap_every() -> usize {
    25
}

impl MinimizeConfig {
    pub fn new(grad_tol: f64, max_iters: usize) -> Self {
        Self {
            scheme: Scheme::default(),
            max_iters,
            grad_tol,
            snap_tol: None,
            snap_every: default_snap_every(),
            seed: 0,
            policy: SingularityPolicy::SubgradientZero,
            exec: Exec::default(),
        }
    }

    /// Effective clamping stride for `p` (0 when clamping is off).
    pub fn snap_stride(&self, p: &Potential) -> usize {
        if p.alpha() > 1.0 {
            0
        } else {
            self.snap_every
        }
    }

    pub fn snap_tol_for(&self, p: &Potential) -> f64 {
        self.snap_tol.unwrap_or_else(|| default_snap_tol(p))
    }

    pub fn check(&self, p: &Potential) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidArgument("grad_tol must be positive".into()));
        }
        let st = self.snap_tol_for(p);
        if !(st >= 0.0) || (p.r0_well().is_finite() && st >= p.r0_well() / 10.0) {
            return Err(Error::InvalidArgument(format!(
                "snap_tol must lie in [0, r0_well/10), got {st}"
            )));
        }
        self.policy.check()
    }
}

pub fn default_snap_tol(p: &Potential) -> f64 {
    1e-4 * if p.r0_well().is_finite() { p.r0_well() } else { 1.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIters,
    /// No step of any admissible length decreases the energy.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub field: VectorField,
    pub energy_trace: Vec<f64>,
    /// `(iteration, nodes clamped)` per accepted clamping sweep.
    pub snap_count_trace: Vec<(usize, usize)>,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub stop_reason: StopReason,
    /// Iterations spent on the smoothed surrogate before the exact polish.
    pub smoothing_iterations: usize,
}

/// Minimizer of `(rho - s)^2 / 2 + c rho^alpha` over `rho >= 0`.
pub fn radial_prox(s: f64, c: f64, alpha: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if c <= 0.0 {
        return s;
    }
    if alpha == 1.0 {
        return (s - c).max(0.0);
    }
    if alpha == 2.0 {
        return s / (1.0 + 2.0 * c);
    }
    if alpha == 1.5 {
        // quadratic in sqrt(rho)
        let b = 0.75 * c;
        let t = s / (b + (b * b + s).sqrt());
        return t * t;
    }
    // roots of h(rho) = rho + c alpha rho^(alpha-1) - s
    let h = |r: f64| r + c * alpha * pow_alpha(r, alpha - 1.0) - s;
    let dh = |r: f64| 1.0 + c * alpha * (alpha - 1.0) * pow_alpha(r, alpha - 2.0);
    let solve = |mut lo: f64, mut hi: f64| -> f64 {
        let mut r = 0.5 * (lo + hi);
        for _ in 0..200 {
            let v = h(r);
            if v == 0.0 {
                break;
            }
            if v > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let step = r - v / dh(r);
            r = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-15 * s {
                break;
            }
        }
        r
    };
    if alpha > 1.0 {
        return solve(0.0, s);
    }
    // alpha < 1: h is convex with its minimum at rho_star
    let rho_star = (c * alpha * (1.0 - alpha)).powf(1.0 / (2.0 - alpha));
    if rho_star >= s || h(rho_star) > 0.0 {
        return 0.0;
    }
    let r = solve(rho_star, s);
    let phi = |x: f64| 0.5 * (x - s) * (x - s) + c * pow_alpha(x, alpha);
    if phi(r) < phi(0.0) {
        r
    } else {
        0.0
    }
}

/// Per-iteration data of the explicit part of the split, stored for the
/// nodes of an active list in list order.
#[derive(Default)]
struct Linearization {
    /// Explicit gradient `grad D + lambda |u-a|^alpha grad G`.
    smooth: Vec<f64>,
    /// Nearest well per node.
    well: Vec<u32>,
    /// `lambda_v G_i(u_v)` per node.
    weight: Vec<f64>,
}

use crate::potential::powr as pow_alpha;

/// A free node sitting exactly on a well whose neighbours all sit on the
/// same well. Such a node has zero explicit gradient and is a fixed point of
/// the prox step for every step length.
fn is_quiescent(x: &VectorField, p: &Potential, idx: usize) -> bool {
    let u = x.node(idx);
    let (i, d) = p.well_distance(u);
    if d != 0.0 || u != p.well(i) {
        return false;
    }
    let mut all = true;
    super::energy::for_each_edge(&x.spec, idx, |nb, _| all &= x.node(nb) == u);
    all
}

/// Free nodes that are not quiescent, in increasing order.
fn active_nodes(x: &VectorField, p: &Potential) -> Vec<usize> {
    (0..x.num_nodes())
        .filter(|&idx| !x.dirichlet[idx] && !is_quiescent(x, p, idx))
        .collect()
}

/// Active list after a step that moved only nodes of `prev`: a node outside
/// `prev` can only wake up through a moved neighbour.
fn next_active(x: &VectorField, p: &Potential, prev: &[usize]) -> Vec<usize> {
    let total = x.num_nodes();
    let mut cand = if prev.len() * 16 >= total {
        // dense: mark instead of sorting
        let mut mark = vec![false; total];
        for &idx in prev {
            mark[idx] = true;
            super::energy::for_each_edge(&x.spec, idx, |nb, _| mark[nb] = true);
        }
        (0..total).filter(|&i| mark[i]).collect::<Vec<_>>()
    } else {
        let mut cand = Vec::with_capacity(prev.len() * 3);
        for &idx in prev {
            cand.push(idx);
            super::energy::for_each_edge(&x.spec, idx, |nb, _| cand.push(nb));
        }
        cand.sort_unstable();
        cand.dedup();
        cand
    };
    cand.retain(|&idx| !x.dirichlet[idx] && !is_quiescent(x, p, idx));
    cand
}

/// Fills `lin` for the listed nodes and returns their max projected-gradient
/// norm.
fn linearize(x: &VectorField, p: &Potential, exec: Exec, nodes: &[usize], lin: &mut Linearization) -> f64 {
    let spec = &x.spec;
    let m = x.m;
    let k = coupling(spec);
    let hn = spec.cell_volume();
    let alpha = p.alpha();
    // per node: smooth gradient (m), well, lambda G, projected-gradient norm
    let stride = m + 3;
    let mut packed = vec![0.0; nodes.len() * stride];
    chunked_map_sum(exec, &mut packed, stride, |r, chunk| {
        let mut dg = vec![0.0; m];
        let mut gg = vec![0.0; m];
        for (local, &idx) in nodes[r].iter().enumerate() {
            let o = &mut chunk[local * stride..(local + 1) * stride];
            if x.dirichlet[idx] {
                o.fill(0.0);
                continue;
            }
            let u = x.node(idx);
            let (i, d) = p.well_distance(u);
            let a = p.well(i);
            let lam = hn * spec.node_weight(idx);
            dirichlet_grad_at(x, idx, k, &mut dg);
            let g_loc = p.local_g_with_grad(u, i, &mut gg);
            let phi = pow_alpha(d, alpha);
            let cone = if d > 0.0 {
                lam * g_loc * alpha * pow_alpha(d, alpha - 2.0)
            } else {
                0.0
            };
            let mut pg2 = 0.0;
            let mut dg2 = 0.0;
            for c in 0..m {
                o[c] = dg[c] + lam * phi * gg[c];
                dg2 += dg[c] * dg[c];
                let full = o[c] + cone * (u[c] - a[c]);
                pg2 += full * full;
            }
            let pg = if d > 0.0 {
                pg2.sqrt()
            } else if alpha < 1.0 {
                0.0
            } else if alpha == 1.0 {
                (dg2.sqrt() - lam * g_loc).max(0.0)
            } else {
                dg2.sqrt()
            };
            o[m] = i as f64;
            o[m + 1] = lam * g_loc;
            o[m + 2] = pg;
        }
        0.0
    });
    lin.smooth.resize(nodes.len() * m, 0.0);
    lin.well.resize(nodes.len(), 0);
    lin.weight.resize(nodes.len(), 0.0);
    let mut maxnorm = 0.0f64;
    for (pos, o) in packed.chunks_exact(stride).enumerate() {
        lin.smooth[pos * m..(pos + 1) * m].copy_from_slice(&o[..m]);
        lin.well[pos] = o[m] as u32;
        lin.weight[pos] = o[m + 1];
        maxnorm = maxnorm.max(o[m + 2]);
    }
    maxnorm
}

/// `z = prox(x - tau * smooth)` on the listed nodes.
fn prox_step(
    x: &VectorField,
    p: &Potential,
    lin: &Linearization,
    nodes: &[usize],
    tau: f64,
    exec: Exec,
    buf: &mut Vec<f64>,
    z: &mut VectorField,
) {
    let m = x.m;
    let alpha = p.alpha();
    buf.resize(nodes.len() * m, 0.0);
    chunked_map_sum(exec, buf, m, |r, chunk| {
        let mut y = vec![0.0; m];
        let start = r.start;
        for (local, &idx) in nodes[r].iter().enumerate() {
            let pos = start + local;
            let o = &mut chunk[local * m..(local + 1) * m];
            let u = x.node(idx);
            if x.dirichlet[idx] {
                o.copy_from_slice(u);
                continue;
            }
            let a = p.well(lin.well[pos] as usize);
            for c in 0..m {
                y[c] = u[c] - tau * lin.smooth[pos * m + c] - a[c];
            }
            let s = crate::potential::robust_norm(y.iter().copied());
            let rho = radial_prox(s, tau * lin.weight[pos], alpha);
            if rho == 0.0 {
                o.copy_from_slice(a);
            } else {
                let f = rho / s;
                for c in 0..m {
                    o[c] = a[c] + f * y[c];
                }
            }
        }
        0.0
    });
    for (pos, &idx) in nodes.iter().enumerate() {
        z.node_mut(idx).copy_from_slice(&buf[pos * m..(pos + 1) * m]);
    }
}

/// Max per-node norm of the projected gradient.
pub fn projected_gradient_norm(f: &VectorField, p: &Potential, exec: Exec) -> f64 {
    let all: Vec<usize> = (0..f.num_nodes()).collect();
    linearize(f, p, exec, &all, &mut Linearization::default())
}

/// Clamp listed free nodes with `0 < delta < snap_tol` to their wells if the
/// energy does not go up; otherwise try only the nodes whose local energy
/// change is negative. Returns the number of nodes clamped.
fn snap_sweep(
    x: &mut VectorField,
    p: &Potential,
    form: PotentialForm,
    snap_tol: f64,
    nodes: &[usize],
    energy: &mut f64,
    exec: Exec,
) -> usize {
    let mut cands: Vec<(usize, usize)> = Vec::new();
    for &idx in nodes {
        if x.dirichlet[idx] {
            continue;
        }
        let (i, d) = p.well_distance(x.node(idx));
        if d > 0.0 && d < snap_tol {
            cands.push((idx, i));
        }
    }
    if cands.is_empty() {
        return 0;
    }
    let k = 0.5 * coupling(&x.spec);
    let hn = x.spec.cell_volume();
    let try_set = |x: &mut VectorField, set: &[(usize, usize)], energy: &mut f64| -> bool {
        let before = x.clone();
        for &(idx, i) in set {
            x.node_mut(idx).copy_from_slice(p.well(i));
        }
        let list: Vec<usize> = set.iter().map(|&(idx, _)| idx).collect();
        let de = energy_change_on(&before, x, p, form, exec, &list);
        if de <= 0.0 {
            *energy += de;
            true
        } else {
            *x = before;
            false
        }
    };
    if try_set(x, &cands, energy) {
        return cands.len();
    }
    let local: Vec<(usize, usize)> = cands
        .iter()
        .copied()
        .filter(|&(idx, i)| {
            let u = x.node(idx);
            let a = p.well(i);
            let mut de = -hn * x.spec.node_weight(idx) * form.eval(p, u);
            super::energy::for_each_edge(&x.spec, idx, |nb, w| {
                let b = x.node(nb);
                let before: f64 = u.iter().zip(b).map(|(s, t)| (s - t) * (s - t)).sum();
                let after: f64 = a.iter().zip(b).map(|(s, t)| (s - t) * (s - t)).sum();
                de += k * w * (after - before);
            });
            de < 0.0
        })
        .collect();
    if !local.is_empty() && local.len() < cands.len() && try_set(x, &local, energy) {
        return local.len();
    }
    0
}

const SIGMA: f64 = 1e-4;
/// Largest energy increase tolerated on an accepted step.
pub const LS_SLACK: f64 = 1e-12;

fn sq_dist_on(exec: Exec, a: &VectorField, b: &VectorField, nodes: &[usize]) -> f64 {
    crate::exec::chunked_sum(exec, nodes.len(), |r| {
        nodes[r]
            .iter()
            .map(|&idx| {
                a.node(idx)
                    .iter()
                    .zip(b.node(idx))
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
            })
            .sum()
    })
}

fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (_, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

fn copy_nodes(dst: &mut VectorField, src: &VectorField, nodes: &[usize]) {
    let m = src.m;
    for &idx in nodes {
        dst.values[idx * m..(idx + 1) * m].copy_from_slice(&src.values[idx * m..(idx + 1) * m]);
    }
}

/// Accelerated proximal gradient with momentum restarts. A step from the
/// extrapolated point is kept only if it decreases the energy; otherwise the
/// momentum is dropped and a backtracked plain prox step is taken instead.
fn prox_apg(
    mut x: VectorField,
    p: &Potential,
    cfg: &MinimizeConfig,
    max_iters: usize,
    out: &mut DescentOutcome,
) -> Result<VectorField> {
    let exec = cfg.exec;
    let form = PotentialForm::Exact;
    let snap_tol = cfg.snap_tol_for(p);
    let stride = cfg.snap_stride(p);
    let m = x.m;
    let tau0 = x.spec.h.powi(2 - x.spec.n as i32) / (4.0 * x.spec.n as f64);
    let mut tau = tau0;
    let mut e = energy_with(&x, p, form, exec);
    if !e.is_finite() {
        return Err(Error::NonFiniteEnergy {
            iteration: out.iterations,
        });
    }
    if out.energy_trace.is_empty() {
        out.energy_trace.push(e);
    }
    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut z = x.clone();
    // every node that differs between `x` and `x_prev` is in `prev`
    let mut prev = active_nodes(&x, p);
    let mut lin_x = Linearization::default();
    let mut lin_y = Linearization::default();
    let mut buf = Vec::new();
    let mut act_x = prev.clone();
    let mut pg = linearize(&x, p, exec, &act_x, &mut lin_x);
    let mut t_mom = 1.0f64;
    let mut iter = 0;
    out.stop_reason = StopReason::MaxIters;
    while iter < max_iters {
        if pg <= cfg.grad_tol {
            out.stop_reason = StopReason::Converged;
            break;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_mom * t_mom).sqrt());
        let beta = (t_mom - 1.0) / t_next;
        let (work, lin) = if beta > 0.0 {
            for &idx in &prev {
                for c in 0..m {
                    let k = idx * m + c;
                    y.values[k] = x.values[k] + beta * (x.values[k] - x_prev.values[k]);
                }
            }
            let work = next_active(&y, p, &merge_sorted(&act_x, &prev));
            linearize(&y, p, exec, &work, &mut lin_y);
            (work, &lin_y)
        } else {
            (act_x.clone(), &lin_x)
        };
        let touched = merge_sorted(&work, &prev);
        let src = if beta > 0.0 { &y } else { &x };
        copy_nodes(&mut z, src, &touched);
        prox_step(src, p, lin, &work, tau, exec, &mut buf, &mut z);
        let de = energy_change_on(&x, &z, p, form, exec, &touched);
        if !de.is_finite() {
            return Err(Error::NonFiniteEnergy {
                iteration: out.iterations + iter + 1,
            });
        }
        let step2 = sq_dist_on(exec, &z, &x, &touched);
        let ok = step2 > 0.0 && de <= -SIGMA / (2.0 * tau) * step2 + LS_SLACK;
        if !ok {
            copy_nodes(&mut y, &x, &touched);
            copy_nodes(&mut z, &x, &touched);
            if beta > 0.0 {
                t_mom = 1.0;
                continue;
            }
            if step2 == 0.0 {
                out.stop_reason = StopReason::Stalled;
                break;
            }
            tau *= 0.5;
            if tau < 1e-12 * tau0 {
                out.stop_reason = StopReason::Stalled;
                break;
            }
            continue;
        }
        iter += 1;
        e += de;
        // gradient restart: the step points against the last displacement
        let mut align = 0.0;
        for &idx in &touched {
            for c in 0..m {
                let k = idx * m + c;
                align += (src.values[k] - z.values[k]) * (z.values[k] - x.values[k]);
            }
        }
        copy_nodes(&mut x_prev, &x, &touched);
        copy_nodes(&mut x, &z, &touched);
        copy_nodes(&mut y, &x, &touched);
        t_mom = if align > 0.0 { 1.0 } else { t_next };
        act_x = next_active(&x, p, &touched);
        prev = touched;
        pg = linearize(&x, p, exec, &act_x, &mut lin_x);
        if stride > 0 && snap_tol > 0.0 && iter % stride == 0 {
            let count = snap_sweep(&mut x, p, form, snap_tol, &act_x, &mut e, exec);
            if count > 0 {
                out.snap_count_trace.push((out.iterations + iter, count));
                prev = merge_sorted(&prev, &act_x);
                copy_nodes(&mut x_prev, &x, &prev);
                copy_nodes(&mut y, &x, &prev);
                copy_nodes(&mut z, &x, &prev);
                act_x = next_active(&x, p, &prev);
                pg = linearize(&x, p, exec, &act_x, &mut lin_x);
                t_mom = 1.0;
            }
        }
        out.energy_trace.push(e);
    }
    out.iterations += iter;
    out.final_grad_norm = pg;
    Ok(x)
}

/// Plain BB gradient descent on the smoothed surrogate.
fn smooth_bb(
    mut x: VectorField,
    p: &Potential,
    cfg: &MinimizeConfig,
    eps: f64,
    max_iters: usize,
    out: &mut DescentOutcome,
) -> Result<VectorField> {
    let exec = cfg.exec;
    let policy = SingularityPolicy::EpsilonSmoothing { eps_reg: eps };
    let form = PotentialForm::Smoothed(eps);
    let tau0 = x.spec.h.powi(2 - x.spec.n as i32) / (4.0 * x.spec.n as f64);
    let (tau_lo, tau_hi) = (1e-6 * tau0, 1e6 * tau0);
    let len = x.values.len();
    let mut g = vec![0.0; len];
    let mut g_prev = vec![0.0; len];
    let mut z = x.clone();
    let mut e = energy_with(&x, p, form, exec);
    out.energy_trace.push(e);
    let node_max = |g: &[f64], m: usize| {
        g.chunks(m)
            .map(|v| v.iter().map(|a| a * a).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    };
    gradient_into(&x, p, policy, exec, &mut g);
    let mut tau = tau0;
    let mut iter = 0;
    while iter < max_iters && node_max(&g, x.m) > cfg.grad_tol {
        let mut t = tau;
        let accepted = loop {
            for k in 0..len {
                z.values[k] = x.values[k] - t * g[k];
            }
            let ez = e + energy_change(&x, &z, p, form, exec);
            if !ez.is_finite() {
                return Err(Error::NonFiniteEnergy { iteration: iter + 1 });
            }
            let g2 = dot(exec, &g, &g, x.m);
            if ez <= e - SIGMA * t * g2 + LS_SLACK {
                break Some(ez);
            }
            t *= 0.5;
            if t < 1e-6 * tau_lo {
                break None;
            }
        };
        let Some(ez) = accepted else { break };
        iter += 1;
        std::mem::swap(&mut x, &mut z);
        e = ez;
        out.energy_trace.push(e);
        std::mem::swap(&mut g, &mut g_prev);
        gradient_into(&x, p, policy, exec, &mut g);
        let mut ss = 0.0;
        let mut sy = 0.0;
        for k in 0..len {
            let s = x.values[k] - z.values[k];
            ss += s * s;
            sy += s * (g[k] - g_prev[k]);
        }
        tau = if sy > 0.0 {
            (ss / sy).clamp(tau_lo, tau_hi)
        } else {
            (2.0 * t).min(tau_hi)
        };
    }
    out.smoothing_iterations = iter;
    out.iterations += iter;
    Ok(x)
}

/// Conjugate gradients for `(I + tau A) d = rhs` on free nodes.
fn cg_shifted(f: &VectorField, tau: f64, rhs: &[f64], exec: Exec, tol: f64) -> Vec<f64> {
    let m = f.m;
    let len = rhs.len();
    let mut d = vec![0.0; len];
    let mut r = rhs.to_vec();
    let mut q = r.clone();
    let mut aq = vec![0.0; len];
    let mut rr = dot(exec, &r, &r, m);
    let stop = tol * tol * rr.max(f64::MIN_POSITIVE);
    for _ in 0..len.max(10) {
        if rr <= stop {
            break;
        }
        apply_dirichlet_hessian(f, &q, exec, &mut aq);
        for k in 0..len {
            aq[k] = q[k] + tau * aq[k];
        }
        let qaq = dot(exec, &q, &aq, m);
        if qaq <= 0.0 {
            break;
        }
        let a = rr / qaq;
        for k in 0..len {
            d[k] += a * q[k];
            r[k] -= a * aq[k];
        }
        let rr_new = dot(exec, &r, &r, m);
        let b = rr_new / rr;
        rr = rr_new;
        for k in 0..len {
            q[k] = r[k] + b * q[k];
        }
    }
    d
}

/// Linearly implicit scheme: `(I + tau A)(x+ - x) = -tau grad J(x)`.
fn semi_implicit(
    mut x: VectorField,
    p: &Potential,
    cfg: &MinimizeConfig,
    max_iters: usize,
    out: &mut DescentOutcome,
) -> Result<VectorField> {
    let exec = cfg.exec;
    let form = PotentialForm::Exact;
    let snap_tol = cfg.snap_tol_for(p);
    let stride = cfg.snap_stride(p);
    let len = x.values.len();
    let tau0 = x.spec.h.powi(2 - x.spec.n as i32) / (4.0 * x.spec.n as f64);
    let mut tau = 10.0 * tau0;
    let mut g = vec![0.0; len];
    let mut z = x.clone();
    let mut e = energy_with(&x, p, form, exec);
    if !e.is_finite() {
        return Err(Error::NonFiniteEnergy { iteration: 0 });
    }
    out.energy_trace.push(e);
    let mut pg = projected_gradient_norm(&x, p, exec);
    let mut iter = 0;
    out.stop_reason = StopReason::MaxIters;
    while iter < max_iters {
        if pg <= cfg.grad_tol {
            out.stop_reason = StopReason::Converged;
            break;
        }
        gradient_into(&x, p, cfg.policy, exec, &mut g);
        let mut t = tau;
        let accepted = loop {
            let rhs: Vec<f64> = g.iter().map(|v| -t * v).collect();
            let d = cg_shifted(&x, t, &rhs, exec, 1e-10);
            let gd = dot(exec, &g, &d, x.m);
            for k in 0..len {
                z.values[k] = x.values[k] + d[k];
            }
            let ez = e + energy_change(&x, &z, p, form, exec);
            if !ez.is_finite() {
                return Err(Error::NonFiniteEnergy { iteration: iter + 1 });
            }
            if gd < 0.0 && ez <= e + SIGMA * gd + LS_SLACK {
                break Some(ez);
            }
            t *= 0.5;
            if t < 1e-12 * tau0 {
                break None;
            }
        };
        let Some(ez) = accepted else {
            out.stop_reason = StopReason::Stalled;
            break;
        };
        iter += 1;
        std::mem::swap(&mut x, &mut z);
        e = ez;
        tau = (2.0 * t).min(1e6 * tau0);
        if stride > 0 && snap_tol > 0.0 && iter % stride == 0 {
            let all: Vec<usize> = (0..x.num_nodes()).collect();
            let count = snap_sweep(&mut x, p, form, snap_tol, &all, &mut e, exec);
            if count > 0 {
                out.snap_count_trace.push((iter, count));
            }
        }
        out.energy_trace.push(e);
        pg = projected_gradient_norm(&x, p, exec);
    }
    out.iterations += iter;
    out.final_grad_norm = pg;
    Ok(x)
}

/// Runs the configured scheme from `f`.
pub fn descend(f: VectorField, p: &Potential, cfg: &MinimizeConfig) -> Result<DescentOutcome> {
    cfg.check(p)?;
    if f.m != p.m() {
        return Err(Error::InvalidArgument(format!(
            "field has {} components but the wells have {}",
            f.m,
            p.m()
        )));
    }
    let mut out = DescentOutcome {
        field: f.clone(),
        energy_trace: Vec::new(),
        snap_count_trace: Vec::new(),
        iterations: 0,
        final_grad_norm: f64::INFINITY,
        stop_reason: StopReason::MaxIters,
        smoothing_iterations: 0,
    };
    let field = match (cfg.scheme, cfg.policy) {
        (Scheme::SemiImplicit, _) => semi_implicit(f, p, cfg, cfg.max_iters, &mut out)?,
        (Scheme::GradientDescentBb, SingularityPolicy::EpsilonSmoothing { eps_reg }) => {
            let x = smooth_bb(f, p, cfg, eps_reg, cfg.max_iters / 2, &mut out)?;
            let left = cfg.max_iters - out.iterations;
            prox_apg(x, p, cfg, left, &mut out)?
        }
        (Scheme::GradientDescentBb, SingularityPolicy::SubgradientZero) => {
            prox_apg(f, p, cfg, cfg.max_iters, &mut out)?
        }
    };
    out.field = field;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_prox(s: f64, c: f64, alpha: f64) -> f64 {
        let n = 200_000;
        let mut best = (0.0, 0.5 * s * s);
        for k in 0..=n {
            let r = s * k as f64 / n as f64;
            let v = 0.5 * (r - s) * (r - s) + c * r.powf(alpha);
            if v < best.1 {
                best = (r, v);
            }
        }
        best.0
    }

    #[test]
    fn prox_matches_brute_force() {
        for &alpha in &[0.5, 0.8, 1.0, 1.3, 1.5, 2.0] {
            for &s in &[0.01, 0.3, 1.0, 2.5] {
                for &c in &[0.0, 0.05, 0.4, 1.5] {
                    let r = radial_prox(s, c, alpha);
                    let b = brute_prox(s, c, alpha);
                    let phi = |x: f64| 0.5 * (x - s) * (x - s) + c * pow_alpha(x, alpha);
                    assert!(phi(r) <= phi(b) + 1e-9, "alpha {alpha} s {s} c {c}: {r} vs {b}");
                }
            }
        }
    }

    #[test]
    fn prox_cone_is_soft_threshold() {
        assert_eq!(radial_prox(1.0, 0.25, 1.0), 0.75);
        assert_eq!(radial_prox(0.2, 0.25, 1.0), 0.0);
    }
}
