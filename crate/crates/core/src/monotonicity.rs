//! Weiss energy, its radial trace, growth probes at free-boundary points and
//! the non-degeneracy constants.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{interpolate, GridSpec, VectorField};
use crate::interface::{scaling_fit, Fit};
use crate::potential::Potential;

/// Samples on the circle for boundary integrals in 2D.
pub const CIRCLE_SAMPLES: usize = 64;

/// Ratio of consecutive radii in the default ladders.
pub fn ladder_ratio() -> f64 {
    2f64.powf(0.25)
}

/// Geometric ladder `r_min * 2^(j/4)` up to `r_max`.
pub fn radius_ladder(r_min: f64, r_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = r_min;
    while r <= r_max * (1.0 + 1e-12) {
        out.push(r);
        r *= ladder_ratio();
    }
    out
}

/// Node-centered gradient with one-sided differences on the outer ring.
/// Layout per node: `n` blocks of `m` components.
fn grad_field(f: &VectorField) -> Vec<f64> {
    let spec = &f.spec;
    let (m, n) = (f.m, spec.n);
    let mut out = vec![0.0; f.num_nodes() * n * m];
    for idx in 0..f.num_nodes() {
        let (i, j) = spec.unflatten(idx);
        for a in 0..n {
            let (k, e) = if a == 0 {
                (i, spec.extents[0])
            } else {
                (j, spec.extents[1])
            };
            let at = |kk: usize| {
                if a == 0 {
                    spec.flatten(kk, j)
                } else {
                    spec.flatten(i, kk)
                }
            };
            let (lo, hi) = (k.saturating_sub(1), (k + 1).min(e - 1));
            let span = (hi - lo) as f64 * spec.h;
            let (ul, uh) = (f.node(at(lo)), f.node(at(hi)));
            for c in 0..m {
                out[(idx * n + a) * m + c] = if span > 0.0 { (uh[c] - ul[c]) / span } else { 0.0 };
            }
        }
    }
    out
}

/// Field, its node gradients and a reference well for ball integrals.
struct Probe<'a> {
    f: &'a VectorField,
    p: &'a Potential,
    grad: VectorField,
}

impl<'a> Probe<'a> {
    fn new(f: &'a VectorField, p: &'a Potential) -> Self {
        let nm = f.spec.n * f.m;
        let grad = VectorField {
            spec: f.spec.clone(),
            m: nm,
            values: grad_field(f),
            dirichlet: vec![false; f.num_nodes()],
        };
        Self { f, p, grad }
    }

    fn spec(&self) -> &GridSpec {
        &self.f.spec
    }

    fn grad_sq(&self, idx: usize) -> f64 {
        self.grad.node(idx).iter().map(|v| v * v).sum()
    }

    fn check_ball(&self, x0: &[f64], r: f64) -> Result<()> {
        if !(r > 0.0) || r > self.spec().inner_radius(x0) + 1e-9 * self.spec().h {
            return Err(Error::BallOutOfGrid { radius: r });
        }
        Ok(())
    }

    /// `sum w(x) phi(idx)` with the ramp weight
    /// `clamp((r - |x - x0|)/h + 1/2, 0, 1)` times `h^n`, a cell-fraction
    /// estimate of the ball indicator.
    fn ball_sum(&self, x0: &[f64], r: f64, mut phi: impl FnMut(usize) -> f64) -> f64 {
        let spec = self.spec();
        let h = spec.h;
        let mut range = [(0usize, 0usize); 2];
        for a in 0..spec.n {
            let lo = ((x0[a] - r - h - spec.origin[a]) / h).floor().max(0.0) as usize;
            let hi = (((x0[a] + r + h - spec.origin[a]) / h).ceil() as usize).min(spec.extents[a] - 1);
            range[a] = (lo, hi);
        }
        if spec.n == 1 {
            range[1] = (0, 0);
        }
        let mut s = 0.0;
        for i in range[0].0..=range[0].1 {
            for j in range[1].0..=range[1].1 {
                let idx = spec.flatten(i, j);
                let x = spec.coords(idx);
                let d = (0..spec.n).map(|a| (x[a] - x0[a]).powi(2)).sum::<f64>().sqrt();
                let w = ((r - d) / h + 0.5).clamp(0.0, 1.0);
                if w > 0.0 {
                    s += w * phi(idx);
                }
            }
        }
        s * spec.cell_volume()
    }

    /// Points on `dB_r(x0)` with their quadrature weights.
    fn sphere_points(&self, x0: &[f64], r: f64) -> Vec<([f64; 2], f64)> {
        if self.spec().n == 1 {
            vec![([x0[0] - r, 0.0], 1.0), ([x0[0] + r, 0.0], 1.0)]
        } else {
            let w = 2.0 * std::f64::consts::PI * r / CIRCLE_SAMPLES as f64;
            (0..CIRCLE_SAMPLES)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / CIRCLE_SAMPLES as f64;
                    ([x0[0] + r * t.cos(), x0[1] + r * t.sin()], w)
                })
                .collect()
        }
    }

    fn value_at(&self, x: &[f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.f.m];
        interpolate(self.f, &x[..self.spec().n], &mut out);
        out
    }

    /// Interpolated gradient, `n` blocks of `m`.
    fn grad_at(&self, x: &[f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.grad.m];
        interpolate(&self.grad, &x[..self.spec().n], &mut out);
        out
    }

    fn reference_well(&self, x0: &[f64]) -> usize {
        let u = self.value_at(&pad(x0));
        self.p.well_distance(&u).0
    }
}

fn pad(x: &[f64]) -> [f64; 2] {
    [x[0], x.get(1).copied().unwrap_or(0.0)]
}

fn sq_dist(u: &[f64], a: &[f64]) -> f64 {
    u.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `int_{B_r(x0)} 1/2 |grad u|^2 + W(u)` by ramp-weighted node quadrature.
pub fn ball_energy(f: &VectorField, p: &Potential, x0: &[f64], r: f64) -> Result<f64> {
    let pr = Probe::new(f, p);
    pr.check_ball(x0, r)?;
    Ok(pr.ball_sum(x0, r, |idx| 0.5 * pr.grad_sq(idx) + p.eval_w(f.node(idx))))
}

/// Volume and boundary parts of the Weiss energy.
struct WeissParts {
    volume: f64,
    boundary: f64,
}

fn weiss_parts(pr: &Probe, x0: &[f64], r: f64, well: usize) -> Result<WeissParts> {
    pr.check_ball(x0, r)?;
    let n = pr.spec().n as f64;
    let kappa = pr.p.kappa();
    let a = pr.p.well(well);
    let e = pr.ball_sum(x0, r, |idx| 0.5 * pr.grad_sq(idx) + pr.p.eval_w(pr.f.node(idx)));
    let b: f64 = pr
        .sphere_points(x0, r)
        .iter()
        .map(|(x, w)| w * sq_dist(&pr.value_at(x), a))
        .sum();
    Ok(WeissParts {
        volume: e / r.powf(n + 2.0 * kappa - 2.0),
        boundary: 0.5 * kappa * b / r.powf(n + 2.0 * kappa - 1.0),
    })
}

/// Weiss energy
/// `r^-(n+2k-2) int_{B_r} (1/2|grad u|^2 + W(u)) - k/2 r^-(n+2k-1) int_{dB_r} |u - a_i|^2`
/// with `k = 2/(2 - alpha)` and `a_i` the well nearest to `u(x0)`.
pub fn weiss_energy(f: &VectorField, p: &Potential, x0: &[f64], r: f64) -> Result<f64> {
    let pr = Probe::new(f, p);
    let parts = weiss_parts(&pr, x0, r, pr.reference_well(x0))?;
    Ok(parts.volume - parts.boundary)
}

/// Right side of the Weiss derivative identity,
/// `r int_{dB_1} |d u_r/dr|^2 + k r^(k-1) int_{B_1} D_u G . u_r |u_r|^alpha`,
/// by quadrature. `G` is the factor multiplying `|u - a_i|^alpha` in `W`.
pub fn weiss_derivative(f: &VectorField, p: &Potential, x0: &[f64], r: f64) -> Result<f64> {
    let pr = Probe::new(f, p);
    pr.check_ball(x0, r)?;
    let well = pr.reference_well(x0);
    Ok(derivative_with(&pr, x0, r, well))
}

fn derivative_with(pr: &Probe, x0: &[f64], r: f64, well: usize) -> f64 {
    let spec = pr.spec();
    let (n, m) = (spec.n, pr.f.m);
    let kappa = pr.p.kappa();
    let alpha = pr.p.alpha();
    let a = pr.p.well(well);
    // boundary: r^(2-n-2k) int_{dB_r} |d_nu u - k (u - a)/r|^2
    let mut bnd = 0.0;
    for (x, w) in pr.sphere_points(x0, r) {
        let u = pr.value_at(&x);
        let g = pr.grad_at(&x);
        let nu: Vec<f64> = (0..n).map(|c| (x[c] - x0[c]) / r).collect();
        let mut s = 0.0;
        for c in 0..m {
            let dnu: f64 = (0..n).map(|d| nu[d] * g[d * m + c]).sum();
            let v = dnu - kappa * (u[c] - a[c]) / r;
            s += v * v;
        }
        bnd += w * s;
    }
    let term1 = r.powf(2.0 - n as f64 - 2.0 * kappa) * bnd;
    // volume: k r^(k-1) r^-n r^-k(1+alpha) int_{B_r} D_u G(u).(u-a) |u-a|^alpha
    let mut gg = vec![0.0; m];
    let vol = pr.ball_sum(x0, r, |idx| {
        let u = pr.f.node(idx);
        pr.p.local_g_with_grad(u, well, &mut gg);
        let d = sq_dist(u, a).sqrt();
        let dot: f64 = (0..m).map(|c| gg[c] * (u[c] - a[c])).sum();
        dot * d.powf(alpha)
    });
    let term2 = kappa * r.powf(kappa - 1.0 - n as f64 - kappa * (1.0 + alpha)) * vol;
    term1 + term2
}

/// Bound on the `D_u G` term of the derivative identity:
/// `k r^(k-1) sup|D_u G| int_{B_1} |u_r|^(1+alpha)`, with the sup taken over
/// the field values in the ball.
fn error_budget(pr: &Probe, x0: &[f64], r: f64, well: usize) -> f64 {
    let spec = pr.spec();
    let (n, m) = (spec.n as f64, pr.f.m);
    let kappa = pr.p.kappa();
    let alpha = pr.p.alpha();
    let a = pr.p.well(well);
    let mut gg = vec![0.0; m];
    let mut sup: f64 = 0.0;
    let int = pr.ball_sum(x0, r, |idx| {
        let u = pr.f.node(idx);
        pr.p.local_g_with_grad(u, well, &mut gg);
        sup = sup.max(gg.iter().map(|v| v * v).sum::<f64>().sqrt());
        sq_dist(u, a).sqrt().powf(1.0 + alpha)
    });
    kappa * r.powf(kappa - 1.0 - n - kappa * (1.0 + alpha)) * sup * int
}

/// Allowance for quadrature error in one forward difference of the trace:
/// `QUAD_SLACK_C (h/r)^2 (|volume| + |boundary|)` at the larger radius.
pub const QUAD_SLACK_C: f64 = 4.0;

pub fn quadrature_slack(h: f64, r: f64, volume: f64, boundary: f64) -> f64 {
    QUAD_SLACK_C * (h / r).powi(2) * (volume.abs() + boundary.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeissTrace {
    pub x0: Vec<f64>,
    pub alpha: f64,
    pub kappa: f64,
    /// Index of the reference well.
    pub well: usize,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// `values[i+1] - values[i]`.
    pub discrete_derivative: Vec<f64>,
    pub error_budget: Vec<f64>,
    pub slack: Vec<f64>,
    /// Forward differences that fell below `-(budget over the step) - slack`.
    pub violations: Vec<usize>,
    pub monotone: bool,
}

impl WeissTrace {
    /// Smallest margin `dW + budget + slack` over all steps.
    pub fn worst_margin(&self) -> f64 {
        (0..self.discrete_derivative.len())
            .map(|i| self.discrete_derivative[i] + self.step_budget(i) + self.slack[i])
            .fold(f64::INFINITY, f64::min)
    }

    /// Error budget integrated over step `i` by the trapezoid rule.
    pub fn step_budget(&self, i: usize) -> f64 {
        0.5 * (self.error_budget[i] + self.error_budget[i + 1]) * (self.radii[i + 1] - self.radii[i])
    }
}

pub fn weiss_trace(f: &VectorField, p: &Potential, x0: &[f64], radii: &[f64]) -> Result<WeissTrace> {
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("Weiss radii must increase strictly".into()));
    }
    let pr = Probe::new(f, p);
    let well = pr.reference_well(x0);
    let mut values = Vec::with_capacity(radii.len());
    let mut scale = Vec::with_capacity(radii.len());
    let mut error_budget_v = Vec::with_capacity(radii.len());
    for &r in radii {
        let parts = weiss_parts(&pr, x0, r, well)?;
        values.push(parts.volume - parts.boundary);
        scale.push((parts.volume, parts.boundary));
        error_budget_v.push(error_budget(&pr, x0, r, well));
    }
    let h = f.spec.h;
    let steps = radii.len().saturating_sub(1);
    let discrete_derivative: Vec<f64> = (0..steps).map(|i| values[i + 1] - values[i]).collect();
    let slack: Vec<f64> = (0..steps)
        .map(|i| {
            let (v0, b0) = scale[i];
            let (v1, b1) = scale[i + 1];
            quadrature_slack(h, radii[i], v0, b0) + quadrature_slack(h, radii[i + 1], v1, b1)
        })
        .collect();
    let mut trace = WeissTrace {
        x0: x0.to_vec(),
        alpha: p.alpha(),
        kappa: p.kappa(),
        well,
        radii: radii.to_vec(),
        values,
        discrete_derivative,
        error_budget: error_budget_v,
        slack,
        violations: Vec::new(),
        monotone: true,
    };
    trace.violations = (0..steps)
        .filter(|&i| trace.discrete_derivative[i] < -(trace.step_budget(i) + trace.slack[i]))
        .collect();
    trace.monotone = trace.violations.is_empty();
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthProbe {
    pub x0: Vec<f64>,
    pub node: usize,
    pub radii: Vec<f64>,
    pub sup_delta: Vec<f64>,
    pub sup_grad: Vec<f64>,
    pub fit_delta: Option<Fit>,
    pub fit_grad: Option<Fit>,
    pub kappa: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Whether the node or one of its neighbours is in contact and one of them
/// is on the interface.
pub fn on_free_boundary(f: &VectorField, p: &Potential, idx: usize) -> bool {
    let spec = &f.spec;
    let mut contact = false;
    let mut interface = false;
    for k in std::iter::once(idx).chain(spec.neighbors(idx)) {
        if p.well_distance(f.node(k)).1 == 0.0 {
            contact = true;
        } else {
            interface = true;
        }
    }
    contact && interface
}

/// The interface node nearest to `target` with at least one neighbour on a
/// well. Ties go to the lower node index.
pub fn free_boundary_node(f: &VectorField, p: &Potential, target: &[f64]) -> Option<usize> {
    let spec = &f.spec;
    let mut best: Option<(f64, usize)> = None;
    for idx in 0..f.num_nodes() {
        if p.well_distance(f.node(idx)).1 == 0.0 {
            continue;
        }
        if !spec.neighbors(idx).any(|k| p.well_distance(f.node(k)).1 == 0.0) {
            continue;
        }
        let x = spec.coords(idx);
        let d: f64 = (0..spec.n).map(|a| (x[a] - target[a]).powi(2)).sum();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, idx));
        }
    }
    best.map(|b| b.1)
}

/// Sup of `delta` and of `|grad_h u|` over discrete balls around a
/// free-boundary node, with log-log exponent fits against `kappa` and
/// `kappa - 1`. The probe node itself must satisfy `delta <= 10 h^kappa`
/// and `|grad_h u| <= 10 h^(kappa-1)`.
pub fn growth_probe(f: &VectorField, p: &Potential, node: usize, radii: &[f64], tol: f64) -> Result<GrowthProbe> {
    let spec = &f.spec;
    if node >= f.num_nodes() || !on_free_boundary(f, p, node) {
        return Err(Error::NotOnFreeBoundary(format!(
            "node {node} has no contact/interface neighbourhood"
        )));
    }
    let pr = Probe::new(f, p);
    let h = spec.h;
    let kappa = p.kappa();
    let x = spec.coords(node);
    let x0: Vec<f64> = x[..spec.n].to_vec();
    let d0 = p.well_distance(f.node(node)).1;
    let g0 = pr.grad_sq(node).sqrt();
    if d0 > 10.0 * h.powf(kappa) || g0 > 10.0 * h.powf(kappa - 1.0) {
        return Err(Error::NotOnFreeBoundary(format!(
            "delta {d0:e} or gradient {g0:e} too large at node {node}"
        )));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    let mut sup_delta = Vec::with_capacity(radii.len());
    let mut sup_grad = Vec::with_capacity(radii.len());
    for &r in &radii {
        pr.check_ball(&x0, r)?;
        let (mut sd, mut sg) = (0.0f64, 0.0f64);
        pr.ball_sum(&x0, r + 0.5 * h, |idx| {
            let xi = spec.coords(idx);
            let d: f64 = (0..spec.n).map(|a| (xi[a] - x0[a]).powi(2)).sum::<f64>().sqrt();
            if d <= r + 1e-9 * h {
                sd = sd.max(p.well_distance(f.node(idx)).1);
                sg = sg.max(pr.grad_sq(idx).sqrt());
            }
            0.0
        });
        sup_delta.push(sd);
        sup_grad.push(sg);
    }
    let fit_delta = scaling_fit(&radii, &sup_delta).ok();
    let fit_grad = scaling_fit(&radii, &sup_grad).ok();
    let delta_ok = fit_delta.is_some_and(|fd| (fd.slope - kappa).abs() <= tol);
    let grad_ok = p.alpha() != 1.0 || fit_grad.is_some_and(|fg| (fg.slope - 1.0).abs() <= tol);
    Ok(GrowthProbe {
        x0,
        node,
        radii,
        sup_delta,
        sup_grad,
        fit_delta,
        fit_grad,
        kappa,
        tol,
        pass: delta_ok && grad_ok,
    })
}

/// Non-degeneracy constants: `theta = 0.9 * min(alpha C_g / (4 |D_u g|),
/// 1/2 min |a_i - a_j|)` and
/// `c = 0.9 * min(alpha (2 - alpha) C_g / (8 n), (2 - alpha)^2 C_g / 16)`,
/// with `|D_u g|` sampled over `B_{r0}(a_i)`.
pub fn select_nondegeneracy_constants(p: &Potential, n: usize) -> (f64, f64) {
    let alpha = p.alpha();
    let cg = p.g_lower_bound();
    let r0 = p.r0_well();
    let dg = if r0.is_finite() {
        p.sampled_grad_g_bound(r0)
    } else {
        p.sampled_grad_g_bound(1.0)
    };
    let first = if dg > 0.0 {
        alpha * cg / (4.0 * dg)
    } else {
        f64::INFINITY
    };
    let theta = 0.9 * first.min(r0);
    let c = 0.9 * (alpha * (2.0 - alpha) * cg / (8.0 * n as f64)).min((2.0 - alpha).powi(2) * cg / 16.0);
    (theta, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_well() -> Potential {
        Potential::with_constant_g(vec![vec![0.0]], 1.0, 1.0).unwrap()
    }

    fn obstacle_field(h: f64) -> VectorField {
        let nodes = (1.0 / h).round() as usize + 1;
        let spec = GridSpec::new(vec![nodes], h, vec![0.0]).unwrap();
        VectorField::from_fn(spec, 1, |x| vec![0.5 * (x[0] - 0.5).max(0.0).powi(2)])
    }

    #[test]
    fn weiss_of_constant_well_is_zero() {
        let p = Potential::with_constant_g(vec![vec![-1.0], vec![1.0]], 1.0, 1.0).unwrap();
        let spec = GridSpec::centered(1, 101, 1.0).unwrap();
        let f = VectorField::from_fn(spec, 1, |_| vec![1.0]);
        for r in [0.1, 0.5, 0.9] {
            assert_eq!(weiss_energy(&f, &p, &[0.0], r).unwrap(), 0.0);
        }
    }

    #[test]
    fn weiss_of_half_parabola_is_one_twelfth() {
        let p = single_well();
        let f = obstacle_field(1.0 / 512.0);
        for r in [0.1, 0.2, 0.3, 0.4] {
            let w = weiss_energy(&f, &p, &[0.5], r).unwrap();
            assert!((w - 1.0 / 12.0).abs() < 1e-4, "r {r}: {w}");
        }
        let t = weiss_trace(&f, &p, &[0.5], &radius_ladder(0.1, 0.4)).unwrap();
        assert!(
            t.discrete_derivative.iter().all(|d| d.abs() < 1e-4),
            "{:?}",
            t.discrete_derivative
        );
        assert!(t.monotone);
    }

    #[test]
    fn weiss_is_scale_invariant() {
        let p = single_well();
        let lam = 2.0;
        let h = 1.0 / 256.0;
        let base = GridSpec::new(vec![513], h, vec![-1.0]).unwrap();
        let u = |x: f64| 0.5 * x.max(0.0).powi(2) + 0.1 * x.max(0.0).powi(3);
        let f = VectorField::from_fn(base, 1, |x| vec![u(x[0])]);
        // u_lam(x) = u(lam x)/lam^2 sampled at spacing h/lam
        let fine = GridSpec::new(vec![513], h / lam, vec![-1.0 / lam]).unwrap();
        let g = VectorField::from_fn(fine, 1, |x| vec![u(lam * x[0]) / (lam * lam)]);
        for r in [0.2, 0.3] {
            let a = weiss_energy(&g, &p, &[0.0], r / lam).unwrap();
            let b = weiss_energy(&f, &p, &[0.0], r).unwrap();
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn weiss_derivative_matches_trace_slope() {
        // obstacle solution probed off its free boundary
        let p = single_well();
        let f = obstacle_field(1.0 / 1024.0);
        let x0 = [0.45];
        let (r0, r1) = (0.2, 0.22);
        let w0 = weiss_energy(&f, &p, &x0, r0).unwrap();
        let w1 = weiss_energy(&f, &p, &x0, r1).unwrap();
        let slope = (w1 - w0) / (r1 - r0);
        let rhs = weiss_derivative(&f, &p, &x0, 0.5 * (r0 + r1)).unwrap();
        assert!(rhs > 0.0);
        assert!((slope - rhs).abs() <= 0.05 * rhs.abs(), "{slope} vs {rhs}");
    }

    #[test]
    fn ball_must_fit() {
        let f = obstacle_field(1.0 / 64.0);
        assert!(matches!(
            weiss_energy(&f, &single_well(), &[0.5], 0.6),
            Err(Error::BallOutOfGrid { .. })
        ));
    }

    #[test]
    fn growth_of_obstacle_profile() {
        let p = single_well();
        let h = 1.0 / 512.0;
        let f = obstacle_field(h);
        let node = free_boundary_node(&f, &p, &[0.5]).unwrap();
        let radii = radius_ladder(8.0 * h, 0.4);
        let g = growth_probe(&f, &p, node, &radii, 0.15).unwrap();
        let fd = g.fit_delta.unwrap();
        assert!((fd.slope - 2.0).abs() < 0.05, "{fd:?}");
        assert!(g.pass);
        // sup over [x0 - r, x0 + r] is u(x0 + r) = (r + h)^2 / 2 for x0 = 1/2 + h
        for (r, s) in g.radii.iter().zip(&g.sup_delta) {
            let k = (r / h + 1e-9).floor();
            assert!(
                (s - 0.5 * ((k + 1.0) * h).powi(2)).abs() < 1e-12,
                "{r} {s} {k} {}",
                g.x0[0]
            );
        }
    }

    #[test]
    fn interior_contact_is_not_free_boundary() {
        let p = single_well();
        let f = obstacle_field(1.0 / 64.0);
        assert!(matches!(
            growth_probe(&f, &p, 10, &[0.1, 0.2, 0.3, 0.4], 0.15),
            Err(Error::NotOnFreeBoundary(_))
        ));
    }

    #[test]
    fn nondegeneracy_constants_for_two_wells() {
        let p = Potential::with_constant_g(vec![vec![-1.0], vec![1.0]], 1.0, 1.0).unwrap();
        let (theta, c) = select_nondegeneracy_constants(&p, 1);
        assert!((theta - 0.9).abs() < 1e-15);
        assert!((c - 0.05625).abs() < 1e-15);
        let (_, c2) = select_nondegeneracy_constants(&p, 2);
        assert!((c2 - 0.9 / 16.0).abs() < 1e-15);
        let small = Potential::with_constant_g(vec![vec![-1.0], vec![1.0]], 0.01, 1.0).unwrap();
        let (_, cs) = select_nondegeneracy_constants(&small, 2);
        assert!((cs - 0.9 * 0.01 * 1.99 / 16.0).abs() < 1e-15);
    }
}
