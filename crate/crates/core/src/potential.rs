//! Multi-well potentials `W(u) = (prod_i |u - a_i|^alpha) g(u)`.
//!
//! `W` vanishes exactly on the wells and grows like `|u - a_i|^alpha` next to
//! each of them. For `alpha <= 1` the gradient is singular (or a cone) at the
//! wells, so every gradient query carries a [`SingularityPolicy`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth positive modulation `g(u)` with an analytic gradient.
pub trait Modulation: Send + Sync + fmt::Debug {
    fn value(&self, u: &[f64]) -> f64;
    /// Writes `D_u g(u)` into `out`.
    fn grad(&self, u: &[f64], out: &mut [f64]);
    fn name(&self) -> &'static str;
}

/// `g(u) = value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantModulation {
    pub value: f64,
}

impl Modulation for ConstantModulation {
    fn value(&self, _u: &[f64]) -> f64 {
        self.value
    }

    fn grad(&self, _u: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn name(&self) -> &'static str {
        "constant"
    }
}

/// `g(u) = base + amplitude * |u - center|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticBump {
    pub base: f64,
    pub amplitude: f64,
    pub center: Vec<f64>,
}

impl Modulation for QuadraticBump {
    fn value(&self, u: &[f64]) -> f64 {
        let r2: f64 = u.iter().zip(self.center.iter()).map(|(x, c)| (x - c) * (x - c)).sum();
        self.base + self.amplitude * r2
    }

    fn grad(&self, u: &[f64], out: &mut [f64]) {
        for ((o, x), c) in out.iter_mut().zip(u).zip(&self.center) {
            *o = 2.0 * self.amplitude * (x - c);
        }
    }

    fn name(&self) -> &'static str {
        "quadratic_bump"
    }
}

/// Named modulations available from run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModulationSpec {
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    QuadraticBump {
        #[serde(default = "one")]
        base: f64,
        amplitude: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for ModulationSpec {
    fn default() -> Self {
        ModulationSpec::Constant { value: 1.0 }
    }
}

impl ModulationSpec {
    pub fn build(&self, m: usize) -> Arc<dyn Modulation> {
        match self {
            ModulationSpec::Constant { value } => Arc::new(ConstantModulation { value: *value }),
            ModulationSpec::QuadraticBump {
                base,
                amplitude,
                center,
            } => Arc::new(QuadraticBump {
                base: *base,
                amplitude: *amplitude,
                center: center.clone().unwrap_or_else(|| vec![0.0; m]),
            }),
        }
    }

    /// Infimum of `g` over all of `R^m` (used as the default `C_g`).
    pub fn lower_bound(&self) -> f64 {
        match self {
            ModulationSpec::Constant { value } => *value,
            ModulationSpec::QuadraticBump { base, amplitude, .. } => {
                if *amplitude >= 0.0 {
                    *base
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

/// How the gradient of `W` is evaluated where it is not classical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
#[derive(Default)]
pub enum SingularityPolicy {
    /// Zero at the wells (the subgradient selected by the characteristic
    /// function in the `alpha = 1` Euler-Lagrange system).
    #[default]
    SubgradientZero,
    /// Replace every `|u - a_i|` by `sqrt(|u - a_i|^2 + eps_reg^2)`.
    EpsilonSmoothing { eps_reg: f64 },
}

impl SingularityPolicy {
    pub fn check(&self) -> Result<()> {
        match self {
            SingularityPolicy::EpsilonSmoothing { eps_reg } if !(*eps_reg > 0.0) => Err(Error::InvalidArgument(
                format!("eps_reg must be positive, got {eps_reg}"),
            )),
            _ => Ok(()),
        }
    }
}

/// `d^e` for `d >= 0`, with exact shortcuts for integer and half-integer
/// exponents in `[-2, 2]`.
#[inline]
pub fn powr(d: f64, e: f64) -> f64 {
    match e {
        1.0 => d,
        2.0 => d * d,
        0.0 => 1.0,
        0.5 => d.sqrt(),
        1.5 => d * d.sqrt(),
        -0.5 => 1.0 / d.sqrt(),
        -1.0 => 1.0 / d,
        -1.5 => 1.0 / (d * d.sqrt()),
        -2.0 => 1.0 / (d * d),
        _ => d.powf(e),
    }
}

/// Decomposition of `W` around the nearest well `a_i`:
/// `W(u) = |u - a_i|^alpha * G_i(u)` with `G_i` smooth near `a_i`.
#[derive(Debug, Clone, Copy)]
pub struct LocalSplit {
    pub well: usize,
    pub dist: f64,
    /// `G_i(u) = g(u) prod_{k != i} |u - a_k|^alpha`.
    pub local_g: f64,
}

#[derive(Clone)]
pub struct Potential {
    wells: Vec<f64>,
    m: usize,
    alpha: f64,
    modulation: Arc<dyn Modulation>,
    g_lower_bound: f64,
    r0_well: f64,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("wells", &self.wells_vec())
            .field("alpha", &self.alpha)
            .field("modulation", &self.modulation.name())
            .field("g_lower_bound", &self.g_lower_bound)
            .finish()
    }
}

const TIE_REL: f64 = 1e-14;

/// Euclidean norm that does not underflow to zero for tiny nonzero vectors.
#[inline]
pub fn robust_norm(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let s: f64 = v.clone().map(|x| x * x).sum();
    if s >= f64::MIN_POSITIVE && s.is_finite() {
        return s.sqrt();
    }
    let scale = v.clone().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = v.map(|x| (x / scale) * (x / scale)).sum();
    scale * s.sqrt()
}

impl Potential {
    pub fn new(wells: Vec<Vec<f64>>, alpha: f64, modulation: Arc<dyn Modulation>, g_lower_bound: f64) -> Result<Self> {
        let m = wells
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidArgument("potential needs at least one well".into()))?;
        if m == 0 || wells.iter().any(|w| w.len() != m) {
            return Err(Error::InvalidArgument(
                "all wells must share a positive dimension".into(),
            ));
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        let mut r0 = f64::INFINITY;
        for i in 0..wells.len() {
            for j in i + 1..wells.len() {
                let d = robust_norm(wells[i].iter().zip(&wells[j]).map(|(a, b)| a - b));
                if d == 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "wells {} and {} coincide",
                        i + 1,
                        j + 1
                    )));
                }
                r0 = r0.min(0.5 * d);
            }
        }
        Ok(Self {
            wells: wells.concat(),
            m,
            alpha,
            modulation,
            g_lower_bound,
            r0_well: r0,
        })
    }

    /// Wells with a constant modulation `g = value`.
    pub fn with_constant_g(wells: Vec<Vec<f64>>, alpha: f64, value: f64) -> Result<Self> {
        Self::new(wells, alpha, Arc::new(ConstantModulation { value }), value)
    }

    /// The `N` wells `(cos(2 pi k / N), sin(2 pi k / N))` on the unit circle.
    pub fn unit_circle_wells(count: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Growth exponent `kappa = 2 / (2 - alpha)`.
    pub fn kappa(&self) -> f64 {
        2.0 / (2.0 - self.alpha)
    }

    pub fn num_wells(&self) -> usize {
        self.wells.len() / self.m
    }

    pub fn well(&self, i: usize) -> &[f64] {
        &self.wells[i * self.m..(i + 1) * self.m]
    }

    pub fn wells_vec(&self) -> Vec<Vec<f64>> {
        self.wells.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    pub fn modulation(&self) -> &Arc<dyn Modulation> {
        &self.modulation
    }

    pub fn g_lower_bound(&self) -> f64 {
        self.g_lower_bound
    }

    /// Half the smallest distance between two wells (infinite for one well).
    pub fn r0_well(&self) -> f64 {
        self.r0_well
    }

    #[inline]
    fn pow_alpha(&self, d: f64) -> f64 {
        powr(d, self.alpha)
    }

    #[inline]
    fn dist_to(&self, u: &[f64], i: usize) -> f64 {
        let a = self.well(i);
        robust_norm(u.iter().zip(a).map(|(x, y)| x - y))
    }

    /// `W(u)`; exactly `0.0` at every well.
    pub fn eval_w(&self, u: &[f64]) -> f64 {
        let mut prod = 1.0;
        for i in 0..self.num_wells() {
            let d = self.dist_to(u, i);
            if d == 0.0 {
                return 0.0;
            }
            prod *= self.pow_alpha(d);
        }
        prod * self.modulation.value(u)
    }

    /// `W` with every well distance replaced by `sqrt(d^2 + eps^2)`.
    pub fn eval_w_smoothed(&self, u: &[f64], eps: f64) -> f64 {
        let mut prod = 1.0;
        for i in 0..self.num_wells() {
            let d = self.dist_to(u, i);
            prod *= (d * d + eps * eps).powf(0.5 * self.alpha);
        }
        prod * self.modulation.value(u)
    }

    /// Gradient of `W` under `policy`, written into `out`.
    pub fn eval_grad_w(&self, u: &[f64], policy: SingularityPolicy, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.m);
        let g = self.modulation.value(u);
        let mut prod = 1.0;
        let mut dirsum = [0.0f64; 8];
        let mut dir_heap;
        let dir: &mut [f64] = if self.m <= 8 {
            &mut dirsum[..self.m]
        } else {
            dir_heap = vec![0.0; self.m];
            &mut dir_heap
        };
        for i in 0..self.num_wells() {
            let a = self.well(i);
            let d = self.dist_to(u, i);
            let d2 = match policy {
                SingularityPolicy::SubgradientZero => {
                    if d == 0.0 {
                        out.fill(0.0);
                        return;
                    }
                    prod *= self.pow_alpha(d);
                    d * d
                }
                SingularityPolicy::EpsilonSmoothing { eps_reg } => {
                    let s = d * d + eps_reg * eps_reg;
                    prod *= s.powf(0.5 * self.alpha);
                    s
                }
            };
            for ((o, x), y) in dir.iter_mut().zip(u).zip(a) {
                *o += (x - y) / d2;
            }
        }
        self.modulation.grad(u, out);
        for (o, d) in out.iter_mut().zip(dir.iter()) {
            *o = prod * (*o + g * self.alpha * d);
        }
    }

    /// Nearest well (lowest index on ties) and its distance `delta`.
    pub fn well_distance(&self, u: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for i in 0..self.num_wells() {
            let d = self.dist_to(u, i);
            // distances equal up to rounding count as ties
            if d < best.1 * (1.0 - TIE_REL) {
                best = (i, d);
            }
        }
        best
    }

    /// Split `W` around the nearest well.
    pub fn local_split(&self, u: &[f64]) -> LocalSplit {
        let (well, dist) = self.well_distance(u);
        let mut local_g = self.modulation.value(u);
        for k in 0..self.num_wells() {
            if k != well {
                local_g *= self.pow_alpha(self.dist_to(u, k));
            }
        }
        LocalSplit { well, dist, local_g }
    }

    /// `G_i(u)` and its gradient for an explicitly chosen well `i`.
    pub fn local_g_with_grad(&self, u: &[f64], i: usize, grad: &mut [f64]) -> f64 {
        let g = self.modulation.value(u);
        self.modulation.grad(u, grad);
        let mut prod = 1.0;
        let mut buf = [0.0f64; 8];
        let mut heap;
        let scale_dir: &mut [f64] = if self.m <= 8 {
            &mut buf[..self.m]
        } else {
            heap = vec![0.0; self.m];
            &mut heap
        };
        for k in 0..self.num_wells() {
            if k == i {
                continue;
            }
            let d = self.dist_to(u, k);
            prod *= self.pow_alpha(d);
            if d > 0.0 {
                for ((o, x), y) in scale_dir.iter_mut().zip(u).zip(self.well(k)) {
                    *o += self.alpha * (x - y) / (d * d);
                }
            }
        }
        for (o, s) in grad.iter_mut().zip(scale_dir.iter()) {
            *o = prod * (*o + g * s);
        }
        prod * g
    }

    /// Checks the structural hypotheses by sampling `g` on a lattice over the
    /// ball of radius `field_bound`.
    pub fn validate(&self, field_bound: f64) -> Result<Diagnostics> {
        let mut violations = Vec::new();
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            violations.push("alpha out of range".to_string());
        }
        if !(self.g_lower_bound > 0.0) {
            violations.push(format!("g_lower_bound must be positive, got {}", self.g_lower_bound));
        }
        let max_well = (0..self.num_wells())
            .map(|i| robust_norm(self.well(i).iter().copied()))
            .fold(0.0, f64::max);
        if field_bound < max_well {
            violations.push(format!(
                "field_bound {field_bound} is smaller than the largest well norm {max_well}"
            ));
        }
        let samples = ball_lattice(&vec![0.0; self.m], field_bound.max(0.0), self.m);
        let min_g = samples
            .iter()
            .map(|u| self.modulation.value(u))
            .fold(f64::INFINITY, f64::min);
        if min_g < self.g_lower_bound {
            violations.push(format!(
                "sampled g drops to {min_g}, below g_lower_bound {}",
                self.g_lower_bound
            ));
        }
        if !violations.is_empty() {
            return Err(Error::ValidationFailure(violations));
        }
        let mut notes = Vec::new();
        if self.num_wells() < 2 {
            notes.push("single-well fixture (not a phase-transition potential)".to_string());
        }
        if self.alpha >= 2.0 {
            notes.push("alpha = 2 is outside the subquadratic regime".to_string());
        }
        Ok(Diagnostics {
            min_sampled_g: min_g,
            samples: samples.len(),
            alpha: self.alpha,
            within_hypotheses: notes.is_empty(),
            notes,
        })
    }

    /// Largest `|D_u g|` sampled over the balls `B_{r}(a_i)`.
    pub fn sampled_grad_g_bound(&self, radius: f64) -> f64 {
        let mut grad = vec![0.0; self.m];
        let mut best: f64 = 0.0;
        for i in 0..self.num_wells() {
            for u in ball_lattice(self.well(i), radius, self.m) {
                self.modulation.grad(&u, &mut grad);
                best = best.max(robust_norm(grad.iter().copied()));
            }
        }
        best
    }
}

/// Result of [`Potential::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub min_sampled_g: f64,
    pub samples: usize,
    pub alpha: f64,
    pub within_hypotheses: bool,
    pub notes: Vec<String>,
}

/// Deterministic lattice over the closed ball `B_radius(center)` in `R^m`,
/// always containing the center.
pub fn ball_lattice(center: &[f64], radius: f64, m: usize) -> Vec<Vec<f64>> {
    let per_axis: usize = match m {
        1 => 201,
        2 => 41,
        3 => 17,
        _ => 7,
    };
    let half = (per_axis / 2) as i64;
    let step = if half > 0 { radius / half as f64 } else { 0.0 };
    let total = per_axis.pow(m as u32);
    let mut out = Vec::new();
    let mut idx = vec![0i64; m];
    for flat in 0..total {
        let mut rem = flat;
        for k in idx.iter_mut() {
            *k = (rem % per_axis) as i64 - half;
            rem /= per_axis;
        }
        let offs: Vec<f64> = idx.iter().map(|&k| k as f64 * step).collect();
        let r2: f64 = offs.iter().map(|x| x * x).sum();
        if r2 <= radius * radius * (1.0 + 1e-12) {
            out.push(center.iter().zip(&offs).map(|(c, o)| c + o).collect());
        }
    }
    out
}
