//! Uniform grids in one or two dimensions carrying `m`-component fields.
//!
//! Nodes are stored row-major: in 2D the node `(i, j)` (axis-0 index `i`,
//! axis-1 index `j`) lives at `i * extents[1] + j`, and its value occupies
//! `values[m * idx..m * (idx + 1)]`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{robust_norm, Potential};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub extents: Vec<usize>,
    pub h: f64,
    pub origin: Vec<f64>,
}

impl GridSpec {
    pub fn new(extents: Vec<usize>, h: f64, origin: Vec<f64>) -> Result<Self> {
        let spec = Self {
            n: extents.len(),
            extents,
            h,
            origin,
        };
        spec.check()?;
        Ok(spec)
    }

    /// Grid on `[-half_width, half_width]^n` with `nodes` nodes per axis.
    pub fn centered(n: usize, nodes: usize, half_width: f64) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::InvalidGrid("need at least 2 nodes per axis".into()));
        }
        let h = 2.0 * half_width / (nodes - 1) as f64;
        Self::new(vec![nodes; n], h, vec![-half_width; n])
    }

    pub fn check(&self) -> Result<()> {
        if !(1..=2).contains(&self.n) {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {}", self.n)));
        }
        if self.extents.len() != self.n || self.origin.len() != self.n {
            return Err(Error::InvalidGrid(
                "extents and origin must have one entry per axis".into(),
            ));
        }
        if self.extents.iter().any(|&e| e < 2) {
            return Err(Error::InvalidGrid("extents must be at least 2".into()));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidGrid(format!("h must be positive, got {}", self.h)));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.extents.iter().product()
    }

    /// Per-node measure `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    /// Axis indices of a node (second entry is 0 in 1D).
    #[inline]
    pub fn unflatten(&self, idx: usize) -> (usize, usize) {
        if self.n == 1 {
            (idx, 0)
        } else {
            (idx / self.extents[1], idx % self.extents[1])
        }
    }

    #[inline]
    pub fn flatten(&self, i: usize, j: usize) -> usize {
        if self.n == 1 {
            i
        } else {
            i * self.extents[1] + j
        }
    }

    /// Physical coordinates of a node (second entry is 0 in 1D).
    #[inline]
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.unflatten(idx);
        let x = self.origin[0] + i as f64 * self.h;
        let y = if self.n == 2 {
            self.origin[1] + j as f64 * self.h
        } else {
            0.0
        };
        [x, y]
    }

    /// Whether the node lies on the outer ring.
    #[inline]
    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.unflatten(idx);
        let on = |k: usize, e: usize| k == 0 || k + 1 == e;
        if self.n == 1 {
            on(i, self.extents[0])
        } else {
            on(i, self.extents[0]) || on(j, self.extents[1])
        }
    }

    /// Trapezoid weight of a node (1 inside, halved per boundary axis).
    #[inline]
    pub fn node_weight(&self, idx: usize) -> f64 {
        let (i, j) = self.unflatten(idx);
        let f = |k: usize, e: usize| if k == 0 || k + 1 == e { 0.5 } else { 1.0 };
        if self.n == 1 {
            f(i, self.extents[0])
        } else {
            f(i, self.extents[0]) * f(j, self.extents[1])
        }
    }

    /// Nearest node to a physical point, if the point lies inside the grid.
    pub fn nearest_node(&self, x: &[f64]) -> Option<usize> {
        let mut ij = [0usize; 2];
        for a in 0..self.n {
            let t = ((x[a] - self.origin[a]) / self.h).round();
            if t < 0.0 || t > (self.extents[a] - 1) as f64 {
                return None;
            }
            ij[a] = t as usize;
        }
        Some(self.flatten(ij[0], ij[1]))
    }

    /// Physical center of the grid box.
    pub fn center(&self) -> Vec<f64> {
        (0..self.n)
            .map(|a| self.origin[a] + 0.5 * (self.extents[a] - 1) as f64 * self.h)
            .collect()
    }

    /// Largest radius of a ball around `x` that stays inside the grid box.
    pub fn inner_radius(&self, x: &[f64]) -> f64 {
        (0..self.n)
            .map(|a| {
                let lo = x[a] - self.origin[a];
                let hi = self.origin[a] + (self.extents[a] - 1) as f64 * self.h - x[a];
                lo.min(hi)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Axis neighbours of a node (up to `2n`).
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.unflatten(idx);
        let mut out = [usize::MAX; 4];
        if i > 0 {
            out[0] = self.flatten(i - 1, j);
        }
        if i + 1 < self.extents[0] {
            out[1] = self.flatten(i + 1, j);
        }
        if self.n == 2 {
            if j > 0 {
                out[2] = self.flatten(i, j - 1);
            }
            if j + 1 < self.extents[1] {
                out[3] = self.flatten(i, j + 1);
            }
        }
        out.into_iter().filter(|&k| k != usize::MAX)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub spec: GridSpec,
    pub m: usize,
    pub values: Vec<f64>,
    /// `true` = frozen (Dirichlet) node.
    pub dirichlet: Vec<bool>,
}

impl VectorField {
    pub fn zeros(spec: GridSpec, m: usize) -> Self {
        let n = spec.num_nodes();
        Self {
            spec,
            m,
            values: vec![0.0; n * m],
            dirichlet: vec![false; n],
        }
    }

    /// Field with values `f(coords)`, nothing frozen.
    pub fn from_fn(spec: GridSpec, m: usize, f: impl Fn([f64; 2]) -> Vec<f64>) -> Self {
        let mut out = Self::zeros(spec, m);
        for idx in 0..out.num_nodes() {
            let v = f(out.spec.coords(idx));
            out.node_mut(idx).copy_from_slice(&v[..m]);
        }
        out
    }

    pub fn num_nodes(&self) -> usize {
        self.spec.num_nodes()
    }

    #[inline]
    pub fn node(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.m..(idx + 1) * self.m]
    }

    #[inline]
    pub fn node_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.values[idx * self.m..(idx + 1) * self.m]
    }

    pub fn freeze_boundary(&mut self) {
        for idx in 0..self.num_nodes() {
            if self.spec.is_boundary(idx) {
                self.dirichlet[idx] = true;
            }
        }
    }

    /// Largest node norm, recorded as the field's `L^inf` bound.
    pub fn field_bound(&self) -> f64 {
        self.values
            .chunks(self.m)
            .map(|v| robust_norm(v.iter().copied()))
            .fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &VectorField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Multilinear interpolation of `f` at an arbitrary physical point
/// (clamped to the grid box).
pub fn interpolate(f: &VectorField, x: &[f64], out: &mut [f64]) {
    let spec = &f.spec;
    let mut base = [0usize; 2];
    let mut frac = [0.0f64; 2];
    for a in 0..spec.n {
        let t = ((x[a] - spec.origin[a]) / spec.h).clamp(0.0, (spec.extents[a] - 1) as f64);
        let i = (t.floor() as usize).min(spec.extents[a] - 2);
        base[a] = i;
        frac[a] = t - i as f64;
    }
    out.fill(0.0);
    let corners: &[(usize, usize)] = if spec.n == 1 {
        &[(0, 0), (1, 0)]
    } else {
        &[(0, 0), (1, 0), (0, 1), (1, 1)]
    };
    for &(di, dj) in corners {
        let wx = if di == 1 { frac[0] } else { 1.0 - frac[0] };
        let wy = if spec.n == 1 {
            1.0
        } else if dj == 1 {
            frac[1]
        } else {
            1.0 - frac[1]
        };
        let w = wx * wy;
        if w == 0.0 {
            continue;
        }
        let v = f.node(spec.flatten(base[0] + di, base[1] + dj));
        for (o, y) in out.iter_mut().zip(v) {
            *o += w * y;
        }
    }
}

/// Interpolates `f` onto `target` (nothing frozen in the result).
pub fn prolong(f: &VectorField, target: &GridSpec) -> VectorField {
    let mut out = VectorField::zeros(target.clone(), f.m);
    let mut buf = vec![0.0; f.m];
    for idx in 0..out.num_nodes() {
        let x = target.coords(idx);
        interpolate(f, &x[..target.n], &mut buf);
        out.node_mut(idx).copy_from_slice(&buf);
    }
    out
}

/// Initial-field recipes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum InitMode {
    /// Every node at well `well` (0-based).
    Constant { well: usize },
    /// Each node takes the well of its angular sector about `center`
    /// (sector `k` is centred on angle `offset_deg + 360 k / N`). In 1D the
    /// left half takes well 0 and the right half well 1.
    SectorWells {
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        offset_deg: f64,
    },
    /// Sector wells on the ring; the interior is blended across sector
    /// boundaries over `width` and pulled to the well centroid near the center.
    RadialConnectionBc {
        #[serde(default)]
        center: Option<Vec<f64>>,
        width: f64,
    },
    /// 1D linear profile from `from` (left end) to `to` (right end).
    Ramp { from: Vec<f64>, to: Vec<f64> },
    /// Interior drawn uniformly from the convex hull of the wells and the
    /// boundary values; the ring comes from `boundary` (default sector wells).
    Random {
        seed: u64,
        #[serde(default)]
        boundary: Option<Box<InitMode>>,
    },
}

fn sector_value(
    p: &Potential,
    x: [f64; 2],
    n: usize,
    center: &[f64],
    offset_deg: f64,
    blend_width: Option<f64>,
) -> Vec<f64> {
    let big_n = p.num_wells();
    let m = p.m();
    if n == 1 {
        let s = x[0] - center[0];
        let (left, right) = (p.well(0), p.well(1.min(big_n - 1)));
        return match blend_width {
            Some(w) if w > 0.0 => {
                let t = (0.5 + s / w).clamp(0.0, 1.0);
                left.iter().zip(right).map(|(a, b)| (1.0 - t) * a + t * b).collect()
            }
            _ => {
                if s < 0.0 {
                    left.to_vec()
                } else if s > 0.0 {
                    right.to_vec()
                } else {
                    left.iter().zip(right).map(|(a, b)| 0.5 * (a + b)).collect()
                }
            }
        };
    }
    let dx = x[0] - center[0];
    let dy = x[1] - center[1];
    let r = (dx * dx + dy * dy).sqrt();
    let width = 2.0 * PI / big_n as f64;
    // angle measured from the lower edge of sector 0
    let theta = (dy.atan2(dx) - offset_deg.to_radians() + 0.5 * width).rem_euclid(2.0 * PI);
    let k = ((theta / width).floor() as usize).min(big_n - 1);
    let within = theta - k as f64 * width;
    // nearest sector edge and the sector across it
    let (edge_ang, other) = if within < 0.5 * width {
        (within, (k + big_n - 1) % big_n)
    } else {
        (width - within, (k + 1) % big_n)
    };
    let a = p.well(k);
    let b = p.well(other);
    let mix = |t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| t * x + (1.0 - t) * y).collect() };
    let mut v = match blend_width {
        Some(w) if w > 0.0 => {
            let s = r * edge_ang.sin();
            mix((0.5 + s / w).clamp(0.0, 1.0))
        }
        _ => {
            if r > 0.0 && edge_ang.abs() < 1e-12 {
                mix(0.5)
            } else {
                a.to_vec()
            }
        }
    };
    if let Some(w) = blend_width {
        if w > 0.0 {
            let mut centroid = vec![0.0; m];
            for i in 0..big_n {
                for (c, y) in centroid.iter_mut().zip(p.well(i)) {
                    *c += y / big_n as f64;
                }
            }
            let rho = (r / w).min(1.0);
            for (x, c) in v.iter_mut().zip(&centroid) {
                *x = c + rho * (*x - c);
            }
        }
    }
    v
}

/// Build an initial field on `spec` for the wells of `p`.
pub fn init_field(spec: GridSpec, p: &Potential, mode: &InitMode) -> Result<VectorField> {
    spec.check()?;
    let m = p.m();
    let center_or = |c: &Option<Vec<f64>>| -> Result<Vec<f64>> {
        match c {
            Some(c) if c.len() == spec.n => Ok(c.clone()),
            Some(_) => Err(Error::BadInit("center must have one entry per axis".into())),
            None => Ok(spec.center()),
        }
    };
    let mut field = match mode {
        InitMode::Constant { well } => {
            if *well >= p.num_wells() {
                return Err(Error::BadInit(format!(
                    "well index {well} out of range (have {})",
                    p.num_wells()
                )));
            }
            let a = p.well(*well).to_vec();
            VectorField::from_fn(spec, m, |_| a.clone())
        }
        InitMode::SectorWells { center, offset_deg } => {
            if p.num_wells() < 2 {
                return Err(Error::BadInit("sector_wells needs at least two wells".into()));
            }
            let c = center_or(center)?;
            let n = spec.n;
            VectorField::from_fn(spec, m, |x| sector_value(p, x, n, &c, *offset_deg, None))
        }
        InitMode::RadialConnectionBc { center, width } => {
            if p.num_wells() < 2 {
                return Err(Error::BadInit("radial_connection_bc needs at least two wells".into()));
            }
            if !(*width > 0.0) {
                return Err(Error::BadInit("width must be positive".into()));
            }
            let c = center_or(center)?;
            let n = spec.n;
            let mut f = VectorField::from_fn(spec.clone(), m, |x| sector_value(p, x, n, &c, 0.0, Some(*width)));
            for idx in 0..f.num_nodes() {
                if spec.is_boundary(idx) {
                    let v = sector_value(p, spec.coords(idx), n, &c, 0.0, None);
                    f.node_mut(idx).copy_from_slice(&v);
                }
            }
            f
        }
        InitMode::Ramp { from, to } => {
            if spec.n != 1 {
                return Err(Error::BadInit("ramp is only defined in 1D".into()));
            }
            if from.len() != m || to.len() != m {
                return Err(Error::BadInit("ramp endpoints must have m components".into()));
            }
            let last = (spec.extents[0] - 1) as f64;
            let mut f = VectorField::zeros(spec, m);
            for idx in 0..f.num_nodes() {
                let t = idx as f64 / last;
                for c in 0..m {
                    f.node_mut(idx)[c] = (1.0 - t) * from[c] + t * to[c];
                }
            }
            f
        }
        InitMode::Random { seed, boundary } => {
            let base_mode = match boundary {
                Some(b) => (**b).clone(),
                None if p.num_wells() >= 2 => InitMode::SectorWells {
                    center: None,
                    offset_deg: 0.0,
                },
                None => InitMode::Constant { well: 0 },
            };
            if matches!(base_mode, InitMode::Random { .. }) {
                return Err(Error::BadInit("random boundary cannot itself be random".into()));
            }
            let mut f = init_field(spec.clone(), p, &base_mode)?;
            let mut points: Vec<Vec<f64>> = p.wells_vec();
            for idx in 0..f.num_nodes() {
                if spec.is_boundary(idx) {
                    let v = f.node(idx).to_vec();
                    if !points.contains(&v) {
                        points.push(v);
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for idx in 0..f.num_nodes() {
                if spec.is_boundary(idx) {
                    continue;
                }
                let v = sample_hull(&points, m, &mut rng);
                f.node_mut(idx).copy_from_slice(&v);
            }
            f
        }
    };
    field.freeze_boundary();
    Ok(field)
}

/// Uniform on an interval when `m = 1`; flat Dirichlet weights over the
/// points otherwise (uniform when the points form a simplex).
fn sample_hull(points: &[Vec<f64>], m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if m == 1 {
        let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        return vec![lo + (hi - lo) * rng.gen::<f64>()];
    }
    let weights: Vec<f64> = points.iter().map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = weights.iter().sum();
    let mut v = vec![0.0; m];
    for (p, w) in points.iter().zip(&weights) {
        for (x, y) in v.iter_mut().zip(p) {
            *x += y * w / total;
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryKind {
    None,
    TriangleC3v,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryGroup {
    pub kind: SymmetryKind,
    pub center: Vec<f64>,
}

/// Images of each (0-based) well index under the 120-degree rotation and the
/// reflection `y -> -y` of the codomain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellPermutation {
    pub rotation: Vec<usize>,
    pub reflection: Vec<usize>,
}

impl WellPermutation {
    /// Permutation for the wells produced by [`Potential::unit_circle_wells`]`(3)`.
    pub fn unit_triangle() -> Self {
        Self {
            rotation: vec![1, 2, 0],
            reflection: vec![0, 2, 1],
        }
    }
}

/// The six elements `R^k S^e` of the triangle group as 2x2 matrices
/// (`R` = rotation by 120 degrees, `S` = reflection `y -> -y`).
pub fn triangle_group() -> Vec<([[f64; 2]; 2], usize, bool)> {
    let mut out = Vec::with_capacity(6);
    for k in 0..3 {
        let t = 2.0 * PI * k as f64 / 3.0;
        let (s, c) = t.sin_cos();
        let rot = [[c, -s], [s, c]];
        out.push((rot, k, false));
        // R^k S
        out.push(([[c, s], [s, -c]], k, true));
    }
    out
}

fn integral(x: f64) -> Option<i64> {
    let r = x.round();
    ((x - r).abs() < 1e-9).then_some(r as i64)
}

/// Group elements whose spatial action maps the node set of `spec` onto
/// itself about `center`; only these can be applied without interpolation.
pub fn admissible_elements(spec: &GridSpec, center: &[f64]) -> Vec<[[f64; 2]; 2]> {
    let mut out = Vec::new();
    if spec.n != 2 {
        return out;
    }
    let ci = (center[0] - spec.origin[0]) / spec.h;
    let cj = (center[1] - spec.origin[1]) / spec.h;
    let (Some(ci), Some(cj)) = (integral(ci), integral(cj)) else {
        return out;
    };
    let (ei, ej) = (spec.extents[0] as i64, spec.extents[1] as i64);
    for (mat, _, _) in triangle_group() {
        let ints: Option<Vec<i64>> = mat.iter().flatten().map(|&x| integral(x)).collect();
        let Some(ints) = ints else { continue };
        // image of the index box must be the box itself
        let corners = [(0, 0), (ei - 1, 0), (0, ej - 1), (ei - 1, ej - 1)];
        let ok = corners.iter().all(|&(i, j)| {
            let (di, dj) = (i - ci, j - cj);
            let ni = ci + ints[0] * di + ints[1] * dj;
            let nj = cj + ints[2] * di + ints[3] * dj;
            (0..ei).contains(&ni) && (0..ej).contains(&nj)
        });
        if ok {
            out.push(mat);
        }
    }
    out
}

/// Projects `f` onto fields equivariant under the node-preserving part of the
/// triangle group: `f(x) <- avg_g rho(g) f(g^-1 x)`.
pub fn symmetrize(
    f: &VectorField,
    p: &Potential,
    group: &SymmetryGroup,
    perm: &WellPermutation,
) -> Result<VectorField> {
    if group.kind == SymmetryKind::None {
        return Ok(f.clone());
    }
    if f.spec.n != 2 || f.m != 2 {
        return Err(Error::SymmetryMismatch("triangle_c3v requires n = 2 and m = 2".into()));
    }
    if f.spec.extents.iter().any(|e| e % 2 == 0) {
        return Err(Error::SymmetryMismatch(
            "grid extents must be odd so the center is a node".into(),
        ));
    }
    let nw = p.num_wells();
    if perm.rotation.len() != nw || perm.reflection.len() != nw {
        return Err(Error::SymmetryMismatch(
            "permutation length differs from well count".into(),
        ));
    }
    let apply = |mat: &[[f64; 2]; 2], v: &[f64]| -> [f64; 2] {
        [mat[0][0] * v[0] + mat[0][1] * v[1], mat[1][0] * v[0] + mat[1][1] * v[1]]
    };
    let group_els = triangle_group();
    let (rot, refl) = (group_els[2].0, group_els[1].0);
    for i in 0..nw {
        for (mat, img) in [(&rot, perm.rotation[i]), (&refl, perm.reflection[i])] {
            let Some(target) = (img < nw).then(|| p.well(img)) else {
                return Err(Error::SymmetryMismatch(format!("bad image index {img}")));
            };
            let v = apply(mat, p.well(i));
            if (v[0] - target[0]).abs() > 1e-12 || (v[1] - target[1]).abs() > 1e-12 {
                return Err(Error::SymmetryMismatch(format!(
                    "well {} is not mapped onto well {} within 1e-12",
                    i, img
                )));
            }
        }
    }
    let mats = admissible_elements(&f.spec, &group.center);
    if mats.is_empty() {
        return Err(Error::SymmetryMismatch("symmetry center is not a grid node".into()));
    }
    let spec = &f.spec;
    let ci = ((group.center[0] - spec.origin[0]) / spec.h).round() as i64;
    let cj = ((group.center[1] - spec.origin[1]) / spec.h).round() as i64;
    let inv = 1.0 / mats.len() as f64;
    let mut out = f.clone();
    for idx in 0..f.num_nodes() {
        let (i, j) = spec.unflatten(idx);
        let (di, dj) = (i as i64 - ci, j as i64 - cj);
        let mut acc = [0.0f64; 2];
        for mat in &mats {
            // g^{-1} = g^T for orthogonal g
            let si = ci + (mat[0][0] * di as f64 + mat[1][0] * dj as f64).round() as i64;
            let sj = cj + (mat[0][1] * di as f64 + mat[1][1] * dj as f64).round() as i64;
            let src = spec.flatten(si as usize, sj as usize);
            let v = apply(mat, f.node(src));
            acc[0] += v[0];
            acc[1] += v[1];
        }
        out.node_mut(idx).copy_from_slice(&[acc[0] * inv, acc[1] * inv]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Potential {
        Potential::with_constant_g(Potential::unit_circle_wells(3), 1.0, 1.0).unwrap()
    }

    #[test]
    fn constant_init_freezes_ring() {
        let p = tri();
        let spec = GridSpec::centered(2, 16, 1.0).unwrap();
        let f = init_field(spec, &p, &InitMode::Constant { well: 0 }).unwrap();
        assert!(f.values.chunks(2).all(|v| v == p.well(0)));
        let frozen = f.dirichlet.iter().filter(|&&b| b).count();
        assert_eq!(frozen, 16 * 16 - 14 * 14);
    }

    #[test]
    fn sector_membership_by_angle() {
        let p = tri();
        let v = sector_value(
            &p,
            [10f64.to_radians().cos(), 10f64.to_radians().sin()],
            2,
            &[0.0, 0.0],
            0.0,
            None,
        );
        assert_eq!(v, p.well(0));
        let v = sector_value(
            &p,
            [(-170f64).to_radians().cos(), (-170f64).to_radians().sin()],
            2,
            &[0.0, 0.0],
            0.0,
            None,
        );
        assert_eq!(v, p.well(2));
        let v = sector_value(
            &p,
            [(170f64).to_radians().cos(), (170f64).to_radians().sin()],
            2,
            &[0.0, 0.0],
            0.0,
            None,
        );
        assert_eq!(v, p.well(1));
    }

    #[test]
    fn random_init_is_deterministic() {
        let p = tri();
        let spec = GridSpec::centered(2, 12, 1.0).unwrap();
        let mode = InitMode::Random {
            seed: 7,
            boundary: None,
        };
        let a = init_field(spec.clone(), &p, &mode).unwrap();
        let b = init_field(spec.clone(), &p, &mode).unwrap();
        assert_eq!(a, b);
        let c = init_field(
            spec,
            &p,
            &InitMode::Random {
                seed: 8,
                boundary: None,
            },
        )
        .unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn bad_init_without_wells() {
        let one = Potential::with_constant_g(vec![vec![0.0]], 1.0, 1.0).unwrap();
        let spec = GridSpec::centered(2, 8, 1.0).unwrap();
        let e = init_field(
            spec,
            &one,
            &InitMode::SectorWells {
                center: None,
                offset_deg: 0.0,
            },
        );
        assert!(matches!(e, Err(Error::BadInit(_))));
    }

    #[test]
    fn symmetrize_is_a_projection() {
        let p = tri();
        let spec = GridSpec::centered(2, 17, 1.0).unwrap();
        let g = SymmetryGroup {
            kind: SymmetryKind::TriangleC3v,
            center: vec![0.0, 0.0],
        };
        let perm = WellPermutation::unit_triangle();
        let f = init_field(
            spec.clone(),
            &p,
            &InitMode::Random {
                seed: 3,
                boundary: None,
            },
        )
        .unwrap();
        let once = symmetrize(&f, &p, &g, &perm).unwrap();
        let twice = symmetrize(&once, &p, &g, &perm).unwrap();
        assert!(once.max_abs_diff(&twice) <= 1e-13);

        let sector = init_field(
            spec.clone(),
            &p,
            &InitMode::SectorWells {
                center: None,
                offset_deg: 0.0,
            },
        )
        .unwrap();
        let s = symmetrize(&sector, &p, &g, &perm).unwrap();
        assert!(sector.max_abs_diff(&s) <= 1e-15);

        // a constant field at a well moved by the reflection averages with its image
        let c = init_field(spec, &p, &InitMode::Constant { well: 1 }).unwrap();
        let s = symmetrize(&c, &p, &g, &perm).unwrap();
        for v in s.values.chunks(2) {
            assert!((v[0] + 0.5).abs() < 1e-15 && v[1].abs() < 1e-15);
        }
    }

    #[test]
    fn symmetrize_rejects_bad_permutation() {
        let p = tri();
        let spec = GridSpec::centered(2, 9, 1.0).unwrap();
        let f = init_field(spec, &p, &InitMode::Constant { well: 0 }).unwrap();
        let g = SymmetryGroup {
            kind: SymmetryKind::TriangleC3v,
            center: vec![0.0, 0.0],
        };
        let perm = WellPermutation {
            rotation: vec![2, 0, 1],
            reflection: vec![0, 2, 1],
        };
        assert!(matches!(symmetrize(&f, &p, &g, &perm), Err(Error::SymmetryMismatch(_))));
    }

    #[test]
    fn only_grid_preserving_elements_are_admissible() {
        let spec = GridSpec::centered(2, 9, 1.0).unwrap();
        let els = admissible_elements(&spec, &[0.0, 0.0]);
        assert_eq!(els.len(), 2);
    }
}
