//! Distance-to-wells field, diffuse interface measures, contact labels,
//! discrete free-boundary length and log-log scaling fits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{chunked_fold, Exec};
use crate::grid::{GridSpec, VectorField};
use crate::potential::Potential;

/// Per-node distance to the nearest well. Wells are indexed from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaGrid {
    pub spec: GridSpec,
    pub delta: Vec<f64>,
    pub nearest_well: Vec<usize>,
    pub num_wells: usize,
}

pub fn delta_field(f: &VectorField, p: &Potential) -> DeltaGrid {
    let (nearest_well, delta) = (0..f.num_nodes()).map(|idx| p.well_distance(f.node(idx))).unzip();
    DeltaGrid {
        spec: f.spec.clone(),
        delta,
        nearest_well,
        num_wells: p.num_wells(),
    }
}

/// Contact labels: 0 on the diffuse interface, `i + 1` where the node sits
/// exactly on well `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGrid {
    pub spec: GridSpec,
    pub labels: Vec<u32>,
    pub num_wells: usize,
}

pub fn contact_labels(d: &DeltaGrid) -> LabelGrid {
    let labels = d
        .delta
        .iter()
        .zip(&d.nearest_well)
        .map(|(&dl, &w)| if dl == 0.0 { w as u32 + 1 } else { 0 })
        .collect();
    LabelGrid {
        spec: d.spec.clone(),
        labels,
        num_wells: d.num_wells,
    }
}

impl LabelGrid {
    /// Label grid with room for `num_wells` wells, e.g. for synthetic data.
    pub fn new(spec: GridSpec, labels: Vec<u32>, num_wells: usize) -> Result<Self> {
        if labels.len() != spec.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} nodes",
                labels.len(),
                spec.num_nodes()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l as usize > num_wells) {
            return Err(Error::InvalidArgument(format!("label {l} exceeds the well count")));
        }
        Ok(Self {
            spec,
            labels,
            num_wells,
        })
    }
}

/// Least-squares line through `(log r, log v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Points dropped because the value was not positive.
    pub dropped: usize,
}

pub fn scaling_fit(radii: &[f64], values: &[f64]) -> Result<Fit> {
    loglog_fit(radii, values, 4)
}

/// Least-squares line through `(ln x, ln y)` over the positive pairs; needs
/// at least `min_points` of them.
pub fn loglog_fit(radii: &[f64], values: &[f64], min_points: usize) -> Result<Fit> {
    if radii.len() != values.len() {
        return Err(Error::InvalidArgument(format!(
            "{} radii but {} values",
            radii.len(),
            values.len()
        )));
    }
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(values)
        .filter(|(r, v)| **r > 0.0 && **v > 0.0 && v.is_finite())
        .map(|(r, v)| (r.ln(), v.ln()))
        .collect();
    if pts.len() < min_points.max(2) {
        return Err(Error::DegenerateFit {
            positive: pts.len(),
            needed: min_points.max(2),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all radii are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(Fit {
        slope,
        intercept,
        r2,
        dropped: radii.len() - pts.len(),
    })
}

/// Measures inside one ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusRow {
    pub r: f64,
    pub measure_i0: f64,
    /// One entry per requested gamma, `{delta >= gamma}`.
    pub measure_igamma: Vec<f64>,
    /// Contact measure per well.
    pub contact: Vec<f64>,
    pub boundary_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterfaceReport {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub gammas: Vec<f64>,
    pub rows: Vec<RadiusRow>,
    pub fit_i0: Option<Fit>,
    pub fit_igamma: Vec<Option<Fit>>,
    pub fit_boundary: Option<Fit>,
}

/// Default gamma ladder `{0.4, 0.2, 0.1, 0.05} * r0_well`.
pub fn default_gammas(p: &Potential) -> Vec<f64> {
    let r0 = if p.r0_well().is_finite() { p.r0_well() } else { 1.0 };
    [0.4, 0.2, 0.1, 0.05].iter().map(|g| g * r0).collect()
}

fn node_dist(spec: &GridSpec, idx: usize, center: &[f64]) -> f64 {
    let x = spec.coords(idx);
    (0..spec.n).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>().sqrt()
}

fn check_radii(spec: &GridSpec, center: &[f64], radii: &[f64]) -> Result<Vec<f64>> {
    if center.len() != spec.n {
        return Err(Error::InvalidArgument(format!(
            "center has {} coordinates, grid is {}D",
            center.len(),
            spec.n
        )));
    }
    let room = spec.inner_radius(center) + 1e-9 * spec.h;
    let mut out = radii.to_vec();
    for &r in &out {
        if !(r > 0.0) || r > room {
            return Err(Error::RadiusOutOfGrid { radius: r });
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Integer node counts per radius: for each node the first ball that
/// contains it is found once, then counts are accumulated outward.
fn ball_counts(
    spec: &GridSpec,
    center: &[f64],
    radii: &[f64],
    slots: usize,
    slot_of: impl Fn(usize, &mut dyn FnMut(usize)) + Sync + Send,
) -> Vec<Vec<u64>> {
    let k = radii.len();
    let bins = chunked_fold(
        Exec::default(),
        spec.num_nodes(),
        vec![0u64; k * slots],
        |r| {
            let mut b = vec![0u64; k * slots];
            for idx in r {
                let d = node_dist(spec, idx, center);
                let first = radii.partition_point(|&rr| rr < d);
                if first == k {
                    continue;
                }
                slot_of(idx, &mut |s| b[first * slots + s] += 1);
            }
            b
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    );
    let mut out = vec![vec![0u64; slots]; k];
    let mut acc = vec![0u64; slots];
    for i in 0..k {
        for s in 0..slots {
            acc[s] += bins[i * slots + s];
        }
        out[i].clone_from(&acc);
    }
    out
}

/// Node-counting measures of `I_0`, `I_gamma` and the contact sets inside
/// `B_r(center)`; ball membership by node distance `<= r`. The boundary
/// length column is left at 0 (see [`interface_report`]).
pub fn interface_measures(d: &DeltaGrid, center: &[f64], radii: &[f64], gammas: &[f64]) -> Result<InterfaceReport> {
    let spec = &d.spec;
    let radii = check_radii(spec, center, radii)?;
    let wells = d.num_wells;
    let ng = gammas.len();
    // slots: I_0, one per gamma, one per well
    let slots = 1 + ng + wells;
    let counts = ball_counts(spec, center, &radii, slots, |idx, add| {
        let dl = d.delta[idx];
        if dl > 0.0 {
            add(0);
            for (g, &gamma) in gammas.iter().enumerate() {
                if dl >= gamma {
                    add(1 + g);
                }
            }
        } else {
            add(1 + ng + d.nearest_well[idx]);
        }
    });
    let vol = spec.cell_volume();
    let rows = radii
        .iter()
        .zip(&counts)
        .map(|(&r, c)| RadiusRow {
            r,
            measure_i0: c[0] as f64 * vol,
            measure_igamma: c[1..1 + ng].iter().map(|&v| v as f64 * vol).collect(),
            contact: c[1 + ng..].iter().map(|&v| v as f64 * vol).collect(),
            boundary_length: 0.0,
        })
        .collect();
    Ok(InterfaceReport {
        center: center.to_vec(),
        radii,
        gammas: gammas.to_vec(),
        rows,
        fit_i0: None,
        fit_igamma: vec![None; ng],
        fit_boundary: None,
    })
}

/// Measures, boundary lengths and log-log fits in one report.
pub fn interface_report(d: &DeltaGrid, center: &[f64], radii: &[f64], gammas: &[f64]) -> Result<InterfaceReport> {
    let mut rep = interface_measures(d, center, radii, gammas)?;
    let labels = contact_labels(d);
    let lengths = boundary_length(&labels, center, &rep.radii);
    for (row, l) in rep.rows.iter_mut().zip(lengths) {
        row.boundary_length = l;
    }
    let col = |f: &dyn Fn(&RadiusRow) -> f64| rep.rows.iter().map(f).collect::<Vec<f64>>();
    rep.fit_i0 = scaling_fit(&rep.radii, &col(&|r| r.measure_i0)).ok();
    rep.fit_boundary = scaling_fit(&rep.radii, &col(&|r| r.boundary_length)).ok();
    rep.fit_igamma = (0..gammas.len())
        .map(|g| scaling_fit(&rep.radii, &col(&|r| r.measure_igamma[g])).ok())
        .collect();
    Ok(rep)
}

/// Line segment of the discrete contour.
type Segment = [[f64; 2]; 2];

/// Marching-squares contour of the indicator `label != 0`, with crossings
/// at edge midpoints. Saddle cells cut off their two contact corners.
pub fn contour_segments(labels: &LabelGrid) -> Vec<Segment> {
    let spec = &labels.spec;
    assert_eq!(spec.n, 2, "contours need a 2D grid");
    let (nx, ny) = (spec.extents[0], spec.extents[1]);
    let h = spec.h;
    let on = |i: usize, j: usize| labels.labels[spec.flatten(i, j)] != 0;
    let mut segs = Vec::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            // corners counter-clockwise from (i, j)
            let c = [on(i, j), on(i + 1, j), on(i + 1, j + 1), on(i, j + 1)];
            let ones = c.iter().filter(|&&b| b).count();
            if ones == 0 || ones == 4 {
                continue;
            }
            let x0 = spec.origin[0] + i as f64 * h;
            let y0 = spec.origin[1] + j as f64 * h;
            let corner = |k: usize| -> [f64; 2] {
                let (dx, dy) = [(0.0, 0.0), (h, 0.0), (h, h), (0.0, h)][k];
                [x0 + dx, y0 + dy]
            };
            let mid = |a: usize, b: usize| -> [f64; 2] {
                let (p, q) = (corner(a), corner(b));
                [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
            };
            // crossing points on the four cell edges
            let crossings: Vec<[f64; 2]> = (0..4)
                .filter(|&k| c[k] != c[(k + 1) % 4])
                .map(|k| mid(k, (k + 1) % 4))
                .collect();
            if crossings.len() == 2 {
                segs.push([crossings[0], crossings[1]]);
            } else {
                // saddle: cut around each contact corner
                for k in 0..4 {
                    if c[k] {
                        segs.push([mid((k + 3) % 4, k), mid(k, (k + 1) % 4)]);
                    }
                }
            }
        }
    }
    segs
}

/// Length of the part of a segment inside the closed disk.
fn clipped_length(s: &Segment, center: &[f64], r: f64) -> f64 {
    let d = [s[1][0] - s[0][0], s[1][1] - s[0][1]];
    let f = [s[0][0] - center[0], s[0][1] - center[1]];
    let a = d[0] * d[0] + d[1] * d[1];
    let len = a.sqrt();
    if a == 0.0 {
        return 0.0;
    }
    let b = 2.0 * (f[0] * d[0] + f[1] * d[1]);
    let c = f[0] * f[0] + f[1] * f[1] - r * r;
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let t0 = ((-b - sq) / (2.0 * a)).max(0.0);
    let t1 = ((-b + sq) / (2.0 * a)).min(1.0);
    (t1 - t0).max(0.0) * len
}

/// Discrete free-boundary length inside each ball. In 2D this is the
/// marching-squares contour length of the interface/contact transition,
/// clipped to the ball; in 1D it is the number of contact nodes next to an
/// interface node.
pub fn boundary_length(labels: &LabelGrid, center: &[f64], radii: &[f64]) -> Vec<f64> {
    let spec = &labels.spec;
    if spec.n == 1 {
        let nx = spec.extents[0];
        let fb: Vec<usize> = (0..nx)
            .filter(|&i| {
                labels.labels[i] != 0
                    && ((i > 0 && labels.labels[i - 1] == 0) || (i + 1 < nx && labels.labels[i + 1] == 0))
            })
            .collect();
        return radii
            .iter()
            .map(|&r| fb.iter().filter(|&&i| node_dist(spec, i, center) <= r).count() as f64)
            .collect();
    }
    let segs = contour_segments(labels);
    radii
        .iter()
        .map(|&r| segs.iter().map(|s| clipped_length(s, center, r)).sum())
        .collect()
}

/// Number of grid edges joining an interface node to a contact node.
pub fn transition_edge_count(labels: &LabelGrid) -> usize {
    let spec = &labels.spec;
    let mut count = 0;
    for idx in 0..spec.num_nodes() {
        let a = labels.labels[idx] != 0;
        for nb in spec.neighbors(idx) {
            if nb > idx && (labels.labels[nb] != 0) != a {
                count += 1;
            }
        }
    }
    count
}

/// Outcome of the two-phase coexistence check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoPhaseReport {
    pub radii: Vec<f64>,
    /// Per radius, contact measures of all wells sorted in decreasing order.
    pub phase_measures: Vec<Vec<f64>>,
    pub c_floor: f64,
    /// Index of the first radius where the second phase reaches the floor.
    pub first_pass: Option<usize>,
    pub pass: bool,
}

impl TwoPhaseReport {
    pub fn top_two(&self, k: usize) -> (f64, f64) {
        let m = &self.phase_measures[k];
        (m.first().copied().unwrap_or(0.0), m.get(1).copied().unwrap_or(0.0))
    }
}

pub fn two_phase_check(labels: &LabelGrid, center: &[f64], radii: &[f64], c_floor: f64) -> Result<TwoPhaseReport> {
    let spec = &labels.spec;
    let radii = check_radii(spec, center, radii)?;
    let wells = labels.num_wells.max(2);
    let counts = ball_counts(spec, center, &radii, wells, |idx, add| {
        let l = labels.labels[idx];
        if l != 0 {
            add(l as usize - 1);
        }
    });
    let vol = spec.cell_volume();
    let phase_measures: Vec<Vec<f64>> = counts
        .iter()
        .map(|c| {
            let mut m: Vec<f64> = c.iter().map(|&v| v as f64 * vol).collect();
            m.sort_by(|a, b| b.total_cmp(a));
            m
        })
        .collect();
    let n = spec.n as i32;
    let ok: Vec<bool> = radii
        .iter()
        .zip(&phase_measures)
        .map(|(&r, m)| m[1] >= c_floor * r.powi(n))
        .collect();
    let first_pass = ok.iter().position(|&b| b);
    let pass = first_pass.is_some_and(|f| ok[f..].iter().all(|&b| b));
    Ok(TwoPhaseReport {
        radii,
        phase_measures,
        c_floor,
        first_pass,
        pass,
    })
}
