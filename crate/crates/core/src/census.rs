//! Sub-cube decomposition of `[-kL, kL)^n` around a center node and the
//! five-class census of phase occupation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_ordered, Exec};
use crate::grid::VectorField;
use crate::interface::{loglog_fit, Fit};
use crate::potential::Potential;

pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusConfig {
    /// Cube side, a multiple of `h`.
    pub l: f64,
    /// Half the number of cubes per axis.
    pub k: usize,
    pub theta: f64,
    pub epsilon: f64,
    /// Must be a grid node.
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CubeClass {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl CubeClass {
    pub fn slot(self) -> usize {
        match self {
            CubeClass::T1 => 0,
            CubeClass::T2 => 1,
            CubeClass::T3 => 2,
            CubeClass::T4 => 3,
            CubeClass::T5 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        ["T1", "T2", "T3", "T4", "T5"][self.slot()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cube {
    pub index: usize,
    /// Cube coordinates in `0..2k` (second entry 0 in 1D).
    pub coords: [usize; 2],
    /// Measure of `{|u - a_j| < theta/2}` in the cube, per well.
    pub sigma: Vec<f64>,
    pub class: CubeClass,
    /// Well with the largest `sigma` for T4/T5 cubes.
    pub dominant: Option<usize>,
    /// Measure of `{u = a_dominant}` (0 without a dominant well).
    pub contact: f64,
    /// `max |u - a_dominant|` over the cube's nodes.
    pub max_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubeCensus {
    pub k: usize,
    pub l: f64,
    pub n: usize,
    pub epsilon: f64,
    pub theta: f64,
    pub cubes: Vec<Cube>,
    /// `|T1|..|T5|`.
    pub totals: [usize; 5],
    /// T4/T5 cubes whose dominant-well deviation reaches `theta`.
    pub theta_violations: usize,
}

impl CubeCensus {
    pub fn count(&self, c: CubeClass) -> usize {
        self.totals[c.slot()]
    }

    /// `|T2| + |T3| + |T5|`.
    pub fn transition_count(&self) -> usize {
        self.totals[1] + self.totals[2] + self.totals[4]
    }
}

struct Layout {
    n: usize,
    /// Nodes per cube side.
    side: usize,
    per_axis: usize,
    /// First node index along each axis.
    start: [usize; 2],
}

fn layout(f: &VectorField, cfg: &CensusConfig) -> Result<Layout> {
    let spec = &f.spec;
    if !(cfg.epsilon > 0.0 && cfg.epsilon < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {} not in (0, 1/2)",
            cfg.epsilon
        )));
    }
    if cfg.k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let ratio = cfg.l / spec.h;
    let side = ratio.round();
    if side < 1.0 || (ratio - side).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "cube side {} is not a multiple of h",
            cfg.l
        )));
    }
    let side = side as usize;
    let per_axis = 2 * cfg.k;
    let mut start = [0usize; 2];
    for a in 0..spec.n {
        let t = (cfg.center[a] - spec.origin[a]) / spec.h;
        let c = t.round();
        if (t - c).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(Error::InvalidArgument("census center is not a grid node".into()));
        }
        let half = cfg.k * side;
        if c < half as f64 || c as usize + half > spec.extents[a] {
            return Err(Error::GridTooSmall(format!(
                "{per_axis} cubes of {side} nodes around node {c} do not fit {} nodes",
                spec.extents[a]
            )));
        }
        start[a] = c as usize - half;
    }
    Ok(Layout {
        n: spec.n,
        side,
        per_axis,
        start,
    })
}

fn sq_dist(u: &[f64], a: &[f64]) -> f64 {
    u.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Node indices of cube `(ci, cj)`.
fn cube_nodes<'a>(f: &'a VectorField, lay: &'a Layout, ci: usize, cj: usize) -> impl Iterator<Item = usize> + 'a {
    let i0 = lay.start[0] + ci * lay.side;
    let j0 = lay.start[1] + cj * lay.side;
    let jn = if lay.n == 1 { 1 } else { lay.side };
    (0..jn).flat_map(move |dj| (0..lay.side).map(move |di| f.spec.flatten(i0 + di, j0 + dj)))
}

/// Classifies every cube. Ties for the dominant well go to the lower index.
pub fn census(f: &VectorField, p: &Potential, cfg: &CensusConfig, exec: Exec) -> Result<CubeCensus> {
    let lay = layout(f, cfg)?;
    let nw = p.num_wells();
    let cell = f.spec.cell_volume();
    let half_sq = (0.5 * cfg.theta).powi(2);
    let cj_count = if lay.n == 1 { 1 } else { lay.per_axis };
    let ids: Vec<[usize; 2]> = (0..cj_count)
        .flat_map(|cj| (0..lay.per_axis).map(move |ci| [ci, cj]))
        .collect();

    // sigma table first; classes need every neighbour's row
    let sigma: Vec<Vec<f64>> = map_ordered(exec, &ids, |c| {
        let mut counts = vec![0usize; nw];
        for idx in cube_nodes(f, &lay, c[0], c[1]) {
            let u = f.node(idx);
            for (j, cnt) in counts.iter_mut().enumerate() {
                if sq_dist(u, p.well(j)) < half_sq {
                    *cnt += 1;
                }
            }
        }
        counts.iter().map(|&c| c as f64 * cell).collect()
    });

    let volume = (lay.side.pow(lay.n as u32)) as f64 * cell;
    let big = (1.0 - 2.0 * cfg.epsilon) * volume;
    let small = if nw > 1 {
        cfg.epsilon * volume / (nw - 1) as f64
    } else {
        f64::INFINITY
    };
    let per = lay.per_axis;
    let interior = |c: usize| c > 0 && c + 1 < per;

    let cubes: Vec<Cube> = map_ordered(exec, &(0..ids.len()).collect::<Vec<_>>(), |&index| {
        let [ci, cj] = ids[index];
        let s = &sigma[index];
        let mut j0 = 0;
        for j in 1..nw {
            if s[j] > s[j0] {
                j0 = j;
            }
        }
        let boundary = !interior(ci) || (lay.n == 2 && !interior(cj));
        let class = if boundary {
            CubeClass::T1
        } else if s[j0] > big {
            let dj: &[isize] = if lay.n == 1 { &[0] } else { &[-1, 0, 1] };
            let all_big = [-1isize, 0, 1].iter().all(|&di| {
                dj.iter().all(|&dj| {
                    let ni = (ci as isize + di) as usize;
                    let nj = (cj as isize + dj) as usize;
                    sigma[ni + per * nj][j0] > big
                })
            });
            if all_big {
                CubeClass::T4
            } else {
                CubeClass::T5
            }
        } else if (0..nw).any(|j| j != j0 && s[j] >= small) {
            CubeClass::T2
        } else {
            CubeClass::T3
        };
        let dominant = matches!(class, CubeClass::T4 | CubeClass::T5).then_some(j0);
        let (mut contact, mut max_dev) = (0.0, 0.0f64);
        if let Some(j) = dominant {
            for idx in cube_nodes(f, &lay, ci, cj) {
                let d = sq_dist(f.node(idx), p.well(j));
                if d == 0.0 {
                    contact += cell;
                }
                max_dev = max_dev.max(d.sqrt());
            }
        }
        Cube {
            index,
            coords: [ci, cj],
            sigma: s.clone(),
            class,
            dominant,
            contact,
            max_dev,
        }
    });

    let mut totals = [0usize; 5];
    let mut theta_violations = 0;
    for c in &cubes {
        totals[c.class.slot()] += 1;
        if c.dominant.is_some() && c.max_dev >= cfg.theta {
            theta_violations += 1;
        }
    }
    Ok(CubeCensus {
        k: cfg.k,
        l: cfg.l,
        n: lay.n,
        epsilon: cfg.epsilon,
        theta: cfg.theta,
        cubes,
        totals,
        theta_violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusScaling {
    pub ks: Vec<usize>,
    pub totals: Vec<[usize; 5]>,
    /// `|T2| + |T3| + |T5|` per `k`.
    pub transition: Vec<usize>,
    pub fit: Option<Fit>,
    /// No transition cubes at any `k`.
    pub vacuous: bool,
    pub theta_violations: usize,
    pub pass: bool,
}

/// Census for each `k` with a log-log fit of the transition count against
/// `k`; passes iff the slope is at most `(n - 1) + 0.3`.
pub fn census_scaling(
    f: &VectorField,
    p: &Potential,
    base: &CensusConfig,
    ks: &[usize],
    exec: Exec,
) -> Result<CensusScaling> {
    if ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("k list must increase".into()));
    }
    let mut totals = Vec::with_capacity(ks.len());
    let mut transition = Vec::with_capacity(ks.len());
    let mut theta_violations = 0;
    for &k in ks {
        let c = census(f, p, &CensusConfig { k, ..base.clone() }, exec)?;
        totals.push(c.totals);
        transition.push(c.transition_count());
        theta_violations += c.theta_violations;
    }
    let vacuous = transition.iter().all(|&t| t == 0);
    let kf: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let tf: Vec<f64> = transition.iter().map(|&t| t as f64).collect();
    let fit = if vacuous { None } else { loglog_fit(&kf, &tf, 2).ok() };
    let bound = (f.spec.n as f64 - 1.0) + 0.3;
    let pass = vacuous || fit.is_some_and(|ft| ft.slope <= bound);
    Ok(CensusScaling {
        ks: ks.to_vec(),
        totals,
        transition,
        fit,
        vacuous,
        theta_violations,
        pass,
    })
}

/// Smallest `L = 4 (2 theta / c)^((2 - alpha)/2)`, rounded up to a multiple
/// of `4h`.
pub fn select_cube_side(p: &Potential, c_nondeg: f64, theta: f64, h: f64) -> f64 {
    let raw = 4.0 * (2.0 * theta / c_nondeg).powf(0.5 * (2.0 - p.alpha()));
    let unit = 4.0 * h;
    (raw / unit * (1.0 - 1e-12)).ceil() * unit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn two_wells() -> Potential {
        Potential::with_constant_g(vec![vec![-1.0], vec![1.0]], 1.0, 1.0).unwrap()
    }

    fn field(nodes: usize, f: impl Fn([f64; 2]) -> f64) -> VectorField {
        let spec = GridSpec::centered(2, nodes, (nodes - 1) as f64 / 2.0).unwrap();
        VectorField::from_fn(spec, 1, |x| vec![f(x)])
    }

    fn cfg(k: usize, l: f64) -> CensusConfig {
        CensusConfig {
            l,
            k,
            theta: 0.9,
            epsilon: DEFAULT_EPSILON,
            center: vec![0.0, 0.0],
        }
    }

    #[test]
    fn constant_field_is_all_core() {
        let f = field(65, |_| 1.0);
        let c = census(&f, &two_wells(), &cfg(4, 4.0), Exec::Sequential).unwrap();
        assert_eq!(c.totals, [28, 0, 0, 36, 0]);
        assert_eq!(c.theta_violations, 0);
        assert!(c
            .cubes
            .iter()
            .filter(|c| c.class == CubeClass::T4)
            .all(|c| c.contact == 16.0));
    }

    #[test]
    fn vertical_interface() {
        // interface of width 1 at x in [0, 1)
        let f = field(65, |x| {
            if x[0] < 0.0 {
                -1.0
            } else if x[0] < 1.0 {
                0.0
            } else {
                1.0
            }
        });
        let c = census(&f, &two_wells(), &cfg(4, 4.0), Exec::Sequential).unwrap();
        let mid = c.transition_count();
        assert!((6..=30).contains(&mid), "{:?}", c.totals);
        assert_eq!(c.count(CubeClass::T1), 28);
        assert_eq!(c.totals.iter().sum::<usize>(), 64);
    }

    #[test]
    fn all_interface_is_t3() {
        let f = field(65, |_| 0.0);
        let c = census(&f, &two_wells(), &cfg(4, 4.0), Exec::Sequential).unwrap();
        assert_eq!(c.totals, [28, 0, 36, 0, 0]);
    }

    #[test]
    fn census_must_fit() {
        let f = field(33, |_| 1.0);
        assert!(matches!(
            census(&f, &two_wells(), &cfg(8, 4.0), Exec::Sequential),
            Err(Error::GridTooSmall(_))
        ));
        assert!(matches!(
            census(&f, &two_wells(), &cfg(2, 2.5), Exec::Sequential),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn census_in_one_dimension() {
        let spec = GridSpec::centered(1, 65, 32.0).unwrap();
        let f = VectorField::from_fn(spec, 1, |x| vec![if x[0] < 0.0 { -1.0 } else { 1.0 }]);
        let c = census(&f, &two_wells(), &cfg(4, 4.0), Exec::Sequential).unwrap();
        assert_eq!(c.totals, [2, 0, 0, 4, 2]);
    }

    #[test]
    fn scaling_of_straight_interface() {
        let f = field(129, |x| {
            if x[0] < 0.0 {
                -1.0
            } else if x[0] < 1.0 {
                0.0
            } else {
                1.0
            }
        });
        let s = census_scaling(&f, &two_wells(), &cfg(4, 4.0), &[4, 8, 16], Exec::Sequential).unwrap();
        let fit = s.fit.unwrap();
        assert_eq!(s.transition, vec![18, 42, 90]);
        assert!((fit.slope - 1.0).abs() < 0.25, "{fit:?}");
        assert!(s.pass);
        let flat = field(129, |_| 1.0);
        let v = census_scaling(&flat, &two_wells(), &cfg(4, 4.0), &[4, 8, 16], Exec::Sequential).unwrap();
        assert!(v.vacuous && v.pass && v.fit.is_none());
    }

    #[test]
    fn cube_side_examples() {
        let p = two_wells();
        let h = 1e-3;
        let l = select_cube_side(&p, 0.05625, 0.9, h);
        let raw = 4.0 * 32f64.sqrt();
        assert!(l >= raw && l < raw + 4.0 * h);
        assert!(((l / (4.0 * h)).round() - l / (4.0 * h)).abs() < 1e-9);
        let half = select_cube_side(&p, 0.05625, 0.45, 1e-9);
        assert!((l / half - 2f64.sqrt()).abs() < 1e-3);
        assert_eq!(select_cube_side(&p, 0.05625, 0.9, 1.0), 24.0);
    }
}
