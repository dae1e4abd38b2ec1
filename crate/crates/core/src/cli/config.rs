//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::census::DEFAULT_EPSILON;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, InitMode};
use crate::minimizer::MinimizeConfig;
use crate::potential::{ModulationSpec, Potential};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub init: Option<InitMode>,
    #[serde(default)]
    pub minimize: Option<MinimizeConfig>,
    /// Solve on a ladder of coarser grids first, down to this many nodes per axis.
    #[serde(default)]
    pub cascade_coarsest: Option<usize>,
    /// Analyze this snapshot instead of minimizing (relative to the config file).
    #[serde(default)]
    pub snapshot: Option<PathBuf>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub connect1d: Option<Connect1dConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Seeds the minimizer and any random initial field.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub wells: Vec<Vec<f64>>,
    pub alpha: f64,
    #[serde(default)]
    pub modulation: ModulationSpec,
    /// Defaults to the infimum of the modulation.
    #[serde(default)]
    pub g_lower_bound: Option<f64>,
}

/// Either a centered square/interval (`nodes`, `half_width`) or explicit
/// `extents`, `h` and `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default)]
    pub extents: Option<Vec<usize>>,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub origin: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RadiiConfig {
    /// Defaults to `8h`.
    #[serde(default)]
    pub r_min: Option<f64>,
    /// Defaults to the largest radius that fits.
    #[serde(default)]
    pub r_max: Option<f64>,
    /// Explicit radii (overrides the ladder).
    #[serde(default)]
    pub list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Ball center; defaults to the grid center.
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default)]
    pub radii: RadiiConfig,
    #[serde(default)]
    pub gammas: Option<Vec<f64>>,
    #[serde(default = "default_c_floor")]
    pub c_floor: f64,
    /// Ball radius for the exact-attainment fraction, as a fraction of the
    /// grid half-width.
    #[serde(default = "default_core_fraction")]
    pub core_radius_fraction: f64,
    #[serde(default)]
    pub weiss: WeissConfig,
    #[serde(default)]
    pub growth: GrowthConfig,
    #[serde(default)]
    pub census: CensusRunConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            center: None,
            radii: RadiiConfig::default(),
            gammas: None,
            c_floor: default_c_floor(),
            core_radius_fraction: default_core_fraction(),
            weiss: WeissConfig::default(),
            growth: GrowthConfig::default(),
            census: CensusRunConfig::default(),
        }
    }
}

fn default_c_floor() -> f64 {
    0.15
}

fn default_core_fraction() -> f64 {
    0.4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct WeissConfig {
    /// Probe targets; each is moved to the nearest free-boundary node unless
    /// `exact_points` is set.
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub exact_points: bool,
    #[serde(default)]
    pub radii: RadiiConfig,
    /// In `--check` mode, also require `max W - min W <= 1e-3`.
    #[serde(default)]
    pub expect_constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GrowthConfig {
    /// The probe uses the free-boundary node nearest to this point
    /// (default: the analysis center).
    #[serde(default)]
    pub target: Option<Vec<f64>>,
    #[serde(default)]
    pub radii: RadiiConfig,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensusRunConfig {
    /// Cube side; defaults to the non-degeneracy choice.
    #[serde(default)]
    pub l: Option<f64>,
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

impl Default for CensusRunConfig {
    fn default() -> Self {
        Self {
            l: None,
            ks: default_ks(),
            theta: None,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

fn default_ks() -> Vec<usize> {
    vec![4, 8, 16]
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Connect1dConfig {
    #[serde(default)]
    pub from_well: usize,
    #[serde(default = "one")]
    pub to_well: usize,
    pub half_length: f64,
    pub nodes: usize,
    #[serde(default)]
    pub growth_tol: Option<f64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Alpha,
    /// Grid spacing; the node count follows from the half-width.
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepTask {
    Minimize,
    Connect1d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    #[serde(default = "default_task")]
    pub task: SweepTask,
}

fn default_task() -> SweepTask {
    SweepTask::Minimize
}

fn cfg_err(path: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        msg: msg.into(),
    }
}

/// Parses a config document; serde errors carry the JSON key path.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        cfg_err(if path.is_empty() { "." } else { &path }, e.into_inner().to_string())
    })
}

pub fn load_config(path: &Path) -> Result<(RunConfig, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| cfg_err(".", "config is not UTF-8"))?;
    let cfg = parse_config(text)?;
    cfg.validate()?;
    Ok((cfg, bytes))
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(cfg_err(path, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    /// Semantic checks beyond the JSON shape.
    pub fn validate(&self) -> Result<()> {
        let pc = &self.potential;
        if pc.wells.is_empty() {
            return Err(cfg_err("potential.wells", "needs at least one well"));
        }
        if !(pc.alpha > 0.0 && pc.alpha <= 2.0) {
            return Err(cfg_err(
                "potential.alpha",
                format!("must lie in (0, 2], got {}", pc.alpha),
            ));
        }
        if let Some(g) = pc.g_lower_bound {
            positive("potential.g_lower_bound", g)?;
        }
        self.grid_spec()?;
        if let Some(m) = &self.minimize {
            positive("minimize.grad_tol", m.grad_tol)?;
            if let Some(s) = m.snap_tol {
                positive("minimize.snap_tol", s)?;
            }
        }
        let a = &self.analysis;
        positive("analysis.c_floor", a.c_floor)?;
        positive("analysis.core_radius_fraction", a.core_radius_fraction)?;
        for (name, r) in [
            ("analysis.radii", &a.radii),
            ("analysis.weiss.radii", &a.weiss.radii),
            ("analysis.growth.radii", &a.growth.radii),
        ] {
            for (k, v) in [("r_min", r.r_min), ("r_max", r.r_max)] {
                if let Some(v) = v {
                    positive(&format!("{name}.{k}"), v)?;
                }
            }
            if let Some(list) = &r.list {
                for (i, &v) in list.iter().enumerate() {
                    positive(&format!("{name}.list[{i}]"), v)?;
                }
            }
        }
        let c = &a.census;
        if !(c.epsilon > 0.0 && c.epsilon < 0.5) {
            return Err(cfg_err("analysis.census.epsilon", "must lie in (0, 1/2)"));
        }
        if let Some(l) = c.l {
            positive("analysis.census.l", l)?;
        }
        if c.ks.is_empty() || c.ks.windows(2).any(|w| w[1] <= w[0]) || c.ks[0] == 0 {
            return Err(cfg_err(
                "analysis.census.ks",
                "must be a nonempty increasing list of positive integers",
            ));
        }
        if let Some(cc) = &self.connect1d {
            positive("connect1d.half_length", cc.half_length)?;
            if cc.nodes < 9 {
                return Err(cfg_err("connect1d.nodes", "needs at least 9 nodes"));
            }
            let nw = pc.wells.len();
            if cc.from_well >= nw || cc.to_well >= nw || cc.from_well == cc.to_well {
                return Err(cfg_err(
                    "connect1d",
                    "from_well and to_well must be distinct well indices",
                ));
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(cfg_err("sweep.values", "must not be empty"));
            }
            for (i, &v) in s.values.iter().enumerate() {
                positive(&format!("sweep.values[{i}]"), v)?;
            }
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<Potential> {
        let pc = &self.potential;
        let m = pc.wells[0].len();
        let lb = pc.g_lower_bound.unwrap_or_else(|| pc.modulation.lower_bound());
        Potential::new(pc.wells.clone(), pc.alpha, pc.modulation.build(m), lb)
            .map_err(|e| cfg_err("potential", e.to_string()))
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let g = &self.grid;
        if g.n != 1 && g.n != 2 {
            return Err(cfg_err("grid.n", format!("must be 1 or 2, got {}", g.n)));
        }
        let spec = match (g.nodes, g.half_width, &g.extents, g.h) {
            (Some(nodes), Some(hw), None, None) => {
                positive("grid.half_width", hw)?;
                if nodes < 3 {
                    return Err(cfg_err("grid.nodes", "needs at least 3 nodes"));
                }
                GridSpec::centered(g.n, nodes, hw)
            }
            (None, None, Some(ext), Some(h)) => {
                positive("grid.h", h)?;
                if ext.len() != g.n {
                    return Err(cfg_err("grid.extents", "needs one entry per axis"));
                }
                let origin = g.origin.clone().unwrap_or_else(|| vec![0.0; g.n]);
                if origin.len() != g.n {
                    return Err(cfg_err("grid.origin", "needs one entry per axis"));
                }
                GridSpec::new(ext.clone(), h, origin)
            }
            _ => {
                return Err(cfg_err(
                    "grid",
                    "give either nodes and half_width, or extents and h (with optional origin)",
                ))
            }
        };
        spec.map_err(|e| cfg_err("grid", e.to_string()))
    }

    pub fn init_mode(&self) -> InitMode {
        self.init.clone().unwrap_or(InitMode::SectorWells {
            center: None,
            offset_deg: 0.0,
        })
    }

    pub fn minimize_config(&self) -> MinimizeConfig {
        let mut m = self
            .minimize
            .clone()
            .unwrap_or_else(|| MinimizeConfig::new(1e-7, 20_000));
        m.seed = self.seed;
        m
    }

    /// Copy of the config with one sweep parameter replaced.
    pub fn with_parameter(&self, param: SweepParameter, value: f64) -> Result<RunConfig> {
        let mut c = self.clone();
        c.sweep = None;
        match param {
            SweepParameter::Alpha => c.potential.alpha = value,
            SweepParameter::H => {
                if let Some(cc) = &mut c.connect1d {
                    cc.nodes = (2.0 * cc.half_length / value).round() as usize + 1;
                }
                match (c.grid.nodes, c.grid.half_width) {
                    (Some(_), Some(hw)) => c.grid.nodes = Some((2.0 * hw / value).round() as usize + 1),
                    _ => {
                        let (ext, h) = (c.grid.extents.clone().unwrap_or_default(), c.grid.h.unwrap_or(value));
                        c.grid.extents = Some(
                            ext.iter()
                                .map(|&e| (((e - 1) as f64 * h) / value).round() as usize + 1)
                                .collect(),
                        );
                        c.grid.h = Some(value);
                    }
                }
            }
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OBSTACLE: &str = r#"{
        "potential": {"wells": [[0.0]], "alpha": 1.0},
        "grid": {"n": 1, "extents": [257], "h": 0.00390625},
        "init": {"mode": "ramp", "from": [0.0], "to": [0.125]}
    }"#;

    #[test]
    fn parses_obstacle_config() {
        let c = parse_config(OBSTACLE).unwrap();
        c.validate().unwrap();
        assert_eq!(c.grid_spec().unwrap().extents, vec![257]);
        assert_eq!(c.potential().unwrap().num_wells(), 1);
    }

    #[test]
    fn omitted_analysis_keeps_defaults() {
        let c = parse_config(r#"{"potential": {"wells": [[0.0], [1.0]], "alpha": 1.0}, "grid": {"n": 1, "nodes": 65, "half_width": 2.0}}"#).unwrap();
        c.validate().unwrap();
        assert_eq!(c.analysis.c_floor, 0.15);
        assert_eq!(c.analysis.core_radius_fraction, 0.4);
        assert_eq!(c.analysis.census.ks, vec![4, 8, 16]);
    }

    #[test]
    fn negative_h_names_its_key() {
        let bad = OBSTACLE.replace("0.00390625", "-0.1");
        let c = parse_config(&bad).unwrap();
        match c.validate() {
            Err(Error::Config { path, .. }) => assert_eq!(path, "grid.h"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shape_errors_carry_paths() {
        let bad = OBSTACLE.replace("\"alpha\": 1.0", "\"alpha\": \"one\"");
        match parse_config(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "potential.alpha"),
            other => panic!("{other:?}"),
        }
        let unknown = OBSTACLE.replace("\"n\": 1,", "\"n\": 1, \"spacing\": 2,");
        assert!(matches!(parse_config(&unknown), Err(Error::Config { .. })));
    }

    #[test]
    fn h_sweep_rescales_nodes() {
        let c = parse_config(OBSTACLE).unwrap();
        let d = c.with_parameter(SweepParameter::H, 1.0 / 128.0).unwrap();
        assert_eq!(d.grid_spec().unwrap().extents, vec![129]);
    }
}
