//! Subcommand dispatch, artifacts and acceptance gates.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::config::{load_config, RadiiConfig, RunConfig, SweepTask};
use super::output::{loglog_svg, num, sha256_hex, Manifest, OutputDir, Series, Table};
use crate::census::{census_scaling, select_cube_side, CensusConfig, CubeClass};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::{init_field, GridSpec, InitMode, VectorField};
use crate::interface::{contact_labels, default_gammas, delta_field, interface_report, scaling_fit, two_phase_check};
use crate::minimizer::{connect_1d, minimize, minimize_cascade, Connection, MinimizeResult};
use crate::monotonicity::{
    ball_energy, free_boundary_node, growth_probe, radius_ladder, select_nondegeneracy_constants, weiss_trace,
    GrowthProbe, WeissTrace,
};
use crate::potential::Potential;
use crate::snapshot::{decode, encode, load_snapshot, Snapshot};

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "ACFB_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcommand {
    Minimize,
    Analyze,
    Weiss,
    Growth,
    Census,
    Connect1d,
    Sweep,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Minimize => "minimize",
            Subcommand::Analyze => "analyze",
            Subcommand::Weiss => "weiss",
            Subcommand::Growth => "growth",
            Subcommand::Census => "census",
            Subcommand::Connect1d => "connect1d",
            Subcommand::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub subcommand: Subcommand,
    pub config: PathBuf,
    pub check: bool,
    pub out: Option<PathBuf>,
    pub exec: Exec,
}

/// One acceptance threshold evaluated by a subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct Gate {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub detail: String,
}

fn gate(name: &str, pass: bool, value: f64, detail: impl Into<String>) -> Gate {
    Gate {
        name: name.into(),
        pass,
        value,
        detail: detail.into(),
    }
}

fn in_band(name: &str, v: Option<f64>, lo: f64, hi: f64) -> Gate {
    match v {
        Some(s) => gate(name, (lo..=hi).contains(&s), s, format!("slope in [{lo}, {hi}]")),
        None => gate(name, false, f64::NAN, "fit unavailable"),
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::ValidationFailure(_) | Error::BadInit(_) | Error::InvalidGrid(_) => EXIT_CONFIG,
        Error::NonFiniteEnergy { .. } => EXIT_NUMERICAL,
        _ => EXIT_OTHER,
    }
}

/// Output directory: `--out`, then the environment override, then the
/// config's `output_dir` (relative to the config file), then `acfb_out`.
fn resolve_out(opts: &RunOptions, cfg: &RunConfig) -> PathBuf {
    if let Some(o) = &opts.out {
        return o.clone();
    }
    if let Some(o) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(o);
    }
    let base = opts.config.parent().unwrap_or(Path::new("."));
    match &cfg.output_dir {
        Some(d) => base.join(d),
        None => PathBuf::from("acfb_out"),
    }
}

/// Runs one subcommand and returns the process exit code.
pub fn run(opts: &RunOptions) -> i32 {
    let start = Instant::now();
    let (cfg, bytes) = match load_config(&opts.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let out_path = resolve_out(opts, &cfg);
    let mut out = match OutputDir::create(&out_path) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_OTHER;
        }
    };
    let ctx = Ctx {
        cfg: &cfg,
        base: opts.config.parent().unwrap_or(Path::new(".")).to_path_buf(),
        exec: opts.exec,
    };
    let result = dispatch(opts.subcommand, &ctx, &mut out);
    let (code, check) = match &result {
        Err(e) => {
            eprintln!("error: {e}");
            (exit_code_for(e), None)
        }
        Ok(gates) => {
            let all = gates.iter().all(|g| g.pass);
            for g in gates {
                println!(
                    "{} {}: {:.6e} ({})",
                    if g.pass { "PASS" } else { "FAIL" },
                    g.name,
                    g.value,
                    g.detail
                );
            }
            let code = if opts.check && !all { EXIT_CHECK } else { EXIT_OK };
            (code, Some(all))
        }
    };
    if let Ok(gates) = &result {
        let mut t = Table::new(["gate", "pass", "value", "detail"]);
        for g in gates {
            t.row(vec![g.name.clone(), g.pass.to_string(), num(g.value), g.detail.clone()]);
        }
        if let Err(e) = out.table("checks.csv", &t) {
            eprintln!("error: {e}");
        }
    }
    let manifest = Manifest {
        tool: "acfb",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: opts.subcommand.name().into(),
        config_sha256: sha256_hex(&bytes),
        seed: cfg.seed,
        parallel: opts.exec.is_parallel(),
        exit_code: code,
        check: check.filter(|_| opts.check),
        wall_time_s: start.elapsed().as_secs_f64(),
        finished_unix_s: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        files: out.files().to_vec(),
        metadata: cfg.metadata.clone(),
    };
    let body = serde_json::to_string_pretty(&manifest).unwrap_or_default() + "\n";
    let mpath = out.path().join("manifest.json");
    if let Err(e) = std::fs::write(&mpath, body) {
        eprintln!("error: {}", Error::io(&mpath, e));
    }
    code
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    base: PathBuf,
    exec: Exec,
}

fn dispatch(sub: Subcommand, ctx: &Ctx, out: &mut OutputDir) -> Result<Vec<Gate>> {
    let p = ctx.cfg.potential()?;
    match sub {
        Subcommand::Minimize => cmd_minimize(ctx, &p, out),
        Subcommand::Analyze => cmd_analyze(ctx, &p, out),
        Subcommand::Weiss => cmd_weiss(ctx, &p, out),
        Subcommand::Growth => cmd_growth(ctx, &p, out),
        Subcommand::Census => cmd_census(ctx, &p, out),
        Subcommand::Connect1d => cmd_connect1d(ctx, &p, out),
        Subcommand::Sweep => cmd_sweep(ctx, out),
    }
}

/// Minimizes per the config, or loads the configured snapshot.
fn obtain_field(ctx: &Ctx, p: &Potential, out: &mut OutputDir) -> Result<(VectorField, Option<MinimizeResult>)> {
    let cfg = ctx.cfg;
    if let Some(s) = &cfg.snapshot {
        let snap = load_snapshot(&ctx.base.join(s))?;
        if snap.alpha != p.alpha() || snap.wells != p.wells_vec() {
            return Err(Error::Config {
                path: "snapshot".into(),
                msg: "snapshot alpha or wells differ from the configured potential".into(),
            });
        }
        return Ok((snap.field, None));
    }
    let r = minimize_from_config(cfg, p, ctx.exec)?;
    write_minimize_artifacts(&r, p, out)?;
    Ok((r.field.clone(), Some(r)))
}

fn seeded_init(cfg: &RunConfig) -> InitMode {
    match cfg.init_mode() {
        InitMode::Random { boundary, .. } => InitMode::Random {
            seed: cfg.seed,
            boundary,
        },
        m => m,
    }
}

fn minimize_from_config(cfg: &RunConfig, p: &Potential, exec: Exec) -> Result<MinimizeResult> {
    let spec = cfg.grid_spec()?;
    let init = seeded_init(cfg);
    let mut mc = cfg.minimize_config();
    mc.exec = exec;
    match cfg.cascade_coarsest {
        Some(c) => minimize_cascade(p, &spec, &init, &mc, c),
        None => minimize(&init_field(spec, p, &init)?, p, &mc),
    }
}

/// Fraction of nodes within `radius` of `center` sitting exactly on a well,
/// and the smallest positive well distance among the others.
fn exact_fraction(f: &VectorField, p: &Potential, center: &[f64], radius: f64) -> (f64, f64) {
    let (mut tot, mut hit) = (0usize, 0usize);
    let mut min_pos = f64::INFINITY;
    for idx in 0..f.num_nodes() {
        let x = f.spec.coords(idx);
        let d: f64 = (0..f.spec.n).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>().sqrt();
        if d <= radius {
            tot += 1;
            let delta = p.well_distance(f.node(idx)).1;
            if delta == 0.0 {
                hit += 1;
            } else {
                min_pos = min_pos.min(delta);
            }
        }
    }
    let frac = if tot == 0 { 0.0 } else { hit as f64 / tot as f64 };
    (frac, min_pos)
}

#[derive(Serialize)]
struct MinimizeSummary {
    iterations: usize,
    converged: bool,
    stop_reason: crate::minimizer::StopReason,
    final_grad_norm: f64,
    el_residual_interior: f64,
    energy: f64,
    exact_fraction: f64,
    smoothing_iterations: usize,
}

fn minimize_summary(r: &MinimizeResult, p: &Potential) -> MinimizeSummary {
    let f = &r.field;
    let exact = (0..f.num_nodes())
        .filter(|&i| p.well_distance(f.node(i)).1 == 0.0)
        .count();
    MinimizeSummary {
        iterations: r.iterations,
        converged: r.converged,
        stop_reason: r.stop_reason,
        final_grad_norm: r.final_grad_norm,
        el_residual_interior: r.el_residual_interior,
        energy: r.energy_trace.last().copied().unwrap_or(f64::NAN),
        exact_fraction: exact as f64 / f.num_nodes() as f64,
        smoothing_iterations: r.smoothing_iterations,
    }
}

fn write_minimize_artifacts(r: &MinimizeResult, p: &Potential, out: &mut OutputDir) -> Result<()> {
    let snap = Snapshot {
        field: r.field.clone(),
        alpha: p.alpha(),
        wells: p.wells_vec(),
    };
    out.write("field.acfb", &encode(&snap)?)?;
    let mut t = Table::new(["iteration", "energy"]);
    for (k, e) in r.energy_trace.iter().enumerate() {
        t.row(vec![k.to_string(), num(*e)]);
    }
    out.table("energy_trace.csv", &t)?;
    let mut s = Table::new(["iteration", "clamped"]);
    for (k, c) in &r.snap_count_trace {
        s.row(vec![k.to_string(), c.to_string()]);
    }
    out.table("snap_trace.csv", &s)?;
    out.json("minimize_summary.json", &minimize_summary(r, p))
}

fn monotone_trace(r: &MinimizeResult) -> (bool, f64) {
    let tr = &r.energy_trace[r.smoothing_iterations.min(r.energy_trace.len())..];
    let worst = tr.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    (worst <= 1e-12, worst)
}

fn cmd_minimize(ctx: &Ctx, p: &Potential, out: &mut OutputDir) -> Result<Vec<Gate>> {
    let r = minimize_from_config(ctx.cfg, p, ctx.exec)?;
    write_minimize_artifacts(&r, p, out)?;
    let (mono, worst) = monotone_trace(&r);
    let snap = Snapshot {
        field: r.field.clone(),
        alpha: p.alpha(),
        wells: p.wells_vec(),
    };
    let round_trip = decode(&encode(&snap)?)? == snap;
    Ok(vec![
        gate(
            "converged",
            r.converged,
            r.final_grad_norm,
            format!("{:?}", r.stop_reason),
        ),
        gate("energy_monotone", mono, worst, "J[k+1] <= J[k] + 1e-12"),
        gate("snapshot_round_trip", round_trip, 0.0, "decode(encode(field)) == field"),
    ])
}

fn center_of(ctx: &Ctx, spec: &GridSpec) -> Result<Vec<f64>> {
    let c = ctx.cfg.analysis.center.clone().unwrap_or_else(|| spec.center());
    if c.len() != spec.n {
        return Err(Error::Config {
            path: "analysis.center".into(),
            msg: "needs one entry per axis".into(),
        });
    }
    Ok(c)
}

/// Radii from a config block: explicit list, or the `2^(1/4)` ladder from
/// `r_min` (default `8h`) to `r_max` (default `default_max`).
fn radii_from(rc: &RadiiConfig, h: f64, default_max: f64) -> Vec<f64> {
    match &rc.list {
        Some(l) => l.clone(),
        None => radius_ladder(rc.r_min.unwrap_or(8.0 * h), rc.r_max.unwrap_or(default_max)),
    }
}

#[derive(Serialize)]
struct AnalyzeSummary {
    center: Vec<f64>,
    radii: Vec<f64>,
    gammas: Vec<f64>,
    fit_i0: Option<crate::interface::Fit>,
    fit_igamma: Vec<Option<crate::interface::Fit>>,
    fit_boundary: Option<crate::interface::Fit>,
    fit_ball_energy: Option<crate::interface::Fit>,
    two_phase_pass: bool,
    two_phase_first_pass: Option<usize>,
    core_radius: f64,
    exact_fraction: f64,
    /// Smallest positive well distance inside the core ball.
    min_positive_delta: Option<f64>,
}

fn cmd_analyze(ctx: &Ctx, p: &Potential, out: &mut OutputDir) -> Result<Vec<Gate>> {
    let (f, _) = obtain_field(ctx, p, out)?;
    let spec = &f.spec;
    let a = &ctx.cfg.analysis;
    let center = center_of(ctx, spec)?;
    let radii = radii_from(&a.radii, spec.h, 0.75 * spec.inner_radius(&center));
    let gammas = a.gammas.clone().unwrap_or_else(|| default_gammas(p));
    let d = delta_field(&f, p);
    let rep = interface_report(&d, &center, &radii, &gammas)?;
    let energies: Vec<f64> = rep
        .radii
        .iter()
        .map(|&r| ball_energy(&f, p, &center, r))
        .collect::<Result<_>>()?;
    let fit_j = scaling_fit(&rep.radii, &energies).ok();
    let labels = contact_labels(&d);
    let tp = two_phase_check(&labels, &center, &rep.radii, a.c_floor)?;

    let mut header = vec!["r".to_string(), "measure_I0".into()];
    header.extend(gammas.iter().map(|g| format!("measure_Igamma_{g}")));
    header.extend((1..=p.num_wells()).map(|w| format!("contact_{w}")));
    header.push("boundary_len".into());
    header.push("ball_energy".into());
    let mut t = Table::new(header);
    for (row, e) in rep.rows.iter().zip(&energies) {
        let mut cells = vec![num(row.r), num(row.measure_i0)];
        cells.extend(row.measure_igamma.iter().map(|v| num(*v)));
        cells.extend(row.contact.iter().map(|v| num(*v)));
        cells.push(num(row.boundary_length));
        cells.push(num(*e));
        t.row(cells);
    }
    out.table("interface_report.csv", &t)?;

    let mut tt = Table::new(["r", "largest_phase", "second_phase", "floor"]);
    let n = spec.n as i32;
    for (r, m) in tp.radii.iter().zip(&tp.phase_measures) {
        tt.row(vec![
            num(*r),
            num(m.first().copied().unwrap_or(0.0)),
            num(m.get(1).copied().unwrap_or(0.0)),
            num(a.c_floor * r.powi(n)),
        ]);
    }
    out.table("two_phase.csv", &tt)?;

    let i0: Vec<f64> = rep.rows.iter().map(|r| r.measure_i0).collect();
    let bl: Vec<f64> = rep.rows.iter().map(|r| r.boundary_length).collect();
    let svg = loglog_svg(
        "interface scaling",
        "r",
        &[
            Series {
                name: "measure I0",
                x: &rep.radii,
                y: &i0,
                fit: rep.fit_i0,
            },
            Series {
                name: "boundary length",
                x: &rep.radii,
                y: &bl,
                fit: rep.fit_boundary,
            },
            Series {
                name: "J(B_r)",
                x: &rep.radii,
                y: &energies,
                fit: fit_j,
            },
        ],
    );
    out.write("interface_fits.svg", svg.as_bytes())?;

    let half_width = (0..spec.n)
        .map(|ax| 0.5 * (spec.extents[ax] - 1) as f64 * spec.h)
        .fold(f64::INFINITY, f64::min);
    let core_radius = a.core_radius_fraction * half_width;
    let (frac, min_pos) = exact_fraction(&f, p, &center, core_radius);
    out.json(
        "analyze_summary.json",
        &AnalyzeSummary {
            center: center.clone(),
            radii: rep.radii.clone(),
            gammas: gammas.clone(),
            fit_i0: rep.fit_i0,
            fit_igamma: rep.fit_igamma.clone(),
            fit_boundary: rep.fit_boundary,
            fit_ball_energy: fit_j,
            two_phase_pass: tp.pass,
            two_phase_first_pass: tp.first_pass,
            core_radius,
            exact_fraction: frac,
            min_positive_delta: min_pos.is_finite().then_some(min_pos),
        },
    )?;

    let mut gates = Vec::new();
    // the scaling laws are stated for 0 < alpha < 2 only
    if spec.n == 2 && p.alpha() < 2.0 {
        let lo = n as f64 - 1.0 - 0.2;
        let hi = n as f64 - 1.0 + 0.2;
        gates.push(in_band("interface_measure_slope", rep.fit_i0.map(|f| f.slope), lo, hi));
        gates.push(in_band(
            "boundary_length_slope",
            rep.fit_boundary.map(|f| f.slope),
            lo,
            hi,
        ));
        let worst = match rep.fit_boundary {
            Some(fb) => rep
                .radii
                .iter()
                .zip(&bl)
                .map(|(r, l)| l / (0.5 * fb.intercept.exp() * r))
                .fold(f64::INFINITY, f64::min),
            None => f64::NAN,
        };
        gates.push(gate(
            "boundary_length_lower_bound",
            worst >= 1.0,
            worst,
            "min over r of length / (0.5 e^intercept r) >= 1",
        ));
        gates.push(in_band("ball_energy_slope", fit_j.map(|f| f.slope), lo, hi));
        let two_phase_detail = format!("second phase >= {} r^n from the first passing radius", a.c_floor);
        gates.push(gate(
            "two_phase",
            tp.pass,
            tp.first_pass.map(|i| tp.radii[i]).unwrap_or(f64::NAN),
            two_phase_detail,
        ));
    }
    if p.alpha() < 2.0 {
        gates.push(gate(
            "exact_attainment",
            frac >= 0.6,
            frac,
            format!("fraction of nodes on a well within r = {core_radius} is >= 0.6"),
        ));
    } else {
        gates.push(gate(
            "exact_attainment_contrast",
            frac == 0.0,
            frac,
            format!("alpha = 2: fraction of nodes on a well within r = {core_radius} is 0"),
        ));
    }
    Ok(gates)
}

#[derive(Serialize)]
struct WeissSummary {
    traces: Vec<WeissTrace>,
    constancy_defects: Vec<f64>,
}

fn cmd_weiss(ctx: &Ctx, p: &Potential, out: &mut OutputDir) -> Result<Vec<Gate>> {
    let (f, _) = obtain_field(ctx, p, out)?;
    let spec = &f.spec;
    let wc = &ctx.cfg.analysis.weiss;
    let center = center_of(ctx, spec)?;
    let targets = if wc.points.is_empty() {
        vec![center]
    } else {
        wc.points.clone()
    };
    let mut points = Vec::new();
    for t in &targets {
        if t.len() != spec.n {
            return Err(Error::Config {
                path: "analysis.weiss.points".into(),
                msg: "each point needs one entry per axis".into(),
            });
        }
        if wc.exact_points {
            points.push(t.clone());
        } else {
            let node = free_boundary_node(&f, p, t)
                .ok_or_else(|| Error::NotOnFreeBoundary("the field has no free-boundary node".into()))?;
            points.push(spec.coords(node)[..spec.n].to_vec());
        }
    }
    let reach = points
        .iter()
        .map(|x| spec.inner_radius(x))
        .fold(f64::INFINITY, f64::min);
    let radii = radii_from(&wc.radii, spec.h, 0.5 * reach);
    let mut traces = Vec::new();
    let mut defects = Vec::new();
    let mut gates = Vec::new();
    for (k, x0) in points.iter().enumerate() {
        let tr = weiss_trace(&f, p, x0, &radii)?;
        let mut t = Table::new(["r", "W", "dW_forward", "error_budget", "quadrature_slack"]);
        for i in 0..tr.radii.len() {
            let step = |v: &Vec<f64>| v.get(i).map(|x| num(*x)).unwrap_or_default();
            t.row(vec![
                num(tr.radii[i]),
                num(tr.values[i]),
                step(&tr.discrete_derivative),
                num(tr.error_budget[i]),
                step(&tr.slack),
            ]);
        }
        out.table(&format!("weiss_{k}.csv"), &t)?;
        let lo = tr.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = tr.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let defect = hi - lo;
        gates.push(gate(
            &format!("weiss_monotone_{k}"),
            tr.monotone,
            tr.worst_margin(),
            "dW >= -(budget + slack) on every step",
        ));
        if wc.expect_constant {
            gates.push(gate(
                &format!("weiss_constancy_{k}"),
                defect <= 1e-3,
                defect,
                "max W - min W <= 1e-3",
            ));
        }
        defects.push(defect);
        traces.push(tr);
    }
    out.json(
        "weiss_summary.json",
        &WeissSummary {
            traces,
            constancy_defects: defects,
        },
    )?;
    Ok(gates)
}

fn growth_table(g: &GrowthProbe) -> Table {
    let mut t = Table::new(["r", "sup_delta", "sup_grad"]);
    for i in 0..g.radii.len() {
        t.row(vec![num(g.radii[i]), num(g.sup_delta[i]), num(g.sup_grad[i])]);
    }
    t
}

fn growth_gates(g: &GrowthProbe, alpha: f64) -> Vec<Gate> {
    let mut gates = vec![match g.fit_delta {
        Some(fd) => gate(
            "growth_exponent",
            (fd.slope - g.kappa).abs() <= g.tol,
            fd.slope,
            format!("sup delta exponent in {} +- {}", g.kappa, g.tol),
        ),
        None => gate("growth_exponent", false, f64::NAN, "fit unavailable"),
    }];
    if alpha == 1.0 {
        gates.push(match g.fit_grad {
            Some(fg) => gate(
                "gradient_exponent",
                (fg.slope - 1.0).abs() <= g.tol,
                fg.slope,
                format!("sup gradient exponent in 1 +- {}", g.tol),
            ),
            None => gate("gradient_exponent", false, f64::NAN, "fit unavailable"),
        });
    }
    gates
}

fn cmd_growth(ctx: &Ctx, p: &Potential, out: &mut OutputDir) -> Result<Vec<Gate>> {
    let (f, _) = obtain_field(ctx, p, out)?;
    let spec = &f.spec;
    let gc = &ctx.cfg.analysis.growth;
    let target = match &gc.target {
        Some(t) => t.clone(),
        None => center_of(ctx, spec)?,
    };
    let node = free_boundary_node(&f, p, &target)
        .ok_or_else(|| Error::NotOnFreeBoundary("the field has no free-boundary node".into()))?;
    let x0 = spec.coords(node);
    let radii = radii_from(&gc.radii, spec.h, 0.5 * spec.inner_radius(&x0[..spec.n]));
    let g = growth_probe(&f, p, node, &radii, gc.tol.unwrap_or(0.15))?;
    out.table("growth.csv", &growth_table(&g))?;
    out.json("growth_summary.json", &g)?;
    Ok(growth_gates(&g, p.alpha()))
}

fn cmd_census(ctx: &Ctx, p: &Potential, out: &mut OutputDir) -> Result<Vec<Gate>> {
    let (f, _) = obtain_field(ctx, p, out)?;
    let spec = &f.spec;
    let cc = &ctx.cfg.analysis.census;
    let center = center_of(ctx, spec)?;
    let (theta0, c0) = select_nondegeneracy_constants(p, spec.n);
    let theta = cc.theta.unwrap_or(theta0);
    let l = cc.l.unwrap_or_else(|| select_cube_side(p, c0, theta, spec.h));
    let base = CensusConfig {
        l,
        k: cc.ks[0],
        theta,
        epsilon: cc.epsilon,
        center,
    };
    let scaling = census_scaling(&f, p, &base, &cc.ks, ctx.exec)?;
    let mut partition_ok = true;
    let mut t1_ok = true;
    let mut totals = Table::new(["k", "T1", "T2", "T3", "T4", "T5", "T2+T3+T5", "theta_violations"]);
    for &k in &cc.ks {
        let c = crate::census::census(&f, p, &CensusConfig { k, ..base.clone() }, ctx.exec)?;
        let cubes = (2 * k).pow(spec.n as u32);
        let inner = (2 * k - 2).pow(spec.n as u32);
        partition_ok &= c.totals.iter().sum::<usize>() == cubes;
        t1_ok &= c.count(CubeClass::T1) == cubes - inner;
        let mut header = vec!["index".to_string(), "i".into(), "j".into()];
        header.extend((1..=p.num_wells()).map(|w| format!("sigma_{w}")));
        header.extend(["class".into(), "dominant".into(), "contact".into()]);
        let mut t = Table::new(header);
        for cube in &c.cubes {
            let mut cells = vec![
                cube.index.to_string(),
                cube.coords[0].to_string(),
                cube.coords[1].to_string(),
            ];
            cells.extend(cube.sigma.iter().map(|v| num(*v)));
            cells.push(cube.class.name().into());
            cells.push(cube.dominant.map(|d| (d + 1).to_string()).unwrap_or_default());
            cells.push(num(cube.contact));
            t.row(cells);
        }
        out.table(&format!("census_k{k}.csv"), &t)?;
        let mut row: Vec<String> = vec![k.to_string()];
        row.extend(c.totals.iter().map(|v| v.to_string()));
        row.push(c.transition_count().to_string());
        row.push(c.theta_violations.to_string());
        totals.row(row);
    }
    out.table("census_totals.csv", &totals)?;
    out.json("census_summary.json", &scaling)?;
    let bound = spec.n as f64 - 1.0 + 0.3;
    Ok(vec![
        gate(
            "census_scaling",
            scaling.pass,
            scaling.fit.map(|f| f.slope).unwrap_or(f64::NAN),
            if scaling.vacuous {
                "vacuous pass".to_string()
            } else {
                format!("slope <= {bound}")
            },
        ),
        gate("census_partition", partition_ok, 0.0, "class counts sum to (2k)^n"),
        gate("census_boundary_count", t1_ok, 0.0, "|T1| = (2k)^n - (2k-2)^n"),
    ])
}

/// Growth probe at the free boundary closing the right end of a 1D
/// connection, over radii from `8h` to a quarter of the support width.
pub fn connection_growth(c: &Connection, p: &Potential, tol: f64) -> Result<GrowthProbe> {
    let f = &c.result.field;
    let node = free_boundary_node(f, p, &[c.support.1])
        .ok_or_else(|| Error::NotOnFreeBoundary("connection has no free boundary".into()))?;
    let h = f.spec.h;
    let r_max = (0.25 * c.support_width).min(f.spec.inner_radius(&f.spec.coords(node)[..1]));
    let radii: Vec<f64> = radius_ladder(8.0 * h, r_max)
        .iter()
        .map(|r| (r / h).round() * h)
        .collect();
    let mut dedup = radii.clone();
    dedup.dedup();
    growth_probe(f, p, node, &dedup, tol)
}

#[derive(Serialize)]
struct ConnectSummary {
    minimize: MinimizeSummary,
    support: (f64, f64),
    support_width: f64,
    equipartition_defect: f64,
    growth: Option<GrowthProbe>,
}

fn run_connect(ctx: &Ctx, p: &Potential) -> Result<(Connection, Option<GrowthProbe>)> {
    let cc = ctx.cfg.connect1d.as_ref().ok_or_else(|| Error::Config {
        path: "connect1d".into(),
        msg: "missing connect1d block".into(),
    })?;
    let mut mc = ctx.cfg.minimize_config();
    mc.exec = ctx.exec;
    let c = connect_1d(p, cc.from_well, cc.to_well, cc.half_length, cc.nodes, &mc)?;
    let g = connection_growth(&c, p, cc.growth_tol.unwrap_or(0.15)).ok();
    Ok((c, g))
}

fn cmd_connect1d(ctx: &Ctx, p: &Potential, out: &mut OutputDir) -> Result<Vec<Gate>> {
    let (c, g) = run_connect(ctx, p)?;
    write_minimize_artifacts(&c.result, p, out)?;
    let f = &c.result.field;
    let mut header = vec!["x".to_string()];
    header.extend((1..=f.m).map(|k| format!("u_{k}")));
    header.push("delta".into());
    let mut t = Table::new(header);
    for idx in 0..f.num_nodes() {
        let mut cells = vec![num(f.spec.coords(idx)[0])];
        cells.extend(f.node(idx).iter().map(|v| num(*v)));
        cells.push(num(p.well_distance(f.node(idx)).1));
        t.row(cells);
    }
    out.table("profile.csv", &t)?;
    if let Some(g) = &g {
        out.table("growth.csv", &growth_table(g))?;
    }
    out.json(
        "connect1d_summary.json",
        &ConnectSummary {
            minimize: minimize_summary(&c.result, p),
            support: c.support,
            support_width: c.support_width,
            equipartition_defect: c.equipartition_defect,
            growth: g.clone(),
        },
    )?;
    let mut gates = vec![gate(
        "converged",
        c.result.converged,
        c.result.final_grad_norm,
        format!("{:?}", c.result.stop_reason),
    )];
    match &g {
        Some(g) => gates.push(growth_gates(g, p.alpha()).remove(0)),
        None => gates.push(gate(
            "growth_exponent",
            false,
            f64::NAN,
            "no usable free-boundary point",
        )),
    }
    Ok(gates)
}

fn cmd_sweep(ctx: &Ctx, out: &mut OutputDir) -> Result<Vec<Gate>> {
    let sw = ctx.cfg.sweep.as_ref().ok_or_else(|| Error::Config {
        path: "sweep".into(),
        msg: "missing sweep block".into(),
    })?;
    let mut t = Table::new([
        "value",
        "iterations",
        "converged",
        "energy",
        "exact_fraction",
        "support_width",
        "growth_exponent",
    ]);
    let mut gates = Vec::new();
    for &v in &sw.values {
        let cfg = ctx.cfg.with_parameter(sw.parameter, v)?;
        let p = cfg.potential()?;
        let sub = Ctx {
            cfg: &cfg,
            base: ctx.base.clone(),
            exec: ctx.exec,
        };
        let (res, width, growth) = match sw.task {
            SweepTask::Minimize => (minimize_from_config(&cfg, &p, ctx.exec)?, None, None),
            SweepTask::Connect1d => {
                let (c, g) = run_connect(&sub, &p)?;
                let w = c.support_width;
                (c.result, Some(w), g)
            }
        };
        let s = minimize_summary(&res, &p);
        let exponent = growth.as_ref().and_then(|g| g.fit_delta).map(|f| f.slope);
        t.row(vec![
            num(v),
            s.iterations.to_string(),
            s.converged.to_string(),
            num(s.energy),
            num(s.exact_fraction),
            width.map(num).unwrap_or_default(),
            exponent.map(num).unwrap_or_default(),
        ]);
        gates.push(gate(
            &format!("converged_{v}"),
            s.converged,
            s.final_grad_norm,
            "minimizer converged",
        ));
        if let Some(g) = &growth {
            let mut gg = growth_gates(g, p.alpha()).remove(0);
            gg.name = format!("growth_exponent_{v}");
            gates.push(gg);
        }
    }
    out.table("sweep.csv", &t)?;
    Ok(gates)
}
