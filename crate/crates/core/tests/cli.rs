//! End-to-end runs of the `acfb` binary on the 1D obstacle fixture.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use acfb::cli::run::exit_code_for;
use acfb::Error;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/obstacle_1d.json")
}

fn acfb(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_acfb"));
    cmd.args(args).env_remove("ACFB_OUT_DIR");
    if let Some(d) = env_out {
        cmd.env("ACFB_OUT_DIR", d);
    }
    cmd.output().unwrap()
}

fn run_fixture(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        sub,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    acfb(&args, None)
}

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_config(dir: &Path, edit: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(fixture()).unwrap()).unwrap();
    edit(&mut v);
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_vec_pretty(&v).unwrap()).unwrap();
    p
}

#[test]
fn minimize_check_passes_and_manifest_hashes_match() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let o = run_fixture("minimize", &fixture(), &out, &["--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")), "{stdout}");

    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["check"], true);
    let config_hash = hex(&std::fs::read(fixture()).unwrap());
    assert_eq!(m["config_sha256"], config_hash.as_str());
    let files = m["files"].as_array().unwrap();
    let names: Vec<&str> = files.iter().map(|f| f[0].as_str().unwrap()).collect();
    for want in ["field.acfb", "energy_trace.csv", "minimize_summary.json", "checks.csv"] {
        assert!(names.contains(&want), "{names:?}");
    }
    for f in files {
        let bytes = std::fs::read(out.join(f[0].as_str().unwrap())).unwrap();
        assert_eq!(hex(&bytes), f[1].as_str().unwrap());
    }
}

#[test]
fn config_errors_exit_2_with_key_path() {
    let tmp = TempDir::new().unwrap();
    let bad = write_config(tmp.path(), |v| v["grid"]["h"] = (-0.1).into());
    let o = run_fixture("minimize", &bad, &tmp.path().join("a"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.h"));

    let unknown = write_config(tmp.path(), |v| v["grid"]["spacing"] = 0.1.into());
    let o = run_fixture("minimize", &unknown, &tmp.path().join("b"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid"));

    let alpha = write_config(tmp.path(), |v| v["potential"]["alpha"] = 2.5.into());
    let o = run_fixture("minimize", &alpha, &tmp.path().join("c"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    let o = acfb(&["minimize", "--config", "/nonexistent/config.json"], None);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn failing_gate_exits_4_only_with_check() {
    let tmp = TempDir::new().unwrap();
    let strict = write_config(tmp.path(), |v| v["analysis"]["growth"]["tol"] = 1e-6.into());
    let o = run_fixture("growth", &strict, &tmp.path().join("a"), &["--check"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL growth_exponent"));
    let o = run_fixture("growth", &strict, &tmp.path().join("b"), &[]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn error_kinds_map_to_exit_codes() {
    assert_eq!(exit_code_for(&Error::NonFiniteEnergy { iteration: 3 }), 3);
    assert_eq!(exit_code_for(&Error::BadInit("x".into())), 2);
    assert_eq!(exit_code_for(&Error::ValidationFailure(vec!["x".into()])), 2);
    assert_eq!(exit_code_for(&Error::DomainTooSmall), 1);
}

#[test]
fn snapshot_reanalysis_reproduces_direct_run() {
    let tmp = TempDir::new().unwrap();
    let direct = tmp.path().join("direct");
    assert_eq!(run_fixture("weiss", &fixture(), &direct, &[]).status.code(), Some(0));
    let snap_dir = tmp.path().join("min");
    assert_eq!(
        run_fixture("minimize", &fixture(), &snap_dir, &[]).status.code(),
        Some(0)
    );
    let cfg = write_config(tmp.path(), |v| v["snapshot"] = "min/field.acfb".into());
    let again = tmp.path().join("again");
    assert_eq!(run_fixture("weiss", &cfg, &again, &[]).status.code(), Some(0));
    let a = std::fs::read(direct.join("weiss_0.csv")).unwrap();
    let b = std::fs::read(again.join("weiss_0.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn reruns_and_thread_modes_give_identical_csv() {
    let tmp = TempDir::new().unwrap();
    let dirs: Vec<PathBuf> = (0..3).map(|i| tmp.path().join(format!("r{i}"))).collect();
    run_fixture("growth", &fixture(), &dirs[0], &[]);
    run_fixture("growth", &fixture(), &dirs[1], &[]);
    run_fixture("growth", &fixture(), &dirs[2], &["--sequential"]);
    for name in ["growth.csv", "energy_trace.csv", "checks.csv"] {
        let first = std::fs::read(dirs[0].join(name)).unwrap();
        for d in &dirs[1..] {
            assert_eq!(first, std::fs::read(d.join(name)).unwrap(), "{name}");
        }
    }
}

#[test]
fn output_dir_precedence() {
    let tmp = TempDir::new().unwrap();
    let env_dir = tmp.path().join("from_env");
    let cfg = write_config(tmp.path(), |v| v["output_dir"] = "from_config".into());
    let c = cfg.to_str().unwrap();

    assert_eq!(
        acfb(&["minimize", "--config", c], Some(&env_dir)).status.code(),
        Some(0)
    );
    assert!(env_dir.join("manifest.json").exists());

    let flag_dir = tmp.path().join("from_flag");
    let f = flag_dir.to_str().unwrap();
    assert_eq!(
        acfb(&["minimize", "--config", c, "--out", f], Some(&env_dir))
            .status
            .code(),
        Some(0)
    );
    assert!(flag_dir.join("manifest.json").exists());

    assert_eq!(acfb(&["minimize", "--config", c], None).status.code(), Some(0));
    assert!(tmp.path().join("from_config/manifest.json").exists());
}
