use std::path::Path;
use std::process::{Command, Output};

use ntkt_cli::commands::{cmd_bounds, cmd_sweep, RunRecord, CSV_SCHEMA};
use ntkt_cli::config::{ExperimentConfig, SeedSource};
use ntkt_cli::experiments::Ctx;

fn ntkt(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ntkt"));
    cmd.args(args).env_remove("NTKT_SEED");
    if let Some(s) = env_seed {
        cmd.env("NTKT_SEED", s);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn bounds_table_for_dirac() {
    let cfg = ExperimentConfig::from_json(r#"{"target": "dirac", "d": 1, "delta": 0.2, "eps": 0.3}"#).unwrap();
    let rows = cmd_bounds(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert_eq!(r.alpha, 0.2);
    assert!((r.phi - 1.0 / (2.0 * std::f64::consts::PI * 0.2)).abs() < 1e-15);
    assert!((r.width_ntk - (r.b / 0.3).powi(2)).abs() <= 1e-12 * r.width_ntk);
    assert!(r.eq2 >= r.eq1 && r.b_eps > r.trunc_r);
}

#[test]
fn larger_scale_needs_smaller_width() {
    let cfg = ExperimentConfig::from_json(r#"{"target": "gauss:0.5", "d": 1, "delta": 1.0, "eps": 2.0, "delta_list": [1.0, 0.4]}"#)
        .unwrap();
    let rows = cmd_bounds(&cfg).unwrap();
    assert!(rows[0].width_ntk < rows[1].width_ntk);
    assert!(rows[0].width_direct < rows[1].width_direct);
}

#[test]
fn invalid_config_exits_nonzero_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"target": "dirac", "d": 1, "delta": 0.2, "eps": 0.3, "typo": 1}"#);
    let out = dir.path().join("out.csv");
    let o = ntkt(&["bounds", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("typo"));
    assert!(!out.exists());

    let cfg = write_config(dir.path(), "eps.json", r#"{"target": "cosridge:1", "d": 1, "delta": 0.2, "eps": 0.5, "m": 10}"#);
    let o = ntkt(&["build", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("below omega"));
    assert!(!out.exists());
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gauss.csv");
    let o = ntkt(&["verify", "gauss", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with(CSV_SCHEMA));
    assert!(!text.contains(",false,"));

    let o = ntkt(&["verify", "gauss", "--corrupt-bounds", "0.001", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL gauss_tail"));

    assert_eq!(ntkt(&["verify", "nonsense"], None).status.code(), Some(2));
}

#[test]
fn seed_precedence_flag_env_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "b.json",
        r#"{"target": "gauss:0.5", "d": 1, "delta": 0.4, "eps": 1.0, "m": 64, "seed": 3, "mode": "ntk", "probe": "uniform:50"}"#,
    );
    let read = |args: &[&str], env: Option<&str>| -> RunRecord {
        let o = ntkt(args, env);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        serde_json::from_slice(&o.stdout).unwrap()
    };
    let r = read(&["build", "--config", &cfg], None);
    assert_eq!((r.seed, r.seed_source), (3, SeedSource::Config));
    assert!(r.wall_time.is_none());
    let r = read(&["build", "--config", &cfg], Some("11"));
    assert_eq!((r.seed, r.seed_source), (11, SeedSource::Env));
    let r = read(&["build", "--config", &cfg, "--seed", "5", "--timing"], Some("11"));
    assert_eq!((r.seed, r.seed_source), (5, SeedSource::Flag));
    assert!(r.wall_time.is_some());
    assert_eq!(r.reports.len(), 1);
}

#[test]
fn sweep_rows_and_slopes() {
    let cfg = ExperimentConfig::from_json(
        r#"{"target": "gauss:0.5", "d": 1, "delta": 0.4, "eps": 1.0, "m_list": [64, 256, 1024], "trials": 4, "probe": "uniform:200"}"#,
    )
    .unwrap();
    let rows = cmd_sweep(&cfg, &Ctx::new(1)).unwrap();
    assert_eq!(rows.iter().filter(|r| r.kind == "error").count(), 12);
    let slope = rows.iter().find(|r| r.kind == "slope_m").unwrap().value;
    assert!(slope < 0.0, "{slope}");
    assert_eq!(rows, cmd_sweep(&cfg, &Ctx::new(1)).unwrap());

    let small = ExperimentConfig { m_list: Some(vec![64, 256]), ..cfg.clone() };
    assert!(cmd_sweep(&small, &Ctx::new(1)).is_err());

    let deltas = ExperimentConfig { m_list: None, m: None, delta_list: Some(vec![1.0, 0.8, 0.6]), ..cfg };
    let rows = cmd_sweep(&deltas, &Ctx::new(1)).unwrap();
    assert!(rows.iter().any(|r| r.kind == "width_exponent_ntk"));
}

#[test]
fn empty_lists_rejected() {
    assert!(ExperimentConfig::from_json(r#"{"target": "dirac", "d": 1, "delta": 0.2, "eps": 0.3, "delta_list": []}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"target": "dirac", "d": 1, "delta": 0.2, "eps": 0.3, "m_list": []}"#).is_err());
}
