use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sfbm(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sfbm"));
    c.args(args).env_remove("SFBM_MAX_GRID_POINTS");
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_smoke_and_byte_identical_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = sfbm(&["simulate", "--preset", "circle-small", "--workers", "1", "--out", path(&a)], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = sfbm(&["simulate", "--preset", "circle-small", "--workers", "3", "--out", path(&b)], &[]);
    assert!(o.status.success());
    let maxima = fs::read_to_string(a.join("maxima.csv")).unwrap();
    assert_eq!(maxima.lines().count(), 1001);
    assert_eq!(maxima.lines().next().unwrap(), "replication,max");
    for f in ["maxima.csv", "summary.csv", "excursion.csv", "provenance.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let prov: Value = serde_json::from_slice(&fs::read(a.join("provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["command"], "simulate");
    assert_eq!(prov["seed"], 1);
    assert_eq!(prov["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn seed_flag_changes_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    sfbm(&["simulate", "--preset", "circle-small", "--out", path(&a)], &[]);
    sfbm(&["simulate", "--preset", "circle-small", "--seed", "2", "--out", path(&b)], &[]);
    assert_ne!(fs::read(a.join("maxima.csv")).unwrap(), fs::read(b.join("maxima.csv")).unwrap());
}

#[test]
fn grid_cap_exit_3_without_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = sfbm(
        &["simulate", "--preset", "circle-small", "--out", path(&out)],
        &[("SFBM_MAX_GRID_POINTS", "32")],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("resolution"));
    assert!(!out.exists());
}

#[test]
fn malformed_drift_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"schema_version":1,"seed":3,"constant":{"kind":"piterbarg","hurst":0.5,"dim":1,
            "replications":100,"drift":{"form":"norm_power","b":-1.0,"eta":1.0}}}"#,
    )
    .unwrap();
    let o = sfbm(&["constants", "--config", path(&cfg), "--out", path(&dir.path().join("o"))], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("constant.drift"));

    fs::write(&cfg, r#"{"schema_version":1,"constant":{"kind":"pickands","drift":"steep"}}"#).unwrap();
    let o = sfbm(&["constants", "--config", path(&cfg)], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pickands_quick_preset_near_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = sfbm(&["constants", "--preset", "pickands-quick", "--out", path(dir.path())], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("estimate"));
    let e: Value = serde_json::from_slice(&fs::read(dir.path().join("constants.json")).unwrap()).unwrap();
    let v = e["value"].as_f64().unwrap();
    assert!((v - 1.0).abs() < 0.1, "{v}");
    assert_eq!(e["kind"], "pickands");
}

#[test]
fn steep_drift_piterbarg_near_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = sfbm(&["constants", "--preset", "piterbarg-steep", "--out", path(dir.path())], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let e: Value = serde_json::from_slice(&fs::read(dir.path().join("constants.json")).unwrap()).unwrap();
    let v = e["value"].as_f64().unwrap();
    assert!((v - 1.0).abs() < 0.1, "{v}");
}

#[test]
fn divergent_ladder_exit_4_keeps_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"schema_version":1,"seed":3,"constant":{"kind":"M_hat","hurst":0.5,"dim":1,
            "replications":20000,"drift":{"form":"first_coord_power","b":1e-6,"gamma":1.0},
            "ladder":{"s_values":[0.5,1,2,4]}}}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = sfbm(&["constants", "--config", path(&cfg), "--out", path(&out)], &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stdout(&o));
    let e: Value = serde_json::from_slice(&fs::read(out.join("constants.json")).unwrap()).unwrap();
    assert_eq!(e["status"]["status"], "divergent");
    assert_eq!(e["ladder"].as_array().unwrap().len(), 4);
}

#[test]
fn validate_with_constants_file_and_asymptotics_only() {
    let dir = tempfile::tempdir().unwrap();
    let consts = dir.path().join("k");
    let o = sfbm(&["constants", "--preset", "m-hat-arc", "--seed", "5", "--out", path(&consts)], &[]);
    assert!(o.status.success());
    let cfg = dir.path().join("v.json");
    fs::write(
        &cfg,
        r#"{"schema_version":1,"model":{"beta":0.5,"domain":{"kind":"geodesic_disc","n":1,"a":1.0}},
            "resolution":0.01,"u_values":[2.0,3.0,4.0],"replications":10,
            "constant":{"source":"file","path":"k/constants.json"}}"#,
    )
    .unwrap();
    let out = dir.path().join("v");
    let o = sfbm(&["validate", "--config", path(&cfg), "--asymptotics-only", "--out", path(&out)], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("asymptotics.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(!out.join("ratio.csv").exists());
}

#[test]
fn validate_small_arc_writes_ratio_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("v.json");
    fs::write(
        &cfg,
        r#"{"schema_version":1,"model":{"beta":0.5,"domain":{"kind":"geodesic_disc","n":1,"a":1.0}},
            "resolution":0.01,"u_values":[1.0,1.5,2.0,2.5],"replications":20000,"seed":4,
            "constant":{"source":"inline","value":2.0,"kind":"M_hat"},"min_exceedances":50}"#,
    )
    .unwrap();
    let out = dir.path().join("v");
    let o = sfbm(&["validate", "--config", path(&cfg), "--out", path(&out)], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("ratio at largest usable u = 2.5"));
    let table = fs::read_to_string(out.join("ratio.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "u,p_hat,se,asym,ratio,ci_lo,ci_hi");
    let env: Value = serde_json::from_slice(&fs::read(out.join("ratio.json")).unwrap()).unwrap();
    assert_eq!(env["largest_usable_u"], 2.5);
    assert!(env["report"]["discretization_diagnostic"].is_array());
}

#[test]
fn regime_mismatch_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("v.json");
    fs::write(
        &cfg,
        r#"{"schema_version":1,"model":{"beta":0.5,"domain":{"kind":"full_sphere","n":1}},
            "resolution":0.05,"u_values":[2.0],"replications":10,
            "constant":{"source":"inline","value":1.0,"kind":"pickands"}}"#,
    )
    .unwrap();
    let o = sfbm(&["validate", "--config", path(&cfg), "--out", path(&dir.path().join("o"))], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn consistency_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let o = sfbm(&["consistency", "--out", path(dir.path())], &[]);
    assert!(o.status.success());
    let line = stdout(&o);
    let worst: f64 = line.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(worst <= 1e-10, "{line}");
    assert_eq!(fs::read_to_string(dir.path().join("consistency.csv")).unwrap().lines().count(), 103);
}
