use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "t,mass_minus,mass_plus,sup_a2,compat_residual,strichartz_accum,energy_proxy";

fn equimap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equimap")).args(args).output().expect("binary runs")
}

fn equimap_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equimap"))
        .args(args)
        .env("EQUIMAP_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.json");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

const CONFIG: &str = r#"{
  "grid": {"n": 256, "r_max": 16.0},
  "time": {"dt": 0.005, "t_final": 0.05, "monitor_stride": 2},
  "init": {"kind": "map_bump", "a": 0.4},
  "outputs": {"trajectory_path": "traj.csv", "report_path": "report.json", "snapshot_path": "snaps.json"}
}"#;

fn stderr_line(o: &Output) -> String {
    let s = String::from_utf8_lossy(&o.stderr).into_owned();
    assert_eq!(s.trim_end().lines().count(), 1, "expected one stderr line, got {s:?}");
    s.trim_end().to_owned()
}

#[test]
fn evolve_writes_csv_report_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let o = equimap(&["evolve", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    for row in &rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 7);
        for c in cells {
            let mantissa = c.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17, "{c}");
            c.parse::<f64>().unwrap();
        }
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    for key in ["mass", "energy", "compat_residual", "sup_a2"] {
        assert!(report[key].is_number(), "{key}");
    }

    let v = equimap(&["virial", "--trajectory", dir.path().join("snaps.json").to_str().unwrap()]);
    assert!(v.status.success(), "{}", String::from_utf8_lossy(&v.stderr));
    let vr: serde_json::Value = serde_json::from_slice(&v.stdout).unwrap();
    assert!(vr["closure_relative"].as_f64().unwrap() < 1e-3, "{vr}");
    assert_eq!(vr["snapshots"], rows.len());
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = equimap_threads(&["evolve", "--config", &cfg, "--out", out.to_str().unwrap()], threads);
        assert!(o.status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("1", "a.csv"), run("4", "b.csv"));
    let conv = |threads: &str| {
        let o = equimap_threads(&["convergence", "--config", &cfg, "--levels", "3"], threads);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    assert_eq!(conv("1"), conv("3"));
}

#[test]
fn malformed_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace(r#""dt": 0.005, "#, ""));
    let o = equimap(&["evolve", "--config", &cfg]);
    assert!(!o.status.success());
    let line = stderr_line(&o);
    assert!(line.starts_with("error:") && line.contains("time.dt"), "{line}");

    let cfg = write_config(dir.path(), &CONFIG.replace("0.005", "\"fast\""));
    assert!(stderr_line(&equimap(&["evolve", "--config", &cfg])).contains("time.dt"));
    let cfg = write_config(dir.path(), &CONFIG.replace(r#""n": 256"#, r#""n": 256, "nodes": 3"#));
    assert!(stderr_line(&equimap(&["evolve", "--config", &cfg])).contains("grid.nodes"));
    let cfg = write_config(dir.path(), "{ not json");
    assert!(!equimap(&["evolve", "--config", &cfg]).status.success());
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let o = equimap_threads(&["convergence", "--config", &cfg], "zero");
    assert!(!o.status.success());
    assert!(stderr_line(&o).contains("EQUIMAP_THREADS"));
}

#[test]
fn reconstruct_reports_the_required_keys() {
    let o = equimap(&["reconstruct", "--a", "0.5", "--n", "512"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["mass", "energy", "roundtrip_sup_error", "compat_residual", "sup_a2"] {
        assert!(r[key].is_number(), "{key}");
    }
    assert!(r["roundtrip_sup_error"].as_f64().unwrap() < 1e-6);
    assert!(r["sup_a2"].as_f64().unwrap() < 0.0);
}

#[test]
fn psi_minus_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("pm.txt");
    let g = equimap(&["gauge", "--a", "0.5", "--n", "512", "--psi-minus-out", field.to_str().unwrap()]);
    assert!(g.status.success());
    let gauge: serde_json::Value = serde_json::from_slice(&g.stdout).unwrap();
    let r = equimap(&["reconstruct", "--psi-minus", field.to_str().unwrap(), "--n", "512"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let rec: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    let (m1, m2) = (gauge["mass"].as_f64().unwrap(), rec["mass"].as_f64().unwrap());
    assert!((m1 - m2).abs() < 1e-12 * m1, "{m1} {m2}");

    // grid mismatch is reported, not silently resampled
    let o = equimap(&["reconstruct", "--psi-minus", field.to_str().unwrap(), "--n", "256"]);
    assert!(!o.status.success());
    assert!(stderr_line(&o).contains("does not match grid node"));
}

#[test]
fn soliton_profile_csv() {
    let o = equimap(&["soliton", "--n", "64", "--rmax", "8", "--lambda", "2"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("r,u1,u2,u3,"));
    assert_eq!(text.lines().count(), 65);
}

#[test]
fn usage_errors_are_single_line() {
    for args in [&["frobnicate"][..], &["evolve"][..], &["gauge", "--n", "many"][..]] {
        let o = equimap(args);
        assert!(!o.status.success());
        assert!(stderr_line(&o).starts_with("error:"));
    }
}
