use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stargraph(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stargraph"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn eigen_writes_monotone_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let o = stargraph(&["eigen", "--v", "2", "--lengths", "1,1.4142135", "--n", "100"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("eigen_spectrum.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,k,z_prime,bracket_lo,bracket_hi"));
    let ks: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(ks.len(), 100);
    assert!(ks.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn fig3_passes_and_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = stargraph(&["reproduce", "fig3"], dir.path());
        assert!(o.status.success());
    }
    let report = json(&a.path().join("fig3_report.json"));
    assert_eq!(report["passed"], true);
    assert!(report["checks"][0]["value"].as_f64().unwrap() < 0.02);
    for f in ["fig3_values.csv", "fig3_histogram.csv", "fig3_report.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["dist-z-k", "--samples", "20000", "--seed", "4"];
    assert!(stargraph(&[&args[..], &["--threads", "1"]].concat(), a.path()).status.success());
    assert!(stargraph(&args, b.path()).status.success());
    let f = "dist_z_k_values.csv";
    assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    let summary = json(&a.path().join("dist_z_k_summary.json"));
    assert_eq!(summary["n"], 20000);
    assert!(summary["ks_99_threshold"].as_f64().unwrap() > 0.0);
}

#[test]
fn limit_q_mass() {
    let dir = tempfile::tempdir().unwrap();
    let o = stargraph(&["limit-q", "--l-bar", "2", "--grid-max", "200"], dir.path());
    assert!(o.status.success());
    let side = json(&dir.path().join("limit_q.json"));
    assert!((side["mass"].as_f64().unwrap() - 1.0).abs() < 1e-4);
    let csv = fs::read_to_string(dir.path().join("limit_q.csv")).unwrap();
    assert!(csv.starts_with("x,pdf\n"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(stargraph(&["eigen", "--bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(stargraph(&["reproduce", "fig9"], dir.path()).status.code(), Some(2));
    assert_eq!(
        stargraph(&["eigen", "--v", "3", "--lengths", "1,2"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(stargraph(&["selfcheck", "--only", "99"], dir.path()).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // equal lengths put two poles on top of each other
    let o = stargraph(&["eigen", "--lengths", "1,1", "--n", "10"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn config_file_sets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 3\nv = 3\nl_bar = 1.0\ndelta_l = 0.5\nsample_count = 10\n").unwrap();
    let o = stargraph(&["eigen", "--n", "5", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let summary = json(&dir.path().join("eigen_summary.json"));
    let ls = summary["lengths"].as_array().unwrap();
    assert_eq!(ls.len(), 3);
    assert!(ls.iter().all(|l| (1.0..=1.5).contains(&l.as_f64().unwrap())));

    fs::write(&cfg, "seed = 3\ncolour = 1\n").unwrap();
    let o = stargraph(&["eigen", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selfcheck_subset() {
    let dir = tempfile::tempdir().unwrap();
    let o = stargraph(&["selfcheck", "--only", "1,12"], dir.path());
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    let reports = json(&dir.path().join("selfcheck.json"));
    assert_eq!(reports.as_array().unwrap().len(), 2);
}

#[test]
fn surface_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let o = stargraph(
        &["surface", "--lengths", "1.1,1.5,1.9,1.3", "--r", "0,1e9", "--samples", "5000"],
        dir.path(),
    );
    assert!(o.status.success());
    let out = json(&dir.path().join("surface.json"));
    let est = out["estimates"].as_array().unwrap();
    assert_eq!(est[0]["estimate"], 0.0);
    assert_eq!(est[1]["estimate"], 1.0);
    assert!(est[0]["max_weight_fraction"].as_f64().unwrap() > 0.0);

    let o = stargraph(
        &["surface", "--lengths", "1.1,1.5,1.9,1.3", "--r", "1e9", "--samples", "5000", "--mixture"],
        dir.path(),
    );
    assert!(o.status.success());
    let out = json(&dir.path().join("surface.json"));
    assert_eq!(out["proposal"], "chart-mixture");
    assert_eq!(out["estimates"][0]["estimate"], 1.0);
}

#[test]
fn billiard_commands() {
    let dir = tempfile::tempdir().unwrap();
    let small = ["--levels", "400", "--window-min", "100", "--window-max", "300", "--samples", "2000"];
    let o = stargraph(&[&["seba-coef", "--level", "200"], &small[..]].concat(), dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("seba_coef_summary.json"));
    assert!(s["max"].as_f64().unwrap() <= s["window"]["c"].as_f64().unwrap());
    let o = stargraph(&[&["seba-det"], &small[..]].concat(), dir.path());
    assert!(o.status.success());
    let levels = fs::read_to_string(dir.path().join("seba_levels.csv")).unwrap();
    assert!(levels.starts_with("idx,n,m,energy\n1,0,0,"));
    let o = stargraph(&[&["seba-coef", "--level", "401"], &small[..]].concat(), dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spectral_distributions() {
    let dir = tempfile::tempdir().unwrap();
    let o = stargraph(
        &["dist-amp", "--v", "20", "--delta-l", "0.005", "--n", "2000", "--bond", "3"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("dist_amp_summary.json"));
    assert_eq!(s["n"], 2000);
    let o = stargraph(&["dist-zprime", "--v", "5", "--n", "300", "--first"], dir.path());
    assert!(o.status.success());
    let o = stargraph(&["dist-amp", "--v", "5", "--bond", "6"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn abel_curve_is_even() {
    let dir = tempfile::tempdir().unwrap();
    let o = stargraph(&["abel", "--r-max", "2", "--points", "41"], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("abel.csv")).unwrap();
    let d: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(d.len(), 41);
    for i in 0..20 {
        assert_eq!(d[i], d[40 - i]);
    }
}
