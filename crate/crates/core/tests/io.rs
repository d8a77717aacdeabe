//! File formats: config loading and CSV round trips.

use std::fs;

use stargraph::export::{write_file, write_spectrum_csv};
use stargraph::limits::tabulate_q;
use stargraph::model::{BondLengths, RunConfig};
use stargraph::secular::eigenvalues;
use stargraph::stats::EmpiricalDistribution;

#[test]
fn config_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "seed = 9\nv = 12\nl_bar = 1.5\ndelta_l = 0.02\nsample_count = 500\n").unwrap();
    let cfg = RunConfig::load(&path).unwrap();
    assert_eq!((cfg.seed, cfg.v, cfg.sample_count), (9, 12, 500));
    assert_eq!(cfg.length_box().l_bar, 1.5);

    fs::write(&path, "inverse_lambda = 0.5\n").unwrap();
    assert!(RunConfig::load(&path).is_err());
    assert!(RunConfig::load(&dir.path().join("missing.toml")).is_err());
}

#[test]
fn spectrum_csv_round_trips_exactly() {
    let l = BondLengths::new(vec![1.0, 1.234_567_891, 0.7]).unwrap();
    let pts = eigenvalues(&l, 200).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spectrum.csv");
    write_file(&path, |w| write_spectrum_csv(&pts, w)).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    for (line, p) in text.lines().skip(1).zip(&pts) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0].parse::<u64>().unwrap(), p.index);
        assert_eq!(cols[1].parse::<f64>().unwrap(), p.k);
        assert_eq!(cols[2].parse::<f64>().unwrap(), p.z_prime);
    }
}

#[test]
fn sample_and_curve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let emp = EmpiricalDistribution::new(vec![3.0, -1.0, 0.1 + 0.2]).unwrap();
    let path = dir.path().join("values.csv");
    write_file(&path, |w| emp.write_csv(w)).unwrap();
    let back: Vec<f64> = fs::read_to_string(&path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(back, emp.values());

    let q = tabulate_q(2.0, 50.0, 201);
    let path = dir.path().join("q.csv");
    write_file(&path, |w| q.write_csv(w)).unwrap();
    let rows = fs::read_to_string(&path).unwrap().lines().count();
    assert_eq!(rows, q.grid.len() + 1);
    assert_eq!(q.sidecar()["tail_exponent"], 1.5);
}
