use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use stargraph::checks::{run_check, CheckReport, CHECK_COUNT};
use stargraph::export::{write_file, write_json, write_spectrum_csv};
use stargraph::limits::{
    abel_value_distribution, cauchy_cdf, cauchy_pdf, tabulate_p, tabulate_q, DensityCurve, CURVE_NODES,
};
use stargraph::model::{generate_lengths, BondLengths, LengthBox, RunConfig};
use stargraph::presets::{self, ExperimentPreset, Figure};
use stargraph::seba::{
    ccdf_log_slope, golden_alpha, rectangle_levels, seba_coefficient_samples, seba_determinant_samples,
    RectangleSpectrum, SebaWindow,
};
use stargraph::secular::{amplitudes, eigenvalues, sample_spectral_windows, SpectralPoint};
use stargraph::stats::{
    default_k_max, histogram, ks_distance, sample_z_over_k, sample_z_over_lengths, EmpiricalDistribution,
    KsSummary, CAUCHY_DISPLAY,
};
use stargraph::torus::{amplitude_statistic, surface_cdf_with, z_prime_statistic, Proposal};

use crate::{Cli, Command, Common, SebaArgs, SpectralArgs, Statistic};

pub enum Status {
    Passed,
    ChecksFailed,
}

pub enum Failure {
    Usage(String),
    Numerical(stargraph::Error),
}

impl From<stargraph::Error> for Failure {
    fn from(e: stargraph::Error) -> Self {
        Failure::Numerical(e)
    }
}

type Outcome = std::result::Result<Status, Failure>;

/// Flags merged over the optional config file.
struct Settings {
    seed: u64,
    seed_given: bool,
    v: usize,
    l_bar: f64,
    delta_l: f64,
    samples: usize,
    k_max: Option<f64>,
    lengths: Option<Vec<f64>>,
    out: PathBuf,
}

impl Settings {
    fn resolve(c: &Common) -> Result<Self, Failure> {
        let cfg = match &c.config {
            Some(path) => RunConfig::load(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
            None => RunConfig::default(),
        };
        let v = match (&c.lengths, c.v) {
            (Some(ls), Some(v)) if ls.len() != v => {
                return Err(Failure::Usage(format!("--v {v} disagrees with {} --lengths", ls.len())))
            }
            (Some(ls), _) => ls.len(),
            (None, Some(v)) => v,
            (None, None) => cfg.v,
        };
        let s = Settings {
            seed: c.seed.unwrap_or(cfg.seed),
            seed_given: c.seed.is_some(),
            v,
            l_bar: c.l_bar.unwrap_or(cfg.l_bar),
            delta_l: c.delta_l.unwrap_or(cfg.delta_l),
            samples: c.samples.unwrap_or(cfg.sample_count),
            k_max: c.k_max,
            lengths: c.lengths.clone(),
            out: c.out.clone(),
        };
        if s.v == 0 || s.samples == 0 {
            return Err(Failure::Usage("--v and --samples must be positive".into()));
        }
        LengthBox::new(s.l_bar, s.delta_l).map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(s)
    }

    fn length_box(&self) -> LengthBox {
        LengthBox {
            l_bar: self.l_bar,
            delta_l: self.delta_l,
        }
    }

    fn bond_lengths(&self) -> Result<BondLengths, Failure> {
        match &self.lengths {
            Some(ls) => BondLengths::new(ls.clone()).map_err(|e| Failure::Usage(e.to_string())),
            None => Ok(generate_lengths(self.length_box(), self.v, self.seed)?),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub fn run(cli: &Cli) -> Outcome {
    if let Some(t) = cli.common.threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let s = Settings::resolve(&cli.common)?;
    fs::create_dir_all(&s.out).map_err(|e| Failure::Numerical(e.into()))?;
    match &cli.command {
        Command::Eigen { n } => eigen(&s, *n),
        Command::DistZK { bins } => dist_z_k(&s, *bins),
        Command::DistZLengths { k, bins } => dist_z_lengths(&s, *k, *bins),
        Command::DistZprime { spectral } => dist_spectral(&s, spectral, None),
        Command::DistAmp { spectral, bond } => dist_spectral(&s, spectral, Some(*bond)),
        Command::LimitP { nodes } => limit_p(&s, *nodes),
        Command::LimitQ { grid_max, nodes } => limit_q(&s, *grid_max, *nodes),
        Command::Abel { r_max, points, grid_max } => abel(&s, *r_max, *points, *grid_max),
        Command::Surface {
            statistic,
            r,
            bond,
            mixture,
        } => surface(&s, *statistic, r, *bond, *mixture),
        Command::SebaDet { seba } => seba_det(&s, seba),
        Command::SebaCoef { seba, level } => seba_coef(&s, seba, *level),
        Command::Reproduce { preset } => reproduce(&s, preset),
        Command::Selfcheck { only } => selfcheck(&s, only.as_deref()),
    }
}

fn done(paths: &[PathBuf]) -> Outcome {
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(Status::Passed)
}

fn write_values(path: &Path, emp: &EmpiricalDistribution) -> Result<(), Failure> {
    Ok(write_file(path, |w| emp.write_csv(w))?)
}

fn write_histogram(path: &Path, emp: &EmpiricalDistribution, bins: usize, range: Option<(f64, f64)>) -> Result<(), Failure> {
    if bins < 2 {
        return Err(Failure::Usage("--bins must be at least 2".into()));
    }
    let h = histogram(emp, bins, range)?;
    Ok(write_file(path, |w| h.write_csv(w))?)
}

fn write_curve(path: &Path, curve: &DensityCurve) -> Result<(), Failure> {
    Ok(write_file(path, |w| curve.write_csv(w))?)
}

fn cauchy_curve() -> stargraph::Result<DensityCurve> {
    let grid: Vec<f64> = (0..=1600).map(|i| -8.0 + 0.01 * i as f64).collect();
    let pdf = grid.iter().map(|&x| cauchy_pdf(x)).collect();
    DensityCurve::from_table(grid, pdf, None)
}

fn eigen(s: &Settings, n: usize) -> Outcome {
    if n == 0 {
        return Err(Failure::Usage("--n must be positive".into()));
    }
    let l = s.bond_lengths()?;
    let pts = eigenvalues(&l, n)?;
    let csv = s.path("eigen_spectrum.csv");
    write_file(&csv, |w| write_spectrum_csv(&pts, w))?;
    let json_path = s.path("eigen_summary.json");
    write_json(
        &json_path,
        &json!({
            "n": pts.len(),
            "lengths": l.as_slice(),
            "mean_density": stargraph::model::mean_density(&l),
            "k_last": pts[pts.len() - 1].k,
        }),
    )?;
    done(&[csv, json_path])
}

fn cauchy_outputs(s: &Settings, prefix: &str, emp: &EmpiricalDistribution, bins: usize, extra: Value) -> Outcome {
    let ks = ks_distance(emp, cauchy_cdf)?;
    let values = s.path(&format!("{prefix}_values.csv"));
    let hist = s.path(&format!("{prefix}_histogram.csv"));
    let summary = s.path(&format!("{prefix}_summary.json"));
    write_values(&values, emp)?;
    write_histogram(&hist, emp, bins, Some(CAUCHY_DISPLAY))?;
    let mut body = serde_json::to_value(KsSummary::new(emp.len(), ks)).expect("plain struct");
    merge(&mut body, extra);
    write_json(&summary, &body)?;
    println!("ks = {ks:.5}");
    done(&[values, hist, summary])
}

fn merge(into: &mut Value, extra: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, extra) {
        a.extend(b);
    }
}

fn dist_z_k(s: &Settings, bins: usize) -> Outcome {
    let l = s.bond_lengths()?;
    let k_max = s.k_max.unwrap_or_else(|| default_k_max(s.l_bar));
    let run = sample_z_over_k(&l, k_max, s.samples, s.seed)?;
    cauchy_outputs(
        s,
        "dist_z_k",
        &run.distribution,
        bins,
        json!({"k_max": k_max, "discarded": run.discarded, "v": l.v()}),
    )
}

fn dist_z_lengths(s: &Settings, k: f64, bins: usize) -> Outcome {
    if !(k > 0.0) {
        return Err(Failure::Usage("--k must be positive".into()));
    }
    let run = sample_z_over_lengths(s.length_box(), s.v, k, s.samples, s.seed)?;
    cauchy_outputs(
        s,
        "dist_z_lengths",
        &run.distribution,
        bins,
        json!({"k": k, "k_delta_l": k * s.delta_l, "discarded": run.discarded, "v": s.v}),
    )
}

fn spectral_points(l: &BondLengths, a: &SpectralArgs, seed: u64) -> Result<Vec<SpectralPoint>, Failure> {
    if a.n == 0 || a.per_window == 0 {
        return Err(Failure::Usage("--n and --per-window must be positive".into()));
    }
    Ok(if a.first {
        eigenvalues(l, a.n + 1)?.split_off(1)
    } else {
        let windows = a.n.div_ceil(a.per_window);
        let mut pts = sample_spectral_windows(l, windows, a.per_window, a.horizon, seed)?;
        pts.truncate(a.n);
        pts
    })
}

fn dist_spectral(s: &Settings, a: &SpectralArgs, bond: Option<usize>) -> Outcome {
    let l = s.bond_lengths()?;
    if let Some(b) = bond {
        if b == 0 || b > l.v() {
            return Err(Failure::Usage(format!("--bond must lie in 1..={}", l.v())));
        }
    }
    let pts = spectral_points(&l, a, s.seed)?;
    let v2 = (l.v() * l.v()) as f64;
    let (prefix, values, curve) = match bond {
        None => (
            "dist_zprime",
            pts.iter().map(|p| p.z_prime / v2).collect::<Vec<_>>(),
            tabulate_p(s.l_bar, CURVE_NODES),
        ),
        Some(b) => (
            "dist_amp",
            pts.iter().map(|p| v2 * amplitudes(p, &l).amplitude_sq[b - 1]).collect(),
            tabulate_q(s.l_bar, 200.0, CURVE_NODES),
        ),
    };
    let emp = EmpiricalDistribution::new(values)?;
    let ks = ks_distance(&emp, |x| curve.cdf_at(x).min(1.0))?;
    let vals = s.path(&format!("{prefix}_values.csv"));
    let hist = s.path(&format!("{prefix}_histogram.csv"));
    let limit = s.path(&format!("{prefix}_limit.csv"));
    let summary = s.path(&format!("{prefix}_summary.json"));
    write_values(&vals, &emp)?;
    write_histogram(&hist, &emp, a.bins, Some((0.0, emp.quantile(0.99))))?;
    write_curve(&limit, &curve)?;
    let mut body = serde_json::to_value(KsSummary::new(emp.len(), ks)).expect("plain struct");
    merge(&mut body, json!({"v": l.v(), "l_bar": s.l_bar, "windowed": !a.first}));
    write_json(&summary, &body)?;
    println!("ks = {ks:.5}");
    done(&[vals, hist, limit, summary])
}

fn limit_p(s: &Settings, nodes: usize) -> Outcome {
    if nodes < 3 {
        return Err(Failure::Usage("--nodes must be at least 3".into()));
    }
    let curve = tabulate_p(s.l_bar, nodes);
    curve_outputs(s, "limit_p", &curve)
}

fn limit_q(s: &Settings, grid_max: f64, nodes: usize) -> Outcome {
    if nodes < 3 || !(grid_max > 0.0) {
        return Err(Failure::Usage("need --nodes >= 3 and --grid-max > 0".into()));
    }
    let curve = tabulate_q(s.l_bar, grid_max, nodes);
    curve_outputs(s, "limit_q", &curve)
}

fn curve_outputs(s: &Settings, prefix: &str, curve: &DensityCurve) -> Outcome {
    let csv = s.path(&format!("{prefix}.csv"));
    let side = s.path(&format!("{prefix}.json"));
    write_curve(&csv, curve)?;
    write_json(&side, &curve.sidecar())?;
    println!("mass = {:.8}", curve.mass);
    done(&[csv, side])
}

fn abel(s: &Settings, r_max: f64, points: usize, grid_max: f64) -> Outcome {
    if points < 2 || !(r_max > 0.0) {
        return Err(Failure::Usage("need --points >= 2 and --r-max > 0".into()));
    }
    let q = tabulate_q(s.l_bar, grid_max, CURVE_NODES);
    // symmetric by construction: the integer numerator just changes sign
    let half = (points - 1) as f64;
    let rs: Vec<f64> = (0..points).map(|i| r_max * (2.0 * i as f64 - half) / half).collect();
    let path = s.path("abel.csv");
    write_file(&path, |w| {
        use std::io::Write;
        writeln!(w, "r,density")?;
        for &r in &rs {
            let d = abel_value_distribution(&q, r);
            writeln!(w, "{},{}", stargraph::export::fmt17(r), stargraph::export::fmt17(d))?;
        }
        Ok(())
    })?;
    done(&[path])
}

fn surface(s: &Settings, statistic: Statistic, r: &[f64], bond: usize, mixture: bool) -> Outcome {
    let l = s.bond_lengths()?;
    if l.v() < 2 {
        return Err(Failure::Usage("the surface needs --v >= 2".into()));
    }
    if bond == 0 || bond > l.v() {
        return Err(Failure::Usage(format!("--bond must lie in 1..={}", l.v())));
    }
    let proposal = if mixture {
        Proposal::ChartMixture
    } else {
        Proposal::SingleChart
    };
    let estimates = match statistic {
        Statistic::Zprime => surface_cdf_with(|x| z_prime_statistic(x, &l), r, &l, s.samples, s.seed, proposal)?,
        Statistic::Amplitude => {
            surface_cdf_with(|x| amplitude_statistic(x, &l, bond - 1), r, &l, s.samples, s.seed, proposal)?
        }
    };
    let rows: Vec<Value> = r
        .iter()
        .zip(&estimates)
        .map(|(r, e)| {
            let mut v = serde_json::to_value(e).expect("plain struct");
            merge(&mut v, json!({"r": r}));
            v
        })
        .collect();
    for row in &rows {
        println!("{row}");
    }
    let path = s.path("surface.json");
    write_json(&path, &json!({"v": l.v(), "proposal": proposal, "estimates": rows}))?;
    done(&[path])
}

fn seba_setup(s: &Settings, a: &SebaArgs) -> Result<(RectangleSpectrum, SebaWindow), Failure> {
    let spec = rectangle_levels(a.alpha.unwrap_or_else(golden_alpha), a.levels)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let window = SebaWindow::new(&spec, a.window_min, a.window_max, s.l_bar)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok((spec, window))
}

fn seba_det(s: &Settings, a: &SebaArgs) -> Outcome {
    let (spec, window) = seba_setup(s, a)?;
    let levels = s.path("seba_levels.csv");
    write_file(&levels, |w| spec.write_csv(w))?;
    let emp = seba_determinant_samples(&spec, &window, s.samples, s.seed)?;
    println!("wrote {}", levels.display());
    cauchy_outputs(s, "seba_det", &emp, a.bins, json!({"window": window}))
}

fn seba_coef(s: &Settings, a: &SebaArgs, level: usize) -> Outcome {
    let (spec, window) = seba_setup(s, a)?;
    if level == 0 || level > spec.len() {
        return Err(Failure::Usage(format!("--level must lie in 1..={}", spec.len())));
    }
    let emp = seba_coefficient_samples(&spec, &window, level, s.samples, s.seed)?;
    let vals = s.path("seba_coef_values.csv");
    let hist = s.path("seba_coef_histogram.csv");
    let summary = s.path("seba_coef_summary.json");
    write_values(&vals, &emp)?;
    write_histogram(&hist, &emp, a.bins, Some((0.0, emp.quantile(0.95))))?;
    write_json(
        &summary,
        &json!({
            "n": emp.len(),
            "window": window,
            "level": level,
            "max": emp.values()[emp.len() - 1],
            "ccdf_slope_10_100": ccdf_log_slope(&emp, 10.0, 100.0),
        }),
    )?;
    println!("c = {:.6e}", window.c);
    done(&[vals, hist, summary])
}

struct CheckValue {
    name: String,
    value: f64,
    bound: f64,
}

fn report(s: &Settings, preset: &ExperimentPreset, values: Vec<CheckValue>, extra: Value, written: Vec<PathBuf>) -> Outcome {
    let checks: Vec<Value> = values
        .iter()
        .map(|c| json!({"name": c.name, "value": c.value, "bound": c.bound, "passed": c.value < c.bound}))
        .collect();
    let passed = values.iter().all(|c| c.value < c.bound);
    let mut body = json!({"preset": preset.name, "parameters": preset, "checks": checks, "passed": passed});
    merge(&mut body, extra);
    let path = s.path(&format!("{}_report.json", preset.name));
    write_json(&path, &body)?;
    for c in &values {
        println!(
            "{} {} = {:.6} (bound {})",
            if c.value < c.bound { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.bound
        );
    }
    let mut all = written;
    all.push(path);
    done(&all)?;
    Ok(if passed { Status::Passed } else { Status::ChecksFailed })
}

fn bound(preset: &ExperimentPreset, name: &str) -> f64 {
    preset.checks.iter().find(|c| c.name == name).map_or(f64::NAN, |c| c.bound)
}

fn reproduce(s: &Settings, name: &str) -> Outcome {
    let preset = presets::preset(name).map_err(|e| Failure::Usage(e.to_string()))?;
    // the preset's own seed unless one was given
    let seed = if s.seed_given { s.seed } else { preset.seed };
    let dir = |file: &str| s.path(&format!("{name}_{file}"));
    match preset.figure {
        Figure::Fig3 => {
            let l = preset.lengths()?;
            let run = sample_z_over_k(&l, default_k_max(preset.l_bar), preset.samples, seed)?;
            let ks = ks_distance(&run.distribution, cauchy_cdf)?;
            let (vals, hist, curve) = (dir("values.csv"), dir("histogram.csv"), dir("cauchy.csv"));
            write_values(&vals, &run.distribution)?;
            write_histogram(&hist, &run.distribution, 80, Some(CAUCHY_DISPLAY))?;
            write_curve(&curve, &cauchy_curve()?)?;
            let checks = vec![CheckValue { name: "ks_cauchy".into(), value: ks, bound: bound(&preset, "ks_cauchy") }];
            report(s, &preset, checks, json!({"n": run.distribution.len(), "lengths": l.as_slice()}), vec![vals, hist, curve])
        }
        Figure::Fig4 | Figure::Fig5 => {
            let l = preset.lengths()?;
            let pts = sample_spectral_windows(
                &l,
                presets::SPECTRAL_WINDOWS,
                presets::EIGS_PER_WINDOW,
                presets::SPECTRAL_HORIZON,
                seed,
            )?;
            let v2 = (preset.v * preset.v) as f64;
            let (values, curve, check): (Vec<f64>, DensityCurve, &str) = if preset.figure == Figure::Fig4 {
                (pts.iter().map(|p| p.z_prime / v2).collect(), tabulate_p(preset.l_bar, CURVE_NODES), "ks_p")
            } else {
                (
                    pts.iter().map(|p| v2 * amplitudes(p, &l).amplitude_sq[0]).collect(),
                    tabulate_q(preset.l_bar, 200.0, CURVE_NODES),
                    "ks_q",
                )
            };
            let emp = EmpiricalDistribution::new(values)?;
            let ks = ks_distance(&emp, |x| curve.cdf_at(x).min(1.0))?;
            let (vals, hist, limit) = (dir("values.csv"), dir("histogram.csv"), dir("limit.csv"));
            write_values(&vals, &emp)?;
            write_histogram(&hist, &emp, 80, Some((0.0, emp.quantile(0.99))))?;
            write_curve(&limit, &curve)?;
            let checks = vec![CheckValue { name: check.into(), value: ks, bound: bound(&preset, check) }];
            report(s, &preset, checks, json!({"n": emp.len()}), vec![vals, hist, limit])
        }
        Figure::Fig6 | Figure::Fig7 => {
            let spec = rectangle_levels(golden_alpha(), presets::SEBA_LEVELS)?;
            let window = SebaWindow::new(&spec, presets::SEBA_WINDOW.0, presets::SEBA_WINDOW.1, preset.l_bar)?;
            let c_err = (window.c / 9.75e5 - 1.0).abs();
            let mut checks = vec![CheckValue {
                name: "c_relative_error".into(),
                value: c_err,
                bound: bound(&preset, "c_relative_error"),
            }];
            let (vals, hist) = (dir("values.csv"), dir("histogram.csv"));
            let levels = dir("levels.csv");
            write_file(&levels, |w| spec.write_csv(w))?;
            let extra = if preset.figure == Figure::Fig6 {
                let emp = seba_determinant_samples(&spec, &window, preset.samples, seed)?;
                let ks = ks_distance(&emp, cauchy_cdf)?;
                write_values(&vals, &emp)?;
                write_histogram(&hist, &emp, 80, Some(CAUCHY_DISPLAY))?;
                checks.insert(0, CheckValue { name: "ks_cauchy".into(), value: ks, bound: bound(&preset, "ks_cauchy") });
                json!({"n": emp.len(), "window": window})
            } else {
                let emp = seba_coefficient_samples(&spec, &window, presets::SEBA_LEVEL_INDEX, preset.samples, seed)?;
                write_values(&vals, &emp)?;
                write_histogram(&hist, &emp, 80, Some((0.0, emp.quantile(0.95))))?;
                json!({
                    "n": emp.len(),
                    "window": window,
                    "ccdf_slope_10_100": ccdf_log_slope(&emp, 10.0, 100.0),
                })
            };
            report(s, &preset, checks, extra, vec![levels, vals, hist])
        }
    }
}

fn selfcheck(s: &Settings, only: Option<&[u8]>) -> Outcome {
    let ids: Vec<u8> = match only {
        Some(ids) => {
            if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > CHECK_COUNT) {
                return Err(Failure::Usage(format!("no check {bad}; ids run from 1 to {CHECK_COUNT}")));
            }
            ids.to_vec()
        }
        None => (1..=CHECK_COUNT).collect(),
    };
    let mut reports: Vec<CheckReport> = Vec::new();
    for id in ids {
        let r = run_check(id);
        println!("{r}");
        reports.push(r);
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} of {} checks passed", reports.len() - failed, reports.len());
    let path = s.path("selfcheck.json");
    write_json(&path, &reports)?;
    done(&[path])?;
    Ok(if failed == 0 { Status::Passed } else { Status::ChecksFailed })
}
