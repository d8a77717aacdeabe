//! End-to-end verification suite.
//!
//! Each check runs one experiment at full size and compares a single metric
//! with a fixed threshold. The same suite backs the `acceptance` test target
//! and the command-line `selfcheck`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::limits::{
    abel_value_distribution, cauchy_cdf, limit_q, limit_q_complex_form, q_tail_coefficient, tabulate_p,
    tabulate_q, DensityCurve, CURVE_NODES,
};
use crate::model::{generate_lengths, mean_density, BondLengths, LengthBox};
use crate::parallel::stream_rng;
use crate::presets::{
    SEBA_LEVELS, SEBA_WINDOW, SEVEN_BOND_SEED, SPECTRAL_HORIZON, SPECTRAL_WINDOWS, EIGS_PER_WINDOW,
    STANDARD_L_BAR,
};
use crate::seba::{golden_alpha, rectangle_levels, seba_determinant_samples, SebaWindow};
use crate::secular::{amplitudes, eigenvalues, sample_spectral_windows, Eigenfunction};
use crate::stats::{default_k_max, ks_distance, sample_z_over_k, sample_z_over_lengths, EmpiricalDistribution};
use crate::torus::{surface_cdf, z_prime_statistic};

/// Number of checks in the suite.
pub const CHECK_COUNT: u8 = 13;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub id: u8,
    pub name: String,
    pub metric: f64,
    pub threshold: f64,
    pub passed: bool,
    pub elapsed_s: f64,
    pub detail: String,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<34} metric={:<12.6e} threshold={:<10.4e} {:>7.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.metric,
            self.threshold,
            self.elapsed_s,
            self.detail
        )
    }
}

struct Outcome {
    metric: f64,
    threshold: f64,
    passed: bool,
    detail: String,
    time_limit: Option<Duration>,
}

/// Seven-bond reference graph with lengths in `[2, 2.1]`.
pub fn seven_bond_graph() -> Result<BondLengths> {
    generate_lengths(LengthBox::new(STANDARD_L_BAR, 0.1)?, 7, SEVEN_BOND_SEED)
}

fn narrow_graph(v: usize, seed: u64) -> Result<BondLengths> {
    generate_lengths(LengthBox::new(STANDARD_L_BAR, 0.1 / v as f64)?, v, seed)
}

fn exact_spectrum() -> Result<Outcome> {
    let pts = eigenvalues(&BondLengths::new(vec![1.0])?, 1001)?;
    let err = pts
        .iter()
        .enumerate()
        .map(|(n, p)| (p.k - n as f64 * PI).abs())
        .fold(0.0, f64::max);
    Ok(Outcome {
        metric: err,
        threshold: 1e-12,
        passed: err < 1e-12,
        detail: "max |k_n - n pi|, n <= 1000".into(),
        time_limit: Some(Duration::from_secs(1)),
    })
}

fn interlacing_weyl() -> Result<Outcome> {
    let l = seven_bond_graph()?;
    let pts = eigenvalues(&l, 100_000)?;
    let inside = pts.iter().all(|p| p.bracket.0 < p.k && p.k < p.bracket.1);
    let ascending = pts.windows(2).all(|w| w[0].k < w[1].k);
    let k_final = pts[pts.len() - 1].k;
    let deviation = (pts.len() as f64 - mean_density(&l) * k_final).abs();
    Ok(Outcome {
        metric: deviation,
        threshold: 8.0,
        passed: inside && ascending && deviation <= 8.0,
        detail: format!("|N(K) - dK| at K = {k_final:.3}; strictly bracketed: {inside}"),
        time_limit: Some(Duration::from_secs(30)),
    })
}

/// `sum_j int_0^{L_j} psi_j^2` by composite Simpson with about 200 nodes per
/// radian of phase.
fn norm_by_quadrature(ef: &Eigenfunction, lengths: &BondLengths) -> f64 {
    let mut total = 0.0;
    for (bond, &l) in lengths.as_slice().iter().enumerate() {
        let cells = ((ef.point.k * l * 200.0).ceil() as usize).max(64) & !1;
        let h = l / cells as f64;
        let f = |x: f64| ef.value(lengths, bond, x).powi(2);
        let mut s = f(0.0) + f(l);
        for i in 1..cells {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        total += s * h / 3.0;
    }
    total
}

fn normalization() -> Result<Outcome> {
    let l = seven_bond_graph()?;
    let pts = eigenvalues(&l, 10_001)?;
    let mut rng = stream_rng(3, 0);
    let mut worst_sum: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..pts.len());
        let ef = amplitudes(&pts[n], &l);
        let s: f64 = ef.amplitude_sq.iter().zip(l.as_slice()).map(|(a, l)| a * l).sum();
        worst_sum = worst_sum.max((s - 2.0).abs());
        worst_norm = worst_norm.max((norm_by_quadrature(&ef, &l) - 1.0).abs());
    }
    Ok(Outcome {
        metric: worst_sum,
        threshold: 1e-12,
        passed: worst_sum <= 1e-12 && worst_norm <= 1e-8,
        detail: format!("max |sum L A - 2|; max |norm - 1| = {worst_norm:.2e} (bound 1e-8)"),
        time_limit: None,
    })
}

fn z_over_k() -> Result<Outcome> {
    let l = seven_bond_graph()?;
    let run = sample_z_over_k(&l, default_k_max(STANDARD_L_BAR), 100_000, 7)?;
    let ks = ks_distance(&run.distribution, cauchy_cdf)?;
    Ok(Outcome {
        metric: ks,
        threshold: 0.02,
        passed: ks < 0.02,
        detail: format!("KS(Z/v, Cauchy), {} pole-guard redraws", run.discarded),
        time_limit: Some(Duration::from_secs(10)),
    })
}

fn z_over_lengths() -> Result<Outcome> {
    let bx = LengthBox::new(STANDARD_L_BAR, 0.1)?;
    let run = sample_z_over_lengths(bx, 7, 1e4, 100_000, 7)?;
    let ks = ks_distance(&run.distribution, cauchy_cdf)?;
    let control = sample_z_over_lengths(bx, 7, 1.0, 100_000, 7)?;
    let ks_control = ks_distance(&control.distribution, cauchy_cdf)?;
    Ok(Outcome {
        metric: ks,
        threshold: 0.02,
        passed: ks < 0.02 && ks_control > 0.2,
        detail: format!("KS at k dL = 1e3; control k dL = 0.1 gives {ks_control:.3} (needs > 0.2)"),
        time_limit: None,
    })
}

fn two_routes() -> Result<Outcome> {
    let l = generate_lengths(LengthBox::new(1.0, 1.0)?, 4, 5)?;
    let pts = eigenvalues(&l, 10_001)?;
    let ys: Vec<f64> = pts[1..].iter().map(|p| p.z_prime / 16.0).collect();
    let emp = EmpiricalDistribution::new(ys.clone())?;
    let quantiles = [0.1, 0.3, 0.5, 0.7, 0.9];
    let thresholds: Vec<f64> = quantiles.iter().map(|&q| emp.quantile(q)).collect();
    let surface = surface_cdf(|x| z_prime_statistic(x, &l), &thresholds, &l, 1_000_000, 11)?;

    // consecutive eigenvalues are correlated: block jackknife over 100 runs
    let blocks = 100;
    let per = ys.len() / blocks;
    let mut agree = 0;
    let mut worst_z: f64 = 0.0;
    for (r, s) in thresholds.iter().zip(&surface) {
        let frac = |xs: &[f64]| xs.iter().filter(|&&y| y < *r).count() as f64 / xs.len() as f64;
        let eig = frac(&ys);
        let loo: Vec<f64> = (0..blocks)
            .map(|b| {
                let rest: Vec<f64> = ys[..b * per].iter().chain(&ys[(b + 1) * per..]).copied().collect();
                frac(&rest)
            })
            .collect();
        let m = loo.iter().sum::<f64>() / blocks as f64;
        let se_eig =
            ((blocks as f64 - 1.0) / blocks as f64 * loo.iter().map(|t| (t - m).powi(2)).sum::<f64>()).sqrt();
        let z = (eig - s.estimate).abs() / se_eig.hypot(s.std_error);
        worst_z = worst_z.max(z);
        if z < 3.0 {
            agree += 1;
        }
    }
    Ok(Outcome {
        metric: agree as f64,
        threshold: 4.0,
        passed: agree >= 4,
        detail: format!("thresholds within 3 combined SE (of 5); largest |z| = {worst_z:.2}"),
        time_limit: None,
    })
}

/// Values of `statistic` over windowed eigenvalues of a narrow-box graph.
fn windowed_values<F>(v: usize, seed: u64, statistic: F) -> Result<EmpiricalDistribution>
where
    F: Fn(&crate::secular::SpectralPoint, &BondLengths) -> f64,
{
    let l = narrow_graph(v, seed)?;
    let pts = sample_spectral_windows(&l, SPECTRAL_WINDOWS, EIGS_PER_WINDOW, SPECTRAL_HORIZON, seed)?;
    EmpiricalDistribution::new(pts.iter().map(|p| statistic(p, &l)).collect())
}

fn z_prime_limit() -> Result<Outcome> {
    let emp = windowed_values(70, 7, |p, _| p.z_prime / 4900.0)?;
    let p = tabulate_p(STANDARD_L_BAR, CURVE_NODES);
    let ks = ks_distance(&emp, |y| p.cdf_at(y).min(1.0))?;
    Ok(Outcome {
        metric: ks,
        threshold: 0.03,
        passed: ks < 0.03,
        detail: format!("KS(Z'/v^2, P), v = 70, {} eigenvalues", emp.len()),
        time_limit: Some(Duration::from_secs(300)),
    })
}

fn amplitude_limit() -> Result<Outcome> {
    let emp = windowed_values(50, 7, |p, l| 2500.0 * amplitudes(p, l).amplitude_sq[0])?;
    let q = tabulate_q(STANDARD_L_BAR, 200.0, CURVE_NODES);
    let ks = ks_distance(&emp, |y| q.cdf_at(y).min(1.0))?;
    Ok(Outcome {
        metric: ks,
        threshold: 0.05,
        passed: ks < 0.05,
        detail: format!("KS(v^2 A_1, Q), v = 50, {} eigenvalues", emp.len()),
        time_limit: None,
    })
}

fn tail_constant() -> Result<Outcome> {
    let b = q_tail_coefficient(1.0);
    let scaled = 200f64.powf(1.5) * limit_q(200.0, STANDARD_L_BAR);
    let target = 0.348 / SQRT_2;
    let rel = (scaled / target - 1.0).abs();
    Ok(Outcome {
        metric: (b - 0.348).abs(),
        threshold: 0.004,
        passed: (b - 0.348).abs() <= 0.004 && rel < 0.1,
        detail: format!("b(1) = {b:.6}; eta^1.5 Q(200) = {scaled:.5}, {:.1}% from 0.348/sqrt 2", 100.0 * rel),
        time_limit: None,
    })
}

fn density_sanity() -> Result<Outcome> {
    let p = tabulate_p(STANDARD_L_BAR, CURVE_NODES);
    let q = tabulate_q(STANDARD_L_BAR, 200.0, CURVE_NODES);
    let mut form_gap: f64 = 0.0;
    for eta in [0.5, 2.0, 8.0] {
        form_gap = form_gap.max((limit_q(eta, STANDARD_L_BAR) - limit_q_complex_form(eta, STANDARD_L_BAR)?).abs());
    }
    let mass_err = (p.mass - 1.0).abs().max((q.mass - 1.0).abs());
    Ok(Outcome {
        metric: mass_err,
        threshold: 1e-4,
        passed: mass_err < 1e-4 && form_gap < 1e-8,
        detail: format!(
            "int P = {:.8}, int Q = {:.8}; Dawson vs complex form {form_gap:.1e} (bound 1e-8)",
            p.mass, q.mass
        ),
        time_limit: None,
    })
}

fn seba_setup() -> Result<(crate::seba::RectangleSpectrum, SebaWindow)> {
    let spec = rectangle_levels(golden_alpha(), SEBA_LEVELS)?;
    let window = SebaWindow::new(&spec, SEBA_WINDOW.0, SEBA_WINDOW.1, STANDARD_L_BAR)?;
    Ok((spec, window))
}

fn seba_cauchy() -> Result<Outcome> {
    let (spec, window) = seba_setup()?;
    let emp = seba_determinant_samples(&spec, &window, 100_000, 7)?;
    let ks = ks_distance(&emp, cauchy_cdf)?;
    Ok(Outcome {
        metric: ks,
        threshold: 0.05,
        passed: ks < 0.05,
        detail: "KS(normalised level sum, Cauchy)".into(),
        time_limit: None,
    })
}

fn seba_constant() -> Result<Outcome> {
    let (_, window) = seba_setup()?;
    let rel = (window.c / 9.75e5 - 1.0).abs();
    Ok(Outcome {
        metric: rel,
        threshold: 0.05,
        passed: rel < 0.05,
        detail: format!("c = {:.5e}, d = {:.6}", window.c, window.mean_density),
        time_limit: None,
    })
}

fn abel_oracle() -> Result<Outcome> {
    let uniform = DensityCurve::from_table(vec![1.0, 2.0], vec![1.0, 1.0], None)?;
    let r0 = abel_value_distribution(&uniform, 0.0);
    let err = (r0 - 2.0 / PI * (SQRT_2 - 1.0)).abs();
    let q = tabulate_q(STANDARD_L_BAR, 200.0, CURVE_NODES);
    let even = [0.1, 0.5, 1.0, 1.3, 3.0, 10.0].iter().all(|&r| {
        abel_value_distribution(&q, r) == abel_value_distribution(&q, -r)
            && abel_value_distribution(&uniform, r) == abel_value_distribution(&uniform, -r)
    });
    Ok(Outcome {
        metric: err,
        threshold: 1e-8,
        passed: err < 1e-8 && even,
        detail: format!("|R(0) - (2/pi)(sqrt 2 - 1)|; even in r: {even}"),
        time_limit: None,
    })
}

/// Short name of check `id` (1-based).
pub fn check_name(id: u8) -> &'static str {
    match id {
        1 => "exact single-bond spectrum",
        2 => "interlacing and Weyl count",
        3 => "eigenfunction normalisation",
        4 => "Z/v over k is Cauchy",
        5 => "Z/v over lengths is Cauchy",
        6 => "eigenvalue vs surface averages",
        7 => "Z'/v^2 follows P",
        8 => "v^2 A_i follows Q",
        9 => "amplitude tail constant",
        10 => "limit density normalisation",
        11 => "billiard level sum is Cauchy",
        12 => "billiard coefficient constant",
        13 => "value distribution transform",
        _ => "unknown",
    }
}

/// Runs check `id`. Errors inside the experiment produce a failed report.
pub fn run_check(id: u8) -> CheckReport {
    let start = Instant::now();
    let outcome = match id {
        1 => exact_spectrum(),
        2 => interlacing_weyl(),
        3 => normalization(),
        4 => z_over_k(),
        5 => z_over_lengths(),
        6 => two_routes(),
        7 => z_prime_limit(),
        8 => amplitude_limit(),
        9 => tail_constant(),
        10 => density_sanity(),
        11 => seba_cauchy(),
        12 => seba_constant(),
        13 => abel_oracle(),
        _ => Err(crate::Error::InvalidInput(format!("no check {id}"))),
    };
    let elapsed = start.elapsed();
    let name = check_name(id).to_string();
    match outcome {
        Ok(o) => {
            let in_time = o.time_limit.is_none_or(|t| elapsed < t);
            let mut detail = o.detail;
            if let Some(t) = o.time_limit {
                detail.push_str(&format!("; runtime limit {}s", t.as_secs()));
                if !in_time {
                    detail.push_str(" EXCEEDED");
                }
            }
            CheckReport {
                id,
                name,
                metric: o.metric,
                threshold: o.threshold,
                passed: o.passed && in_time,
                elapsed_s: elapsed.as_secs_f64(),
                detail,
            }
        }
        Err(e) => CheckReport {
            id,
            name,
            metric: f64::NAN,
            threshold: f64::NAN,
            passed: false,
            elapsed_s: elapsed.as_secs_f64(),
            detail: format!("error: {e}"),
        },
    }
}

/// Runs every check in order.
pub fn run_all() -> Vec<CheckReport> {
    (1..=CHECK_COUNT).map(run_check).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_checks_pass() {
        for id in [1, 9, 12, 13] {
            let r = run_check(id);
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn unknown_check_fails_cleanly() {
        let r = run_check(99);
        assert!(!r.passed);
        assert!(r.detail.starts_with("error"));
    }

    #[test]
    fn report_line_format() {
        let r = run_check(13);
        let line = r.to_string();
        assert!(line.starts_with("[PASS] 13 "));
    }
}
