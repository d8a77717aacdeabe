//! The invariant measure on `Sigma = {x in T^v : sum_j tan x_j = 0}`.
//!
//! `Sigma` is parametrised by `xi in [0, pi)^{v-1}`: all coordinates but one
//! are free and the remaining one is `-atan(sum tan xi_j)`. Averages of `f`
//! over the eigenvalues `k_n`, evaluated at the torus points `k_n L mod pi`,
//! converge to `int f J dxi / int J dxi` with
//!
//! `J(xi) = (sum_{j free} L_j sec^2 xi_j) / (1 + (sum_{j free} tan xi_j)^2) + L_r`
//!
//! where `r` is the reconstructed bond. This gives finite-`v` distributions
//! without solving for any eigenvalue.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BondLengths;
use crate::parallel::stream_rng;
use crate::secular::SpectralPoint;
use crate::trig::reduce_mod_pi;

/// Jackknife groups; group `g` always draws from stream `g`.
pub const JACKKNIFE_GROUPS: usize = 64;

/// Warn when one weight carries more than this share of the total.
pub const WEIGHT_WARN_FRACTION: f64 = 0.01;

/// A point of `Sigma` with its Jacobian weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub xi: Vec<f64>,
    pub jacobian: f64,
    /// Torus point; the last coordinate is the reconstructed one.
    pub point: Vec<f64>,
}

/// `J(xi)` with the last bond reconstructed.
pub fn jacobian(xi: &[f64], lengths: &BondLengths) -> Result<f64> {
    let ls = lengths.as_slice();
    if xi.len() + 1 != ls.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} surface coordinates, got {}",
            ls.len() - 1,
            xi.len()
        )));
    }
    let mut sec_sum = 0.0;
    let mut tan_sum = 0.0;
    for (j, (&x, &l)) in xi.iter().zip(ls).enumerate() {
        if x.cos() == 0.0 || (x - FRAC_PI_2).abs() < 1e-300 {
            return Err(Error::PoleGuard {
                coordinate: j,
                value: x,
            });
        }
        let t = x.tan();
        sec_sum += l * (1.0 + t * t);
        tan_sum += t;
    }
    Ok(sec_sum / (1.0 + tan_sum * tan_sum) + ls[ls.len() - 1])
}

/// The torus point `(xi_1, .., xi_{v-1}, -atan(sum tan xi_j))`.
pub fn surface_point(xi: &[f64]) -> Vec<f64> {
    let tan_sum: f64 = xi.iter().map(|x| x.tan()).sum();
    let mut point = xi.to_vec();
    point.push(-tan_sum.atan());
    point
}

/// `G(x) = sum_j tan x_j`.
pub fn surface_residual(point: &[f64]) -> f64 {
    point.iter().map(|x| x.tan()).sum()
}

/// Uniform draw of `xi` with its weight and torus point.
pub fn sample_surface<R: Rng + ?Sized>(lengths: &BondLengths, rng: &mut R) -> SurfaceSample {
    let dims = lengths.v() - 1;
    loop {
        let xi: Vec<f64> = (0..dims).map(|_| PI * rng.random::<f64>()).collect();
        if let Ok(jacobian) = jacobian(&xi, lengths) {
            let point = surface_point(&xi);
            return SurfaceSample { xi, jacobian, point };
        }
    }
}

/// How surface points are proposed.
///
/// `SingleChart` draws `xi` uniformly and reconstructs the last bond; its
/// weight `J` has infinite variance (two coordinates near `pi/2` with
/// cancelling tangents), so the estimate converges slowly and the reported
/// error is optimistic. `ChartMixture` picks the reconstructed bond uniformly
/// per sample; the weight then becomes
/// `sum_j L_j sec^2 x_j / sum_j sec^2 x_j`, which lies in `[L_min, L_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Proposal {
    #[default]
    SingleChart,
    ChartMixture,
}

/// A torus point on `Sigma` with the reconstructed bond drawn uniformly, and
/// its bounded importance weight.
pub fn sample_chart_mixture<R: Rng + ?Sized>(lengths: &BondLengths, rng: &mut R) -> (Vec<f64>, f64) {
    let ls = lengths.as_slice();
    let v = ls.len();
    let chart = rng.random_range(0..v);
    let mut point = vec![0.0; v];
    let mut tan_sum = 0.0;
    for (j, x) in point.iter_mut().enumerate() {
        if j != chart {
            *x = PI * rng.random::<f64>();
            tan_sum += x.tan();
        }
    }
    point[chart] = -tan_sum.atan();
    let (mut num, mut den) = (0.0, 0.0);
    for (x, l) in point.iter().zip(ls) {
        let t = x.tan();
        let s2 = 1.0 + t * t;
        num += l * s2;
        den += s2;
    }
    (point, num / den)
}

/// Self-normalised Monte Carlo estimate of a surface average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub max_weight_fraction: f64,
}

struct GroupSums {
    num: Vec<f64>,
    den: f64,
    max_w: f64,
}

/// Streams `n` surface samples and accumulates `sum w f_i` for every output
/// of `eval` (which writes `outputs` values per point).
fn run_groups<F>(
    lengths: &BondLengths,
    n: usize,
    seed: u64,
    proposal: Proposal,
    outputs: usize,
    eval: F,
) -> Vec<GroupSums>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let groups = JACKKNIFE_GROUPS.min(n.max(1));
    (0..groups)
        .into_par_iter()
        .map(|g| {
            let len = n / groups + usize::from(g < n % groups);
            let mut rng = stream_rng(seed, g as u64);
            let mut sums = GroupSums {
                num: vec![0.0; outputs],
                den: 0.0,
                max_w: 0.0,
            };
            let mut vals = vec![0.0; outputs];
            for _ in 0..len {
                let (point, w) = match proposal {
                    Proposal::SingleChart => {
                        let s = sample_surface(lengths, &mut rng);
                        (s.point, s.jacobian)
                    }
                    Proposal::ChartMixture => sample_chart_mixture(lengths, &mut rng),
                };
                eval(&point, &mut vals);
                for (acc, v) in sums.num.iter_mut().zip(&vals) {
                    *acc += v * w;
                }
                sums.den += w;
                sums.max_w = sums.max_w.max(w);
            }
            sums
        })
        .collect()
}

/// Ratio estimates with delete-one-group jackknife errors.
fn finish(groups: &[GroupSums], n: usize, outputs: usize) -> Vec<SurfaceEstimate> {
    let den: f64 = groups.iter().map(|g| g.den).sum();
    let max_w = groups.iter().map(|g| g.max_w).fold(0.0, f64::max);
    let max_weight_fraction = max_w / den;
    if max_weight_fraction > WEIGHT_WARN_FRACTION {
        log::warn!(
            "largest importance weight is {:.2}% of the total; the estimate may be noisy",
            100.0 * max_weight_fraction
        );
    }
    let gcount = groups.len() as f64;
    (0..outputs)
        .map(|o| {
            let num: f64 = groups.iter().map(|g| g.num[o]).sum();
            let estimate = num / den;
            let std_error = if groups.len() < 2 {
                f64::NAN
            } else {
                let loo: Vec<f64> = groups
                    .iter()
                    .map(|g| (num - g.num[o]) / (den - g.den))
                    .collect();
                let mean = loo.iter().sum::<f64>() / gcount;
                let ss: f64 = loo.iter().map(|t| (t - mean).powi(2)).sum();
                ((gcount - 1.0) / gcount * ss).sqrt()
            };
            SurfaceEstimate {
                estimate,
                std_error,
                n_samples: n,
                max_weight_fraction,
            }
        })
        .collect()
}

/// `int_Sigma f dnu` estimated as `sum f(x_i) J_i / sum J_i` over uniform `xi_i`.
pub fn surface_average<F>(f: F, lengths: &BondLengths, n_samples: usize, seed: u64) -> Result<SurfaceEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    surface_average_with(f, lengths, n_samples, seed, Proposal::SingleChart)
}

/// [`surface_average`] with a chosen proposal.
pub fn surface_average_with<F>(
    f: F,
    lengths: &BondLengths,
    n_samples: usize,
    seed: u64,
    proposal: Proposal,
) -> Result<SurfaceEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_request(lengths, n_samples)?;
    let groups = run_groups(lengths, n_samples, seed, proposal, 1, |x, out| out[0] = f(x));
    Ok(finish(&groups, n_samples, 1)[0])
}

/// `P(statistic(x) < R)` under `nu` for every threshold, from one sample set.
pub fn surface_cdf<F>(
    statistic: F,
    thresholds: &[f64],
    lengths: &BondLengths,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<SurfaceEstimate>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    surface_cdf_with(statistic, thresholds, lengths, n_samples, seed, Proposal::SingleChart)
}

/// [`surface_cdf`] with a chosen proposal.
pub fn surface_cdf_with<F>(
    statistic: F,
    thresholds: &[f64],
    lengths: &BondLengths,
    n_samples: usize,
    seed: u64,
    proposal: Proposal,
) -> Result<Vec<SurfaceEstimate>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_request(lengths, n_samples)?;
    let groups = run_groups(lengths, n_samples, seed, proposal, thresholds.len(), |x, out| {
        let s = statistic(x);
        for (o, &r) in out.iter_mut().zip(thresholds) {
            *o = if s < r { 1.0 } else { 0.0 };
        }
    });
    Ok(finish(&groups, n_samples, thresholds.len()))
}

fn check_request(lengths: &BondLengths, n_samples: usize) -> Result<()> {
    if lengths.v() < 2 {
        return Err(Error::InvalidInput("the surface needs at least two bonds".into()));
    }
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be positive".into()));
    }
    Ok(())
}

/// Plain Monte Carlo mean of `J` over the uniform `xi` cube, which equals
/// `pi * d = sum_j L_j`. Returns `(mean, standard error)`.
pub fn mean_jacobian(lengths: &BondLengths, n_samples: usize, seed: u64) -> Result<(f64, f64)> {
    check_request(lengths, n_samples)?;
    let groups = run_groups(lengths, n_samples, seed, Proposal::SingleChart, 0, |_, _| {});
    let sums: Vec<(f64, usize)> = groups
        .iter()
        .enumerate()
        .map(|(g, s)| (s.den, n_samples / groups.len() + usize::from(g < n_samples % groups.len())))
        .collect();
    let total: f64 = sums.iter().map(|s| s.0).sum();
    let mean = total / n_samples as f64;
    let gcount = groups.len() as f64;
    let loo: Vec<f64> = sums
        .iter()
        .map(|(d, c)| (total - d) / (n_samples - c) as f64)
        .collect();
    let m = loo.iter().sum::<f64>() / gcount;
    let se = ((gcount - 1.0) / gcount * loo.iter().map(|t| (t - m).powi(2)).sum::<f64>()).sqrt();
    Ok((mean, se))
}

/// `Z'/v^2` at a torus point.
pub fn z_prime_statistic(point: &[f64], lengths: &BondLengths) -> f64 {
    let v = lengths.v() as f64;
    point
        .iter()
        .zip(lengths.as_slice())
        .map(|(x, l)| l / x.cos().powi(2))
        .sum::<f64>()
        / (v * v)
}

/// `v^2 A_i = 2 v^2 sec^2 x_i / sum_j L_j sec^2 x_j` at a torus point.
pub fn amplitude_statistic(point: &[f64], lengths: &BondLengths, bond: usize) -> f64 {
    let v = lengths.v() as f64;
    let sec2 = |x: f64| 1.0 / x.cos().powi(2);
    let denom: f64 = point.iter().zip(lengths.as_slice()).map(|(x, l)| l * sec2(*x)).sum();
    2.0 * v * v * sec2(point[bond]) / denom
}

/// `P_v` distribution function at `R`: `nu(Z'/v^2 < R)`.
pub fn finite_v_pv(lengths: &BondLengths, r: f64, n_samples: usize, seed: u64) -> Result<SurfaceEstimate> {
    if r <= 0.0 {
        return Ok(SurfaceEstimate {
            estimate: 0.0,
            std_error: 0.0,
            n_samples: 0,
            max_weight_fraction: 0.0,
        });
    }
    Ok(surface_cdf(|x| z_prime_statistic(x, lengths), &[r], lengths, n_samples, seed)?[0])
}

/// `Q_v` distribution function at `R` for bond `bond` (0-based): `nu(v^2 A_i < R)`.
pub fn finite_v_qv(
    lengths: &BondLengths,
    bond: usize,
    r: f64,
    n_samples: usize,
    seed: u64,
) -> Result<SurfaceEstimate> {
    if bond >= lengths.v() {
        return Err(Error::InvalidInput(format!("bond {bond} out of range")));
    }
    if r <= 0.0 {
        return Err(Error::InvalidInput("R must be positive".into()));
    }
    Ok(surface_cdf(|x| amplitude_statistic(x, lengths, bond), &[r], lengths, n_samples, seed)?[0])
}

/// Torus point `k L mod pi` of an eigenvalue.
pub fn torus_point(point: &SpectralPoint, lengths: &BondLengths) -> Vec<f64> {
    lengths.as_slice().iter().map(|&l| reduce_mod_pi(point.k, l)).collect()
}

/// Mean and standard error of `f(k_n L)` over the given eigenvalues; the
/// eigenvalue-side of the equidistribution identity.
pub fn spectral_average<F>(f: F, points: &[SpectralPoint], lengths: &BondLengths) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let vals: Vec<f64> = points.par_iter().map(|p| f(&torus_point(p, lengths))).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}
