//! Empirical distributions, Kolmogorov–Smirnov distances and histograms.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::fmt17;
use crate::model::{mean_density, BondLengths, LengthBox};
use crate::parallel::map_blocks;
use crate::secular::eval_z;

/// Points at which a reference distribution function is probed for monotonicity.
pub const CDF_PROBES: usize = 1000;

/// Default histogram resolution for Cauchy comparisons.
pub const DEFAULT_BINS: usize = 80;

/// Display range for heavy-tailed histograms.
pub const CAUCHY_DISPLAY: (f64, f64) = (-8.0, 8.0);

/// Pole-guard discards above this share of the samples are reported.
pub const DISCARD_LIMIT: f64 = 1e-6;

/// Default `k` range for sampling over `k`: `1e4 pi / L`.
pub fn default_k_max(l_bar: f64) -> f64 {
    1e4 * PI / l_bar
}

/// 99% asymptotic KS quantile `1.63/sqrt(n)`.
pub fn ks_threshold_99(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Sorted sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empirical distribution needs a sample".into()));
        }
        if values.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidInput("sample contains NaN".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Fraction of the sample `<= x`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Empirical `q`-quantile (lower).
    pub fn quantile(&self, q: f64) -> f64 {
        let i = ((q * self.len() as f64).ceil() as usize).clamp(1, self.len());
        self.values[i - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Same sample under a strictly increasing map.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::new(self.values.iter().map(|&x| f(x)).collect())
    }

    /// CSV `value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "value")?;
        for x in &self.values {
            writeln!(out, "{}", fmt17(*x))?;
        }
        Ok(())
    }
}

/// `sup_i max(|i/n - F(x_i)|, |(i-1)/n - F(x_i)|)`.
///
/// `cdf` is probed at [`CDF_PROBES`] points across the sample range first;
/// a decreasing step or a value outside `[0, 1]` is an error.
pub fn ks_distance<F: Fn(f64) -> f64>(emp: &EmpiricalDistribution, cdf: F) -> Result<f64> {
    let xs = emp.values();
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let probe = |x: f64| {
        if lo.is_finite() && hi.is_finite() {
            x
        } else {
            // infinite samples: probe a symmetric window instead
            x.clamp(-1e300, 1e300)
        }
    };
    let mut prev = f64::NEG_INFINITY;
    for i in 0..CDF_PROBES {
        let t = i as f64 / (CDF_PROBES - 1) as f64;
        let x = probe(lo + t * (hi - lo));
        let x = if x.is_nan() { lo } else { x };
        let f = cdf(x);
        if !(0.0..=1.0).contains(&f) || f < prev {
            return Err(Error::NonMonotoneCdf { x });
        }
        prev = f;
    }
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::NonMonotoneCdf { x });
        }
        d = d.max(((i + 1) as f64 / n - f).abs()).max((i as f64 / n - f).abs());
    }
    Ok(d)
}

/// Samples with the number of draws thrown away next to a pole.
#[derive(Debug, Clone)]
pub struct SampleRun {
    pub distribution: EmpiricalDistribution,
    pub discarded: usize,
}

impl SampleRun {
    pub fn discard_fraction(&self) -> f64 {
        self.discarded as f64 / self.distribution.len() as f64
    }
}

fn collect_blocks(blocks: Vec<(Vec<f64>, usize)>) -> Result<SampleRun> {
    let discarded = blocks.iter().map(|b| b.1).sum();
    let values = blocks.into_iter().flat_map(|b| b.0).collect();
    let run = SampleRun {
        distribution: EmpiricalDistribution::new(values)?,
        discarded,
    };
    if run.discard_fraction() > DISCARD_LIMIT {
        log::warn!(
            "{} of {} draws fell on a pole guard",
            run.discarded,
            run.distribution.len()
        );
    }
    Ok(run)
}

/// `Z(k)/v` for `k` uniform on `[0, k_max]`. Draws landing within the pole
/// guard are counted and redrawn.
pub fn sample_z_over_k(lengths: &BondLengths, k_max: f64, n_samples: usize, seed: u64) -> Result<SampleRun> {
    if !(k_max > 0.0 && k_max.is_finite()) || n_samples == 0 {
        return Err(Error::InvalidInput("need k_max > 0 and n_samples > 0".into()));
    }
    let levels = mean_density(lengths) * k_max;
    if levels < 100.0 {
        log::warn!("only {levels:.1} eigenvalues below k_max; Z/v will not look Cauchy");
    }
    let v = lengths.v() as f64;
    let blocks = map_blocks(n_samples, seed, |_, rng, len| {
        let mut out = Vec::with_capacity(len);
        let mut discarded = 0;
        while out.len() < len {
            let z = eval_z(k_max * rng.random::<f64>(), lengths);
            if z.is_finite() {
                out.push(z / v);
            } else {
                discarded += 1;
            }
        }
        (out, discarded)
    });
    collect_blocks(blocks)
}

/// `Z(k_fixed, L)/v` with a fresh length vector drawn from `bx` per sample.
pub fn sample_z_over_lengths(
    bx: LengthBox,
    v: usize,
    k_fixed: f64,
    n_samples: usize,
    seed: u64,
) -> Result<SampleRun> {
    if v == 0 || n_samples == 0 || !(k_fixed > 0.0) {
        return Err(Error::InvalidInput("need v, n_samples and k_fixed positive".into()));
    }
    if k_fixed * bx.delta_l < 100.0 {
        log::warn!(
            "k * delta_L = {:.3} is far from the large-k*delta_L regime",
            k_fixed * bx.delta_l
        );
    }
    let blocks = map_blocks(n_samples, seed, |_, rng, len| {
        let mut out = Vec::with_capacity(len);
        let mut discarded = 0;
        let mut buf = vec![0.0; v];
        while out.len() < len {
            for l in buf.iter_mut() {
                *l = bx.draw(rng);
            }
            let lengths = BondLengths::new(buf.clone()).expect("box draws are positive");
            let z = eval_z(k_fixed, &lengths);
            if z.is_finite() {
                out.push(z / v as f64);
            } else {
                discarded += 1;
            }
        }
        (out, discarded)
    });
    collect_blocks(blocks)
}

/// Density-normalised histogram: bar areas sum to the share of the sample
/// inside `range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub centers: Vec<f64>,
    pub density: Vec<f64>,
    pub counts: Vec<u64>,
    pub n: usize,
    pub clipped: f64,
}

impl Histogram {
    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.centers.len() as f64
    }

    pub fn area(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.width()
    }

    /// Poisson standard error of each bar.
    pub fn std_errors(&self) -> Vec<f64> {
        let scale = self.n as f64 * self.width();
        self.counts.iter().map(|&c| (c as f64).sqrt() / scale).collect()
    }

    /// CSV `bin_center,density`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        crate::export::write_histogram_csv(&self.centers, &self.density, out)
    }
}

/// Histogram over `range`, or over the sample range when `None`.
pub fn histogram(emp: &EmpiricalDistribution, bins: usize, range: Option<(f64, f64)>) -> Result<Histogram> {
    if bins < 2 {
        return Err(Error::InvalidInput("a histogram needs at least two bins".into()));
    }
    let xs = emp.values();
    let (lo, hi) = range.unwrap_or((xs[0], xs[xs.len() - 1]));
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidInput(format!("bad histogram range [{lo}, {hi}]")));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    let mut inside = 0usize;
    for &x in xs {
        if x < lo || x > hi {
            continue;
        }
        let b = (((x - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
        inside += 1;
    }
    let n = xs.len();
    let scale = n as f64 * width;
    Ok(Histogram {
        lo,
        hi,
        centers: (0..bins).map(|b| lo + (b as f64 + 0.5) * width).collect(),
        density: counts.iter().map(|&c| c as f64 / scale).collect(),
        counts,
        n,
        clipped: 1.0 - inside as f64 / n as f64,
    })
}

/// JSON summary `{n, ks, ks_99_threshold}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsSummary {
    pub n: usize,
    pub ks: f64,
    pub ks_99_threshold: f64,
}

impl KsSummary {
    pub fn new(n: usize, ks: f64) -> Self {
        Self {
            n,
            ks,
            ks_99_threshold: ks_threshold_99(n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::cauchy_cdf;
    use crate::model::generate_lengths;
    use crate::parallel::stream_rng;

    fn cauchy_sample(n: usize, seed: u64) -> EmpiricalDistribution {
        let mut rng = stream_rng(seed, 0);
        let xs = (0..n)
            .map(|_| (PI * (rng.random::<f64>() - 0.5)).tan())
            .collect();
        EmpiricalDistribution::new(xs).unwrap()
    }

    #[test]
    fn exact_quantiles_give_half_step() {
        let n = 200;
        let xs = (1..=n)
            .map(|i| ((i as f64 - 0.5) / n as f64 - 0.5) * PI)
            .map(f64::tan)
            .collect();
        let emp = EmpiricalDistribution::new(xs).unwrap();
        let d = ks_distance(&emp, cauchy_cdf).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-12, "{d}");
    }

    #[test]
    fn single_sample_at_centre() {
        let emp = EmpiricalDistribution::new(vec![0.0]).unwrap();
        assert_eq!(ks_distance(&emp, cauchy_cdf).unwrap(), 0.5);
    }

    #[test]
    fn seeded_cauchy_within_quantile() {
        let emp = cauchy_sample(100_000, 11);
        let d = ks_distance(&emp, cauchy_cdf).unwrap();
        assert!(d < ks_threshold_99(emp.len()), "{d}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(EmpiricalDistribution::new(vec![]).is_err());
        assert!(EmpiricalDistribution::new(vec![1.0, f64::NAN]).is_err());
        let emp = EmpiricalDistribution::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(
            ks_distance(&emp, |x| 1.0 - cauchy_cdf(x)),
            Err(Error::NonMonotoneCdf { .. })
        ));
        assert!(ks_distance(&emp, |x| 2.0 * cauchy_cdf(x)).is_err());
    }

    #[test]
    fn ks_invariant_under_monotone_map() {
        let emp = cauchy_sample(5000, 3);
        let d = ks_distance(&emp, cauchy_cdf).unwrap();
        let g = |x: f64| x.atan();
        let mapped = emp.map(g).unwrap();
        let d2 = ks_distance(&mapped, |y: f64| cauchy_cdf(y.tan())).unwrap();
        assert!((d - d2).abs() < 1e-12);
    }

    #[test]
    fn z_over_k_is_cauchy() {
        let l = generate_lengths(LengthBox::new(2.0, 0.1).unwrap(), 7, 2002).unwrap();
        let run = sample_z_over_k(&l, default_k_max(2.0), 100_000, 1).unwrap();
        assert!(run.discard_fraction() < DISCARD_LIMIT);
        let d = ks_distance(&run.distribution, cauchy_cdf).unwrap();
        assert!(d < 0.02, "{d}");
    }

    #[test]
    fn z_over_k_normalisation_independent_of_v() {
        let l = generate_lengths(LengthBox::new(2.0, 0.1).unwrap(), 20, 9).unwrap();
        let run = sample_z_over_k(&l, default_k_max(2.0), 100_000, 2).unwrap();
        assert!(ks_distance(&run.distribution, cauchy_cdf).unwrap() < 0.02);
    }

    #[test]
    fn single_bond_tangent_is_cauchy() {
        let l = BondLengths::new(vec![1.7]).unwrap();
        let run = sample_z_over_k(&l, 1e5, 100_000, 4).unwrap();
        assert!(ks_distance(&run.distribution, cauchy_cdf).unwrap() < 0.02);
        let run = sample_z_over_lengths(LengthBox::new(2.0, 0.1).unwrap(), 1, 1e4, 100_000, 4).unwrap();
        assert!(ks_distance(&run.distribution, cauchy_cdf).unwrap() < 0.02);
    }

    #[test]
    fn z_over_lengths_regimes() {
        let bx = LengthBox::new(2.0, 0.1).unwrap();
        let run = sample_z_over_lengths(bx, 7, 1e4, 100_000, 5).unwrap();
        assert!(ks_distance(&run.distribution, cauchy_cdf).unwrap() < 0.02);
        let run = sample_z_over_lengths(bx, 7, 1.0, 100_000, 5).unwrap();
        assert!(ks_distance(&run.distribution, cauchy_cdf).unwrap() > 0.2);
    }

    #[test]
    fn sampling_is_reproducible() {
        let l = BondLengths::new(vec![1.0, 1.3, 2.2]).unwrap();
        let a = sample_z_over_k(&l, 500.0, 10_000, 6).unwrap();
        let b = sample_z_over_k(&l, 500.0, 10_000, 6).unwrap();
        assert_eq!(a.distribution, b.distribution);
    }

    #[test]
    fn uniform_histogram_is_flat() {
        let mut rng = stream_rng(1, 0);
        let emp = EmpiricalDistribution::new((0..100_000).map(|_| rng.random::<f64>()).collect()).unwrap();
        let h = histogram(&emp, 10, Some((0.0, 1.0))).unwrap();
        for (d, se) in h.density.iter().zip(h.std_errors()) {
            assert!((d - 1.0).abs() < 5.0 * se);
        }
        assert!((h.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clipped_cauchy_histogram() {
        let emp = cauchy_sample(200_000, 8);
        let h = histogram(&emp, DEFAULT_BINS, Some(CAUCHY_DISPLAY)).unwrap();
        assert!((h.area() - (1.0 - h.clipped)).abs() < 1e-12);
        let expect_clip = 2.0 * (1.0 - cauchy_cdf(8.0));
        assert!((h.clipped - expect_clip).abs() < 0.005);
        let mid = h.density[DEFAULT_BINS / 2 - 1..=DEFAULT_BINS / 2].iter().sum::<f64>() / 2.0;
        assert!((mid - 1.0 / PI).abs() < 0.1 / PI, "{mid}");
        assert!(histogram(&emp, 1, None).is_err());
    }
}
