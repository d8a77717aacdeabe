//! Rectangle billiard with a point scatterer.
//!
//! The unperturbed rectangle has sides `alpha^{1/4}` and `alpha^{-1/4}` (unit
//! area) and levels `E_{n,m} = pi^2 (n^2 alpha^{-1/2} + m^2 alpha^{1/2})`. A
//! scatterer at a corner couples to every mode with the same weight, so the
//! perturbed spectrum is governed by sums `sum_k 1/(E_k - E)` over the
//! unperturbed levels. Those sums are sampled here with `E` uniform in a
//! window of levels.
//!
//! Modes with `n = 0` or `m = 0` have a smaller value at the corner than the
//! rest; like the original treatment, all retained modes get the same weight.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::fmt17;
use crate::parallel::map_blocks;
use crate::stats::EmpiricalDistribution;

/// `(sqrt(5) - 1)/2`.
pub fn golden_alpha() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// Draws closer than this to a level are redrawn.
pub const LEVEL_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub n: u32,
    pub m: u32,
    pub energy: f64,
}

/// The lowest `K` rectangle levels in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectangleSpectrum {
    pub alpha: f64,
    pub levels: Vec<Level>,
}

pub fn level_energy(alpha: f64, n: u32, m: u32) -> f64 {
    let (n, m) = (n as f64, m as f64);
    PI * PI * (n * n / alpha.sqrt() + m * m * alpha.sqrt())
}

/// Enumerates all levels up to an energy cut, doubling the cut until at
/// least `k` levels lie below it, then keeps the lowest `k`. Ties are ordered
/// by `(n, m)`, so a shorter spectrum is always a prefix of a longer one.
pub fn rectangle_levels(alpha: f64, k: usize) -> Result<RectangleSpectrum> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    if k == 0 {
        return Err(Error::InvalidInput("K must be at least 1".into()));
    }
    let (a, b) = (PI * PI / alpha.sqrt(), PI * PI * alpha.sqrt());
    // area term of the counting function, with room for the boundary term
    let mut cut = 4.0 * PI * k as f64 + a + b;
    loop {
        let n_max = (cut / a).sqrt().ceil() as u32;
        let m_max = (cut / b).sqrt().ceil() as u32;
        let mut levels = Vec::new();
        for n in 0..=n_max {
            for m in 0..=m_max {
                let energy = level_energy(alpha, n, m);
                if energy <= cut {
                    levels.push(Level { n, m, energy });
                }
            }
        }
        if levels.len() >= k {
            levels.sort_by(|x, y| {
                x.energy
                    .total_cmp(&y.energy)
                    .then(x.n.cmp(&y.n))
                    .then(x.m.cmp(&y.m))
            });
            levels.truncate(k);
            return Ok(RectangleSpectrum { alpha, levels });
        }
        cut *= 2.0;
    }
}

impl RectangleSpectrum {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `E_i` with 1-based `i`; `E_1 = 0`.
    pub fn energy(&self, i: usize) -> f64 {
        self.levels[i - 1].energy
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    /// Number of levels `<= e`.
    pub fn count_below(&self, e: f64) -> usize {
        self.levels.partition_point(|l| l.energy <= e)
    }

    /// Two-term smooth counting function `(A E + P sqrt(E))/(4 pi)` for the
    /// unit-area rectangle with Neumann-type boundary.
    pub fn weyl_estimate(&self, e: f64) -> f64 {
        let perimeter = 2.0 * (self.alpha.powf(0.25) + self.alpha.powf(-0.25));
        (e + perimeter * e.sqrt()) / (4.0 * PI)
    }

    /// CSV `idx,n,m,energy` with 1-based `idx`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "idx,n,m,energy")?;
        for (i, l) in self.levels.iter().enumerate() {
            writeln!(out, "{},{},{},{}", i + 1, l.n, l.m, fmt17(l.energy))?;
        }
        Ok(())
    }
}

/// Sampling window of levels `n_min..=n_max` (1-based) with its mean
/// density and the coefficient constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SebaWindow {
    pub n_min: usize,
    pub n_max: usize,
    pub e_min: f64,
    pub e_max: f64,
    pub mean_density: f64,
    pub c: f64,
    pub l_bar: f64,
}

/// `c = (2/L)(E_max - E_min)^2 d^2`.
pub fn coefficient_constant(l_bar: f64, e_min: f64, e_max: f64, d: f64) -> f64 {
    2.0 / l_bar * (e_max - e_min).powi(2) * d * d
}

impl SebaWindow {
    /// Window with `d` the least-squares slope of level index against energy.
    pub fn new(spec: &RectangleSpectrum, n_min: usize, n_max: usize, l_bar: f64) -> Result<Self> {
        if n_min < 1 || n_max > spec.len() || n_max <= n_min {
            return Err(Error::InvalidInput(format!(
                "window [{n_min}, {n_max}] must satisfy 1 <= n_min < n_max <= {}",
                spec.len()
            )));
        }
        if !(l_bar > 0.0) {
            return Err(Error::InvalidInput("l_bar must be positive".into()));
        }
        let pts: Vec<(f64, f64)> = (n_min..=n_max).map(|i| (spec.energy(i), i as f64)).collect();
        let count = pts.len() as f64;
        let (mx, my) = pts
            .iter()
            .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / count, b + y / count));
        let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
            (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
        });
        let mean_density = sxy / sxx;
        let (e_min, e_max) = (spec.energy(n_min), spec.energy(n_max));
        Ok(Self {
            n_min,
            n_max,
            e_min,
            e_max,
            mean_density,
            c: coefficient_constant(l_bar, e_min, e_max, mean_density),
            l_bar,
        })
    }
}

fn draw_energy<R: Rng + ?Sized>(energies: &[f64], window: &SebaWindow, rng: &mut R) -> f64 {
    loop {
        let e = window.e_min + (window.e_max - window.e_min) * rng.random::<f64>();
        let i = energies.partition_point(|&x| x < e);
        let near_below = i > 0 && e - energies[i - 1] < LEVEL_GUARD;
        let near_above = i < energies.len() && energies[i] - e < LEVEL_GUARD;
        if !(near_below || near_above) {
            return e;
        }
    }
}

/// `(1/(pi d)) sum_k 1/(E_k - E)`, the sum in units of the mean spacing
/// divided by `pi`.
pub fn determinant_sample(energies: &[f64], e: f64, mean_density: f64) -> f64 {
    energies.iter().map(|&x| 1.0 / (x - e)).sum::<f64>() / (PI * mean_density)
}

/// `c (E_i - E)^{-2} / sum_k (E_k - E)^{-2}` with 1-based `i`.
pub fn coefficient_sample(energies: &[f64], i: usize, e: f64, c: f64) -> f64 {
    let own = (energies[i - 1] - e).powi(-2);
    let total: f64 = energies.iter().map(|&x| (x - e).powi(-2)).sum();
    c * own / total
}

/// Normalised spectral sums at uniform energies in the window.
pub fn seba_determinant_samples(
    spec: &RectangleSpectrum,
    window: &SebaWindow,
    n_samples: usize,
    seed: u64,
) -> Result<EmpiricalDistribution> {
    if window.n_max > spec.len() || n_samples == 0 {
        return Err(Error::InvalidInput("window exceeds spectrum or no samples requested".into()));
    }
    let energies = spec.energies();
    let blocks = map_blocks(n_samples, seed, |_, rng, len| {
        (0..len)
            .map(|_| {
                let e = draw_energy(&energies, window, rng);
                determinant_sample(&energies, e, window.mean_density)
            })
            .collect::<Vec<_>>()
    });
    EmpiricalDistribution::new(blocks.concat())
}

/// Scaled squared coefficients of level `i` (1-based) at uniform energies.
pub fn seba_coefficient_samples(
    spec: &RectangleSpectrum,
    window: &SebaWindow,
    i: usize,
    n_samples: usize,
    seed: u64,
) -> Result<EmpiricalDistribution> {
    if i < 1 || i > spec.len() {
        return Err(Error::InvalidInput(format!("level {i} outside 1..={}", spec.len())));
    }
    if window.n_max > spec.len() || n_samples == 0 {
        return Err(Error::InvalidInput("window exceeds spectrum or no samples requested".into()));
    }
    let energies = spec.energies();
    let blocks = map_blocks(n_samples, seed, |_, rng, len| {
        (0..len)
            .map(|_| {
                let e = draw_energy(&energies, window, rng);
                coefficient_sample(&energies, i, e, window.c)
            })
            .collect::<Vec<_>>()
    });
    EmpiricalDistribution::new(blocks.concat())
}

/// Least-squares slope of `log10 CCDF` against `log10 x` on 21 log-spaced
/// points of `[x_lo, x_hi]`.
pub fn ccdf_log_slope(emp: &EmpiricalDistribution, x_lo: f64, x_hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = (0..=20)
        .map(|j| {
            let x = x_lo * (x_hi / x_lo).powf(j as f64 / 20.0);
            (x.log10(), (1.0 - emp.ecdf(x)).max(f64::MIN_POSITIVE).log10())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::cauchy_cdf;
    use crate::stats::ks_distance;

    fn paper_setup() -> (RectangleSpectrum, SebaWindow) {
        let spec = rectangle_levels(golden_alpha(), 3000).unwrap();
        let w = SebaWindow::new(&spec, 1000, 2000, 2.0).unwrap();
        (spec, w)
    }

    #[test]
    fn lowest_levels() {
        let spec = rectangle_levels(golden_alpha(), 10).unwrap();
        assert_eq!(spec.levels[0], Level { n: 0, m: 0, energy: 0.0 });
        let e10 = PI * PI / golden_alpha().sqrt();
        assert!((e10 - 12.554_33).abs() < 1e-4);
        let l = spec.levels.iter().find(|l| (l.n, l.m) == (1, 0)).unwrap();
        assert_eq!(l.energy, e10);
        assert!(spec.levels.windows(2).all(|w| w[0].energy <= w[1].energy));
    }

    #[test]
    fn prefix_stable() {
        let a = rectangle_levels(golden_alpha(), 500).unwrap();
        let b = rectangle_levels(golden_alpha(), 3000).unwrap();
        assert_eq!(a.levels[..], b.levels[..500]);
        assert!(rectangle_levels(0.0, 5).is_err());
        assert!(rectangle_levels(1.0, 0).is_err());
    }

    #[test]
    fn counting_follows_weyl() {
        let spec = rectangle_levels(golden_alpha(), 3000).unwrap();
        let e = spec.energy(3000);
        let n = spec.count_below(e) as f64;
        assert!((n - spec.weyl_estimate(e)).abs() < 3.0 * n.sqrt());
    }

    #[test]
    fn constant_is_consistent() {
        let (_, w) = paper_setup();
        assert_eq!(w.c, coefficient_constant(w.l_bar, w.e_min, w.e_max, w.mean_density));
        assert!((w.c / 9.75e5 - 1.0).abs() < 0.05, "c = {}", w.c);
        assert!(SebaWindow::new(&rectangle_levels(1.3, 100).unwrap(), 50, 200, 2.0).is_err());
    }

    #[test]
    fn determinant_is_cauchy() {
        let (spec, w) = paper_setup();
        let emp = seba_determinant_samples(&spec, &w, 100_000, 1).unwrap();
        let d = ks_distance(&emp, cauchy_cdf).unwrap();
        assert!(d < 0.05, "{d}");
        // symmetric about the median: the reflected sample has the same law
        let med = emp.median();
        let refl = emp.map(|x| 2.0 * med - x).unwrap();
        let dr = ks_distance(&refl, |x| emp.ecdf(x)).unwrap();
        assert!(dr < 0.02, "{dr}");
    }

    #[test]
    fn single_level_is_not_cauchy() {
        let spec = rectangle_levels(golden_alpha(), 3000).unwrap();
        let w = SebaWindow::new(&spec, 1000, 2000, 2.0).unwrap();
        let one = RectangleSpectrum {
            alpha: spec.alpha,
            levels: spec.levels[1499..1500].to_vec(),
        };
        let energies = one.energies();
        let mut rng = crate::parallel::stream_rng(3, 0);
        let xs = (0..20_000)
            .map(|_| determinant_sample(&energies, draw_energy(&energies, &w, &mut rng), w.mean_density))
            .collect();
        let emp = EmpiricalDistribution::new(xs).unwrap();
        assert!(ks_distance(&emp, cauchy_cdf).unwrap() > 0.2);
    }

    #[test]
    fn density_scaling() {
        let (spec, w) = paper_setup();
        let energies = spec.energies();
        for e in [13_000.3, 17_777.7, 23_001.1] {
            let a = determinant_sample(&energies, e, w.mean_density);
            let b = determinant_sample(&energies, e, 2.0 * w.mean_density);
            assert!((a - 2.0 * b).abs() <= 1e-12 * a.abs());
        }
    }

    #[test]
    fn coefficients_bounded_with_tail() {
        let (spec, w) = paper_setup();
        let emp = seba_coefficient_samples(&spec, &w, 1500, 100_000, 2).unwrap();
        assert!(emp.values()[0] > 0.0);
        assert!(*emp.values().last().unwrap() <= w.c * (1.0 + 1e-12));
        let slope = ccdf_log_slope(&emp, 10.0, 100.0);
        assert!((slope + 0.5).abs() < 0.2, "{slope}");
        assert!(seba_coefficient_samples(&spec, &w, 3001, 10, 2).is_err());
    }

    #[test]
    fn spectrum_csv() {
        let spec = rectangle_levels(golden_alpha(), 3).unwrap();
        let mut buf = Vec::new();
        spec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "idx,n,m,energy");
        assert!(lines[1].starts_with("1,0,0,"));
        assert_eq!(lines.len(), 4);
    }
}
