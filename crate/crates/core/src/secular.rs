//! The secular equation `Z(k) = sum_j tan(k L_j) = 0` and its solutions.
//!
//! `Z` has poles at `(2n+1) pi / (2 L_j)` and is strictly increasing between
//! consecutive poles, running from `-inf` to `+inf`. Every open inter-pole
//! interval therefore holds exactly one eigenvalue, and `k = 0` is always an
//! eigenvalue. The solver merges the per-bond pole sequences and brackets
//! each root by its two neighbouring poles.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{mean_density, BondLengths};
use crate::parallel::stream_rng;
use crate::trig::{near_pole, reduce_mod_pi, sec2_kl, tan_kl};

/// Poles of distinct bonds closer than this abort the pole grid.
pub const POLE_MERGE_THRESHOLD: f64 = 1e-9;

/// Bisection stops once the bracket shrinks by this factor.
const BISECTION_SHRINK: f64 = 1e-10;
const SECANT_STEPS: usize = 3;

/// `Z(k) = sum_j tan(k L_j)`.
///
/// Within `1e-12 k` of a pole the result is `+inf` or `-inf` (the sign `tan`
/// has on that side of the pole) instead of a noisy large number.
pub fn eval_z(k: f64, lengths: &BondLengths) -> f64 {
    let mut sum = 0.0;
    for &l in lengths.as_slice() {
        let r = reduce_mod_pi(k, l);
        if near_pole(r, k, l) {
            return if r > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        }
        sum += r.tan();
    }
    sum
}

/// `Z'(k) = sum_j L_j sec^2(k L_j)`; never below `sum_j L_j`.
pub fn eval_z_prime(k: f64, lengths: &BondLengths) -> f64 {
    lengths
        .as_slice()
        .iter()
        .map(|&l| {
            let r = reduce_mod_pi(k, l);
            if near_pole(r, k, l) {
                return f64::INFINITY;
            }
            let t = r.tan();
            l * (1.0 + t * t)
        })
        .sum()
}

/// Number of poles in `(0, k]`: `sum_j floor(k L_j / pi + 1/2)`.
pub fn pole_count_below(lengths: &BondLengths, k: f64) -> u64 {
    lengths
        .as_slice()
        .iter()
        .map(|&l| (k * l / PI + 0.5).floor().max(0.0) as u64)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub k: f64,
    pub bond: usize,
}

/// Ascending poles of `Z` in `(k_min, k_max]`.
#[derive(Debug, Clone)]
pub struct PoleGrid {
    pub poles: Vec<Pole>,
    pub k_min: f64,
    pub k_max: f64,
}

impl PoleGrid {
    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }
}

#[derive(PartialEq)]
struct HeapItem {
    k: f64,
    bond: usize,
    n: u64,
}

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.k.total_cmp(&other.k).then(self.bond.cmp(&other.bond))
    }
}

fn pole_k(n: u64, l: f64) -> f64 {
    (2 * n + 1) as f64 * PI / (2.0 * l)
}

/// All poles in `(0, k_max]`.
pub fn build_pole_grid(lengths: &BondLengths, k_max: f64) -> Result<PoleGrid> {
    build_pole_grid_between(lengths, 0.0, k_max)
}

/// Poles in `(k_min, k_max]`, merged from the per-bond arithmetic sequences.
///
/// Fails with [`Error::PoleCollision`] when two poles of different bonds are
/// closer than [`POLE_MERGE_THRESHOLD`].
pub fn build_pole_grid_between(lengths: &BondLengths, k_min: f64, k_max: f64) -> Result<PoleGrid> {
    if !(k_max > 0.0 && k_max > k_min && k_min >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "pole grid needs 0 <= k_min < k_max, got ({k_min}, {k_max}]"
        )));
    }
    let mut heap = BinaryHeap::with_capacity(lengths.v());
    for (bond, &l) in lengths.as_slice().iter().enumerate() {
        // first n with pole_k(n) > k_min
        let mut n = (k_min * l / PI - 0.5).floor().max(0.0) as u64;
        while pole_k(n, l) <= k_min {
            n += 1;
        }
        let k = pole_k(n, l);
        if k <= k_max {
            heap.push(Reverse(HeapItem { k, bond, n }));
        }
    }

    let expected = pole_count_below(lengths, k_max) - pole_count_below(lengths, k_min);
    let mut poles: Vec<Pole> = Vec::with_capacity(expected as usize);
    while let Some(Reverse(item)) = heap.pop() {
        if let Some(prev) = poles.last() {
            let gap = item.k - prev.k;
            if prev.bond != item.bond && gap < POLE_MERGE_THRESHOLD {
                return Err(Error::PoleCollision {
                    bond_a: prev.bond,
                    bond_b: item.bond,
                    k: item.k,
                    gap,
                });
            }
        }
        poles.push(Pole {
            k: item.k,
            bond: item.bond,
        });
        let l = lengths.as_slice()[item.bond];
        let next = pole_k(item.n + 1, l);
        if next <= k_max {
            heap.push(Reverse(HeapItem {
                k: next,
                bond: item.bond,
                n: item.n + 1,
            }));
        }
    }
    Ok(PoleGrid {
        poles,
        k_min,
        k_max,
    })
}

/// One eigenvalue `k_n` with `Z'(k_n)` and the two poles that bracket it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub index: u64,
    pub k: f64,
    pub z_prime: f64,
    pub bracket: (f64, f64),
}

/// The zero eigenvalue, bracketed by the first poles on either side.
fn zero_mode(lengths: &BondLengths) -> SpectralPoint {
    let l_max = lengths.as_slice().iter().copied().fold(0.0, f64::max);
    let p = PI / (2.0 * l_max);
    SpectralPoint {
        index: 0,
        k: 0.0,
        z_prime: lengths.total(),
        bracket: (-p, p),
    }
}

/// `Z` without the pole guard. Reduction is exact for the given `k`, so the
/// sign stays right arbitrarily close to a pole; the solver relies on that
/// when two poles are closer than the guard width.
fn z_unguarded(k: f64, lengths: &BondLengths) -> f64 {
    lengths.as_slice().iter().map(|&l| tan_kl(k, l)).sum()
}

fn z_prime_unguarded(k: f64, lengths: &BondLengths) -> f64 {
    lengths.as_slice().iter().map(|&l| l * sec2_kl(k, l)).sum()
}

/// Root of `Z` in the open interval `(lo, hi)` between consecutive poles.
fn solve_bracket(lengths: &BondLengths, index: u64, lo: f64, hi: f64) -> Result<SpectralPoint> {
    let width = hi - lo;
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut moved_a, mut moved_b) = (false, false);
    while b - a > BISECTION_SHRINK * width {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = z_unguarded(mid, lengths);
        if fm < 0.0 {
            a = mid;
            fa = fm;
            moved_a = true;
        } else {
            b = mid;
            fb = fm;
            moved_b = true;
        }
    }
    if !(moved_a && moved_b) {
        return Err(Error::BracketFailure { index, lo, hi });
    }

    // Secant polish, kept inside the shrinking bracket.
    let (mut best, mut best_f) = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for _ in 0..SECANT_STEPS {
        if fb == fa {
            break;
        }
        let mut x = b - fb * (b - a) / (fb - fa);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let fx = z_unguarded(x, lengths);
        if fx.abs() < best_f.abs() {
            best = x;
            best_f = fx;
        }
        if fx == 0.0 {
            break;
        }
        if fx < 0.0 {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Ok(SpectralPoint {
        index,
        k: best,
        z_prime: z_prime_unguarded(best, lengths),
        bracket: (lo, hi),
    })
}

/// Roots between consecutive poles of `grid`; `first_index` labels the root
/// after `grid.poles[0]`.
fn solve_grid(lengths: &BondLengths, grid: &PoleGrid, first_index: u64) -> Result<Vec<SpectralPoint>> {
    grid.poles
        .par_windows(2)
        .enumerate()
        .map(|(i, w)| solve_bracket(lengths, first_index + i as u64, w[0].k, w[1].k))
        .collect()
}

/// The first `n_eigs` eigenvalues `k_0 = 0 < k_1 < ...`, each with `Z'` and
/// its bracketing poles.
pub fn eigenvalues(lengths: &BondLengths, n_eigs: usize) -> Result<Vec<SpectralPoint>> {
    lengths.require_distinct()?;
    if n_eigs == 0 {
        return Err(Error::InvalidInput("n_eigs must be at least 1".into()));
    }
    let mut out = vec![zero_mode(lengths)];
    if n_eigs == 1 {
        return Ok(out);
    }
    // eigenvalue n >= 1 sits between poles n and n + 1, so n_eigs poles suffice
    let mut k_max = (n_eigs as f64 + 2.0) * PI / lengths.total() * 1.01;
    let grid = loop {
        let grid = build_pole_grid(lengths, k_max)?;
        if grid.len() >= n_eigs {
            break grid;
        }
        k_max *= 2.0;
    };
    let trimmed = PoleGrid {
        poles: grid.poles[..n_eigs].to_vec(),
        k_min: 0.0,
        k_max: grid.poles[n_eigs - 1].k,
    };
    out.extend(solve_grid(lengths, &trimmed, 1)?);
    Ok(out)
}

/// The `count` consecutive eigenvalues that follow the first pole above
/// `k_start`. Indices are the global eigenvalue indices.
pub fn eigenvalues_from(lengths: &BondLengths, k_start: f64, count: usize) -> Result<Vec<SpectralPoint>> {
    lengths.require_distinct()?;
    if count == 0 {
        return Ok(Vec::new());
    }
    let span = (count as f64 + 2.0) * PI / lengths.total() * 1.05;
    let mut k_end = k_start + span;
    let grid = loop {
        let grid = build_pole_grid_between(lengths, k_start, k_end)?;
        if grid.len() > count {
            break grid;
        }
        k_end += span;
    };
    let first_index = pole_count_below(lengths, 0.5 * (grid.poles[0].k + grid.poles[1].k));
    let trimmed = PoleGrid {
        poles: grid.poles[..=count].to_vec(),
        k_min: k_start,
        k_max: grid.poles[count].k,
    };
    solve_grid(lengths, &trimmed, first_index)
}

/// `windows * per_window` eigenvalues taken as `windows` runs of consecutive
/// eigenvalues starting at independent uniform points of `[0, k_horizon]`.
///
/// With nearly equal lengths the first eigenvalues only explore a thin
/// neighbourhood of the diagonal of the torus; spreading runs over a long
/// horizon gives an unbiased sample of the spectrum's statistics.
pub fn sample_spectral_windows(
    lengths: &BondLengths,
    windows: usize,
    per_window: usize,
    k_horizon: f64,
    seed: u64,
) -> Result<Vec<SpectralPoint>> {
    if !(k_horizon > 0.0) {
        return Err(Error::InvalidInput("k_horizon must be positive".into()));
    }
    let starts: Vec<f64> = (0..windows)
        .map(|w| stream_rng(seed, w as u64).random::<f64>() * k_horizon)
        .collect();
    let runs = starts
        .into_iter()
        .map(|k0| eigenvalues_from(lengths, k0, per_window))
        .collect::<Result<Vec<_>>>()?;
    Ok(runs.concat())
}

/// Normalised eigenfunction data for one eigenvalue.
///
/// On bond `i` the eigenfunction is
/// `psi_i(x) = A cos(k (x - L_i)) / cos(k L_i)` with `A^2 = 2 / Z'(k)`, and
/// `amplitude_sq[i] = A^2 sec^2(k L_i)` is its maximal squared modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenfunction {
    pub point: SpectralPoint,
    pub amplitude_sq: Vec<f64>,
    pub norm_constant_sq: f64,
}

impl Eigenfunction {
    /// `psi_bond(x)` for `x` in `[0, L_bond]`, measured from the centre.
    pub fn value(&self, lengths: &BondLengths, bond: usize, x: f64) -> f64 {
        let l = lengths.as_slice()[bond];
        let k = self.point.k;
        self.norm_constant_sq.sqrt() * (k * (x - l)).cos() / (k * l).cos()
    }
}

/// Amplitudes `A_i = 2 sec^2(k_n L_i) / Z'(k_n)`.
///
/// The `L^2` normalisation behind `2 / Z'` uses `sum_j tan(k_n L_j) = 0` and
/// `k_n > 0`; for the constant `k_0 = 0` mode the same formula is reported so
/// that `sum_j L_j A_j = 2` holds uniformly.
pub fn amplitudes(point: &SpectralPoint, lengths: &BondLengths) -> Eigenfunction {
    let sec2: Vec<f64> = lengths
        .as_slice()
        .iter()
        .map(|&l| {
            let t = reduce_mod_pi(point.k, l).tan();
            1.0 + t * t
        })
        .collect();
    let z_prime: f64 = sec2.iter().zip(lengths.as_slice()).map(|(s, l)| s * l).sum();
    Eigenfunction {
        point: *point,
        amplitude_sq: sec2.iter().map(|s| 2.0 * s / z_prime).collect(),
        norm_constant_sq: 2.0 / z_prime,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylCount {
    pub zero_count: u64,
    pub pole_count: u64,
    pub expected: f64,
}

/// Eigenvalues (including `k = 0`) and poles in `[0, k_max]`, with the
/// smooth count `d k_max`.
pub fn weyl_count_check(lengths: &BondLengths, k_max: f64) -> Result<WeylCount> {
    lengths.require_distinct()?;
    let l_min = lengths.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    // one extra pole period so the last root below k_max is bracketed
    let grid = build_pole_grid(lengths, k_max + PI / l_min)?;
    let pole_count = grid.poles.iter().filter(|p| p.k <= k_max).count() as u64;
    let open: Vec<f64> = grid.poles.iter().map(|p| p.k).collect();
    let roots: Vec<SpectralPoint> = open
        .par_windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] < k_max)
        .map(|(i, w)| solve_bracket(lengths, i as u64 + 1, w[0], w[1]))
        .collect::<Result<_>>()?;
    let zero_count = 1 + roots.iter().filter(|p| p.k <= k_max).count() as u64;
    Ok(WeylCount {
        zero_count,
        pole_count,
        expected: mean_density(lengths) * k_max,
    })
}
