//! Domain types shared by every experiment: bond lengths, the sampling box
//! for lengths and the run configuration.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::stream_rng;

/// Resample budget for a colliding coordinate in [`generate_lengths`].
pub const MAX_COLLISION_RETRIES: usize = 100;

/// Bond lengths `L_1..L_v` of a star graph.
///
/// Lengths drawn from a continuous distribution are taken to be rationally
/// independent: an exact rational relation among random 64-bit draws has
/// probability zero for all practical purposes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondLengths {
    lengths: Vec<f64>,
}

impl BondLengths {
    /// Validates positivity. Equal lengths are accepted here; solver entry
    /// points call [`BondLengths::require_distinct`].
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::InvalidInput("a star graph needs at least one bond".into()));
        }
        if let Some((i, l)) = lengths
            .iter()
            .enumerate()
            .find(|(_, l)| !(l.is_finite() && **l > 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "bond {i} has non-positive length {l}"
            )));
        }
        Ok(Self { lengths })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lengths
    }

    /// Number of bonds `v`.
    pub fn v(&self) -> usize {
        self.lengths.len()
    }

    pub fn total(&self) -> f64 {
        self.lengths.iter().sum()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.lengths.iter().map(|l| l * c).collect())
    }

    pub fn require_distinct(&self) -> Result<()> {
        let mut sorted = self.lengths.clone();
        sorted.sort_by(f64::total_cmp);
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!(
                "bond length {} appears twice",
                w[0]
            )));
        }
        Ok(())
    }
}

/// The box `[l_bar, l_bar + delta_l]` that bond lengths are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthBox {
    pub l_bar: f64,
    pub delta_l: f64,
}

impl LengthBox {
    pub fn new(l_bar: f64, delta_l: f64) -> Result<Self> {
        if !(l_bar.is_finite() && l_bar > 0.0) {
            return Err(Error::InvalidInput(format!("l_bar must be positive, got {l_bar}")));
        }
        if !(delta_l.is_finite() && delta_l >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "delta_l must be non-negative, got {delta_l}"
            )));
        }
        Ok(Self { l_bar, delta_l })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.l_bar + self.delta_l * rng.random::<f64>()
    }
}

/// Draws `v` distinct lengths uniformly from `bx`.
///
/// Pure in `(bx, v, seed)`. A coordinate that equals an earlier one is
/// redrawn up to [`MAX_COLLISION_RETRIES`] times.
pub fn generate_lengths(bx: LengthBox, v: usize, seed: u64) -> Result<BondLengths> {
    if v == 0 {
        return Err(Error::InvalidInput("v must be at least 1".into()));
    }
    if bx.delta_l == 0.0 && v > 1 {
        return Err(Error::InvalidInput(
            "delta_l = 0 cannot give distinct lengths for v > 1".into(),
        ));
    }
    let mut rng = stream_rng(seed, u64::MAX);
    let mut lengths: Vec<f64> = Vec::with_capacity(v);
    for index in 0..v {
        let mut attempts = 0;
        let value = loop {
            let x = bx.draw(&mut rng);
            if !lengths.contains(&x) {
                break x;
            }
            attempts += 1;
            if attempts >= MAX_COLLISION_RETRIES {
                return Err(Error::CollisionLimit { index, attempts });
            }
        };
        lengths.push(value);
    }
    BondLengths::new(lengths)
}

/// Mean density of eigenvalues per unit `k`, `(1/pi) sum_j L_j`.
pub fn mean_density(lengths: &BondLengths) -> f64 {
    lengths.total() / PI
}

/// Run-wide settings. Only the Neumann-like central condition `1/lambda = 0`
/// is supported; the field exists so configs can state it explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_v")]
    pub v: usize,
    #[serde(default = "default_l_bar")]
    pub l_bar: f64,
    #[serde(default = "default_delta_l")]
    pub delta_l: f64,
    #[serde(default = "default_samples")]
    pub sample_count: usize,
    #[serde(default)]
    pub inverse_lambda: f64,
}

fn default_v() -> usize {
    7
}
fn default_l_bar() -> f64 {
    2.0
}
fn default_delta_l() -> f64 {
    0.1
}
fn default_samples() -> usize {
    100_000
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            v: default_v(),
            l_bar: default_l_bar(),
            delta_l: default_delta_l(),
            sample_count: default_samples(),
            inverse_lambda: 0.0,
        }
    }
}

impl RunConfig {
    /// Parses the flat `key = value` config format.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inverse_lambda != 0.0 {
            return Err(Error::Config("only inverse_lambda = 0 is supported".into()));
        }
        if self.v == 0 {
            return Err(Error::Config("v must be at least 1".into()));
        }
        if self.sample_count == 0 {
            return Err(Error::Config("sample_count must be positive".into()));
        }
        LengthBox::new(self.l_bar, self.delta_l)?;
        Ok(())
    }

    pub fn length_box(&self) -> LengthBox {
        LengthBox {
            l_bar: self.l_bar,
            delta_l: self.delta_l,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degenerate_box_single_bond() {
        let l = generate_lengths(LengthBox::new(2.0, 0.0).unwrap(), 1, 3).unwrap();
        assert_eq!(l.as_slice(), &[2.0]);
    }

    #[test]
    fn seven_bonds_in_box_and_reproducible() {
        let bx = LengthBox::new(2.0, 0.1).unwrap();
        let a = generate_lengths(bx, 7, 11).unwrap();
        let b = generate_lengths(bx, 7, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.v(), 7);
        assert!(a.as_slice().iter().all(|&l| (2.0..=2.1).contains(&l)));
        assert_ne!(a, generate_lengths(bx, 7, 12).unwrap());
    }

    #[test]
    fn fifty_bonds_distinct() {
        let l = generate_lengths(LengthBox::new(2.0, 0.01).unwrap(), 50, 5).unwrap();
        assert!(l.as_slice().iter().all(|&x| (2.0..=2.01).contains(&x)));
        l.require_distinct().unwrap();
    }

    #[test]
    fn rejects_bad_requests() {
        let bx = LengthBox::new(2.0, 0.0).unwrap();
        assert!(generate_lengths(bx, 0, 1).is_err());
        assert!(generate_lengths(bx, 3, 1).is_err());
        assert!(LengthBox::new(0.0, 1.0).is_err());
        assert!(LengthBox::new(1.0, -1.0).is_err());
        assert!(BondLengths::new(vec![1.0, -2.0]).is_err());
        assert!(BondLengths::new(vec![]).is_err());
        assert!(BondLengths::new(vec![1.0, 1.0]).unwrap().require_distinct().is_err());
    }

    #[test]
    fn mean_density_values() {
        let l = BondLengths::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!((mean_density(&l) - 6.0 / PI).abs() < 1e-15);
        let l = BondLengths::new(vec![PI]).unwrap();
        assert!((mean_density(&l) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mean_density_seventy_bonds() {
        let delta = 0.1 / 70.0;
        let l = generate_lengths(LengthBox::new(2.0, delta).unwrap(), 70, 9).unwrap();
        let rel = (mean_density(&l) - 140.0 / PI).abs() / (140.0 / PI);
        assert!(rel <= delta / 2.0, "relative deviation {rel}");
    }

    #[test]
    fn config_parse_and_reject() {
        let cfg = RunConfig::parse("seed = 5\nv = 70\nl_bar = 2.0\ndelta_l = 0.001\nsample_count = 10\n")
            .unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.v, 70);
        assert_eq!(cfg.sample_count, 10);
        assert!(RunConfig::parse("inverse_lambda = 0.5").is_err());
        assert!(RunConfig::parse("colour = 1").is_err());
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    proptest! {
        #[test]
        fn mean_density_is_linear(ls in prop::collection::vec(0.1f64..10.0, 1..20), c in 0.01f64..100.0) {
            let l = BondLengths::new(ls).unwrap();
            let scaled = mean_density(&l.scaled(c).unwrap());
            prop_assert!((scaled - c * mean_density(&l)).abs() <= 1e-12 * scaled);
        }
    }
}
