//! Parameter bundles for the standard experiments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{generate_lengths, BondLengths, LengthBox};

/// Mean bond length used throughout the standard experiments.
pub const STANDARD_L_BAR: f64 = 2.0;

/// Seed of the seven-bond reference graph.
pub const SEVEN_BOND_SEED: u64 = 2002;

/// Runs of consecutive eigenvalues for the large-`v` spectral experiments.
pub const SPECTRAL_WINDOWS: usize = 200;
pub const EIGS_PER_WINDOW: usize = 500;
pub const SPECTRAL_HORIZON: f64 = 1e7;

/// Rectangle billiard: retained levels, sampling window and probed level.
pub const SEBA_LEVELS: usize = 3000;
pub const SEBA_WINDOW: (usize, usize) = (1000, 2000);
pub const SEBA_LEVEL_INDEX: usize = 1500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

/// A check a preset run must satisfy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedCheck {
    pub name: String,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPreset {
    pub name: String,
    pub figure: Figure,
    pub v: usize,
    pub l_bar: f64,
    pub delta_l: f64,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<ExpectedCheck>,
}

impl ExperimentPreset {
    pub fn length_box(&self) -> LengthBox {
        LengthBox {
            l_bar: self.l_bar,
            delta_l: self.delta_l,
        }
    }

    pub fn lengths(&self) -> Result<BondLengths> {
        generate_lengths(self.length_box(), self.v, self.seed)
    }
}

fn check(name: &str, bound: f64) -> Vec<ExpectedCheck> {
    vec![ExpectedCheck {
        name: name.to_string(),
        bound,
    }]
}

/// The named preset; `fig3` through `fig7`.
pub fn preset(name: &str) -> Result<ExperimentPreset> {
    let base = |figure, v: usize, delta_l: f64, samples, seed, checks| ExperimentPreset {
        name: name.to_string(),
        figure,
        v,
        l_bar: STANDARD_L_BAR,
        delta_l,
        samples,
        seed,
        checks,
    };
    Ok(match name {
        "fig3" => base(Figure::Fig3, 7, 0.1, 100_000, SEVEN_BOND_SEED, check("ks_cauchy", 0.02)),
        "fig4" => base(Figure::Fig4, 70, 0.1 / 70.0, 100_000, 7, check("ks_p", 0.03)),
        "fig5" => base(Figure::Fig5, 50, 0.1 / 50.0, 100_000, 7, check("ks_q", 0.05)),
        "fig6" => {
            let mut c = check("ks_cauchy", 0.05);
            c.extend(check("c_relative_error", 0.05));
            base(Figure::Fig6, 0, 0.0, 100_000, 7, c)
        }
        "fig7" => base(Figure::Fig7, 0, 0.0, 100_000, 7, check("c_relative_error", 0.05)),
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown preset {other:?}; expected fig3, fig4, fig5, fig6 or fig7"
            )))
        }
    })
}

/// All preset names.
pub const PRESET_NAMES: [&str; 5] = ["fig3", "fig4", "fig5", "fig6", "fig7"];
