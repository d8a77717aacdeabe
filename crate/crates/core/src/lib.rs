//! Spectral theory of quantum star graphs.
//!
//! A star graph has `v` bonds of lengths `L_1..L_v` joined at a central
//! vertex. With Neumann conditions at the outer ends and Kirchhoff matching
//! at the centre, the eigen-wavenumbers are the zeros of
//! `Z(k) = sum_j tan(k L_j)`.
//!
//! The crate provides:
//!
//! * [`secular`]: evaluation of `Z`, the pole grid, the bracketed eigenvalue
//!   solver and eigenfunction amplitudes,
//! * [`torus`]: the invariant measure on `{sum tan x_j = 0}` used to compute
//!   finite-`v` distributions without solving for eigenvalues,
//! * [`limits`]: the large-`v` limiting densities of `Z'(k_n)/v^2` and of
//!   `v^2 A_i`, the Cauchy law for `Z/v` and the amplitude-to-value transform,
//! * [`stats`]: empirical distributions, KS distances and histograms,
//! * [`seba`]: the rectangle billiard with a point scatterer, used as a
//!   comparison system,
//! * [`presets`]: parameters of the standard experiments,
//! * [`checks`]: the end-to-end verification suite shared by the tests and
//!   the command-line `selfcheck`.

pub mod checks;
pub mod error;
pub mod export;
pub mod limits;
pub mod model;
pub mod parallel;
pub mod presets;
pub mod seba;
pub mod secular;
pub mod special;
pub mod stats;
pub mod torus;
pub mod trig;

pub use error::{Error, Result};
pub use model::{BondLengths, LengthBox, RunConfig};
