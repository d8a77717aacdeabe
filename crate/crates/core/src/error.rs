use std::io;

use thiserror::Error;

/// Errors raised by the star-graph numerics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("could not draw distinct bond lengths: coordinate {index} collided {attempts} times")]
    CollisionLimit { index: usize, attempts: usize },

    #[error(
        "poles of bonds {bond_a} and {bond_b} are {gap:e} apart near k = {k} \
         (lengths nearly commensurate)"
    )]
    PoleCollision {
        bond_a: usize,
        bond_b: usize,
        k: f64,
        gap: f64,
    },

    #[error("no sign change of Z on bracket ({lo}, {hi}) for eigenvalue {index}")]
    BracketFailure { index: u64, lo: f64, hi: f64 },

    #[error("coordinate {coordinate} sits on a pole of tan (xi = {value})")]
    PoleGuard { coordinate: usize, value: f64 },

    #[error("integrand is not finite at node {node} (value {value})")]
    NonFiniteIntegrand { node: f64, value: f64 },

    #[error("cdf is not a distribution function near x = {x}")]
    NonMonotoneCdf { x: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
