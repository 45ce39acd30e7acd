use alloc::string::String;

use thiserror::Error;

use crate::lattice::SiteIndex;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("site ({j}, {k}) is outside the {n}x{n} lattice")]
    SiteOutOfRange { j: i64, k: i64, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state vectors belong to different bases")]
    BasisMismatch,

    #[error("basis dimension {dimension} exceeds the limit of {limit} states")]
    BasisTooLarge { dimension: u128, limit: usize },

    #[error("configuration is outside the basis sector: {0}")]
    OutsideSector(String),

    #[error("singular parameter: {quantity} vanishes at site {site}{}", mode_suffix(.mode))]
    SingularParameter {
        quantity: &'static str,
        site: SiteIndex,
        mode: Option<(usize, usize)>,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("cross-pair selectivity ratio {ratio:.3} between sites {a} and {b} is below the threshold {threshold}")]
    Selectivity {
        a: SiteIndex,
        b: SiteIndex,
        ratio: f64,
        threshold: f64,
    },

    #[error("norm drift {drift:.3e} at t = {time} exceeds 1e-4; reduce the step or tolerance")]
    Accuracy { time: f64, drift: f64 },

    #[error("invalid propagator configuration: {0}")]
    InvalidConfig(String),
}

fn mode_suffix(mode: &Option<(usize, usize)>) -> String {
    match mode {
        Some((m, n)) => alloc::format!(", mode ({m}, {n})"),
        None => String::new(),
    }
}
