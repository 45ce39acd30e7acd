//! Full and effective Hamiltonians of the driven cavity array.
//!
//! * [`full`]: the interaction-picture Hamiltonian (atom–cavity coupling,
//!   classical drive, photon hopping), its static rotating-frame form and the
//!   lab-frame Hamiltonian.
//! * [`coefficients`]: Stark shifts, Raman amplitudes and pairwise exchange
//!   couplings obtained by eliminating `|e⟩` and the photon modes.
//! * [`effective`]: the resulting qubit Hamiltonians (general, one pair,
//!   parallel pairs).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::linalg::{SparseBuilder, SparseMatrix};
use crate::math::cis;
use crate::{Error, LatticeSpec, Result, C64};

pub mod coefficients;
pub mod effective;
pub mod full;

pub use coefficients::{
    effective_coefficients, validate_regime, EffectiveCoefficients, ModeRatios, RatioKind,
    RegimeReport, SiteRegime,
};
pub use effective::{
    build_effective_general, build_effective_pair, build_effective_parallel, check_pair,
    pair_basis, CrossPairRatio, EffectiveGeneral, EffectiveParallel,
};
pub use full::{
    build_full_interaction, build_full_lab, full_interaction_operator, rotating_frame,
    LabFrameParams, RotatingFrame,
};

/// Default `≫` threshold for the adiabatic-elimination ratios.
pub const DEFAULT_REGIME_THRESHOLD: f64 = 10.0;
/// Default `≫` threshold for cross-pair decoupling in parallel operation.
pub const DEFAULT_SELECTIVITY_THRESHOLD: f64 = 20.0;

/// Per-site atom and field parameters, in units of `g₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteParams {
    /// Atom–cavity coupling on `|g⟩ ↔ |e⟩`.
    pub g: f64,
    /// Classical Rabi frequency on `|f⟩ ↔ |e⟩`; zero means undriven.
    pub omega_rabi: f64,
    /// Cavity-arm detuning Δ₁.
    pub delta1: f64,
    /// Drive-arm detuning Δ₂, ignored on undriven sites.
    pub delta2: f64,
}

impl SiteParams {
    pub fn new(g: f64, omega_rabi: f64, delta1: f64, delta2: f64) -> Self {
        Self {
            g,
            omega_rabi,
            delta1,
            delta2,
        }
    }

    pub fn is_driven(&self) -> bool {
        self.omega_rabi != 0.0
    }

    /// Raman two-photon offset `Δ₁ − Δ₂`.
    pub fn raman_offset(&self) -> f64 {
        self.delta1 - self.delta2
    }
}

pub(crate) fn check_params(spec: &LatticeSpec, params: &[SiteParams]) -> Result<()> {
    if params.len() != spec.num_sites() {
        return Err(Error::DimensionMismatch {
            expected: spec.num_sites(),
            found: params.len(),
        });
    }
    for (i, p) in params.iter().enumerate() {
        let site = spec.site_at(i);
        let finite = [p.g, p.omega_rabi, p.delta1, p.delta2]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidArgument(format!(
                "non-finite parameter at site {site}"
            )));
        }
        if p.g < 0.0 || p.omega_rabi < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "coupling and Rabi frequency must be non-negative at site {site}"
            )));
        }
    }
    Ok(())
}

/// A Hamiltonian `H(t) = Σ_f e^{i·f·t}·M_f` with constant sparse matrices
/// `M_f`, grouped by their oscillation frequency `f`.
#[derive(Debug, Clone)]
pub struct TimeDependentOperator {
    dim: usize,
    terms: Vec<(f64, SparseMatrix)>,
    dropped: usize,
}

impl TimeDependentOperator {
    pub fn from_static(matrix: SparseMatrix) -> Self {
        Self {
            dim: matrix.dim(),
            terms: alloc::vec![(0.0, matrix)],
            dropped: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(frequency, matrix)` pairs in increasing frequency.
    pub fn terms(&self) -> &[(f64, SparseMatrix)] {
        &self.terms
    }

    /// Matrix elements that fell outside the basis during assembly.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn is_static(&self) -> bool {
        self.terms.iter().all(|(f, _)| *f == 0.0)
    }

    pub fn at(&self, t: f64) -> SparseMatrix {
        let mut b = SparseBuilder::new(self.dim);
        for (f, m) in &self.terms {
            let phase = cis(f * t);
            b.extend(m.iter().map(|(r, c, v)| (r, c, v * phase)));
        }
        b.build()
    }

    /// `out = H(t)·psi`
    pub fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        for o in out.iter_mut() {
            *o = C64::new(0.0, 0.0);
        }
        for (f, m) in &self.terms {
            let phase = if *f == 0.0 {
                C64::new(1.0, 0.0)
            } else {
                cis(f * t)
            };
            m.matvec_add(phase, psi, out);
        }
    }
}

/// Accumulates matrix elements keyed by oscillation frequency.
#[derive(Debug)]
pub(crate) struct TermBuilder {
    dim: usize,
    by_freq: BTreeMap<i64, (f64, SparseBuilder)>,
    pub(crate) dropped: usize,
}

impl TermBuilder {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            dim,
            by_freq: BTreeMap::new(),
            dropped: 0,
        }
    }

    pub(crate) fn push(&mut self, freq: f64, row: usize, col: usize, value: C64) {
        let freq = if freq == 0.0 { 0.0 } else { freq };
        // Order-preserving key for f64 so terms come out sorted by frequency.
        let bits = freq.to_bits() as i64;
        let key = if bits < 0 { bits ^ i64::MAX } else { bits };
        let dim = self.dim;
        self.by_freq
            .entry(key)
            .or_insert_with(|| (freq, SparseBuilder::new(dim)))
            .1
            .push(row, col, value);
    }

    pub(crate) fn build(self) -> TimeDependentOperator {
        let terms: Vec<_> = self
            .by_freq
            .into_values()
            .map(|(f, b)| (f, b.build()))
            .filter(|(_, m)| m.nnz() > 0)
            .collect();
        TimeDependentOperator {
            dim: self.dim,
            terms,
            dropped: self.dropped,
        }
    }
}
