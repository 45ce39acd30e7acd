//! Square lattice geometry with periodic boundaries, momentum modes and the
//! local↔momentum mode transform.
//!
//! Sites `(j, k)` and modes `(m, n)` are 1-based, `1..=N`. Both are laid out
//! row-major: linear index `(j−1)·N + (k−1)`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::linalg::DenseMatrix;
use crate::math::{cis, cos};
use crate::{Error, Result, C64};

/// Which formula assigns a frequency to momentum mode `(m, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dispersion {
    /// `ω = 2v·cos(2πm/N + 2πn/N)`.
    CosineOfSum,
    /// `ω = 2v·[cos(2πm/N) + cos(2πn/N)]`, the exact spectrum of nearest
    /// neighbour hopping on the periodic lattice.
    SumOfCosines,
}

impl Dispersion {
    pub const ALL: [Dispersion; 2] = [Dispersion::CosineOfSum, Dispersion::SumOfCosines];

    pub fn as_str(self) -> &'static str {
        match self {
            Dispersion::CosineOfSum => "cosine-of-sum",
            Dispersion::SumOfCosines => "sum-of-cosines",
        }
    }

    pub fn other(self) -> Self {
        match self {
            Dispersion::CosineOfSum => Dispersion::SumOfCosines,
            Dispersion::SumOfCosines => Dispersion::CosineOfSum,
        }
    }
}

impl fmt::Display for Dispersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Dispersion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine-of-sum" => Ok(Dispersion::CosineOfSum),
            "sum-of-cosines" => Ok(Dispersion::SumOfCosines),
            other => Err(Error::InvalidArgument(format!(
                "unknown dispersion `{other}` (expected `cosine-of-sum` or `sum-of-cosines`)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    n: usize,
    v: f64,
    dispersion: Dispersion,
}

impl LatticeSpec {
    pub fn new(n: usize, v: f64, dispersion: Dispersion) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "lattice side length must be at least 1".into(),
            ));
        }
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "hopping rate must be finite, got {v}"
            )));
        }
        Ok(Self { n, v, dispersion })
    }

    /// Side length `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Photon hopping rate `v`.
    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn dispersion(&self) -> Dispersion {
        self.dispersion
    }

    pub fn with_dispersion(&self, dispersion: Dispersion) -> Self {
        Self {
            dispersion,
            ..*self
        }
    }

    pub fn num_sites(&self) -> usize {
        self.n * self.n
    }

    pub fn site(&self, j: i64, k: i64) -> Result<SiteIndex> {
        SiteIndex::new(j, k, self.n)
    }

    /// All sites in linear-index order.
    pub fn sites(&self) -> impl Iterator<Item = SiteIndex> + '_ {
        (0..self.num_sites()).map(move |i| self.site_at(i))
    }

    /// Inverse of [`site_index`].
    pub fn site_at(&self, linear: usize) -> SiteIndex {
        assert!(linear < self.num_sites(), "linear site index out of range");
        SiteIndex {
            j: linear / self.n + 1,
            k: linear % self.n + 1,
        }
    }

    /// Neighbour `(j+1, k)` with periodic wrap.
    pub fn next_row(&self, s: SiteIndex) -> SiteIndex {
        SiteIndex {
            j: s.j % self.n + 1,
            k: s.k,
        }
    }

    /// Neighbour `(j, k+1)` with periodic wrap.
    pub fn next_col(&self, s: SiteIndex) -> SiteIndex {
        SiteIndex {
            j: s.j,
            k: s.k % self.n + 1,
        }
    }

    /// Mode frequency under this lattice's dispersion.
    pub fn omega(&self, m: usize, n: usize) -> f64 {
        self.omega_with(self.dispersion, m, n)
    }

    pub fn omega_with(&self, dispersion: Dispersion, m: usize, n: usize) -> f64 {
        let nn = self.n as f64;
        let a = 2.0 * PI * m as f64 / nn;
        let b = 2.0 * PI * n as f64 / nn;
        match dispersion {
            Dispersion::CosineOfSum => 2.0 * self.v * cos(a + b),
            Dispersion::SumOfCosines => 2.0 * self.v * (cos(a) + cos(b)),
        }
    }
}

/// A lattice site `(j, k)`, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteIndex {
    pub j: usize,
    pub k: usize,
}

impl SiteIndex {
    pub fn new(j: i64, k: i64, n: usize) -> Result<Self> {
        let ok = |x: i64| x >= 1 && x <= n as i64;
        if ok(j) && ok(k) {
            Ok(Self {
                j: j as usize,
                k: k as usize,
            })
        } else {
            Err(Error::SiteOutOfRange { j, k, n })
        }
    }
}

impl fmt::Display for SiteIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.j, self.k)
    }
}

/// Row-major linear index of a site.
pub fn site_index(s: SiteIndex, spec: &LatticeSpec) -> Result<usize> {
    let n = spec.n();
    if s.j == 0 || s.k == 0 || s.j > n || s.k > n {
        return Err(Error::SiteOutOfRange {
            j: s.j as i64,
            k: s.k as i64,
            n,
        });
    }
    Ok((s.j - 1) * n + (s.k - 1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumMode {
    pub m: usize,
    pub n: usize,
    pub omega: f64,
}

/// The `N²` momentum modes, `m` outer and `n` inner.
pub fn momentum_modes(spec: &LatticeSpec) -> Vec<MomentumMode> {
    momentum_modes_with(spec, spec.dispersion())
}

pub fn momentum_modes_with(spec: &LatticeSpec, dispersion: Dispersion) -> Vec<MomentumMode> {
    let n = spec.n();
    let mut modes = Vec::with_capacity(n * n);
    for m in 1..=n {
        for nn in 1..=n {
            modes.push(MomentumMode {
                m,
                n: nn,
                omega: spec.omega_with(dispersion, m, nn),
            });
        }
    }
    modes
}

/// `U[site, mode] = (1/N)·exp[−i(2πjm/N + 2πkn/N)]`, so that
/// `a_site = Σ_mode U[site, mode]·c_mode`.
pub fn fourier_matrix(spec: &LatticeSpec) -> DenseMatrix {
    let n = spec.n();
    let nf = n as f64;
    let sites = spec.num_sites();
    DenseMatrix::from_fn(sites, sites, |s, mode| {
        let (j, k) = (s / n + 1, s % n + 1);
        let (m, nn) = (mode / n + 1, mode % n + 1);
        let phase = 2.0 * PI * ((j * m) as f64 + (k * nn) as f64) / nf;
        cis(-phase) / nf
    })
}

/// Single-particle hopping matrix `h` with `H_hop = Σ h[s,t]·a†_s a_t`.
///
/// Each directed bond `a_s a†_{s'}` plus its adjoint contributes `v` to
/// `h[s', s]` and `h[s, s']`; at `N = 1` both directions wrap onto the same
/// cavity and `h = 4v` (normal ordered, constant dropped).
pub fn hopping_matrix(spec: &LatticeSpec) -> DenseMatrix {
    let n_sites = spec.num_sites();
    let mut h = DenseMatrix::zeros(n_sites, n_sites);
    let v = C64::new(spec.v(), 0.0);
    for s in spec.sites() {
        let a = site_index(s, spec).unwrap();
        for t in [spec.next_row(s), spec.next_col(s)] {
            let b = site_index(t, spec).unwrap();
            h[(b, a)] += v;
            h[(a, b)] += v;
        }
    }
    h
}
