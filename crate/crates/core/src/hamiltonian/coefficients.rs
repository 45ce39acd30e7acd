//! Coefficients of the adiabatically eliminated model and the regime checks
//! that justify the elimination.
//!
//! For driven site `jk`, momentum mode `(m, n)` with frequency `ω`, and
//! `D = Δ₁ − ω − Δ₂`:
//!
//! ```text
//! ε    = Ω²/Δ₂
//! ζ(ω) = g²/[N²(Δ₁ − ω)]
//! λ(ω) = (gΩ/2N)·[1/(Δ₁ − ω) + 1/Δ₂]
//! ξ(ω) = λ²/D
//! χ_ab = Σ_mn ½λ_a λ_b [1/D_a + 1/D_b]·e^{−i[2π(j_a−j_b)m/N + 2π(k_a−k_b)n/N]}
//! ς    = Σ_mn ξ − ε
//! ```
//!
//! `ζ` is kept per mode. All arrays are indexed by linear site, with zeros on
//! undriven sites.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{check_params, SiteParams};
use crate::lattice::{momentum_modes_with, MomentumMode};
use crate::linalg::DenseMatrix;
use crate::math::{abs_c, cis};
use crate::{Dispersion, Error, LatticeSpec, Result, SiteIndex, C64};

/// Denominators below this magnitude are treated as vanishing.
const SINGULAR_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveCoefficients {
    pub dispersion: Dispersion,
    pub n: usize,
    pub modes: Vec<MomentumMode>,
    /// Linear indices of driven sites, ascending.
    pub driven: Vec<usize>,
    /// ε per site.
    pub epsilon: Vec<f64>,
    /// ζ per site × mode.
    pub zeta: Vec<Vec<f64>>,
    /// λ per site × mode.
    pub lambda: Vec<Vec<f64>>,
    /// ξ per site × mode.
    pub xi: Vec<Vec<f64>>,
    /// χ over site pairs; zero diagonal and zero rows for undriven sites.
    pub chi: DenseMatrix,
    /// ς per site.
    pub varsigma: Vec<f64>,
}

impl EffectiveCoefficients {
    fn linear(&self, s: SiteIndex) -> usize {
        (s.j - 1) * self.n + (s.k - 1)
    }

    pub fn chi_between(&self, a: SiteIndex, b: SiteIndex) -> C64 {
        self.chi[(self.linear(a), self.linear(b))]
    }

    pub fn varsigma_at(&self, s: SiteIndex) -> f64 {
        self.varsigma[self.linear(s)]
    }

    pub fn epsilon_at(&self, s: SiteIndex) -> f64 {
        self.epsilon[self.linear(s)]
    }

    pub fn driven_sites(&self) -> impl Iterator<Item = SiteIndex> + '_ {
        self.driven.iter().map(move |&i| SiteIndex {
            j: i / self.n + 1,
            k: i % self.n + 1,
        })
    }
}

fn singular(quantity: &'static str, site: SiteIndex, mode: Option<&MomentumMode>) -> Error {
    Error::SingularParameter {
        quantity,
        site,
        mode: mode.map(|m| (m.m, m.n)),
    }
}

pub fn effective_coefficients(
    spec: &LatticeSpec,
    params: &[SiteParams],
    dispersion: Dispersion,
) -> Result<EffectiveCoefficients> {
    check_params(spec, params)?;
    let n = spec.n();
    let nf = n as f64;
    let sites = spec.num_sites();
    let modes = momentum_modes_with(spec, dispersion);
    let n_modes = modes.len();

    let mut epsilon = vec![0.0; sites];
    let mut zeta = vec![vec![0.0; n_modes]; sites];
    let mut lambda = vec![vec![0.0; n_modes]; sites];
    let mut xi = vec![vec![0.0; n_modes]; sites];
    let mut varsigma = vec![0.0; sites];
    let mut raman_den = vec![vec![0.0; n_modes]; sites];
    let mut driven = Vec::new();

    for (i, p) in params.iter().enumerate() {
        let site = spec.site_at(i);
        if p.g != 0.0 {
            for (mu, mode) in modes.iter().enumerate() {
                let d1 = p.delta1 - mode.omega;
                if d1.abs() < SINGULAR_EPS {
                    return Err(singular("Δ₁ − ω", site, Some(mode)));
                }
                zeta[i][mu] = p.g * p.g / (nf * nf * d1);
            }
        }
        if !p.is_driven() {
            continue;
        }
        driven.push(i);
        if p.delta2.abs() < SINGULAR_EPS {
            return Err(singular("Δ₂", site, None));
        }
        epsilon[i] = p.omega_rabi * p.omega_rabi / p.delta2;
        let mut xi_sum = 0.0;
        for (mu, mode) in modes.iter().enumerate() {
            let d1 = p.delta1 - mode.omega;
            if d1.abs() < SINGULAR_EPS {
                return Err(singular("Δ₁ − ω", site, Some(mode)));
            }
            let d = d1 - p.delta2;
            if d.abs() < SINGULAR_EPS {
                return Err(singular("Δ₁ − ω − Δ₂", site, Some(mode)));
            }
            let l = p.g * p.omega_rabi / (2.0 * nf) * (1.0 / d1 + 1.0 / p.delta2);
            lambda[i][mu] = l;
            xi[i][mu] = l * l / d;
            raman_den[i][mu] = d;
            xi_sum += xi[i][mu];
        }
        varsigma[i] = xi_sum - epsilon[i];
    }

    let mut chi = DenseMatrix::zeros(sites, sites);
    for &a in &driven {
        for &b in &driven {
            if a == b {
                continue;
            }
            let (sa, sb) = (spec.site_at(a), spec.site_at(b));
            let dj = sa.j as f64 - sb.j as f64;
            let dk = sa.k as f64 - sb.k as f64;
            let mut acc = C64::new(0.0, 0.0);
            for (mu, mode) in modes.iter().enumerate() {
                let amp = 0.5
                    * lambda[a][mu]
                    * lambda[b][mu]
                    * (1.0 / raman_den[a][mu] + 1.0 / raman_den[b][mu]);
                let phase = 2.0 * PI * (dj * mode.m as f64 + dk * mode.n as f64) / nf;
                acc += cis(-phase) * amp;
            }
            chi[(a, b)] = acc;
        }
    }

    Ok(EffectiveCoefficients {
        dispersion,
        n,
        modes,
        driven,
        epsilon,
        zeta,
        lambda,
        xi,
        chi,
        varsigma,
    })
}

/// Ratios of one driven site against one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRatios {
    pub mode: (usize, usize),
    pub omega: f64,
    /// `|Δ₁ − ω| / |g/N|`
    pub cavity_ratio: f64,
    /// `|Δ₁ − ω − Δ₂| / |λ|`
    pub raman_ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteRegime {
    pub site: SiteIndex,
    /// `|Δ₂| / |Ω|`; `None` on undriven sites where no check applies.
    pub drive_ratio: Option<f64>,
    pub modes: Vec<ModeRatios>,
}

impl SiteRegime {
    pub fn applicable(&self) -> bool {
        self.drive_ratio.is_some()
    }

    pub fn pass(&self, threshold: f64) -> bool {
        self.drive_ratio.is_none_or(|r| r >= threshold) && self.modes.iter().all(|m| m.pass)
    }
}

/// Which ratio came out smallest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioKind {
    Drive,
    Cavity,
    Raman,
}

impl RatioKind {
    pub fn label(self) -> &'static str {
        match self {
            RatioKind::Drive => "|Δ₂|/|Ω|",
            RatioKind::Cavity => "|Δ₁−ω|/|g/N|",
            RatioKind::Raman => "|Δ₁−ω−Δ₂|/|λ|",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub threshold: f64,
    pub dispersion: Dispersion,
    pub sites: Vec<SiteRegime>,
}

impl RegimeReport {
    pub fn passes(&self) -> bool {
        self.sites.iter().all(|s| s.pass(self.threshold))
    }

    /// Smallest ratio over all driven sites and modes.
    pub fn worst(&self) -> Option<(SiteIndex, RatioKind, Option<(usize, usize)>, f64)> {
        let mut worst: Option<(SiteIndex, RatioKind, Option<(usize, usize)>, f64)> = None;
        let mut consider = |cand: (SiteIndex, RatioKind, Option<(usize, usize)>, f64)| {
            if worst.is_none_or(|w| cand.3 < w.3) {
                worst = Some(cand);
            }
        };
        for s in self.sites.iter().filter(|s| s.applicable()) {
            consider((s.site, RatioKind::Drive, None, s.drive_ratio.unwrap()));
            for m in &s.modes {
                consider((s.site, RatioKind::Cavity, Some(m.mode), m.cavity_ratio));
                consider((s.site, RatioKind::Raman, Some(m.mode), m.raman_ratio));
            }
        }
        worst
    }

    /// One line per failing ratio.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in self.sites.iter().filter(|s| s.applicable()) {
            if let Some(r) = s.drive_ratio.filter(|r| *r < self.threshold) {
                out.push(format!(
                    "site {}: {} = {:.3} below {}",
                    s.site,
                    RatioKind::Drive.label(),
                    r,
                    self.threshold
                ));
            }
            for m in s.modes.iter().filter(|m| !m.pass) {
                for (kind, r) in [
                    (RatioKind::Cavity, m.cavity_ratio),
                    (RatioKind::Raman, m.raman_ratio),
                ] {
                    if r < self.threshold {
                        out.push(format!(
                            "site {} mode ({},{}): {} = {:.3} below {}",
                            s.site,
                            m.mode.0,
                            m.mode.1,
                            kind.label(),
                            r,
                            self.threshold
                        ));
                    }
                }
            }
        }
        out
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::INFINITY
    } else {
        num.abs() / den.abs()
    }
}

/// Large-detuning and virtual-excitation ratios for every driven site and
/// mode, checked against `threshold`.
pub fn validate_regime(
    spec: &LatticeSpec,
    params: &[SiteParams],
    dispersion: Dispersion,
    threshold: f64,
) -> Result<RegimeReport> {
    check_params(spec, params)?;
    let nf = spec.n() as f64;
    let modes = momentum_modes_with(spec, dispersion);
    let sites = params
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let site = spec.site_at(i);
            if !p.is_driven() {
                return SiteRegime {
                    site,
                    drive_ratio: None,
                    modes: Vec::new(),
                };
            }
            let modes = modes
                .iter()
                .map(|mode| {
                    let d1 = p.delta1 - mode.omega;
                    let l = p.g * p.omega_rabi / (2.0 * nf) * (1.0 / d1 + 1.0 / p.delta2);
                    let cavity_ratio = ratio(d1, p.g / nf);
                    let raman_ratio = ratio(d1 - p.delta2, l);
                    ModeRatios {
                        mode: (mode.m, mode.n),
                        omega: mode.omega,
                        cavity_ratio,
                        raman_ratio,
                        pass: cavity_ratio >= threshold && raman_ratio >= threshold,
                    }
                })
                .collect();
            SiteRegime {
                site,
                drive_ratio: Some(ratio(p.delta2, p.omega_rabi)),
                modes,
            }
        })
        .collect();
    Ok(RegimeReport {
        threshold,
        dispersion,
        sites,
    })
}

/// Magnitude helper shared with protocol planning.
pub(crate) fn chi_magnitude(c: C64) -> f64 {
    abs_c(c)
}
