//! Two-qubit protocols on selected site pairs and the first-order
//! decoherence estimate.
//!
//! For a matched pair the effective dynamics from `|fg⟩` is
//! `e^{−iςt}[cos(|χ|t)|fg⟩ − i·u·sin(|χ|t)|gf⟩]` with `u = χ*/|χ|`, so a
//! maximally entangled state appears at `π/(4|χ|)` and a complete excitation
//! swap at `π/(2|χ|)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::hamiltonian::coefficients::chi_magnitude;
use crate::hamiltonian::effective::{check_disjoint, cross_pair_ratios};
use crate::hamiltonian::{
    check_pair, effective_coefficients, validate_regime, CrossPairRatio, RegimeReport, SiteParams,
    DEFAULT_REGIME_THRESHOLD,
};
use crate::lattice::momentum_modes_with;
use crate::math::cis;
use crate::{Dispersion, Error, LatticeSpec, Result, SiteIndex, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    Entangle,
    Transfer,
    ParallelGates,
}

impl ProtocolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Entangle => "entangle",
            ProtocolKind::Transfer => "transfer",
            ProtocolKind::ParallelGates => "parallel",
        }
    }
}

/// Operation performed on one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    /// `|fg⟩ → (|fg⟩ − i·u|gf⟩)/√2`
    Entangle,
    /// `(c₀|f⟩ + c₁|g⟩)_A|g⟩_B → |g⟩_A(−i·u·e^{−iςt}c₀|f⟩ + c₁|g⟩)_B`
    Transfer { c0: C64, c1: C64 },
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Entangle => "entangle",
            GateKind::Transfer { .. } => "transfer",
        }
    }
}

/// Schedule and expected outcome for one pair. States are in the pair basis
/// `|gg⟩, |gf⟩, |fg⟩, |ff⟩` with site `a` as the high bit.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSchedule {
    pub a: SiteIndex,
    pub b: SiteIndex,
    pub gate: GateKind,
    pub chi: C64,
    pub varsigma: f64,
    pub interaction_time: f64,
    /// `u = χ*/|χ|`, the phase carried by the `|gf⟩` amplitude.
    pub exchange_phase: C64,
    /// `−ς·t`, the phase common to every singly excited amplitude.
    pub stark_phase: f64,
    pub initial: [C64; 4],
    pub predicted: [C64; 4],
}

#[derive(Debug, Clone)]
pub struct ProtocolPlan {
    pub kind: ProtocolKind,
    pub dispersion: Dispersion,
    pub pairs: Vec<PairSchedule>,
    /// Duration of the round; the slowest pair for parallel gates.
    pub interaction_time: f64,
    pub regime: RegimeReport,
    pub cross: Vec<CrossPairRatio>,
    pub notes: Vec<String>,
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const MINUS_I: C64 = C64::new(0.0, -1.0);

fn schedule(
    a: SiteIndex,
    b: SiteIndex,
    gate: GateKind,
    spec: &LatticeSpec,
    params: &[SiteParams],
    dispersion: Dispersion,
) -> Result<PairSchedule> {
    let (ia, ib) = check_pair(spec, params, a, b)?;
    if !params[ia].is_driven() {
        return Err(Error::Precondition(format!(
            "sites {a} and {b} carry no classical drive"
        )));
    }
    let c = effective_coefficients(spec, params, dispersion)?;
    let chi = c.chi[(ia, ib)];
    let mag = chi_magnitude(chi);
    // Mode sums can cancel exactly; what survives is rounding noise.
    let scale: f64 = c.xi[ia].iter().chain(&c.xi[ib]).map(|x| x.abs()).sum();
    if mag <= 1e-12 * scale {
        return Err(Error::Precondition(format!(
            "exchange coupling between {a} and {b} vanishes"
        )));
    }
    let varsigma = c.varsigma[ia];
    let u = chi.conj() / mag;
    let (time, initial, predicted) = match gate {
        GateKind::Entangle => {
            let t = PI / (4.0 * mag);
            let g = cis(-varsigma * t) * FRAC_1_SQRT_2;
            (t, [ZERO, ZERO, ONE, ZERO], [ZERO, MINUS_I * u * g, g, ZERO])
        }
        GateKind::Transfer { c0, c1 } => {
            let n = c0.norm_sqr() + c1.norm_sqr();
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "|c0|² + |c1|² = {n}, expected 1"
                )));
            }
            let t = PI / (2.0 * mag);
            (
                t,
                [c1, ZERO, c0, ZERO],
                [c1, MINUS_I * u * cis(-varsigma * t) * c0, ZERO, ZERO],
            )
        }
    };
    Ok(PairSchedule {
        a,
        b,
        gate,
        chi,
        varsigma,
        interaction_time: time,
        exchange_phase: u,
        stark_phase: -varsigma * time,
        initial,
        predicted,
    })
}

fn regime(
    spec: &LatticeSpec,
    params: &[SiteParams],
    dispersion: Dispersion,
) -> Result<(RegimeReport, Vec<String>)> {
    let r = validate_regime(spec, params, dispersion, DEFAULT_REGIME_THRESHOLD)?;
    let w = r.warnings();
    Ok((r, w))
}

/// Entangles `|f⟩_A|g⟩_B` into `(|fg⟩ − i·u|gf⟩)/√2` after `π/(4|χ|)`.
pub fn plan_entanglement(
    a: SiteIndex,
    b: SiteIndex,
    spec: &LatticeSpec,
    params: &[SiteParams],
    dispersion: Dispersion,
) -> Result<ProtocolPlan> {
    let s = schedule(a, b, GateKind::Entangle, spec, params, dispersion)?;
    let (regime, notes) = regime(spec, params, dispersion)?;
    Ok(ProtocolPlan {
        kind: ProtocolKind::Entangle,
        dispersion,
        interaction_time: s.interaction_time,
        pairs: alloc::vec![s],
        regime,
        cross: Vec::new(),
        notes,
    })
}

/// Moves the state of A onto B after `π/(2|χ|)`, the first complete swap.
pub fn plan_state_transfer(
    a: SiteIndex,
    b: SiteIndex,
    c0: C64,
    c1: C64,
    spec: &LatticeSpec,
    params: &[SiteParams],
    dispersion: Dispersion,
) -> Result<ProtocolPlan> {
    let s = schedule(
        a,
        b,
        GateKind::Transfer { c0, c1 },
        spec,
        params,
        dispersion,
    )?;
    let (regime, notes) = regime(spec, params, dispersion)?;
    Ok(ProtocolPlan {
        kind: ProtocolKind::Transfer,
        dispersion,
        interaction_time: s.interaction_time,
        pairs: alloc::vec![s],
        regime,
        cross: Vec::new(),
        notes,
    })
}

/// Simultaneous gates on disjoint pairs. Every cross-pair ratio must reach
/// `threshold`.
pub fn plan_parallel(
    pairs: &[(SiteIndex, SiteIndex, GateKind)],
    spec: &LatticeSpec,
    params: &[SiteParams],
    dispersion: Dispersion,
    threshold: f64,
) -> Result<ProtocolPlan> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one pair is required".into(),
        ));
    }
    let sites: Vec<(SiteIndex, SiteIndex)> = pairs.iter().map(|&(a, b, _)| (a, b)).collect();
    check_disjoint(&sites)?;
    let schedules = pairs
        .iter()
        .map(|&(a, b, g)| schedule(a, b, g, spec, params, dispersion))
        .collect::<Result<Vec<_>>>()?;
    let c = effective_coefficients(spec, params, dispersion)?;
    let cross = cross_pair_ratios(spec, params, &c, &sites)?;
    if let Some(worst) = cross.iter().min_by(|x, y| x.ratio.total_cmp(&y.ratio)) {
        if worst.ratio < threshold {
            return Err(Error::Selectivity {
                a: worst.site,
                b: worst.other,
                ratio: worst.ratio,
                threshold,
            });
        }
    }
    let (regime, notes) = regime(spec, params, dispersion)?;
    let round = schedules
        .iter()
        .map(|s| s.interaction_time)
        .fold(0.0, f64::max);
    Ok(ProtocolPlan {
        kind: ProtocolKind::ParallelGates,
        dispersion,
        pairs: schedules,
        interaction_time: round,
        regime,
        cross,
        notes,
    })
}

/// Values quoted alongside the estimate for the two-site reference setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotedValues {
    pub p1: f64,
    pub p2: f64,
    pub fidelity: f64,
    /// `1 − (p1·γ + p2·κ)·t` evaluated with the quoted `p1`, `p2`.
    pub fidelity_from_chain: f64,
}

pub const QUOTED_P1: f64 = 3.2e-3;
pub const QUOTED_P2: f64 = 6.98e-3;
pub const QUOTED_FIDELITY: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceEstimate {
    /// `Σ Ω²/Δ₂²` over driven sites, which is `2Ω²/Δ₂²` for a matched pair.
    pub p1: f64,
    /// `Σ λ²/(Δ₁ − ω − Δ₂)²` over driven sites and modes.
    pub p2: f64,
    /// The same sum with `Δ₁ + ω − Δ₂` in the denominator.
    pub p2_plus: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub time: f64,
    pub gamma_e: f64,
    pub kappa_e: f64,
    /// `1 − (γₑ + κₑ)·t`
    pub fidelity_estimate: f64,
    /// As `fidelity_estimate` with `p2_plus`.
    pub fidelity_estimate_plus: f64,
    pub quoted: QuotedValues,
    pub notes: Vec<String>,
}

/// `F = 1 − (p1·γ + p2·κ)·t`
pub fn fidelity_chain(p1: f64, p2: f64, gamma: f64, kappa: f64, t: f64) -> f64 {
    1.0 - (p1 * gamma + p2 * kappa) * t
}

pub fn estimate_decoherence(
    spec: &LatticeSpec,
    params: &[SiteParams],
    dispersion: Dispersion,
    gamma: f64,
    kappa: f64,
    t: f64,
) -> Result<DecoherenceEstimate> {
    if !(gamma >= 0.0 && gamma.is_finite() && kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "γ = {gamma} and κ = {kappa} must be non-negative"
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "time must be positive, got {t}"
        )));
    }
    let c = effective_coefficients(spec, params, dispersion)?;
    let modes = momentum_modes_with(spec, dispersion);
    let (mut p1, mut p2, mut p2_plus) = (0.0, 0.0, 0.0);
    for &i in &c.driven {
        let p = &params[i];
        p1 += p.omega_rabi * p.omega_rabi / (p.delta2 * p.delta2);
        for (mu, mode) in modes.iter().enumerate() {
            let l2 = c.lambda[i][mu] * c.lambda[i][mu];
            let minus = p.delta1 - mode.omega - p.delta2;
            let plus = p.delta1 + mode.omega - p.delta2;
            if plus.abs() < 1e-12 {
                return Err(Error::SingularParameter {
                    quantity: "Δ₁ + ω − Δ₂",
                    site: spec.site_at(i),
                    mode: Some((mode.m, mode.n)),
                });
            }
            p2 += l2 / (minus * minus);
            p2_plus += l2 / (plus * plus);
        }
    }
    let gamma_e = p1 * gamma;
    let kappa_e = p2 * kappa;
    let quoted = QuotedValues {
        p1: QUOTED_P1,
        p2: QUOTED_P2,
        fidelity: QUOTED_FIDELITY,
        fidelity_from_chain: fidelity_chain(QUOTED_P1, QUOTED_P2, gamma, kappa, t),
    };
    let mut notes = Vec::new();
    if (p1 - QUOTED_P1).abs() > 0.01 * QUOTED_P1 {
        notes.push(format!(
            "computed p1 = {p1:.4e} differs from the quoted {QUOTED_P1:.2e}"
        ));
    }
    if (p2 - QUOTED_P2).abs() > 0.01 * QUOTED_P2 {
        notes.push(format!(
            "computed p2 = {p2:.4e} differs from the quoted {QUOTED_P2:.2e}"
        ));
    }
    Ok(DecoherenceEstimate {
        p1,
        p2,
        p2_plus,
        gamma,
        kappa,
        time: t,
        gamma_e,
        kappa_e,
        fidelity_estimate: 1.0 - (gamma_e + kappa_e) * t,
        fidelity_estimate_plus: fidelity_chain(p1, p2_plus, gamma, kappa, t),
        quoted,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn reference() -> (LatticeSpec, Vec<SiteParams>) {
        let spec = LatticeSpec::new(4, 1.5, Dispersion::CosineOfSum).unwrap();
        let mut params = vec![SiteParams::new(1.0, 0.0, 15.0, 15.2); 16];
        params[0].omega_rabi = 1.0;
        params[15].omega_rabi = 1.0;
        (spec, params)
    }

    fn ends(spec: &LatticeSpec) -> (SiteIndex, SiteIndex) {
        (spec.site(1, 1).unwrap(), spec.site(4, 4).unwrap())
    }

    #[test]
    fn entangle_time_reference() {
        let (spec, params) = reference();
        let (a, b) = ends(&spec);
        let plan = plan_entanglement(a, b, &spec, &params, Dispersion::CosineOfSum).unwrap();
        assert!(
            (plan.interaction_time - 1.03e3).abs() / 1.03e3 < 0.01,
            "{}",
            plan.interaction_time
        );
        let s = &plan.pairs[0];
        // χ is negative here, so u = −1 and the target is (|fg⟩ + i|gf⟩)/√2 up to phase.
        assert!((s.exchange_phase - C64::new(-1.0, 0.0)).norm() < 1e-12);
        let rel = s.predicted[1] / s.predicted[2];
        assert!((rel - C64::new(0.0, 1.0)).norm() < 1e-12);
        assert!(plan.notes.is_empty());
    }

    #[test]
    fn entangle_errors() {
        let (spec, params) = reference();
        let (a, _) = ends(&spec);
        assert!(plan_entanglement(a, a, &spec, &params, Dispersion::CosineOfSum).is_err());
        let c = spec.site(2, 2).unwrap();
        let e = plan_entanglement(a, c, &spec, &params, Dispersion::CosineOfSum).unwrap_err();
        assert!(matches!(e, Error::Precondition(m) if m.contains("Ω")));
    }

    #[test]
    fn rabi_scaling() {
        let (spec, params) = reference();
        let (a, b) = ends(&spec);
        let t1 = plan_entanglement(a, b, &spec, &params, Dispersion::CosineOfSum)
            .unwrap()
            .interaction_time;
        for s in [0.5, 2.0] {
            let mut p = params.clone();
            p[0].omega_rabi *= s;
            p[15].omega_rabi *= s;
            let t = plan_entanglement(a, b, &spec, &p, Dispersion::CosineOfSum)
                .unwrap()
                .interaction_time;
            assert!((t * s * s / t1 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transfer_plan() {
        let (spec, params) = reference();
        let (a, b) = ends(&spec);
        let e = plan_state_transfer(a, b, ONE, ONE, &spec, &params, Dispersion::CosineOfSum)
            .unwrap_err();
        assert!(matches!(e, Error::InvalidArgument(_)));
        let plan =
            plan_state_transfer(a, b, ONE, ZERO, &spec, &params, Dispersion::CosineOfSum).unwrap();
        let s = &plan.pairs[0];
        assert!((s.predicted[1].norm() - 1.0).abs() < 1e-15);
        let ent = plan_entanglement(a, b, &spec, &params, Dispersion::CosineOfSum).unwrap();
        assert!((plan.interaction_time - 2.0 * ent.interaction_time).abs() < 1e-9);
        let plan =
            plan_state_transfer(a, b, ZERO, ONE, &spec, &params, Dispersion::CosineOfSum).unwrap();
        assert_eq!(plan.pairs[0].predicted, plan.pairs[0].initial);
    }

    fn two_pairs(offset: f64) -> (LatticeSpec, Vec<SiteParams>, [(SiteIndex, SiteIndex); 2]) {
        let spec = LatticeSpec::new(4, 1.5, Dispersion::CosineOfSum).unwrap();
        let mut params = vec![SiteParams::new(1.0, 0.0, 15.0, 15.2); 16];
        params[0].omega_rabi = 1.0;
        params[15].omega_rabi = 1.0;
        params[5] = SiteParams::new(1.0, 1.0, 15.0 + offset, 15.2);
        params[10] = SiteParams::new(1.0, 1.0, 15.0 + offset, 15.2);
        let p1 = (spec.site(1, 1).unwrap(), spec.site(4, 4).unwrap());
        let p2 = (spec.site(2, 2).unwrap(), spec.site(3, 3).unwrap());
        (spec, params, [p1, p2])
    }

    #[test]
    fn single_pair_parallel_matches_entangle() {
        let (spec, params) = reference();
        let (a, b) = ends(&spec);
        let par = plan_parallel(
            &[(a, b, GateKind::Entangle)],
            &spec,
            &params,
            Dispersion::CosineOfSum,
            20.0,
        )
        .unwrap();
        let ent = plan_entanglement(a, b, &spec, &params, Dispersion::CosineOfSum).unwrap();
        assert_eq!(par.pairs, ent.pairs);
        assert_eq!(par.interaction_time, ent.interaction_time);
    }

    #[test]
    fn parallel_threshold_rejects_with_ratio() {
        let (spec, params, [p1, p2]) = two_pairs(0.4);
        let pairs = [
            (p1.0, p1.1, GateKind::Entangle),
            (p2.0, p2.1, GateKind::Entangle),
        ];
        let plan = plan_parallel(&pairs, &spec, &params, Dispersion::CosineOfSum, 20.0).unwrap();
        assert_eq!(plan.cross.len(), 4);
        assert!(plan
            .pairs
            .iter()
            .all(|s| s.interaction_time <= plan.interaction_time));

        // Choose a threshold that sits above the smallest measured ratio.
        let worst = plan
            .cross
            .iter()
            .map(|r| r.ratio)
            .fold(f64::INFINITY, f64::min);
        let e = plan_parallel(&pairs, &spec, &params, Dispersion::CosineOfSum, worst * 4.0)
            .unwrap_err();
        match e {
            Error::Selectivity { ratio, .. } => assert_eq!(ratio, worst),
            other => panic!("{other}"),
        }
        let overlap = [
            (p1.0, p1.1, GateKind::Entangle),
            (p1.1, p2.0, GateKind::Entangle),
        ];
        assert!(matches!(
            plan_parallel(&overlap, &spec, &params, Dispersion::CosineOfSum, 20.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn selectivity_message_carries_ratio() {
        let e = Error::Selectivity {
            a: SiteIndex { j: 1, k: 1 },
            b: SiteIndex { j: 1, k: 4 },
            ratio: 5.0,
            threshold: 20.0,
        };
        let msg = alloc::string::ToString::to_string(&e);
        assert!(msg.contains("5.000") && msg.contains("20"), "{msg}");
    }

    #[test]
    fn cancelled_coupling_is_rejected() {
        // Under the cosine-of-sum convention the (1,4)–(4,1) mode sum cancels.
        let spec = LatticeSpec::new(4, 1.5, Dispersion::CosineOfSum).unwrap();
        let mut params = vec![SiteParams::new(1.0, 0.0, 15.0, 15.2); 16];
        params[3].omega_rabi = 1.0;
        params[12].omega_rabi = 1.0;
        let (a, b) = (spec.site(1, 4).unwrap(), spec.site(4, 1).unwrap());
        let e = plan_entanglement(a, b, &spec, &params, Dispersion::CosineOfSum).unwrap_err();
        assert!(matches!(e, Error::Precondition(m) if m.contains("vanishes")));
        assert!(plan_entanglement(a, b, &spec, &params, Dispersion::SumOfCosines).is_ok());
    }

    #[test]
    fn decoherence_chain() {
        let (spec, params) = reference();
        let est = estimate_decoherence(
            &spec,
            &params,
            Dispersion::CosineOfSum,
            1.0 / 300.0,
            1.0 / 1800.0,
            1.03e3,
        )
        .unwrap();
        assert!((est.p1 - 2.0 / (15.2 * 15.2)).abs() < 1e-15);
        assert!((est.p1 - 8.66e-3).abs() < 1e-5);
        let f = 1.0 - (est.p1 * est.gamma + est.p2 * est.kappa) * est.time;
        assert!((est.fidelity_estimate - f).abs() < 1e-12);
        assert_eq!(est.notes.len(), 2);
        let q = 1.0 - (3.2e-3 / 300.0 + 6.98e-3 / 1800.0) * 1.03e3;
        assert!((est.quoted.fidelity_from_chain - q).abs() < 1e-12);

        let zero =
            estimate_decoherence(&spec, &params, Dispersion::CosineOfSum, 0.0, 0.0, 50.0).unwrap();
        assert_eq!(zero.fidelity_estimate, 1.0);
        assert_eq!(zero.fidelity_estimate_plus, 1.0);
        assert!(
            estimate_decoherence(&spec, &params, Dispersion::CosineOfSum, -1.0, 0.0, 1.0).is_err()
        );
        assert!(
            estimate_decoherence(&spec, &params, Dispersion::CosineOfSum, 0.0, 0.0, 0.0).is_err()
        );
    }
}
