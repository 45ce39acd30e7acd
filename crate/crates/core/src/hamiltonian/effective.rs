//! Qubit Hamiltonians on `{|g⟩, |f⟩}` left after eliminating `|e⟩` and the
//! photon modes.
//!
//! Matrix elements follow `⟨f_x|H|f_y⟩ = χ_xy·e^{−i[(Δ₁y−Δ₁x) − (Δ₂y−Δ₂x)]t}`
//! between single-flip configurations, and every unordered site pair
//! contributes one exchange term plus its adjoint.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::coefficients::{
    chi_magnitude, effective_coefficients, validate_regime, EffectiveCoefficients, RegimeReport,
};
use super::{
    check_params, SiteParams, TermBuilder, TimeDependentOperator, DEFAULT_REGIME_THRESHOLD,
};
use crate::hilbert::{AtomLevel, Basis, OperatorMatrix};
use crate::lattice::site_index;
use crate::linalg::SparseBuilder;
use crate::{Dispersion, Error, LatticeSpec, Result, SiteIndex, C64};

/// Relative tolerance for the equalities required of a coupled pair.
const MATCH_TOL: f64 = 1e-12;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= MATCH_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Checks `g_A = g_B`, `Ω_A = Ω_B` and `Δ₁B − Δ₁A = Δ₂B − Δ₂A`.
pub fn check_pair(
    spec: &LatticeSpec,
    params: &[SiteParams],
    a: SiteIndex,
    b: SiteIndex,
) -> Result<(usize, usize)> {
    let ia = site_index(a, spec)?;
    let ib = site_index(b, spec)?;
    if ia == ib {
        return Err(Error::Precondition(format!(
            "pair sites must differ, got {a} twice"
        )));
    }
    check_params(spec, params)?;
    let (pa, pb) = (&params[ia], &params[ib]);
    if !close(pa.g, pb.g) {
        return Err(Error::Precondition(format!(
            "g{a} = {} differs from g{b} = {}",
            pa.g, pb.g
        )));
    }
    if !close(pa.omega_rabi, pb.omega_rabi) {
        return Err(Error::Precondition(format!(
            "Ω{a} = {} differs from Ω{b} = {}",
            pa.omega_rabi, pb.omega_rabi
        )));
    }
    let d1 = pb.delta1 - pa.delta1;
    let d2 = pb.delta2 - pa.delta2;
    if !close(d1, d2) {
        return Err(Error::Precondition(format!(
            "Δ₁{b} − Δ₁{a} = {d1} differs from Δ₂{b} − Δ₂{a} = {d2}"
        )));
    }
    Ok((ia, ib))
}

/// The all-site effective model together with the regime check it relies on.
#[derive(Debug, Clone)]
pub struct EffectiveGeneral {
    pub operator: TimeDependentOperator,
    pub coefficients: EffectiveCoefficients,
    pub regime: RegimeReport,
    pub warnings: Vec<String>,
}

pub fn build_effective_general(
    spec: &LatticeSpec,
    params: &[SiteParams],
    dispersion: Dispersion,
    basis: &Basis,
) -> Result<EffectiveGeneral> {
    let n = spec.num_sites();
    if basis.n_sites() != n || basis.n_modes() != 0 || basis.levels().contains(&AtomLevel::E) {
        return Err(Error::InvalidArgument(format!(
            "effective model needs a {{g,f}} basis over {n} atoms without photons"
        )));
    }
    let coefficients = effective_coefficients(spec, params, dispersion)?;
    let regime = validate_regime(spec, params, dispersion, DEFAULT_REGIME_THRESHOLD)?;
    let warnings = regime.warnings();

    let mut tb = TermBuilder::new(basis.dim());
    let driven = &coefficients.driven;
    for (col, s) in basis.states().iter().enumerate() {
        let shift: f64 = (0..n)
            .filter(|&x| s.atoms[x] == AtomLevel::F)
            .map(|x| coefficients.varsigma[x])
            .sum();
        tb.push(0.0, col, col, C64::new(shift, 0.0));
        for (i, &x) in driven.iter().enumerate() {
            for &y in &driven[i + 1..] {
                // χ_xy moves the excitation from y to x; its adjoint moves it back.
                let (ax, ay) = (s.atoms[x], s.atoms[y]);
                let chi = coefficients.chi[(x, y)];
                let phase =
                    (params[y].delta1 - params[x].delta1) - (params[y].delta2 - params[x].delta2);
                let (to_x, amp, freq) = match (ax, ay) {
                    (AtomLevel::G, AtomLevel::F) => (true, chi, -phase),
                    (AtomLevel::F, AtomLevel::G) => (false, chi.conj(), phase),
                    _ => continue,
                };
                let mut t = s.clone();
                t.atoms[x] = if to_x { AtomLevel::F } else { AtomLevel::G };
                t.atoms[y] = if to_x { AtomLevel::G } else { AtomLevel::F };
                match basis.index_of(&t) {
                    Some(row) => tb.push(freq, row, col, amp),
                    None => tb.dropped += 1,
                }
            }
        }
    }
    Ok(EffectiveGeneral {
        operator: tb.build(),
        coefficients,
        regime,
        warnings,
    })
}

/// Basis of one pair, `|gg⟩, |gf⟩, |fg⟩, |ff⟩` with site A as the high bit.
pub fn pair_basis() -> Basis {
    Basis::qubits(2, None).expect("four states")
}

/// `ς(|f⟩_A⟨f| + |f⟩_B⟨f|) + χ(S⁺_A S⁻_B + h.c.)` on the pair basis.
pub fn build_effective_pair(
    a: SiteIndex,
    b: SiteIndex,
    spec: &LatticeSpec,
    params: &[SiteParams],
    dispersion: Dispersion,
) -> Result<OperatorMatrix> {
    let (ia, ib) = check_pair(spec, params, a, b)?;
    let c = effective_coefficients(spec, params, dispersion)?;
    let mut builder = SparseBuilder::new(4);
    push_pair_block(&mut builder, &c, ia, ib, 0, 2, 4);
    Ok(OperatorMatrix {
        matrix: builder.build(),
        hermitian: true,
        dropped: 0,
    })
}

/// Adds one pair's terms on qubits `(q, q+1)` of an `n_qubits` register
/// indexed with qubit 0 as the highest bit.
fn push_pair_block(
    b: &mut SparseBuilder,
    c: &EffectiveCoefficients,
    ia: usize,
    ib: usize,
    q: usize,
    n_qubits: usize,
    dim: usize,
) {
    let bit_a = 1usize << (n_qubits - 1 - q);
    let bit_b = 1usize << (n_qubits - 2 - q);
    let chi = c.chi[(ia, ib)];
    for col in 0..dim {
        let fa = col & bit_a != 0;
        let fb = col & bit_b != 0;
        let shift = if fa { c.varsigma[ia] } else { 0.0 } + if fb { c.varsigma[ib] } else { 0.0 };
        b.push(col, col, C64::new(shift, 0.0));
        match (fa, fb) {
            (false, true) => b.push(col ^ bit_a ^ bit_b, col, chi),
            (true, false) => b.push(col ^ bit_a ^ bit_b, col, chi.conj()),
            _ => {}
        }
    }
}

/// Selectivity of one site against a site of another pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossPairRatio {
    pub site: SiteIndex,
    pub other: SiteIndex,
    /// `|(Δ₁ − Δ₂)_site − (Δ₁ − Δ₂)_other|`
    pub offset: f64,
    pub chi: f64,
    /// `offset / |χ|`, infinite when the sites do not couple.
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct EffectiveParallel {
    /// Block Hamiltonian on `2·pairs` qubits ordered `A₀, B₀, A₁, B₁, …`,
    /// qubit 0 as the highest bit.
    pub operator: OperatorMatrix,
    pub cross: Vec<CrossPairRatio>,
    pub threshold: f64,
    pub warnings: Vec<String>,
}

impl EffectiveParallel {
    pub fn min_ratio(&self) -> Option<&CrossPairRatio> {
        self.cross.iter().min_by(|x, y| x.ratio.total_cmp(&y.ratio))
    }
}

pub(crate) fn cross_pair_ratios(
    spec: &LatticeSpec,
    params: &[SiteParams],
    c: &EffectiveCoefficients,
    pairs: &[(SiteIndex, SiteIndex)],
) -> Result<Vec<CrossPairRatio>> {
    let mut out = Vec::new();
    for (i, &(a, b)) in pairs.iter().enumerate() {
        for &(a2, b2) in &pairs[i + 1..] {
            for s in [a, b] {
                for o in [a2, b2] {
                    let (is, io) = (site_index(s, spec)?, site_index(o, spec)?);
                    let offset = (params[is].raman_offset() - params[io].raman_offset()).abs();
                    let chi = chi_magnitude(c.chi[(is, io)]);
                    let ratio = if chi == 0.0 {
                        f64::INFINITY
                    } else {
                        offset / chi
                    };
                    out.push(CrossPairRatio {
                        site: s,
                        other: o,
                        offset,
                        chi,
                        ratio,
                    });
                }
            }
        }
    }
    Ok(out)
}

pub(crate) fn check_disjoint(pairs: &[(SiteIndex, SiteIndex)]) -> Result<()> {
    let mut seen: Vec<SiteIndex> = Vec::with_capacity(2 * pairs.len());
    for &(a, b) in pairs {
        for s in [a, b] {
            if seen.contains(&s) {
                return Err(Error::InvalidArgument(format!(
                    "site {s} appears in more than one pair"
                )));
            }
            seen.push(s);
        }
    }
    Ok(())
}

/// Block Hamiltonian for simultaneously driven pairs with cross-pair terms
/// omitted. Cross-pair ratios below `threshold` come back as warnings.
pub fn build_effective_parallel(
    pairs: &[(SiteIndex, SiteIndex)],
    spec: &LatticeSpec,
    params: &[SiteParams],
    dispersion: Dispersion,
    threshold: f64,
) -> Result<EffectiveParallel> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one pair is required".into(),
        ));
    }
    check_disjoint(pairs)?;
    let n_qubits = 2 * pairs.len();
    if n_qubits > 22 {
        return Err(Error::BasisTooLarge {
            dimension: 1u128 << n_qubits,
            limit: crate::hilbert::MAX_BASIS_DIM,
        });
    }
    let mut idx = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        idx.push(check_pair(spec, params, a, b)?);
    }
    let c = effective_coefficients(spec, params, dispersion)?;
    let dim = 1usize << n_qubits;
    let mut builder = SparseBuilder::new(dim);
    for (p, &(ia, ib)) in idx.iter().enumerate() {
        push_pair_block(&mut builder, &c, ia, ib, 2 * p, n_qubits, dim);
    }
    let cross = cross_pair_ratios(spec, params, &c, pairs)?;
    let warnings = cross
        .iter()
        .filter(|r| r.ratio < threshold)
        .map(|r| {
            format!(
                "cross-pair selectivity {}–{}: ratio {:.3} below {threshold}",
                r.site, r.other, r.ratio
            )
        })
        .collect();
    Ok(EffectiveParallel {
        operator: OperatorMatrix {
            matrix: builder.build(),
            hermitian: true,
            dropped: 0,
        },
        cross,
        threshold,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::BasisState;
    use alloc::vec;

    fn reference() -> (LatticeSpec, Vec<SiteParams>) {
        let spec = LatticeSpec::new(4, 1.5, Dispersion::CosineOfSum).unwrap();
        let mut params = vec![SiteParams::new(1.0, 0.0, 15.0, 15.2); 16];
        params[0].omega_rabi = 1.0;
        params[15].omega_rabi = 1.0;
        (spec, params)
    }

    fn pair_sites(spec: &LatticeSpec) -> (SiteIndex, SiteIndex) {
        (spec.site(1, 1).unwrap(), spec.site(4, 4).unwrap())
    }

    #[test]
    fn pair_operator_layout() {
        let (spec, params) = reference();
        let (a, b) = pair_sites(&spec);
        let h = build_effective_pair(a, b, &spec, &params, Dispersion::CosineOfSum).unwrap();
        let c = effective_coefficients(&spec, &params, Dispersion::CosineOfSum).unwrap();
        let m = h.matrix.to_dense();
        let s = c.varsigma[0];
        assert_eq!(m[(0, 0)], C64::new(0.0, 0.0));
        assert!((m[(1, 1)].re - s).abs() < 1e-15);
        assert!((m[(2, 2)].re - s).abs() < 1e-15);
        assert!((m[(3, 3)].re - 2.0 * s).abs() < 1e-15);
        assert_eq!(m[(2, 1)], c.chi[(0, 15)]);
        assert_eq!(m[(1, 2)], c.chi[(0, 15)].conj());
        assert!(h.hermiticity_error() < 1e-15);
        assert_eq!(pair_basis().state(2).atoms, [AtomLevel::F, AtomLevel::G]);
    }

    #[test]
    fn general_reduces_to_pair_for_matched_detunings() {
        let (spec, params) = reference();
        let basis = Basis::qubits(16, None).unwrap();
        let g = build_effective_general(&spec, &params, Dispersion::CosineOfSum, &basis).unwrap();
        assert!(g.operator.is_static());
        assert!(g.warnings.is_empty());
        let h = g.operator.at(0.0);
        let (a, b) = pair_sites(&spec);
        let pair = build_effective_pair(a, b, &spec, &params, Dispersion::CosineOfSum).unwrap();
        let idx = |fa: bool, fb: bool| {
            let mut s = BasisState::ground(16, 0);
            if fa {
                s.atoms[0] = AtomLevel::F;
            }
            if fb {
                s.atoms[15] = AtomLevel::F;
            }
            basis.index_of(&s).unwrap()
        };
        let full_idx = [
            idx(false, false),
            idx(false, true),
            idx(true, false),
            idx(true, true),
        ];
        for r in 0..4 {
            for c in 0..4 {
                let d = h.get(full_idx[r], full_idx[c]) - pair.matrix.get(r, c);
                assert!(d.norm() < 1e-15, "({r},{c})");
            }
        }
    }

    #[test]
    fn single_driven_site_only_shifts() {
        let (spec, mut params) = reference();
        params[15].omega_rabi = 0.0;
        let basis = Basis::qubits(16, Some(1)).unwrap();
        let g = build_effective_general(&spec, &params, Dispersion::CosineOfSum, &basis).unwrap();
        let h = g.operator.at(3.0);
        assert_eq!(h.nnz(), 1);
        let mut s = BasisState::ground(16, 0);
        s.atoms[0] = AtomLevel::F;
        let i = basis.index_of(&s).unwrap();
        assert!((h.get(i, i).re - g.coefficients.varsigma[0]).abs() < 1e-15);
    }

    #[test]
    fn general_hermitian_with_mismatched_detunings() {
        let spec = LatticeSpec::new(3, 1.0, Dispersion::SumOfCosines).unwrap();
        let mut params = vec![SiteParams::new(1.0, 0.0, 12.0, 12.5); 9];
        params[0] = SiteParams::new(1.0, 0.8, 12.0, 12.5);
        params[4] = SiteParams::new(0.9, 1.0, 13.0, 12.9);
        params[8] = SiteParams::new(1.1, 0.7, 11.5, 12.2);
        let basis = Basis::qubits(9, None).unwrap();
        let g = build_effective_general(&spec, &params, Dispersion::SumOfCosines, &basis).unwrap();
        assert!(!g.operator.is_static());
        for t in [0.0, 0.37, 10.0] {
            assert!(g.operator.at(t).hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn pair_preconditions_name_the_failure() {
        let (spec, mut params) = reference();
        let (a, b) = pair_sites(&spec);
        params[15].delta2 = 15.3;
        let e = build_effective_pair(a, b, &spec, &params, Dispersion::CosineOfSum).unwrap_err();
        assert!(
            matches!(&e, Error::Precondition(m) if m.contains("Δ₁")),
            "{e}"
        );
        params[15].delta2 = 15.2;
        params[15].g = 0.9;
        let e = build_effective_pair(a, b, &spec, &params, Dispersion::CosineOfSum).unwrap_err();
        assert!(
            matches!(&e, Error::Precondition(m) if m.starts_with("g")),
            "{e}"
        );
        assert!(build_effective_pair(a, a, &spec, &params, Dispersion::CosineOfSum).is_err());
    }

    #[test]
    fn single_pair_parallel_equals_pair() {
        let (spec, params) = reference();
        let (a, b) = pair_sites(&spec);
        let par =
            build_effective_parallel(&[(a, b)], &spec, &params, Dispersion::CosineOfSum, 20.0)
                .unwrap();
        let pair = build_effective_pair(a, b, &spec, &params, Dispersion::CosineOfSum).unwrap();
        assert!(par.operator.matrix.max_abs_diff(&pair.matrix) < 1e-18);
        assert!(par.cross.is_empty());
    }

    #[test]
    fn parallel_blocks_and_overlap() {
        let spec = LatticeSpec::new(4, 1.5, Dispersion::CosineOfSum).unwrap();
        let mut params = vec![SiteParams::new(1.0, 0.0, 15.0, 15.2); 16];
        for &i in &[0usize, 15] {
            params[i].omega_rabi = 1.0;
        }
        for &i in &[5usize, 10] {
            params[i] = SiteParams::new(1.0, 1.0, 15.4, 15.2);
        }
        let p1 = (spec.site(1, 1).unwrap(), spec.site(4, 4).unwrap());
        let p2 = (spec.site(2, 2).unwrap(), spec.site(3, 3).unwrap());
        let par =
            build_effective_parallel(&[p1, p2], &spec, &params, Dispersion::CosineOfSum, 20.0)
                .unwrap();
        assert_eq!(par.operator.dim(), 16);
        assert_eq!(par.cross.len(), 4);
        for r in &par.cross {
            assert!((r.offset - 0.4).abs() < 1e-12);
        }
        let h1 = build_effective_pair(p1.0, p1.1, &spec, &params, Dispersion::CosineOfSum)
            .unwrap()
            .matrix
            .to_dense();
        let h2 = build_effective_pair(p2.0, p2.1, &spec, &params, Dispersion::CosineOfSum)
            .unwrap()
            .matrix
            .to_dense();
        // H = H₁ ⊗ 1 + 1 ⊗ H₂
        let m = par.operator.matrix.to_dense();
        for r in 0..16 {
            for c in 0..16 {
                let mut want = C64::new(0.0, 0.0);
                if r % 4 == c % 4 {
                    want += h1[(r / 4, c / 4)];
                }
                if r / 4 == c / 4 {
                    want += h2[(r % 4, c % 4)];
                }
                assert!((m[(r, c)] - want).norm() < 1e-15);
            }
        }
        let e = build_effective_parallel(
            &[p1, (p1.0, p2.0)],
            &spec,
            &params,
            Dispersion::CosineOfSum,
            20.0,
        )
        .unwrap_err();
        assert!(matches!(e, Error::InvalidArgument(_)));
    }
}
