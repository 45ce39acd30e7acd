//! The full (non-eliminated) Hamiltonian in the interaction picture, its
//! static rotating-frame form, and the lab frame.

use alloc::format;
use alloc::vec::Vec;

use super::{check_params, SiteParams, TermBuilder, TimeDependentOperator};
use crate::hilbert::{hop, AtomLevel, Basis, BasisState, OperatorMatrix, PhotonRepr};
use crate::lattice::hopping_matrix;
use crate::linalg::SparseMatrix;
use crate::math::{cis, sqrt};
use crate::{Error, LatticeSpec, Result, StateVector, C64};

fn check_basis(spec: &LatticeSpec, basis: &Basis) -> Result<()> {
    let n = spec.num_sites();
    let three_level = basis.levels() == [AtomLevel::G, AtomLevel::F, AtomLevel::E];
    if basis.n_sites() != n
        || basis.n_modes() != n
        || basis.repr() != PhotonRepr::Local
        || !three_level
    {
        return Err(Error::InvalidArgument(format!(
            "basis ({} sites, {} modes) does not match the {}x{} lattice with local three-level sites",
            basis.n_sites(),
            basis.n_modes(),
            spec.n(),
            spec.n()
        )));
    }
    Ok(())
}

/// Emits the hopping term `Σ h[s,t] a†_s a_t` as static elements.
fn push_hopping(spec: &LatticeSpec, basis: &Basis, tb: &mut TermBuilder) {
    let h = hopping_matrix(spec);
    let n = spec.num_sites();
    let cap = basis.sector().photon_cap;
    for (col, s) in basis.states().iter().enumerate() {
        for from in 0..n {
            if s.photons[from] == 0 {
                continue;
            }
            for to in 0..n {
                let amp = h[(to, from)];
                if amp == C64::new(0.0, 0.0) {
                    continue;
                }
                if let Some((t, a)) = hop(s, from, to, cap) { match basis.index_of(&t) {
                    Some(row) => tb.push(0.0, row, col, amp * a),
                    None => tb.dropped += 1,
                } }
            }
        }
    }
}

/// Emits atom–cavity and drive terms; `freq_cav`/`freq_drive` give the
/// oscillation frequency attached to `a|e⟩⟨g|` and `|e⟩⟨f|` on each site
/// (their adjoints get the negated frequency).
fn push_atom_terms(
    params: &[SiteParams],
    basis: &Basis,
    tb: &mut TermBuilder,
    freq_cav: impl Fn(usize) -> f64,
    freq_drive: impl Fn(usize) -> f64,
) {
    let cap = basis.sector().photon_cap;
    let emit = |tb: &mut TermBuilder, f: f64, target: BasisState, col: usize, amp: f64| match basis
        .index_of(&target)
    {
        Some(row) => tb.push(f, row, col, C64::new(amp, 0.0)),
        None => tb.dropped += 1,
    };
    for (col, s) in basis.states().iter().enumerate() {
        for (x, p) in params.iter().enumerate() {
            let n = s.photons[x];
            match s.atoms[x] {
                AtomLevel::G if p.g != 0.0 && n > 0 => {
                    let mut t = s.clone();
                    t.atoms[x] = AtomLevel::E;
                    t.photons[x] -= 1;
                    emit(tb, freq_cav(x), t, col, p.g * sqrt(n as f64));
                }
                AtomLevel::E => {
                    if p.g != 0.0 {
                        if n < cap {
                            let mut t = s.clone();
                            t.atoms[x] = AtomLevel::G;
                            t.photons[x] += 1;
                            emit(tb, -freq_cav(x), t, col, p.g * sqrt(n as f64 + 1.0));
                        } else {
                            tb.dropped += 1;
                        }
                    }
                    if p.is_driven() {
                        let mut t = s.clone();
                        t.atoms[x] = AtomLevel::F;
                        emit(tb, -freq_drive(x), t, col, p.omega_rabi);
                    }
                }
                AtomLevel::F if p.is_driven() => {
                    let mut t = s.clone();
                    t.atoms[x] = AtomLevel::E;
                    emit(tb, freq_drive(x), t, col, p.omega_rabi);
                }
                _ => {}
            }
        }
    }
}

/// Interaction-picture Hamiltonian
/// `H(t) = Σ_jk [g·a_jk|e⟩⟨g|·e^{iΔ₁t} + Ω|e⟩⟨f|·e^{iΔ₂t} + h.c.] + H_hop`
/// as a time-dependent operator on a local-photon three-level basis.
pub fn full_interaction_operator(
    spec: &LatticeSpec,
    params: &[SiteParams],
    basis: &Basis,
) -> Result<TimeDependentOperator> {
    check_params(spec, params)?;
    check_basis(spec, basis)?;
    let mut tb = TermBuilder::new(basis.dim());
    push_atom_terms(
        params,
        basis,
        &mut tb,
        |x| params[x].delta1,
        |x| params[x].delta2,
    );
    push_hopping(spec, basis, &mut tb);
    Ok(tb.build())
}

/// The interaction-picture Hamiltonian evaluated at time `t`.
pub fn build_full_interaction(
    t: f64,
    spec: &LatticeSpec,
    params: &[SiteParams],
    basis: &Basis,
) -> Result<OperatorMatrix> {
    let op = full_interaction_operator(spec, params, basis)?;
    Ok(OperatorMatrix {
        matrix: op.at(t),
        hermitian: true,
        dropped: op.dropped(),
    })
}

/// Static form of the interaction-picture Hamiltonian.
///
/// With `ψ_I(t) = e^{−iKt}·ψ_R(t)` and the diagonal gauge `K` assigning
/// `−Δ₁` to `|e⟩`, `Δ₂ − Δ₁` to `|f⟩` on each site and zero to photons,
/// `H_R = e^{iKt}H(t)e^{−iKt} − K` is time independent.
#[derive(Debug, Clone)]
pub struct RotatingFrame {
    pub hamiltonian: SparseMatrix,
    /// Diagonal of `K`, one entry per basis state.
    pub gauge: Vec<f64>,
}

impl RotatingFrame {
    /// Maps a rotating-frame state at time `t` to the interaction picture.
    pub fn to_interaction(&self, t: f64, state: &StateVector) -> StateVector {
        let amps = state
            .amplitudes()
            .iter()
            .zip(&self.gauge)
            .map(|(a, k)| a * cis(-k * t))
            .collect();
        StateVector::from_raw(amps, state.basis_id())
    }

    pub fn to_rotating(&self, t: f64, state: &StateVector) -> StateVector {
        let amps = state
            .amplitudes()
            .iter()
            .zip(&self.gauge)
            .map(|(a, k)| a * cis(k * t))
            .collect();
        StateVector::from_raw(amps, state.basis_id())
    }
}

pub fn rotating_frame(
    spec: &LatticeSpec,
    params: &[SiteParams],
    basis: &Basis,
) -> Result<RotatingFrame> {
    check_params(spec, params)?;
    check_basis(spec, basis)?;
    let gauge: Vec<f64> = basis
        .states()
        .iter()
        .map(|s| {
            s.atoms
                .iter()
                .zip(params)
                .map(|(a, p)| match a {
                    AtomLevel::G => 0.0,
                    AtomLevel::F => p.delta2 - p.delta1,
                    AtomLevel::E => -p.delta1,
                })
                .sum()
        })
        .collect();
    let mut tb = TermBuilder::new(basis.dim());
    push_atom_terms(params, basis, &mut tb, |_| 0.0, |_| 0.0);
    push_hopping(spec, basis, &mut tb);
    for (i, k) in gauge.iter().enumerate() {
        tb.push(0.0, i, i, C64::new(-k, 0.0));
    }
    let op = tb.build();
    let hamiltonian = op.at(0.0);
    Ok(RotatingFrame { hamiltonian, gauge })
}

/// Lab-frame energies and field frequencies; `|g⟩` is the energy zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LabFrameParams {
    pub omega_f: f64,
    pub omega_e: f64,
    /// Cavity frequency per site.
    pub omega_c: Vec<f64>,
    /// Drive frequency per site.
    pub omega_l: Vec<f64>,
}

impl LabFrameParams {
    /// Derives cavity and laser frequencies from the detunings:
    /// `ω_c = ω_e − Δ₁`, `ω_l = ω_e − ω_f − Δ₂`.
    pub fn from_detunings(omega_f: f64, omega_e: f64, params: &[SiteParams]) -> Self {
        Self {
            omega_f,
            omega_e,
            omega_c: params.iter().map(|p| omega_e - p.delta1).collect(),
            omega_l: params
                .iter()
                .map(|p| omega_e - omega_f - p.delta2)
                .collect(),
        }
    }

    /// Checks `ω_e − ω_c = Δ₁` and (on driven sites) `ω_e − ω_f − ω_l = Δ₂`.
    pub fn validate(&self, params: &[SiteParams]) -> Result<()> {
        if self.omega_c.len() != params.len() || self.omega_l.len() != params.len() {
            return Err(Error::DimensionMismatch {
                expected: params.len(),
                found: self.omega_c.len(),
            });
        }
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        for (i, p) in params.iter().enumerate() {
            if !close(self.omega_e - self.omega_c[i], p.delta1) {
                return Err(Error::Precondition(format!(
                    "lab frame inconsistent at site {i}: ω_e − ω_c = {} but Δ₁ = {}",
                    self.omega_e - self.omega_c[i],
                    p.delta1
                )));
            }
            if p.is_driven() && !close(self.omega_e - self.omega_f - self.omega_l[i], p.delta2) {
                return Err(Error::Precondition(format!(
                    "lab frame inconsistent at site {i}: ω_e − ω_f − ω_l = {} but Δ₂ = {}",
                    self.omega_e - self.omega_f - self.omega_l[i],
                    p.delta2
                )));
            }
        }
        Ok(())
    }

    /// Diagonal of the free Hamiltonian `H₀ = Σ ω_f|f⟩⟨f| + ω_e|e⟩⟨e| + ω_c a†a`.
    pub fn free_energies(&self, basis: &Basis) -> Vec<f64> {
        basis
            .states()
            .iter()
            .map(|s| {
                let atoms: f64 = s
                    .atoms
                    .iter()
                    .map(|a| match a {
                        AtomLevel::G => 0.0,
                        AtomLevel::F => self.omega_f,
                        AtomLevel::E => self.omega_e,
                    })
                    .sum();
                let photons: f64 = s
                    .photons
                    .iter()
                    .zip(&self.omega_c)
                    .map(|(n, w)| *n as f64 * w)
                    .sum();
                atoms + photons
            })
            .collect()
    }

    /// `ψ_I = e^{iH₀t}·ψ_lab`
    pub fn to_interaction(&self, basis: &Basis, t: f64, state: &StateVector) -> StateVector {
        let e0 = self.free_energies(basis);
        let amps = state
            .amplitudes()
            .iter()
            .zip(&e0)
            .map(|(a, e)| a * cis(e * t))
            .collect();
        StateVector::from_raw(amps, state.basis_id())
    }
}

/// Lab-frame Hamiltonian
/// `H_f(t) = Σ ω_f|f⟩⟨f| + ω_e|e⟩⟨e| + ω_c a†a + [g·a|e⟩⟨g| + Ω|e⟩⟨f|·e^{−iω_l t} + h.c.] + H_hop`.
///
/// The photon term is the number operator. The interaction-picture form
/// follows from `e^{iH₀t}` exactly when all cavities share one frequency.
pub fn build_full_lab(
    spec: &LatticeSpec,
    params: &[SiteParams],
    lab: &LabFrameParams,
    basis: &Basis,
) -> Result<TimeDependentOperator> {
    check_params(spec, params)?;
    check_basis(spec, basis)?;
    lab.validate(params)?;
    let mut tb = TermBuilder::new(basis.dim());
    for (i, e) in lab.free_energies(basis).into_iter().enumerate() {
        tb.push(0.0, i, i, C64::new(e, 0.0));
    }
    push_atom_terms(params, basis, &mut tb, |_| 0.0, |x| -lab.omega_l[x]);
    push_hopping(spec, basis, &mut tb);
    Ok(tb.build())
}

/// Basis indices whose atom at `site` is in `level`.
pub fn level_indices(basis: &Basis, site: usize, level: AtomLevel) -> Vec<usize> {
    basis
        .states()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.atoms[site] == level)
        .map(|(i, _)| i)
        .collect()
}

/// Indices of basis states with at least one photon.
pub fn photon_indices(basis: &Basis) -> Vec<usize> {
    basis
        .states()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.photons.iter().any(|&n| n > 0))
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{enumerate_basis, excitation_number, SectorSpec};
    use crate::linalg::SparseBuilder;
    use crate::Dispersion;
    use alloc::vec;

    fn uniform(n: usize, p: SiteParams) -> Vec<SiteParams> {
        vec![p; n * n]
    }

    #[test]
    fn pure_hopping_when_uncoupled() {
        let spec = LatticeSpec::new(3, 0.7, Dispersion::SumOfCosines).unwrap();
        let basis = enumerate_basis(&spec, SectorSpec::exact(1, 1)).unwrap();
        let params = uniform(3, SiteParams::new(0.0, 0.0, 5.0, 4.0));
        let op = full_interaction_operator(&spec, &params, &basis).unwrap();
        assert!(op.is_static());
        let h = hopping_matrix(&spec);
        for (r, c, v) in op.at(1.3).iter() {
            let (sr, sc) = (basis.state(r), basis.state(c));
            let to = sr.photons.iter().position(|&n| n == 1).unwrap();
            let from = sc.photons.iter().position(|&n| n == 1).unwrap();
            assert_eq!(v, h[(to, from)]);
        }
        assert_eq!(op.at(0.0), op.at(10.0));
    }

    #[test]
    fn single_cavity_hopping_self_loop() {
        let spec = LatticeSpec::new(1, 1.5, Dispersion::SumOfCosines).unwrap();
        let basis = enumerate_basis(&spec, SectorSpec::exact(1, 1)).unwrap();
        let params = uniform(1, SiteParams::new(0.0, 0.0, 1.0, 1.0));
        let h = build_full_interaction(0.0, &spec, &params, &basis).unwrap();
        let photon = basis
            .index_of(&BasisState {
                atoms: vec![AtomLevel::G],
                photons: vec![1],
            })
            .unwrap();
        // Two wrapped bonds, each v(a a† + a† a) → 4v·a†a after normal ordering.
        assert!((h.matrix.get(photon, photon).re - 4.0 * 1.5).abs() < 1e-12);
        assert_eq!(h.matrix.nnz(), 1);
    }

    #[test]
    fn hermitian_at_sampled_times() {
        let spec = LatticeSpec::new(2, 1.1, Dispersion::CosineOfSum).unwrap();
        let basis = enumerate_basis(&spec, SectorSpec::exact(2, 2)).unwrap();
        let mut params = uniform(2, SiteParams::new(1.0, 0.0, 15.0, 15.2));
        params[0].omega_rabi = 1.0;
        params[3].omega_rabi = 0.8;
        params[3].delta2 = 14.1;
        for t in [0.0, 0.37, 10.0] {
            let h = build_full_interaction(t, &spec, &params, &basis).unwrap();
            assert!(h.hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn conserves_excitation_on_unsaturated_basis() {
        let spec = LatticeSpec::new(2, 1.0, Dispersion::SumOfCosines).unwrap();
        let basis = enumerate_basis(&spec, SectorSpec::unrestricted(2)).unwrap();
        let params = uniform(2, SiteParams::new(0.9, 0.6, 3.0, 2.5));
        let h = build_full_interaction(0.3, &spec, &params, &basis).unwrap();
        let mut worst = 0.0f64;
        for (r, c, v) in h.matrix.iter() {
            let dn =
                excitation_number(basis.state(r)) as f64 - excitation_number(basis.state(c)) as f64;
            worst = worst.max((v * dn).norm());
        }
        assert!(worst < 1e-12);
    }

    #[test]
    fn sector_one_assembly_drops_nothing() {
        let spec = LatticeSpec::new(4, 1.5, Dispersion::CosineOfSum).unwrap();
        let basis = enumerate_basis(&spec, SectorSpec::exact(1, 1)).unwrap();
        let params = uniform(4, SiteParams::new(1.0, 1.0, 15.0, 15.2));
        let op = full_interaction_operator(&spec, &params, &basis).unwrap();
        assert_eq!(op.dropped(), 0);
    }

    #[test]
    fn rejects_mismatched_basis() {
        let spec = LatticeSpec::new(2, 1.0, Dispersion::CosineOfSum).unwrap();
        let other = LatticeSpec::new(3, 1.0, Dispersion::CosineOfSum).unwrap();
        let basis = enumerate_basis(&other, SectorSpec::exact(1, 1)).unwrap();
        let params = uniform(2, SiteParams::new(1.0, 1.0, 1.0, 1.0));
        assert!(full_interaction_operator(&spec, &params, &basis).is_err());
        let qubits = Basis::qubits(4, Some(1)).unwrap();
        assert!(full_interaction_operator(&spec, &params, &qubits).is_err());
    }

    #[test]
    fn lab_frame_free_spectrum() {
        let spec = LatticeSpec::new(2, 0.0, Dispersion::CosineOfSum).unwrap();
        let basis = enumerate_basis(&spec, SectorSpec::exact(2, 1)).unwrap();
        let params = uniform(2, SiteParams::new(0.0, 0.0, 3.0, 2.0));
        let lab = LabFrameParams::from_detunings(1.0, 7.0, &params);
        let op = build_full_lab(&spec, &params, &lab, &basis).unwrap();
        assert!(op.is_static());
        let h = op.at(0.0);
        for (i, s) in basis.states().iter().enumerate() {
            let mut e = 0.0;
            for a in &s.atoms {
                e += match a {
                    AtomLevel::G => 0.0,
                    AtomLevel::F => 1.0,
                    AtomLevel::E => 7.0,
                };
            }
            e += s.photons.iter().map(|&n| n as f64 * 4.0).sum::<f64>();
            assert!((h.get(i, i).re - e).abs() < 1e-12);
        }
        assert_eq!(h.iter().filter(|(r, c, _)| r != c).count(), 0);
    }

    #[test]
    fn lab_frame_hermitian_and_validated() {
        let spec = LatticeSpec::new(2, 1.0, Dispersion::CosineOfSum).unwrap();
        let basis = enumerate_basis(&spec, SectorSpec::exact(1, 1)).unwrap();
        let params = uniform(2, SiteParams::new(1.0, 0.5, 3.0, 2.0));
        let lab = LabFrameParams::from_detunings(1.0, 7.0, &params);
        let op = build_full_lab(&spec, &params, &lab, &basis).unwrap();
        for t in [0.0, 0.37, 10.0] {
            assert!(op.at(t).hermiticity_error() < 1e-12);
        }
        let mut bad = lab.clone();
        bad.omega_l[1] += 1e-6;
        assert!(matches!(
            build_full_lab(&spec, &params, &bad, &basis),
            Err(Error::Precondition(_))
        ));
        let mut bad = lab;
        bad.omega_c[0] -= 0.5;
        assert!(bad.validate(&params).is_err());
    }

    #[test]
    fn rotating_frame_reproduces_time_dependent_form() {
        // H(t) = e^{-iKt}(H_R + K)e^{iKt}
        let spec = LatticeSpec::new(2, 0.8, Dispersion::CosineOfSum).unwrap();
        let basis = enumerate_basis(&spec, SectorSpec::exact(1, 1)).unwrap();
        let mut params = uniform(2, SiteParams::new(1.0, 0.0, 6.0, 5.0));
        params[0].omega_rabi = 0.7;
        params[3] = SiteParams::new(0.9, 0.4, 5.5, 4.1);
        let frame = rotating_frame(&spec, &params, &basis).unwrap();
        let op = full_interaction_operator(&spec, &params, &basis).unwrap();
        let t = 0.83;
        let ht = op.at(t);
        let k = &frame.gauge;
        let mut b = SparseBuilder::new(basis.dim());
        for (r, c, v) in frame.hamiltonian.iter() {
            let mut val = v;
            if r == c {
                val += C64::new(k[r], 0.0);
            }
            b.push(r, c, val * cis(-(k[r] - k[c]) * t));
        }
        let rebuilt = b.build();
        assert!(rebuilt.max_abs_diff(&ht) < 1e-12);
    }
}
