//! Product bases over three-level atoms and truncated boson modes, restricted
//! to a fixed excitation sector, together with state vectors and the ladder
//! and transition operators acting on them.
//!
//! Excitation weight counts `|f⟩` and `|e⟩` as one quantum each and every
//! photon as one quantum. The interaction Hamiltonian conserves it, so a
//! sector-restricted basis is exact as long as the photon cap is not hit.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, DenseMatrix, SparseBuilder, SparseMatrix};
use crate::math::sqrt;
use crate::{Error, Result, C64};

/// Hard ceiling on enumerated basis size.
pub const MAX_BASIS_DIM: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomLevel {
    G,
    F,
    E,
}

impl AtomLevel {
    pub fn weight(self) -> u32 {
        match self {
            AtomLevel::G => 0,
            AtomLevel::F | AtomLevel::E => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            AtomLevel::G => 'g',
            AtomLevel::F => 'f',
            AtomLevel::E => 'e',
        }
    }
}

/// Whether photon occupations refer to local cavities `a_jk` or to momentum
/// modes `c_mn`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhotonRepr {
    Local,
    Momentum,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState {
    pub atoms: Vec<AtomLevel>,
    pub photons: Vec<u32>,
}

impl BasisState {
    /// All atoms in `|g⟩`, photon vacuum.
    pub fn ground(n_sites: usize, n_modes: usize) -> Self {
        Self {
            atoms: vec![AtomLevel::G; n_sites],
            photons: vec![0; n_modes],
        }
    }
}

/// Total excitation: atomic weights plus photon count.
pub fn excitation_number(b: &BasisState) -> u32 {
    b.atoms.iter().map(|a| a.weight()).sum::<u32>() + b.photons.iter().sum::<u32>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SectorSpec {
    /// `None` keeps every excitation number up to the photon cap.
    pub total_excitation: Option<u32>,
    pub photon_cap: u32,
}

impl SectorSpec {
    pub fn exact(total_excitation: u32, photon_cap: u32) -> Self {
        Self {
            total_excitation: Some(total_excitation),
            photon_cap,
        }
    }

    pub fn unrestricted(photon_cap: u32) -> Self {
        Self {
            total_excitation: None,
            photon_cap,
        }
    }
}

impl Default for SectorSpec {
    fn default() -> Self {
        Self::exact(1, 1)
    }
}

/// An ordered basis: atom configurations lexicographic (`g < f < e`), then
/// photon configurations lexicographic.
#[derive(Debug, Clone)]
pub struct Basis {
    n_sites: usize,
    n_modes: usize,
    levels: Vec<AtomLevel>,
    sector: SectorSpec,
    repr: PhotonRepr,
    states: Vec<BasisState>,
    lookup: BTreeMap<BasisState, usize>,
    id: u64,
}

/// Three-level atoms on every site and one local cavity mode per site.
pub fn enumerate_basis(spec: &crate::LatticeSpec, sector: SectorSpec) -> Result<Basis> {
    let n = spec.num_sites();
    Basis::new(
        n,
        n,
        &[AtomLevel::G, AtomLevel::F, AtomLevel::E],
        sector,
        PhotonRepr::Local,
    )
}

impl Basis {
    pub fn new(
        n_sites: usize,
        n_modes: usize,
        levels: &[AtomLevel],
        sector: SectorSpec,
        repr: PhotonRepr,
    ) -> Result<Self> {
        let mut levels = levels.to_vec();
        levels.sort();
        levels.dedup();
        if levels.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one atomic level is required".into(),
            ));
        }
        let dim = count_states(n_sites, &levels, n_modes, sector);
        if dim > MAX_BASIS_DIM as u128 {
            return Err(Error::BasisTooLarge {
                dimension: dim,
                limit: MAX_BASIS_DIM,
            });
        }

        let mut states = Vec::with_capacity(dim as usize);
        let mut atoms = Vec::with_capacity(n_sites);
        let mut photons = Vec::with_capacity(n_modes);
        let budget = sector.total_excitation;
        gen_atoms(
            &levels,
            n_sites,
            budget.unwrap_or(u32::MAX),
            &mut atoms,
            &mut |a, w| {
                let photon_budget = budget.map(|b| b - w);
                gen_photons(
                    n_modes,
                    sector.photon_cap,
                    photon_budget,
                    &mut photons,
                    &mut |p| {
                        states.push(BasisState {
                            atoms: a.to_vec(),
                            photons: p.to_vec(),
                        });
                    },
                );
            },
        );

        let lookup = states
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        let id = fingerprint(n_sites, n_modes, repr, &states);
        Ok(Self {
            n_sites,
            n_modes,
            levels,
            sector,
            repr,
            states,
            lookup,
            id,
        })
    }

    /// `{g, f}` qubits on `n_sites` atoms, no photons.
    pub fn qubits(n_sites: usize, total_excitation: Option<u32>) -> Result<Self> {
        let sector = SectorSpec {
            total_excitation,
            photon_cap: 0,
        };
        Self::new(
            n_sites,
            0,
            &[AtomLevel::G, AtomLevel::F],
            sector,
            PhotonRepr::Local,
        )
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn levels(&self) -> &[AtomLevel] {
        &self.levels
    }

    pub fn sector(&self) -> SectorSpec {
        self.sector
    }

    pub fn repr(&self) -> PhotonRepr {
        self.repr
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &BasisState {
        &self.states[i]
    }

    pub fn index_of(&self, s: &BasisState) -> Option<usize> {
        self.lookup.get(s).copied()
    }

    /// Builds the matrix of an operator given by its action on each basis
    /// state. Images that are not in the basis are dropped and counted.
    pub fn operator_from_action<F>(&self, mut action: F) -> (SparseMatrix, usize)
    where
        F: FnMut(&BasisState, &mut dyn FnMut(BasisState, C64)),
    {
        let mut b = SparseBuilder::new(self.dim());
        let mut dropped = 0;
        for (col, s) in self.states.iter().enumerate() {
            action(s, &mut |target, amp| match self.lookup.get(&target) {
                Some(&row) => b.push(row, col, amp),
                None => {
                    if amp != C64::new(0.0, 0.0) {
                        dropped += 1;
                    }
                }
            });
        }
        (b.build(), dropped)
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites {
            return Err(Error::InvalidArgument(format!(
                "site index {site} out of range for {} sites",
                self.n_sites
            )));
        }
        Ok(())
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            return Err(Error::InvalidArgument(format!(
                "mode index {mode} out of range for {} modes",
                self.n_modes
            )));
        }
        Ok(())
    }
}

fn fingerprint(n_sites: usize, n_modes: usize, repr: PhotonRepr, states: &[BasisState]) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: u64| {
        for byte in x.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    feed(n_sites as u64);
    feed(n_modes as u64);
    feed(matches!(repr, PhotonRepr::Momentum) as u64);
    for s in states {
        for a in &s.atoms {
            feed(*a as u64);
        }
        for p in &s.photons {
            feed(*p as u64 + 16);
        }
    }
    h
}

fn gen_atoms(
    levels: &[AtomLevel],
    remaining_sites: usize,
    budget: u32,
    cur: &mut Vec<AtomLevel>,
    emit: &mut dyn FnMut(&[AtomLevel], u32),
) {
    let used: u32 = cur.iter().map(|a| a.weight()).sum();
    if remaining_sites == 0 {
        emit(cur, used);
        return;
    }
    for &l in levels {
        if used + l.weight() > budget {
            continue;
        }
        cur.push(l);
        gen_atoms(levels, remaining_sites - 1, budget, cur, emit);
        cur.pop();
    }
}

fn gen_photons(
    remaining_modes: usize,
    cap: u32,
    budget: Option<u32>,
    cur: &mut Vec<u32>,
    emit: &mut dyn FnMut(&[u32]),
) {
    if remaining_modes == 0 {
        if budget.is_none_or(|b| b == 0) {
            emit(cur);
        }
        return;
    }
    let max = budget.map_or(cap, |b| b.min(cap));
    for n in 0..=max {
        // A fixed budget can only be spent if the remaining modes can absorb it.
        if let Some(b) = budget {
            if (b - n) as u64 > cap as u64 * (remaining_modes as u64 - 1) {
                continue;
            }
        }
        cur.push(n);
        gen_photons(remaining_modes - 1, cap, budget.map(|b| b - n), cur, emit);
        cur.pop();
    }
}

/// Exact basis dimension via generating-function convolution.
fn count_states(n_sites: usize, levels: &[AtomLevel], n_modes: usize, sector: SectorSpec) -> u128 {
    let max_w = match sector.total_excitation {
        Some(t) => t as usize,
        None => {
            let atoms = (levels.len() as u128).saturating_pow(n_sites as u32);
            let photons = (sector.photon_cap as u128 + 1).saturating_pow(n_modes as u32);
            return atoms.saturating_mul(photons);
        }
    };
    let mut poly = vec![0u128; max_w + 1];
    poly[0] = 1;
    let mut site_poly = vec![0u128; max_w + 1];
    for l in levels {
        if (l.weight() as usize) <= max_w {
            site_poly[l.weight() as usize] += 1;
        }
    }
    let mode_poly: Vec<u128> = (0..=max_w)
        .map(|w| if w as u32 <= sector.photon_cap { 1 } else { 0 })
        .collect();
    let convolve = |a: &[u128], b: &[u128]| -> Vec<u128> {
        let mut out = vec![0u128; max_w + 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate().take(max_w + 1 - i) {
                out[i + j] = out[i + j].saturating_add(x.saturating_mul(y));
            }
        }
        out
    };
    for _ in 0..n_sites {
        poly = convolve(&poly, &site_poly);
    }
    for _ in 0..n_modes {
        poly = convolve(&poly, &mode_poly);
    }
    poly[max_w]
}

/// A sparse operator together with bookkeeping about its construction.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub matrix: SparseMatrix,
    /// Set when the operator is Hermitian by construction.
    pub hermitian: bool,
    /// Number of nonzero images that fell outside the basis.
    pub dropped: usize,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.matrix.hermiticity_error()
    }
}

/// `|to⟩⟨from|` on one site. `from == to` yields the level projector.
pub fn build_transition_operator(
    site: usize,
    from: AtomLevel,
    to: AtomLevel,
    basis: &Basis,
) -> Result<OperatorMatrix> {
    basis.check_site(site)?;
    let (matrix, dropped) = basis.operator_from_action(|s, emit| {
        if s.atoms[site] == from {
            let mut t = s.clone();
            t.atoms[site] = to;
            emit(t, C64::new(1.0, 0.0));
        }
    });
    Ok(OperatorMatrix {
        matrix,
        hermitian: from == to,
        dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BosonOp {
    Annihilate,
    Create,
    Number,
}

/// Ladder or number operator of one boson mode. Creation above the photon
/// cap maps to zero.
pub fn build_boson_operator(mode: usize, kind: BosonOp, basis: &Basis) -> Result<OperatorMatrix> {
    basis.check_mode(mode)?;
    let cap = basis.sector().photon_cap;
    let (matrix, dropped) = basis.operator_from_action(|s, emit| {
        let n = s.photons[mode];
        match kind {
            BosonOp::Annihilate if n > 0 => {
                let mut t = s.clone();
                t.photons[mode] -= 1;
                emit(t, C64::new(sqrt(n as f64), 0.0));
            }
            BosonOp::Create if n < cap => {
                let mut t = s.clone();
                t.photons[mode] += 1;
                emit(t, C64::new(sqrt(n as f64 + 1.0), 0.0));
            }
            BosonOp::Number if n > 0 => emit(s.clone(), C64::new(n as f64, 0.0)),
            _ => {}
        }
    });
    Ok(OperatorMatrix {
        matrix,
        hermitian: kind == BosonOp::Number,
        dropped,
    })
}

/// `a†_to a_from`
pub fn build_hop_operator(from: usize, to: usize, basis: &Basis) -> Result<OperatorMatrix> {
    basis.check_mode(from)?;
    basis.check_mode(to)?;
    let cap = basis.sector().photon_cap;
    let (matrix, dropped) = basis.operator_from_action(|s, emit| {
        if let Some((t, amp)) = hop(s, from, to, cap) {
            emit(t, C64::new(amp, 0.0));
        }
    });
    Ok(OperatorMatrix {
        matrix,
        hermitian: from == to,
        dropped,
    })
}

pub(crate) fn hop(s: &BasisState, from: usize, to: usize, cap: u32) -> Option<(BasisState, f64)> {
    let n_from = s.photons[from];
    if n_from == 0 {
        return None;
    }
    if from == to {
        return Some((s.clone(), n_from as f64));
    }
    let n_to = s.photons[to];
    if n_to >= cap {
        return None;
    }
    let mut t = s.clone();
    t.photons[from] -= 1;
    t.photons[to] += 1;
    Some((t, sqrt(n_from as f64) * sqrt(n_to as f64 + 1.0)))
}

/// Diagonal operator of total excitation number.
pub fn excitation_operator(basis: &Basis) -> SparseMatrix {
    let diag: Vec<f64> = basis
        .states()
        .iter()
        .map(|s| excitation_number(s) as f64)
        .collect();
    SparseMatrix::from_diagonal(&diag)
}

/// Complex amplitudes over an ordered [`Basis`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    basis_id: u64,
}

impl StateVector {
    pub fn from_amplitudes(basis: &Basis, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self {
            amplitudes,
            basis_id: basis.id(),
        })
    }

    pub(crate) fn from_raw(amplitudes: Vec<C64>, basis_id: u64) -> Self {
        Self {
            amplitudes,
            basis_id,
        }
    }

    pub fn basis_state(basis: &Basis, index: usize) -> Result<Self> {
        if index >= basis.dim() {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self {
            amplitudes: amps,
            basis_id: basis.id(),
        })
    }

    pub fn from_configuration(basis: &Basis, state: &BasisState) -> Result<Self> {
        let idx = basis.index_of(state).ok_or_else(|| {
            Error::OutsideSector(format!(
                "configuration {} is not in the basis",
                describe(state)
            ))
        })?;
        Self::basis_state(basis, idx)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn basis_id(&self) -> u64 {
        self.basis_id
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
    }

    /// `⟨self|other⟩`
    pub fn overlap(&self, other: &StateVector) -> Result<C64> {
        if self.basis_id != other.basis_id || self.dim() != other.dim() {
            return Err(Error::BasisMismatch);
        }
        Ok(linalg::inner(&self.amplitudes, &other.amplitudes))
    }

    pub fn check_basis(&self, basis: &Basis) -> Result<()> {
        if self.basis_id != basis.id() || self.dim() != basis.dim() {
            return Err(Error::BasisMismatch);
        }
        Ok(())
    }
}

/// Short label such as `f g g g | 0 0 0 0`.
pub fn describe(s: &BasisState) -> alloc::string::String {
    let mut out = alloc::string::String::new();
    for (i, a) in s.atoms.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push(a.symbol());
    }
    if !s.photons.is_empty() {
        out.push_str(" |");
        for p in &s.photons {
            out.push_str(&format!(" {p}"));
        }
    }
    out
}

/// Momentum-mode occupations `⟨c†_μ c_μ⟩` of a local-photon state, using the
/// transform `a_s = Σ_μ U[s, μ]·c_μ`.
pub fn mode_populations(state: &StateVector, basis: &Basis, u: &DenseMatrix) -> Result<Vec<f64>> {
    state.check_basis(basis)?;
    let m = basis.n_modes();
    if u.rows() != m || u.cols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: u.rows(),
        });
    }
    // One-body density ρ[s][t] = ⟨a†_s a_t⟩.
    let cap = basis.sector().photon_cap;
    let psi = state.amplitudes();
    let mut rho = DenseMatrix::zeros(m, m);
    for (col, s) in basis.states().iter().enumerate() {
        if psi[col] == C64::new(0.0, 0.0) {
            continue;
        }
        for t in 0..m {
            for sidx in 0..m {
                if let Some((target, amp)) = hop(s, t, sidx, cap) {
                    if let Some(row) = basis.index_of(&target) {
                        rho[(sidx, t)] += psi[row].conj() * psi[col] * amp;
                    }
                }
            }
        }
    }
    let mut pops = vec![0.0; m];
    for (mu, pop) in pops.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for s in 0..m {
            for t in 0..m {
                acc += u[(s, mu)].conj() * u[(t, mu)] * rho[(s, t)];
            }
        }
        *pop = acc.re;
    }
    Ok(pops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Dispersion, LatticeSpec};

    fn lattice(n: usize) -> LatticeSpec {
        LatticeSpec::new(n, 1.0, Dispersion::CosineOfSum).unwrap()
    }

    #[test]
    fn sector_dimensions() {
        assert_eq!(
            enumerate_basis(&lattice(4), SectorSpec::exact(1, 1))
                .unwrap()
                .dim(),
            48
        );
        assert_eq!(
            enumerate_basis(&lattice(2), SectorSpec::exact(0, 1))
                .unwrap()
                .dim(),
            1
        );
        assert_eq!(
            enumerate_basis(&lattice(2), SectorSpec::exact(1, 1))
                .unwrap()
                .dim(),
            12
        );
        for n in 2..=4 {
            let b = enumerate_basis(&lattice(n), SectorSpec::exact(1, 1)).unwrap();
            assert_eq!(b.dim(), 3 * n * n);
        }
    }

    #[test]
    fn dimension_matches_brute_force_count() {
        // Count all configurations by nested enumeration, independent of the generator.
        let n_sites = 2;
        let n_modes = 2;
        for cap in 0..=2u32 {
            for total in 0..=4u32 {
                let mut count = 0;
                for a in 0..9u32 {
                    let atoms = [a % 3, a / 3];
                    let w: u32 = atoms.iter().map(|&x| (x > 0) as u32).sum();
                    for p0 in 0..=cap {
                        for p1 in 0..=cap {
                            if w + p0 + p1 == total {
                                count += 1;
                            }
                        }
                    }
                }
                let b = Basis::new(
                    n_sites,
                    n_modes,
                    &[AtomLevel::G, AtomLevel::F, AtomLevel::E],
                    SectorSpec::exact(total, cap),
                    PhotonRepr::Local,
                )
                .unwrap();
                assert_eq!(b.dim(), count, "cap={cap} total={total}");
            }
        }
    }

    #[test]
    fn ordering_is_lexicographic_and_deterministic() {
        let b1 = enumerate_basis(&lattice(2), SectorSpec::unrestricted(1)).unwrap();
        let b2 = enumerate_basis(&lattice(2), SectorSpec::unrestricted(1)).unwrap();
        assert_eq!(b1.states(), b2.states());
        assert_eq!(b1.id(), b2.id());
        assert!(b1.states().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b1.dim(), 81 * 16);
    }

    #[test]
    fn sector_constraint_holds() {
        let b = enumerate_basis(&lattice(2), SectorSpec::exact(2, 2)).unwrap();
        assert!(b.states().iter().all(|s| excitation_number(s) == 2));
    }

    #[test]
    fn excitation_number_examples() {
        let mut s = BasisState::ground(4, 4);
        assert_eq!(excitation_number(&s), 0);
        s.atoms[1] = AtomLevel::F;
        assert_eq!(excitation_number(&s), 1);
        s.atoms[1] = AtomLevel::E;
        s.photons[3] = 1;
        assert_eq!(excitation_number(&s), 2);
    }

    #[test]
    fn oversized_basis_is_rejected() {
        let err = enumerate_basis(&lattice(4), SectorSpec::unrestricted(1)).unwrap_err();
        assert!(matches!(err, Error::BasisTooLarge { .. }));
    }

    #[test]
    fn raising_ground_state() {
        let b = enumerate_basis(&lattice(2), SectorSpec::unrestricted(1)).unwrap();
        let op = build_transition_operator(2, AtomLevel::G, AtomLevel::F, &b).unwrap();
        let ground = StateVector::from_configuration(&b, &BasisState::ground(4, 4)).unwrap();
        let mut out = vec![C64::new(0.0, 0.0); b.dim()];
        op.matrix.matvec(ground.amplitudes(), &mut out);
        let mut target = BasisState::ground(4, 4);
        target.atoms[2] = AtomLevel::F;
        let idx = b.index_of(&target).unwrap();
        assert_eq!(out[idx], C64::new(1.0, 0.0));
        assert!((linalg::norm_sqr(&out) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transition_adjoint_relation() {
        let b = enumerate_basis(&lattice(2), SectorSpec::exact(1, 1)).unwrap();
        let eg = build_transition_operator(0, AtomLevel::G, AtomLevel::E, &b).unwrap();
        let ge = build_transition_operator(0, AtomLevel::E, AtomLevel::G, &b).unwrap();
        assert_eq!(eg.matrix.adjoint(), ge.matrix);
    }

    #[test]
    fn raising_lowering_is_projector_on_f() {
        let b = enumerate_basis(&lattice(2), SectorSpec::exact(1, 1)).unwrap();
        let up = build_transition_operator(1, AtomLevel::G, AtomLevel::F, &b).unwrap();
        let down = build_transition_operator(1, AtomLevel::F, AtomLevel::G, &b).unwrap();
        let proj = build_transition_operator(1, AtomLevel::F, AtomLevel::F, &b).unwrap();
        assert!(proj.hermitian);
        // S± change the excitation weight, so inside a fixed sector every image drops.
        assert!(down.dropped > 0 && up.dropped > 0);
        let bu = enumerate_basis(&lattice(2), SectorSpec::unrestricted(1)).unwrap();
        let up = build_transition_operator(1, AtomLevel::G, AtomLevel::F, &bu).unwrap();
        let down = build_transition_operator(1, AtomLevel::F, AtomLevel::G, &bu).unwrap();
        let proj = build_transition_operator(1, AtomLevel::F, AtomLevel::F, &bu).unwrap();
        let prod = up.matrix.matmul(&down.matrix).unwrap();
        assert_eq!(prod.max_abs_diff(&proj.matrix), 0.0);
        let mut s = BasisState::ground(4, 4);
        s.atoms[1] = AtomLevel::F;
        let i = bu.index_of(&s).unwrap();
        assert_eq!(prod.get(i, i), C64::new(1.0, 0.0));
    }

    #[test]
    fn boson_ladder_relations() {
        let b = enumerate_basis(&lattice(2), SectorSpec::unrestricted(2)).unwrap();
        let a = build_boson_operator(0, BosonOp::Annihilate, &b).unwrap();
        let ad = build_boson_operator(0, BosonOp::Create, &b).unwrap();
        let num = build_boson_operator(0, BosonOp::Number, &b).unwrap();
        assert_eq!(a.matrix.adjoint().max_abs_diff(&ad.matrix), 0.0);
        let ground = StateVector::from_configuration(&b, &BasisState::ground(4, 4)).unwrap();
        let mut out = vec![C64::new(0.0, 0.0); b.dim()];
        num.matrix.matvec(ground.amplitudes(), &mut out);
        assert_eq!(linalg::norm_sqr(&out), 0.0);
        let aad = a.matrix.matmul(&ad.matrix).unwrap();
        aad.matvec(ground.amplitudes(), &mut out);
        assert!(ground
            .amplitudes()
            .iter()
            .zip(&out)
            .all(|(x, y)| (x - y).norm() < 1e-15));
        // a†a = n below the cap
        let ada = ad.matrix.matmul(&a.matrix).unwrap();
        assert!(ada.max_abs_diff(&num.matrix) < 1e-12);
        // creation at the cap is truncated
        let mut top = BasisState::ground(4, 4);
        top.photons[0] = 2;
        let i = b.index_of(&top).unwrap();
        let col: Vec<_> = ad.matrix.iter().filter(|e| e.1 == i).collect();
        assert!(col.is_empty());
    }

    #[test]
    fn operator_nonzero_counts_n2() {
        // Unrestricted cap-1 basis at N=2: 3⁴ atom configurations × 2⁴ photon configurations.
        let b = enumerate_basis(&lattice(2), SectorSpec::unrestricted(1)).unwrap();
        // |f⟩⟨g| on one site: all states with that atom in g = 27·16.
        let op = build_transition_operator(0, AtomLevel::G, AtomLevel::F, &b).unwrap();
        assert_eq!(op.matrix.nnz(), 27 * 16);
        // a on one mode: states with one photon in that mode = 81·8.
        let a = build_boson_operator(0, BosonOp::Annihilate, &b).unwrap();
        assert_eq!(a.matrix.nnz(), 81 * 8);
        // a†_1 a_0: photon in 0 and none in 1 = 81·4.
        let h = build_hop_operator(0, 1, &b).unwrap();
        assert_eq!(h.matrix.nnz(), 81 * 4);
    }

    #[test]
    fn bad_indices_are_errors() {
        let b = enumerate_basis(&lattice(2), SectorSpec::exact(1, 1)).unwrap();
        assert!(build_boson_operator(4, BosonOp::Number, &b).is_err());
        assert!(build_transition_operator(9, AtomLevel::G, AtomLevel::F, &b).is_err());
    }

    #[test]
    fn overlap_rejects_foreign_basis() {
        let b1 = enumerate_basis(&lattice(2), SectorSpec::exact(1, 1)).unwrap();
        let b2 = enumerate_basis(&lattice(2), SectorSpec::exact(0, 1)).unwrap();
        let s1 = StateVector::basis_state(&b1, 0).unwrap();
        let s2 = StateVector::basis_state(&b2, 0).unwrap();
        assert_eq!(s1.overlap(&s2), Err(Error::BasisMismatch));
    }

    #[test]
    fn single_photon_mode_populations_follow_fourier_weights() {
        let spec = lattice(2);
        let b = enumerate_basis(&spec, SectorSpec::exact(1, 1)).unwrap();
        let u = crate::lattice::fourier_matrix(&spec);
        let mut s = BasisState::ground(4, 4);
        s.photons[1] = 1;
        let psi = StateVector::from_configuration(&b, &s).unwrap();
        let pops = mode_populations(&psi, &b, &u).unwrap();
        // a†_1|0⟩ = Σ_μ U*[1, μ] c†_μ|0⟩, each |U|² = 1/N² = 1/4.
        for p in &pops {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }
}
