use cavarray_core::dynamics::{occupation_probability, propagate, Method, PropagatorConfig};
use cavarray_core::hamiltonian::{
    build_effective_general, build_effective_pair, build_effective_parallel,
    effective_coefficients, full_interaction_operator, pair_basis, SiteParams,
};
use cavarray_core::hilbert::{enumerate_basis, excitation_operator};
use cavarray_core::lattice::fourier_matrix;
use cavarray_core::linalg::{DenseMatrix, SparseBuilder};
use cavarray_core::protocols::{
    estimate_decoherence, fidelity_chain, plan_entanglement, plan_state_transfer,
};
use cavarray_core::{Basis, Dispersion, LatticeSpec, SectorSpec, StateVector, C64};
use proptest::prelude::*;

fn dispersion() -> impl Strategy<Value = Dispersion> {
    prop_oneof![
        Just(Dispersion::CosineOfSum),
        Just(Dispersion::SumOfCosines)
    ]
}

/// Site parameters clear of every resonance for `|v| < 0.075`.
fn site_params() -> impl Strategy<Value = SiteParams> {
    (
        0.3..1.2f64,
        0.3..1.2f64,
        12.0..20.0f64,
        0.3..0.8f64,
        any::<bool>(),
    )
        .prop_map(|(g, om, d1, gap, above)| {
            let d2 = if above { d1 + gap } else { d1 - gap };
            SiteParams::new(g, om, d1, d2)
        })
}

fn lattice() -> impl Strategy<Value = (usize, f64)> {
    (2usize..=4, 0.02..0.06f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fourier_unitary(n in 1usize..=8, v in -2.0..2.0f64, d in dispersion()) {
        let spec = LatticeSpec::new(n, v, d).unwrap();
        let u = fourier_matrix(&spec);
        let prod = u.matmul(&u.adjoint()).unwrap();
        let id = DenseMatrix::identity(n * n);
        prop_assert!(prod.max_abs_diff(&id) <= 1e-12);
    }

    #[test]
    fn chi_translation_and_exchange(
        (n, v) in lattice(),
        p in site_params(),
        d in dispersion(),
    ) {
        let spec = LatticeSpec::new(n, v, d).unwrap();
        let params = vec![p; n * n];
        let c = effective_coefficients(&spec, &params, d).unwrap();
        let disp = |a: usize, b: usize| {
            let (sa, sb) = (spec.site_at(a), spec.site_at(b));
            ((sa.j + n - sb.j) % n, (sa.k + n - sb.k) % n)
        };
        let m = n * n;
        let scale = (0..m * m).map(|i| c.chi[(i / m, i % m)].norm()).fold(1e-30, f64::max);
        for a in 0..n * n {
            for b in 0..n * n {
                if a == b {
                    continue;
                }
                prop_assert!((c.chi[(b, a)] - c.chi[(a, b)].conj()).norm() <= 1e-12 * scale);
                let (dj, dk) = disp(a, b);
                if (dj, dk) == (0, 0) {
                    continue;
                }
                let reference = (0..n * n).find(|&x| x != 0 && disp(x, 0) == (dj, dk)).unwrap();
                prop_assert!((c.chi[(a, b)] - c.chi[(reference, 0)]).norm() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn full_hamiltonian_hermitian(
        n in 1usize..=3,
        v in -1.5..1.5f64,
        params in proptest::collection::vec(site_params(), 9),
        t in 0.0..50.0f64,
    ) {
        let spec = LatticeSpec::new(n, v, Dispersion::SumOfCosines).unwrap();
        let params = params[..n * n].to_vec();
        let basis = enumerate_basis(&spec, SectorSpec::exact(1, 1)).unwrap();
        let h = full_interaction_operator(&spec, &params, &basis).unwrap();
        prop_assert!(h.at(t).hermiticity_error() <= 1e-12);
        prop_assert_eq!(h.dropped(), 0);
    }

    #[test]
    fn full_hamiltonian_commutes_with_excitation(
        v in -1.5..1.5f64,
        params in proptest::collection::vec(site_params(), 4),
        t in 0.0..50.0f64,
    ) {
        let spec = LatticeSpec::new(2, v, Dispersion::SumOfCosines).unwrap();
        let basis = enumerate_basis(&spec, SectorSpec::unrestricted(1)).unwrap();
        let h = full_interaction_operator(&spec, &params, &basis).unwrap().at(t);
        let n = excitation_operator(&basis);
        let hn = h.matmul(&n).unwrap();
        let nh = n.matmul(&h).unwrap();
        prop_assert!(hn.max_abs_diff(&nh) <= 1e-12);
    }

    #[test]
    fn effective_general_hermitian(
        (n, v) in lattice(),
        params in proptest::collection::vec(site_params(), 16),
        t in 0.0..1000.0f64,
    ) {
        let spec = LatticeSpec::new(n, v, Dispersion::SumOfCosines).unwrap();
        let params = params[..n * n].to_vec();
        let basis = Basis::qubits(n * n, Some(1)).unwrap();
        let g = build_effective_general(&spec, &params, Dispersion::SumOfCosines, &basis).unwrap();
        prop_assert!(g.operator.at(t).hermiticity_error() <= 1e-12);
    }

    #[test]
    fn propagation_conserves_norm(
        diag in proptest::collection::vec(-3.0..3.0f64, 6),
        off in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 15),
        t in 0.5..20.0f64,
    ) {
        let mut b = SparseBuilder::new(6);
        let mut k = 0;
        for i in 0..6 {
            b.push(i, i, C64::new(diag[i], 0.0));
            for j in i + 1..6 {
                let z = C64::new(off[k].0, off[k].1);
                b.push(i, j, z);
                b.push(j, i, z.conj());
                k += 1;
            }
        }
        let h = b.build();
        let qb = Basis::qubits(6, Some(1)).unwrap();
        prop_assert_eq!(qb.dim(), 6);
        let psi0 = StateVector::basis_state(&qb, 0).unwrap();
        let traj = propagate(&h, &psi0, t, &PropagatorConfig::default(), &[]).unwrap();
        prop_assert!(traj.final_norm_error < 1e-6);
    }

    #[test]
    fn decoherence_chain_identity_and_monotonicity(
        p in site_params(),
        gamma in 0.0..0.01f64,
        kappa in 0.0..0.01f64,
        t in 1.0..2000.0f64,
        bump in 0.0..0.01f64,
    ) {
        let spec = LatticeSpec::new(4, 1.5, Dispersion::CosineOfSum).unwrap();
        let mut params = vec![SiteParams { omega_rabi: 0.0, ..p }; 16];
        params[0] = p;
        params[15] = p;
        let e = estimate_decoherence(&spec, &params, Dispersion::CosineOfSum, gamma, kappa, t).unwrap();
        prop_assert!((e.fidelity_estimate - fidelity_chain(e.p1, e.p2, gamma, kappa, t)).abs() <= 1e-12);
        prop_assert!((e.fidelity_estimate - (1.0 - (e.p1 * gamma + e.p2 * kappa) * t)).abs() <= 1e-12);
        prop_assert!(e.p1 >= 0.0 && e.p1 < 1.0 && e.p2 >= 0.0 && e.p2 < 1.0);
        for (g2, k2, t2) in [(gamma + bump, kappa, t), (gamma, kappa + bump, t), (gamma, kappa, t + bump * 1e4)] {
            let f = estimate_decoherence(&spec, &params, Dispersion::CosineOfSum, g2, k2, t2).unwrap();
            prop_assert!(f.fidelity_estimate <= e.fidelity_estimate);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn plans_reach_their_predicted_states(
        p in site_params(),
        d in dispersion(),
        c0 in (0.0..1.0f64, 0.0..std::f64::consts::TAU),
        transfer in any::<bool>(),
    ) {
        let spec = LatticeSpec::new(3, 0.05, d).unwrap();
        let mut params = vec![SiteParams { omega_rabi: 0.0, ..p }; 9];
        params[0] = p;
        params[4] = p;
        let (a, b) = (spec.site(1, 1).unwrap(), spec.site(2, 2).unwrap());
        let plan = if transfer {
            let amp0 = C64::from_polar(c0.0.sqrt(), c0.1);
            let amp1 = C64::new((1.0 - c0.0).sqrt(), 0.0);
            plan_state_transfer(a, b, amp0, amp1, &spec, &params, d).unwrap()
        } else {
            plan_entanglement(a, b, &spec, &params, d).unwrap()
        };
        let s = &plan.pairs[0];
        let h = build_effective_pair(a, b, &spec, &params, d).unwrap();
        let pb = pair_basis();
        let psi0 = StateVector::from_amplitudes(&pb, s.initial.to_vec()).unwrap();
        let target = StateVector::from_amplitudes(&pb, s.predicted.to_vec()).unwrap();
        let cfg = PropagatorConfig {
            method: Method::dormand_prince(1e-10),
            sample_interval: s.interaction_time,
            ..Default::default()
        };
        let traj = propagate(&h, &psi0, s.interaction_time, &cfg, &[]).unwrap();
        let f = occupation_probability(&traj.final_state, &target).unwrap();
        prop_assert!(f >= 1.0 - 1e-6, "fidelity {}", f);
        // The predicted state carries the exact phases, not only the modulus.
        let ov = target.overlap(&traj.final_state).unwrap();
        prop_assert!((ov - C64::new(1.0, 0.0)).norm() < 1e-4);
    }
}

fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (ra, rb) = (a.rows(), b.rows());
    DenseMatrix::from_fn(ra * rb, ra * rb, |i, j| {
        a[(i / rb, j / rb)] * b[(i % rb, j % rb)]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn parallel_operator_is_a_sum_of_pair_blocks(
        p in site_params(),
        q in site_params(),
        v in 0.02..0.06f64,
        d in dispersion(),
    ) {
        let spec = LatticeSpec::new(4, v, d).unwrap();
        let mut params = vec![SiteParams { omega_rabi: 0.0, ..p }; 16];
        let pair0 = (spec.site(1, 1).unwrap(), spec.site(2, 3).unwrap());
        let pair1 = (spec.site(3, 1).unwrap(), spec.site(4, 4).unwrap());
        params[0] = p;
        params[6] = p;
        params[8] = q;
        params[15] = q;
        let par = build_effective_parallel(&[pair0, pair1], &spec, &params, d, 20.0).unwrap();
        let h0 = build_effective_pair(pair0.0, pair0.1, &spec, &params, d).unwrap().matrix.to_dense();
        let h1 = build_effective_pair(pair1.0, pair1.1, &spec, &params, d).unwrap().matrix.to_dense();
        let id = DenseMatrix::identity(4);
        let a = kron(&h0, &id);
        let b = kron(&id, &h1);
        let expected = DenseMatrix::from_fn(16, 16, |i, j| a[(i, j)] + b[(i, j)]);
        prop_assert!(par.operator.matrix.to_dense().max_abs_diff(&expected) <= 1e-15);
        prop_assert_eq!(par.cross.len(), 4);
    }
}
