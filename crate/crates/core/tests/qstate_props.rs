//! Property tests for the state/density-matrix algebra: linearity, unitary
//! norm preservation, partial-trace identities, and the brute-force
//! index-summation oracle for the partial trace.

use noisegate::qstate::{DensityMatrix, GateMatrix, StateVector};
use noisegate::C64;
use proptest::prelude::*;

fn amp() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn state(n_qubits: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec(amp(), 1 << n_qubits)
        .prop_map(move |amps| StateVector::from_amplitudes(n_qubits, amps).unwrap())
}

fn gate2() -> impl Strategy<Value = GateMatrix> {
    prop::collection::vec(amp(), 4).prop_map(|e| GateMatrix::new(2, e).unwrap())
}

/// Generic single-qubit unitary from four angles.
fn unitary2() -> impl Strategy<Value = GateMatrix> {
    (0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU)
        .prop_map(|(theta, phi, alpha)| {
            let (c, s) = (theta.cos(), theta.sin());
            let eip = C64::new(phi.cos(), phi.sin());
            let eia = C64::new(alpha.cos(), alpha.sin());
            GateMatrix::from_2x2([
                [eia * c, eia * eip * s],
                [-eip.conj() * s, C64::new(c, 0.0)],
            ])
        })
}

/// Reduced matrix by enumerating every full-index pair and keeping those
/// whose traced bits agree — the definitional route, independent of the
/// production implementation's index composition.
fn partial_trace_oracle(dm: &DensityMatrix, keep: &[usize]) -> Vec<C64> {
    let n = dm.n_qubits();
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    let bit = |index: usize, q: usize| (index >> (n - 1 - q)) & 1;
    let rdim = 1usize << kept.len();
    let mut out = vec![C64::new(0.0, 0.0); rdim * rdim];
    for full_r in 0..dm.dim() {
        for full_c in 0..dm.dim() {
            if traced.iter().any(|&q| bit(full_r, q) != bit(full_c, q)) {
                continue;
            }
            let mut r = 0usize;
            let mut c = 0usize;
            for &q in &kept {
                r = (r << 1) | bit(full_r, q);
                c = (c << 1) | bit(full_c, q);
            }
            out[r * rdim + c] += dm.entry(full_r, full_c);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_qubit_gates_are_linear(
        u in state(3),
        v in state(3),
        g in gate2(),
        alpha in amp(),
        beta in amp(),
        target in 0usize..3,
    ) {
        let mut combo = StateVector::from_amplitudes(
            3,
            u.amplitudes()
                .iter()
                .zip(v.amplitudes())
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        )
        .unwrap();
        combo.apply_one_qubit_gate(&g, target).unwrap();

        let mut gu = u.clone();
        gu.apply_one_qubit_gate(&g, target).unwrap();
        let mut gv = v.clone();
        gv.apply_one_qubit_gate(&g, target).unwrap();

        for i in 0..combo.dim() {
            let expect = alpha * gu.amplitudes()[i] + beta * gv.amplitudes()[i];
            prop_assert!((combo.amplitudes()[i] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn two_qubit_gates_are_linear(
        u in state(3),
        v in state(3),
        alpha in amp(),
        beta in amp(),
    ) {
        let g = GateMatrix::cnot();
        let mut combo = StateVector::from_amplitudes(
            3,
            u.amplitudes()
                .iter()
                .zip(v.amplitudes())
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        )
        .unwrap();
        combo.apply_two_qubit_gate(&g, 2, 0).unwrap();

        let mut gu = u.clone();
        gu.apply_two_qubit_gate(&g, 2, 0).unwrap();
        let mut gv = v.clone();
        gv.apply_two_qubit_gate(&g, 2, 0).unwrap();

        for i in 0..combo.dim() {
            let expect = alpha * gu.amplitudes()[i] + beta * gv.amplitudes()[i];
            prop_assert!((combo.amplitudes()[i] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn unitary_gates_preserve_norm(psi in state(3), u in unitary2(), target in 0usize..3) {
        prop_assume!(u.unitarity_residual() < 1e-12);
        let before = psi.norm_sq();
        let mut after = psi.clone();
        after.apply_one_qubit_gate(&u, target).unwrap();
        prop_assert!((after.norm_sq() - before).abs() < 1e-12 * (1.0 + before));
    }

    #[test]
    fn partial_trace_identities(psi in state(3)) {
        let dm = DensityMatrix::from_pure(&psi);
        let all = dm.partial_trace(&[0, 1, 2]).unwrap();
        prop_assert_eq!(all.entries(), dm.entries());
        for keep in [vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2]] {
            let red = dm.partial_trace(&keep).unwrap();
            prop_assert!((red.trace() - dm.trace()).norm() < 1e-12 * (1.0 + dm.trace().norm()));
            prop_assert!(red.hermiticity_residual() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_matches_bruteforce_oracle(u in state(3), v in state(3)) {
        // A generic mixed operator: weighted sum of two pure projectors.
        let mut dm = DensityMatrix::from_pure(&u);
        dm.accumulate_outer(&v, 0.7).unwrap();
        for keep in [vec![0, 2], vec![1], vec![2, 1]] {
            let red = dm.partial_trace(&keep).unwrap();
            let oracle = partial_trace_oracle(&dm, &keep);
            for (a, b) in red.entries().iter().zip(&oracle) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fidelity_scales_with_norm_squared(psi in state(2), scale in 0.1..3.0f64) {
        let nsq = psi.norm_sq();
        prop_assume!(nsq > 1e-3);
        let mut unit = psi.clone();
        unit.scale(C64::new(1.0 / nsq.sqrt(), 0.0));

        let base = DensityMatrix::from_pure(&psi).fidelity_pure(&unit).unwrap();
        let mut scaled = psi.clone();
        scaled.scale(C64::new(scale, 0.0));
        let f = DensityMatrix::from_pure(&scaled).fidelity_pure(&unit).unwrap();
        prop_assert!((f - scale * scale * base).abs() < 1e-10 * (1.0 + base));
    }

    #[test]
    fn trace_distance_is_symmetric_and_positive(u in state(2), v in state(2)) {
        let a = DensityMatrix::from_pure(&u);
        let b = DensityMatrix::from_pure(&v);
        let dab = noisegate::qstate::trace_distance(&a, &b).unwrap();
        let dba = noisegate::qstate::trace_distance(&b, &a).unwrap();
        prop_assert!((dab - dba).abs() < 1e-10);
        prop_assert!(dab >= 0.0);
        prop_assert!(noisegate::qstate::trace_distance(&a, &a).unwrap() < 1e-12);
    }
}

#[test]
fn density_matrices_from_states_are_positive() {
    // PSD spot check via the eigensolver on a mixed 3-qubit operator.
    let amps: Vec<C64> = (0..8)
        .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.61).cos() * 0.4))
        .collect();
    let psi = StateVector::from_amplitudes(3, amps).unwrap();
    let mut dm = DensityMatrix::from_pure(&psi);
    dm.accumulate_outer(&StateVector::basis_state(3, 5), 0.3).unwrap();
    let eigs = dm.hermitian_eigenvalues();
    assert!(eigs.iter().all(|&l| l > -1e-8), "{eigs:?}");
}
