use fluxmet_core::dynamics::{lindblad_evolve, theta_model};
use fluxmet_core::qec::{expansion_superoperators, theta_code};
use fluxmet_core::qmat::{expm, hermitian_eig, kron, polar_isometry, sqrtm_psd};
use fluxmet_core::{CMatrix, CVector, DensityMatrix, C64};
use proptest::prelude::*;

fn matrix(n: usize, v: &[f64]) -> CMatrix {
    let data = (0..n * n)
        .map(|k| C64::new(v[2 * k], v[2 * k + 1]))
        .collect();
    CMatrix::from_vec(n, data).unwrap()
}

fn vector(v: &[f64]) -> CVector {
    CVector::new(v.chunks(2).map(|c| C64::new(c[0], c[1])).collect()).normalized()
}

fn entries(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn eig_reconstructs_hermitian_matrices(v in entries(32)) {
        let h = matrix(4, &v).hermitian_part();
        let e = hermitian_eig(&h).unwrap();
        prop_assert!(e.reconstruct_with(|x| x).max_abs_diff(&h) < 1e-12);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let vv = e.vectors.dagger().matmul(&e.vectors);
        prop_assert!(vv.max_abs_diff(&CMatrix::identity(4)) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn expm_of_anti_hermitian_is_unitary(v in entries(32), s in 0.0f64..5.0) {
        let h = matrix(4, &v).hermitian_part();
        let u = expm(&h.scale(C64::new(0.0, s))).unwrap();
        prop_assert!(u.dagger().matmul(&u).max_abs_diff(&CMatrix::identity(4)) < 1e-11);
    }

    #[test]
    fn kron_mixed_product(a in entries(8), b in entries(8), c in entries(8), d in entries(8)) {
        let (a, b, c, d) = (matrix(2, &a), matrix(2, &b), matrix(2, &c), matrix(2, &d));
        let lhs = kron(&a, &b).unwrap().matmul(&kron(&c, &d).unwrap());
        let rhs = kron(&a.matmul(&c), &b.matmul(&d)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-13);
    }

    #[test]
    fn sqrtm_fixes_projectors(v in entries(8)) {
        let p = CMatrix::projector(&vector(&v));
        prop_assert!(sqrtm_psd(&p).unwrap().max_abs_diff(&p) < 1e-10);
    }

    #[test]
    fn sqrtm_squares_back(v in entries(32)) {
        let a = matrix(4, &v);
        let rho = a.matmul(&a.dagger());
        let r = sqrtm_psd(&rho).unwrap();
        prop_assert!(r.matmul(&r).max_abs_diff(&rho) < 1e-10);
    }

    #[test]
    fn polar_round_trip(v in entries(32), th in 0.0f64..1.5, s in 0.1f64..3.0) {
        let pi = theta_code(th).projector(0.0);
        let u = expm(&matrix(4, &v).hermitian_part().scale(C64::new(0.0, 1.0))).unwrap();
        let m = u.matmul(&pi).scale_real(s);
        let polar = polar_isometry(&m, &pi, 1e-9).unwrap();
        prop_assert!(!polar.degenerate);
        prop_assert!((polar.scale - s).abs() < 1e-10);
        prop_assert!(polar.isometry.scale_real(polar.scale).max_abs_diff(&m) < 1e-10);
    }

    #[test]
    fn evolution_preserves_trace_and_positivity(v in entries(8), th in 0.0f64..3.0, g in 0.0f64..0.5, t in 0.1f64..3.0) {
        let model = theta_model(0.1, g, th).unwrap();
        let rho0 = DensityMatrix::pure(&vector(&v));
        let rho = lindblad_evolve(&model, &rho0, t, 1e-2).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(rho.eigenvalues()[0] > -1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn second_order_term_only_loses_coherence(v in entries(4), th in 0.0f64..1.5, g in 0.0f64..0.5) {
        let model = theta_model(0.1, g, th).unwrap();
        let code = theta_code(th);
        let report = expansion_superoperators(&model, &code, 1e-9).unwrap();
        let (c0, c1) = code.basis(0.0);
        let w = vector(&v);
        let psi = c0.scale(w.as_slice()[0]).add(&c1.scale(w.as_slice()[1]));
        let rho = CMatrix::projector(&psi);
        prop_assert!(report.l2_apply(&rho).expectation(&psi).re <= 1e-12);
    }
}
