use eitprop::atomic::{
    evolve, steady_state, AtomModel, Detunings, DriveProtocol, DrivenAtom, Fields, IntegratorConfig, LambdaAtom,
    Method, TwoLevelAtom,
};
use eitprop::constants::RB87_MASS;
use eitprop::doppler::{build_ensemble_with, Quadrature};
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn lambda_steady_state_is_a_density_matrix(
        ws in 0.01..5.0f64, wc in 0.0..20.0f64, phase in 0.0..6.3f64,
        ds in -20.0..20.0f64, dc in -20.0..20.0f64, dephasing in 0.001..1.0f64,
        branch in 0.05..0.95f64,
    ) {
        let model = LambdaAtom::new(branch, 1.0 - branch, dephasing).unwrap();
        let h = model.hamiltonian(
            Fields::new(Complex64::from_polar(ws, phase), Complex64::from(wc)),
            Detunings { signal: ds, control: dc },
        );
        let rho = steady_state(&h, model.lindblad()).unwrap();
        prop_assert!((rho.trace() - 1.0).norm() < 1e-10);
        prop_assert!(rho.hermiticity_error() < 1e-10);
        prop_assert!(rho.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn rk4_and_dormand_prince_agree(w in 0.05..3.0f64, d in -3.0..3.0f64) {
        let model = TwoLevelAtom::new(1.0).unwrap();
        let drive = DriveProtocol::step(w, 0.0, Detunings { signal: d, control: 0.0 });
        let times: Vec<f64> = (0..=10).map(|i| 0.5 * i as f64).collect();
        let run = |cfg: &IntegratorConfig| {
            evolve(&model.ground_state(), &DrivenAtom::new(&model, &drive), model.lindblad(), &times, cfg).unwrap()
        };
        let a = run(&IntegratorConfig::rk4(1e-3));
        let b = run(&IntegratorConfig { method: Method::DormandPrince, ..IntegratorConfig::default() });
        for (x, y) in a.states.iter().zip(&b.states) {
            prop_assert!(x.max_abs_diff(y) < 1e-8);
        }
    }

    #[test]
    fn ensembles_are_normalized_and_symmetric(
        t in 1e-3..1e3f64, n in 3usize..300, trunc in 2.0..10.0f64, trapezoid in any::<bool>(),
    ) {
        let rule = if trapezoid { Quadrature::Trapezoid } else { Quadrature::GaussHermite };
        let e = build_ensemble_with(rule, t, RB87_MASS, n, trunc).unwrap();
        let total: f64 = e.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let len = e.len();
        for i in 0..len {
            prop_assert_eq!(e.nodes()[i], -e.nodes()[len - 1 - i]);
            prop_assert!(e.nodes()[i].abs() <= trunc * e.sigma_v() * (1.0 + 1e-12));
        }
        prop_assert!(e.nodes().windows(2).all(|w| w[0] < w[1]));
    }
}
