mod common;

use common::{cosine_matrix, worst_oracle_error, DenseOracle, KBAR};
use kicked_rotor::quantum::{init_wavefunction, kick_step};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

#[test]
fn split_step_matches_dense_propagator() {
    let err = worst_oracle_error(4, 0.0);
    assert!(err < 1e-8, "{err}");
}

#[test]
fn split_step_matches_dense_propagator_with_decay() {
    let err = worst_oracle_error(3, 0.05);
    assert!(err < 1e-8, "{err}");
}

/// One cell of the splitting against the exact exponential of the full
/// non-Hermitian generator: halving the step must cut the error about eightfold.
#[test]
fn strang_splitting_is_second_order() {
    let n_max = 32;
    let len = 2 * n_max;
    let (k, eta_rate) = (200.0, 0.003);
    let mut start = init_wavefunction(n_max, 0.0, KBAR).unwrap();
    // Spread the state so that kinetic and potential terms do not commute trivially.
    kick_step(&mut start, 800.0, 0.0, 0.004);
    let p: Vec<f64> = (0..len).map(|j| start.momentum(j)).collect();
    let cos = cosine_matrix(len).map(|x| Complex64::new(x, 0.0));
    let identity = DMatrix::<Complex64>::identity(len, len);

    let error = |dtau: f64| {
        let kinetic = DMatrix::from_diagonal(&DVector::from_iterator(
            len,
            p.iter().map(|&p| Complex64::new(0.0, -p * p / (2.0 * KBAR) * dtau)),
        ));
        let generator = kinetic
            + &cos * Complex64::new(0.0, -k * dtau / KBAR)
            - (&identity + &cos) * Complex64::new(k * eta_rate * dtau / 2.0, 0.0);
        let v0 = DVector::from_iterator(len, start.amplitudes.iter().copied());
        let exact = generator.exp() * &v0;
        let mut psi = start.clone();
        kick_step(&mut psi, k, eta_rate, dtau);
        let got = DVector::from_iterator(len, psi.amplitudes.iter().copied());
        // Same product computed densely: checks the exponential path itself.
        let oracle = DenseOracle::new(len);
        let half = DVector::from_iterator(len, p.iter().map(|&p| Complex64::from_polar(1.0, -p * p * dtau / (4.0 * KBAR))));
        let mut dense = v0.component_mul(&half);
        dense = oracle.kick(k * dtau, k * eta_rate * dtau, KBAR) * dense;
        dense.component_mul_assign(&half);
        assert!((&got - &dense).norm() < 1e-10);
        (got - exact).norm()
    };
    let coarse = error(0.002);
    let fine = error(0.001);
    let order = (coarse / fine).log2();
    assert!(coarse > 1e-9, "{coarse}");
    assert!((order - 3.0).abs() < 0.3, "local order {order}: {coarse} → {fine}");
}
