mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use cylmatter::bloch::{
    apply_gate_pauli, measure_prob, radius, z_rotate, BlochVector, DiagonalGate, MeasurementSpec, PauliCoeffMatrix,
};
use cylmatter::oracle::DenseState;

fn any_vector() -> impl Strategy<Value = BlochVector> {
    (-2.0..2.0f64, -2.0..2.0f64, -1.0..=1.0f64).prop_map(|(x, y, z)| BlochVector::new(x, y, z))
}

fn ball_vector() -> impl Strategy<Value = BlochVector> {
    (0.0..PI, 0.0..2.0 * PI, 0.0..=1.0f64).prop_map(|(t, a, s)| BlochVector::pure(t, a).scaled(s))
}

proptest! {
    #![proptest_config(common::config(1000, 11))]

    #[test]
    fn z_marginals_unchanged(phi in 0.0..2.0 * PI, a in any_vector(), b in any_vector()) {
        let out = apply_gate_pauli(phi, &a, &b);
        let prod = PauliCoeffMatrix::product(&a, &b);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            prop_assert!((out.m[i][j] - prod.m[i][j]).abs() < 1e-12);
        }
    }

    #[test]
    fn z_rotation_keeps_radius(v in any_vector(), angle in -10.0..10.0f64) {
        let before = radius(&v).unwrap();
        prop_assert!((radius(&z_rotate(&v, angle)).unwrap() - before).abs() < 1e-12);
    }

    #[test]
    fn pauli_route_matches_oracle(phi in 0.0..2.0 * PI, a in ball_vector(), b in ball_vector()) {
        let mut s = DenseState::product(&[a, b]).unwrap();
        s.evolve(&DiagonalGate::controlled_phase(phi), 0, 1).unwrap();
        let oracle = PauliCoeffMatrix::from_hermitian(&s.reduced_pair(0, 1).unwrap());
        prop_assert!(oracle.max_abs_diff(&apply_gate_pauli(phi, &a, &b)) < 1e-10);
    }

    #[test]
    fn cylinder_probabilities_are_valid(r in 0.0..=1.0f64, nu in 0.0..2.0 * PI, z in -1.0..=1.0f64, omega in 0.0..2.0 * PI) {
        let v = BlochVector::polar(r, nu, z);
        for m in [MeasurementSpec::z(), MeasurementSpec::xy(omega)] {
            let p = measure_prob(&v, &m);
            prop_assert!(!p.negative);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p.plus));
        }
    }
}
