mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use cylmatter::bloch::{BlochVector, PauliCoeffMatrix};
use cylmatter::decompose::{
    canonicalize_inputs, hull_membership, hull_membership_general, reconstruct, reduced_determinant, Decomposer,
    DecompositionRequest, Generators, HullOptions,
};
use cylmatter::growth::{lambda_phi, lemma1_feasible, GrowthQuery};

fn frobenius(a: &PauliCoeffMatrix, b: &PauliCoeffMatrix) -> f64 {
    a.m.iter().flatten().zip(b.m.iter().flatten()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn pole(r: f64, nu: f64, up: bool) -> BlochVector {
    BlochVector::polar(r, nu, if up { 1.0 } else { -1.0 })
}

proptest! {
    #![proptest_config(common::config(60, 31))]

    #[test]
    fn decompositions_reconstruct(
        ra in 0.0..1.0f64, rb in 0.0..1.0f64, nua in 0.0..2.0 * PI, nub in 0.0..2.0 * PI,
        up_a: bool, up_b: bool, phi in 0.0..2.0 * PI, slack in prop_oneof![Just(1.0), 1.0..1.5f64],
    ) {
        let grow = lambda_phi(phi) * slack;
        let req = DecompositionRequest::new(pole(ra, nua, up_a), pole(rb, nub, up_b), phi, ra * grow, rb * grow);
        let (terms, _) = Decomposer::new().decompose(&req).unwrap();
        let residual = reconstruct(&terms).max_abs_diff(&req.target());
        prop_assert!(residual <= req.tolerance);
        let total: f64 = terms.iter().map(|t| t.weight).sum();
        prop_assert!((total - 1.0).abs() <= req.tolerance);
        for t in &terms {
            prop_assert!(t.weight >= 0.0);
            prop_assert!(t.omega_a.transverse_radius() <= req.ra + 1e-9);
            prop_assert!(t.omega_b.transverse_radius() <= req.rb + 1e-9);
        }
    }

    #[test]
    fn canonical_round_trip(
        ra in 0.05..1.0f64, rb in 0.05..1.0f64, nua in 0.0..2.0 * PI, nub in 0.0..2.0 * PI,
        phi in 0.1..2.0 * PI - 0.1, grow in 1.0..1.3f64,
    ) {
        let scale = lambda_phi(phi) * grow;
        for (up_a, up_b) in [(true, true), (true, false), (false, true), (false, false)] {
            let req = DecompositionRequest::new(pole(ra, nua, up_a), pole(rb, nub, up_b), phi, ra * scale, rb * scale);
            let (canonical, symmetry) = canonicalize_inputs(&req).unwrap();
            let solved = hull_membership_general(
                &canonical.target(),
                &Generators::cylinder(canonical.ra),
                &Generators::cylinder(canonical.rb),
                &HullOptions::refined(req.n, req.tolerance),
            ).unwrap();
            prop_assert!(solved.feasible);
            let before = frobenius(&reconstruct(&solved.terms), &canonical.target());
            let after = frobenius(&reconstruct(&symmetry.apply(&solved.terms)), &req.target());
            prop_assert!((before - after).abs() < 1e-10, "{} vs {}", before, after);
        }
    }

    #[test]
    fn reduced_determinant_symmetries(fa in 0.0..2.0f64, fb in 0.0..2.0f64, phi in 0.0..2.0 * PI) {
        let d = reduced_determinant(fa, fb, phi);
        prop_assert_eq!(d, reduced_determinant(fb, fa, phi));
        prop_assert!((d - reduced_determinant(fa, fb, 2.0 * PI - phi)).abs() <= 1e-14 * (1.0 + d.abs()));
    }

    #[test]
    fn grid_never_overapproximates(fa in 0.0..1.0f64, fb in 0.0..1.0f64, phi in 0.1..PI) {
        let target = cylmatter::bloch::apply_gate_pauli(phi, &BlochVector::new(fa, 0.0, 1.0), &BlochVector::new(fb, 0.0, 1.0));
        let lp = hull_membership(&target, 1.0, 1.0, 24, 1e-7).unwrap().feasible;
        if lp {
            prop_assert!(lemma1_feasible(&GrowthQuery::new(fa, fb, phi)));
        }
    }
}
