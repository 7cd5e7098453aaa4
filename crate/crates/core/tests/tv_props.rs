//! Convex-analysis properties of the TV machinery: gradient/divergence
//! adjointness, subgradient validity, and minimality of the TVDS value at
//! the reference point.

mod common;

use cassi_core::*;
use common::{random_cube, random_feasible_field, rng};

#[test]
fn gradient_divergence_adjointness() {
    let mut r = rng(301);
    for trial in 0..50 {
        let (h, w, l) = (2 + trial % 5, 2 + (trial * 2) % 5, 1 + trial % 3);
        let x = random_cube(&mut r, h, w, l);
        let p = random_feasible_field(&mut r, h, w, l);
        let g = gradient(&x);
        let lhs: f64 = g
            .as_slice()
            .iter()
            .zip(p.as_slice())
            .map(|(a, b)| a * b)
            .sum();
        let rhs = -x.dot(&divergence(&p)).unwrap();
        let scale = x.norm() * p.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(
            (lhs - rhs).abs() <= 1e-12 * scale.max(1e-12),
            "trial {trial}: <∇x,p>={lhs}, -<x,div p>={rhs}"
        );
    }
}

#[test]
fn negative_divergence_of_dual_field_is_a_subgradient() {
    let mut r = rng(302);
    for trial in 0..100 {
        let (h, w, l) = (3 + trial % 4, 3 + trial % 5, 1 + trial % 3);
        let x = random_cube(&mut r, h, w, l);
        let y = random_cube(&mut r, h, w, l);
        let s = divergence(&dual_field(&y)).scale(-1.0);
        let gap = tv_value(&x) - tv_value(&y) - s.dot(&x.sub(&y).unwrap()).unwrap();
        assert!(gap >= -1e-10, "trial {trial}: subgradient inequality violated by {gap}");
    }
}

#[test]
fn dual_field_norms_never_exceed_one() {
    let mut r = rng(303);
    for _ in 0..20 {
        let x = random_cube(&mut r, 6, 7, 3);
        let p = dual_field(&x);
        assert!(p.max_pointwise_norm() <= 1.0 + 1e-12);
        assert!(p.is_feasible());
    }
}

#[test]
fn tv_is_convex_on_random_draws() {
    let mut r = rng(304);
    for _ in 0..50 {
        let a = random_cube(&mut r, 5, 5, 2);
        let b = random_cube(&mut r, 5, 5, 2);
        let mid = a.add(&b).unwrap().scale(0.5);
        let lhs = tv_value(&mid);
        let rhs = 0.5 * tv_value(&a) + 0.5 * tv_value(&b);
        assert!(lhs <= rhs + 1e-10);
    }
}

#[test]
fn tvds_value_is_minimal_at_the_reference() {
    // With g = −div P^y the reference y minimizes f_TV(x) − <g, x>.
    let mut r = rng(305);
    for trial in 0..50 {
        let y = random_cube(&mut r, 5, 6, 2);
        let g = divergence(&dual_field(&y)).scale(-1.0);
        let at_ref = tvds_value(&y, &g).unwrap();
        let x = random_cube(&mut r, 5, 6, 2);
        let at_x = tvds_value(&x, &g).unwrap();
        assert!(
            at_x >= at_ref - 1e-10,
            "trial {trial}: {at_x} < {at_ref}"
        );
    }
}

#[test]
fn tvds_with_zero_subgradient_degrades_to_tv() {
    let mut r = rng(306);
    let x = random_cube(&mut r, 6, 6, 3);
    let zero = SpectralCube::zeros(6, 6, 3);
    assert_eq!(tvds_value(&x, &zero).unwrap(), tv_value(&x));
}
