//! Property tests for the tensor substrate: the shear pair is exactly
//! pseudo-invertible, commutes with the Hadamard product, and safe division
//! never produces non-finite values.

mod common;

use cassi_core::*;
use common::{random_cube, rng};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shear_roundtrip_is_exact_identity(
        h in 1usize..=8,
        w in 1usize..=8,
        l in 1usize..=4,
        s in 0usize..=2,
        seed in 0u64..1_000_000,
    ) {
        let mut r = rng(seed);
        let x = random_cube(&mut r, h, w, l);
        let recovered = inverse_shear(&shear_transform(&x, s), s).unwrap();
        prop_assert_eq!(recovered.as_slice(), x.as_slice());
    }

    #[test]
    fn shear_commutes_with_hadamard_product(
        h in 1usize..=6,
        w in 1usize..=6,
        l in 1usize..=4,
        s in 0usize..=2,
        seed in 0u64..1_000_000,
    ) {
        let mut r = rng(seed);
        let a = random_cube(&mut r, h, w, l);
        let b = random_cube(&mut r, h, w, l);
        // f_ST(a ⊙ b) = f_ST(a) ⊙ f_ST(b), exactly.
        let lhs = shear_transform(&a.mul(&b).unwrap(), s);
        let rhs = shear_transform(&a, s).mul(&shear_transform(&b, s)).unwrap();
        prop_assert_eq!(lhs.as_slice(), rhs.as_slice());

        // Inverse-shear analogue on sheared operands.
        let aw = shear_transform(&a, s);
        let bw = shear_transform(&b, s);
        let lhs_inv = inverse_shear(&aw.mul(&bw).unwrap(), s).unwrap();
        let rhs_inv = inverse_shear(&aw, s)
            .unwrap()
            .mul(&inverse_shear(&bw, s).unwrap())
            .unwrap();
        prop_assert_eq!(lhs_inv.as_slice(), rhs_inv.as_slice());
    }

    #[test]
    fn safe_divide_is_total_on_finite_inputs(
        h in 1usize..=6,
        w in 1usize..=6,
        l in 1usize..=3,
        seed in 0u64..1_000_000,
    ) {
        let mut r = rng(seed);
        let num = random_cube(&mut r, h, w, l);
        // Denominator with many exact zeros.
        let den = SpectralCube::from_fn(h, w, l, |_, _, _| {
            if r.gen_bool(0.4) { 0.0 } else { r.gen_range(-2.0..2.0) }
        });
        let q = safe_divide(&num, &den).unwrap();
        prop_assert!(q.is_finite());
        for i in 0..q.len() {
            if den.as_slice()[i] == 0.0 {
                prop_assert_eq!(q.as_slice()[i], 0.0);
            }
        }
    }

    #[test]
    fn self_division_yields_support_indicator(
        h in 1usize..=6,
        w in 1usize..=6,
        seed in 0u64..1_000_000,
    ) {
        let mut r = rng(seed);
        let x = SpectralCube::from_fn(h, w, 2, |_, _, _| {
            if r.gen_bool(0.3) { 0.0 } else { r.gen_range(-3.0..3.0) }
        });
        let q = safe_divide(&x, &x).unwrap();
        for i in 0..q.len() {
            let expected = if x.as_slice()[i] != 0.0 { 1.0 } else { 0.0 };
            prop_assert_eq!(q.as_slice()[i], expected);
        }
    }
}

#[test]
fn hundred_random_roundtrips_at_spec_dims() {
    let mut r = rng(2024);
    for trial in 0..100 {
        let h = 1 + trial % 8;
        let w = 1 + (trial * 3) % 8;
        let l = 1 + trial % 4;
        for s in 0..=2usize {
            let x = random_cube(&mut r, h, w, l);
            let recovered = inverse_shear(&shear_transform(&x, s), s).unwrap();
            assert_eq!(recovered, x);
        }
    }
}
