mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use vcc_tdoa::linalg::{matrix_volume, principal_angles, singular_values, vcc};

fn dims() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (4usize..24, 1usize..5, 1usize..5, any::<u64>())
        .prop_filter("fits", |(n, d1, d2, _)| d1 + d2 <= *n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vcc_equals_sine_product((n, d1, d2, seed) in dims()) {
        let mut r = rng(seed);
        let u1 = qr_basis(&random_matrix(&mut r, n, d1));
        let u2 = qr_basis(&random_matrix(&mut r, n, d2));
        let v = vcc(&u1, &u2).unwrap();
        prop_assert!((v - sine_product_oracle(&u1, &u2)).abs() <= 1e-10);
        prop_assert!((v - principal_angles(&u1, &u2).unwrap().sine_product()).abs() <= 1e-10);
    }

    #[test]
    fn vcc_ignores_basis_choice_and_order((n, d1, d2, seed) in dims()) {
        let mut r = rng(seed);
        let x1 = random_matrix(&mut r, n, d1);
        let x2 = random_matrix(&mut r, n, d2);
        let v = vcc(&x1, &x2).unwrap();
        let mixed1 = &x1 * random_matrix(&mut r, d1, d1);
        let rotated2 = &x2 * random_unitary(&mut r, d2);
        prop_assert!((vcc(&mixed1, &rotated2).unwrap() - v).abs() <= 1e-9);
        prop_assert!((vcc(&x2, &x1).unwrap() - v).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn volume_matches_gram_determinant((n, d, _, seed) in dims()) {
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, d);
        let expect = gram_volume(&x);
        let got = matrix_volume(&x, d).unwrap();
        prop_assert!((got - expect).abs() <= 1e-10 * expect);
    }

    #[test]
    fn low_coherence_columns_are_full_rank(seed in any::<u64>(), d in 2usize..6) {
        let mut r = rng(seed);
        let (x, mu) = coherence_constrained(&mut r, 48, d);
        let smin = *singular_values(&x).last().unwrap();
        // Gershgorin on the unit-diagonal Gram matrix.
        prop_assert!(smin * smin >= 1.0 - (d as f64 - 1.0) * mu - 1e-12);
        prop_assert!(smin > 0.0);
    }

    #[test]
    fn scaling_columns_scales_volume((n, d, _, seed) in dims(), scale in 0.1f64..10.0) {
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, d);
        let mut y = x.clone();
        y.column_mut(0).scale_mut(scale);
        let ratio = matrix_volume(&y, d).unwrap() / matrix_volume(&x, d).unwrap();
        prop_assert!((ratio - scale).abs() <= 1e-9 * scale);
    }
}

#[test]
fn shared_direction_gives_zero_vcc() {
    let mut r = rng(9);
    let common = random_matrix(&mut r, 12, 1);
    let mut x1 = random_matrix(&mut r, 12, 3);
    let mut x2 = random_matrix(&mut r, 12, 2);
    x1.set_column(1, &common.column(0));
    x2.set_column(0, &(common.column(0) * Complex64::new(0.0, 2.0)));
    assert!(vcc(&x1, &x2).unwrap() < 1e-7);
}
