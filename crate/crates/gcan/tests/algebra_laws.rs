//! Algebra-law tests: the symbolic blade-product oracle, worked product
//! identities, and randomized law checks.

use std::sync::Arc;

use proptest::prelude::*;

use gcan::algebra::{parse_multivector, Algebra, AlgebraExt, Multivector, Signature, PRODUCT_TOL};
use gcan::verify::{check_table_against_oracle, symbolic_blade_product};

fn alg(p: usize, q: usize, r: usize) -> Arc<Algebra> {
    Algebra::from_pqr(p, q, r).unwrap()
}

#[test]
fn cayley_tables_match_symbolic_oracle_up_to_dim_5() {
    let mut tables = 0;
    for n in 0..=5usize {
        for p in 0..=n {
            for q in 0..=(n - p) {
                let algebra = alg(p, q, n - p - q);
                let (checked, mismatches) = check_table_against_oracle(&algebra);
                assert_eq!(
                    mismatches,
                    0,
                    "table disagrees with oracle for {}",
                    algebra.signature()
                );
                assert_eq!(checked, algebra.blade_count() * algebra.blade_count());
                tables += 1;
            }
        }
    }
    assert_eq!(tables, 56);
}

#[test]
fn g110_table_spot_checks() {
    // e1^2 = +1, e2^2 = -1, e12^2 = +1 in G(1,1,0)
    let algebra = alg(1, 1, 0);
    let e1 = algebra.basis_from_labels(&[1]).unwrap();
    let e2 = algebra.basis_from_labels(&[2]).unwrap();
    let e12 = algebra.basis_from_labels(&[1, 2]).unwrap();
    assert_eq!(e1.geometric_product(&e1).unwrap().scalar_part(), 1.0);
    assert_eq!(e2.geometric_product(&e2).unwrap().scalar_part(), -1.0);
    assert_eq!(e12.geometric_product(&e12).unwrap().scalar_part(), 1.0);

    let sig = Signature::new(1, 1, 0).unwrap();
    let (pos, sign) = symbolic_blade_product(&sig, &[0, 1], &[0, 1]);
    assert!(pos.is_empty());
    assert_eq!(sign, 1.0);
}

#[test]
fn vector_product_splits_into_inner_and_wedge_parts() {
    let algebra = alg(2, 0, 0);
    let cases = [
        (0.3, -1.2, 0.7, 0.25),
        (1.0, 0.0, 0.0, 1.0),
        (-0.5, 0.5, 0.5, 0.5),
    ];
    for (u1, u2, v1, v2) in cases {
        let u = algebra.vector(&[u1, u2]).unwrap();
        let v = algebra.vector(&[v1, v2]).unwrap();
        let p = u.geometric_product(&v).unwrap();
        assert!((p.scalar_part() - (u1 * v1 + u2 * v2)).abs() < 1e-15);
        assert!((p.coeff(3) - (u1 * v2 - u2 * v1)).abs() < 1e-15);
        assert_eq!(p.coeff(1), 0.0);
        assert_eq!(p.coeff(2), 0.0);
    }
}

/// The full two-dimensional product expansion with a diagonal metric
/// (g11, g22), written out term by term as an independent reference.
fn two_dim_product_reference(g11: f64, g22: f64, x: &[f64; 4], y: &[f64; 4]) -> [f64; 4] {
    let (x0, x1, x2, x12) = (x[0], x[1], x[2], x[3]);
    let (y0, y1, y2, y12) = (y[0], y[1], y[2], y[3]);
    [
        x0 * y0 + g11 * x1 * y1 + g22 * x2 * y2 - g11 * g22 * x12 * y12,
        x0 * y1 + x1 * y0 - g22 * x2 * y12 + g22 * x12 * y2,
        x0 * y2 + g11 * x1 * y12 + x2 * y0 - g11 * x12 * y1,
        x0 * y12 + x1 * y2 - x2 * y1 + x12 * y0,
    ]
}

#[test]
fn full_two_dim_products_match_reference_expansion() {
    for (p, q, r, g11, g22) in [
        (2, 0, 0, 1.0, 1.0),
        (1, 1, 0, 1.0, -1.0),
        (0, 2, 0, -1.0, -1.0),
        (1, 0, 1, 0.0, 1.0),
        (0, 0, 2, 0.0, 0.0),
    ] {
        let algebra = alg(p, q, r);
        // map canonical coefficient order onto (1, e_a, e_b, e_ab)
        let x = [0.37, -0.81, 0.22, 0.54];
        let y = [-0.11, 0.93, 0.48, -0.66];
        let xm = algebra.from_coeffs(x.to_vec()).unwrap();
        let ym = algebra.from_coeffs(y.to_vec()).unwrap();
        let got = xm.geometric_product(&ym).unwrap();
        let expected = two_dim_product_reference(g11, g22, &x, &y);
        for i in 0..4 {
            assert!(
                (got.coeff(i) - expected[i]).abs() < 1e-14,
                "{} blade {i}: {} vs {}",
                algebra.signature(),
                got.coeff(i),
                expected[i]
            );
        }
    }
}

#[test]
fn rotor_times_its_reverse_is_exactly_one() {
    // (1/sqrt2 + 1/sqrt2 e12)(1/sqrt2 - 1/sqrt2 e12) = 1 and e12^2 = -1
    let algebra = alg(2, 0, 0);
    let u = parse_multivector(&algebra, "0.7071067811865476 + 0.7071067811865476 e12").unwrap();
    let prod = u.geometric_product(&u.reverse()).unwrap();
    assert!((prod.scalar_part() - 1.0).abs() <= 1e-14);
    for i in 1..4 {
        assert!(prod.coeff(i).abs() <= 1e-14);
    }

    let e12 = algebra.basis_from_labels(&[1, 2]).unwrap();
    let sq = e12.geometric_product(&e12).unwrap();
    assert_eq!(sq.scalar_part(), -1.0);
    assert!(sq.coeffs()[1..].iter().all(|&c| c == 0.0));
}

fn arbitrary_coeffs(n_blades: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, n_blades)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_is_associative_in_g301(
        a in arbitrary_coeffs(16),
        b in arbitrary_coeffs(16),
        c in arbitrary_coeffs(16),
    ) {
        let algebra = alg(3, 0, 1);
        let x = algebra.from_coeffs(a).unwrap();
        let y = algebra.from_coeffs(b).unwrap();
        let z = algebra.from_coeffs(c).unwrap();
        let left = x.geometric_product(&y).unwrap().geometric_product(&z).unwrap();
        let right = x.geometric_product(&y.geometric_product(&z).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < PRODUCT_TOL);
    }

    #[test]
    fn grade_parts_reconstruct_and_project(
        a in arbitrary_coeffs(32),
        k in 0usize..=5,
    ) {
        let algebra = alg(3, 2, 0);
        let x = algebra.from_coeffs(a).unwrap();
        let part = x.grade_part(k).unwrap();
        prop_assert_eq!(part.grade_part(k).unwrap(), part.clone());
        let mut sum = algebra.zero();
        for g in 0..=5 {
            sum = sum.add(&x.grade_part(g).unwrap()).unwrap();
        }
        prop_assert_eq!(sum, x);
    }

    #[test]
    fn reversion_is_an_involution(a in arbitrary_coeffs(16)) {
        let algebra = alg(2, 1, 1);
        let x = algebra.from_coeffs(a).unwrap();
        prop_assert_eq!(x.reverse().reverse(), x.clone());
        // vectors are fixed points
        let v = x.grade_part(1).unwrap();
        prop_assert_eq!(v.reverse(), v);
    }

    #[test]
    fn product_with_one_is_identity(a in arbitrary_coeffs(16)) {
        let algebra = alg(3, 0, 1);
        let x = algebra.from_coeffs(a).unwrap();
        let one = algebra.scalar(1.0);
        prop_assert_eq!(x.geometric_product(&one).unwrap(), x.clone());
        prop_assert_eq!(one.geometric_product(&x).unwrap(), x);
    }

    #[test]
    fn parser_round_trips_display(a in arbitrary_coeffs(8)) {
        let algebra = alg(3, 0, 0);
        let x = algebra.from_coeffs(a).unwrap();
        let back = parse_multivector(&algebra, &x.to_string()).unwrap();
        prop_assert!(x.max_abs_diff(&back) == 0.0);
    }
}

#[test]
fn dual_moves_grade_k_to_grade_n_minus_k() {
    let algebra = alg(3, 0, 0);
    let mut x: Multivector = algebra.zero();
    x.set_coeff(1, 2.0); // e1
    let d = x.dual();
    assert_eq!(d.grades_present(0.0), vec![2]);

    // degenerate algebra: dual of e0 is annihilated, by design not an error
    let pga = alg(3, 0, 1);
    let e0 = pga.basis_from_labels(&[0]).unwrap();
    assert!(e0.dual().is_zero());
}

#[test]
fn corrupted_table_is_caught_by_the_oracle() {
    let sig = Signature::new(2, 0, 0).unwrap();
    let mut table = gcan::algebra::CayleyTable::build(sig).unwrap();
    table.corrupt_entry_for_test(1, 2);
    let algebra = Algebra::from_table_for_test(table);
    let (_, mismatches) = check_table_against_oracle(&algebra);
    assert!(mismatches > 0);
}
