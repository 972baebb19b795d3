//! Property suites behind `gcan verify`: each suite re-derives module
//! invariants against independent oracles and reports per-property counts.
//!
//! The blade-product oracle here deliberately avoids the bit tricks used by
//! the table builder: it multiplies explicit index lists, bubble-sorting
//! with transposition counting and cancelling repeated vectors through the
//! metric.

use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Algebra, AlgebraExt, Multivector, Signature, PRODUCT_TOL};

#[derive(Clone, Debug)]
pub struct PropertyReport {
    pub name: String,
    pub checks: usize,
    pub max_err: f64,
    pub passed: bool,
}

impl PropertyReport {
    fn new(name: impl Into<String>, checks: usize, max_err: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            checks,
            max_err,
            passed: max_err <= tol,
        }
    }

    fn boolean(name: impl Into<String>, checks: usize, passed: bool) -> Self {
        Self {
            name: name.into(),
            checks,
            max_err: if passed { 0.0 } else { 1.0 },
            passed,
        }
    }
}

pub fn print_reports(reports: &[PropertyReport]) -> bool {
    let mut ok = true;
    for r in reports {
        println!(
            "{:4} [{} checks] max|err|={:9.2e}  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.checks,
            r.max_err,
            r.name
        );
        ok &= r.passed;
    }
    ok
}

/// Symbolic product of two basis blades given as index-position lists.
/// Returns the sorted surviving positions and the accumulated sign.
pub fn symbolic_blade_product(
    sig: &Signature,
    left: &[usize],
    right: &[usize],
) -> (Vec<usize>, f64) {
    let mut seq: Vec<usize> = left.iter().chain(right.iter()).copied().collect();
    let mut sign = 1.0f64;
    loop {
        let mut changed = false;
        for i in 0..seq.len().saturating_sub(1) {
            if seq[i] > seq[i + 1] {
                seq.swap(i, i + 1);
                sign = -sign;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut i = 0;
    while i + 1 < seq.len() {
        if seq[i] == seq[i + 1] {
            sign *= sig.metric(seq[i]) as f64;
            seq.drain(i..=i + 1);
            i = i.saturating_sub(1);
        } else {
            i += 1;
        }
    }
    (seq, sign)
}

/// Entry-for-entry comparison of a built table against the symbolic oracle.
pub fn check_table_against_oracle(algebra: &Arc<Algebra>) -> (usize, usize) {
    let table = algebra.table();
    let sig = table.signature();
    let dim = table.dim();
    let mut checked = 0;
    let mut mismatches = 0;
    for j in 0..dim {
        for k in 0..dim {
            let (expected_pos, expected_sign) = symbolic_blade_product(
                &sig,
                &table.blade(j).positions(),
                &table.blade(k).positions(),
            );
            let (target, sign) = table.product(j, k);
            let ok = if expected_sign == 0.0 {
                sign == 0.0
            } else {
                sign == expected_sign && target == algebra.blade_index(&expected_pos)
            };
            checked += 1;
            if !ok {
                mismatches += 1;
            }
        }
    }
    (checked, mismatches)
}

pub fn random_multivector(algebra: &Arc<Algebra>, rng: &mut impl Rng) -> Multivector {
    let coeffs = (0..algebra.blade_count())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    algebra.from_coeffs(coeffs).expect("length matches")
}

fn all_signatures_up_to(n_max: usize) -> Vec<Signature> {
    let mut sigs = Vec::new();
    for n in 0..=n_max {
        for p in 0..=n {
            for q in 0..=(n - p) {
                sigs.push(Signature::new(p, q, n - p - q).expect("within cap"));
            }
        }
    }
    sigs
}

fn standard_algebras() -> Vec<Arc<Algebra>> {
    [(2, 0, 0), (3, 0, 0), (3, 0, 1), (1, 1, 0)]
        .into_iter()
        .map(|(p, q, r)| Algebra::from_pqr(p, q, r).expect("small signature"))
        .collect()
}

/// Full ga_core invariant suite.
pub fn algebra_suite(seed: u64) -> Vec<PropertyReport> {
    let mut reports = Vec::new();

    // Cayley oracle equivalence for every signature with n <= 5.
    let mut entries = 0;
    let mut bad = 0;
    let mut tables = 0;
    for sig in all_signatures_up_to(5) {
        let algebra = Algebra::new(sig).expect("within cap");
        let (checked, mismatches) = check_table_against_oracle(&algebra);
        entries += checked;
        bad += mismatches;
        tables += 1;
    }
    reports.push(PropertyReport::boolean(
        format!("cayley-oracle: {tables} tables ({entries} entries) vs symbolic products"),
        entries,
        bad == 0,
    ));

    // Anticommutation of distinct basis vectors, read off the table exactly.
    let mut checks = 0;
    let mut ok = true;
    for algebra in standard_algebras() {
        let table = algebra.table();
        let n = algebra.dim();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let bi = algebra.vector_blade_index(i);
                let bj = algebra.vector_blade_index(j);
                let (tij, sij) = table.product(bi, bj);
                let (tji, sji) = table.product(bj, bi);
                ok &= tij == tji && sij == -sji && sij != 0.0;
                checks += 1;
            }
        }
    }
    reports.push(PropertyReport::boolean(
        "anticommutation: e_i e_j = -e_j e_i for i != j",
        checks,
        ok,
    ));

    // Associativity / distributivity / scalar commutation on random triples.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assoc_err: f64 = 0.0;
    let mut dist_err: f64 = 0.0;
    let mut scalar_err: f64 = 0.0;
    let mut triples = 0;
    for algebra in standard_algebras() {
        for _ in 0..1000 {
            let x = random_multivector(&algebra, &mut rng);
            let y = random_multivector(&algebra, &mut rng);
            let z = random_multivector(&algebra, &mut rng);
            let xy_z = x
                .geometric_product(&y)
                .unwrap()
                .geometric_product(&z)
                .unwrap();
            let x_yz = x
                .geometric_product(&y.geometric_product(&z).unwrap())
                .unwrap();
            assoc_err = assoc_err.max(xy_z.max_abs_diff(&x_yz));

            let x_y_plus_z = x.geometric_product(&y.add(&z).unwrap()).unwrap();
            let xy_plus_xz = x
                .geometric_product(&y)
                .unwrap()
                .add(&x.geometric_product(&z).unwrap())
                .unwrap();
            dist_err = dist_err.max(x_y_plus_z.max_abs_diff(&xy_plus_xz));

            let lambda: f64 = rng.random_range(-2.0..2.0);
            let ls = algebra.scalar(lambda);
            let left = ls.geometric_product(&x).unwrap();
            let right = x.geometric_product(&ls).unwrap();
            scalar_err = scalar_err.max(left.max_abs_diff(&right).max(
                left.max_abs_diff(&x.scaled(lambda)),
            ));
            triples += 1;
        }
    }
    reports.push(PropertyReport::new(
        "associativity: (xy)z = x(yz) on random triples",
        triples,
        assoc_err,
        PRODUCT_TOL,
    ));
    reports.push(PropertyReport::new(
        "distributivity: x(y+z) = xy + xz on random triples",
        triples,
        dist_err,
        PRODUCT_TOL,
    ));
    reports.push(PropertyReport::new(
        "scalar commutation: (s)x = x(s) = s*x",
        triples,
        scalar_err,
        PRODUCT_TOL,
    ));

    // Even subalgebra of G(2,0,0) multiplies like complex numbers.
    let g2 = Algebra::from_pqr(2, 0, 0).unwrap();
    let e12 = g2.blade_index(&[0, 1]);
    let mut complex_err: f64 = 0.0;
    for _ in 0..500 {
        let (a, b, c, d) = (
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let mut u = g2.scalar(a);
        u.set_coeff(e12, b);
        let mut v = g2.scalar(c);
        v.set_coeff(e12, d);
        let w = u.geometric_product(&v).unwrap();
        complex_err = complex_err
            .max((w.scalar_part() - (a * c - b * d)).abs())
            .max((w.coeff(e12) - (a * d + b * c)).abs());
    }
    reports.push(PropertyReport::new(
        "even subalgebra of G(2,0,0) = complex multiplication",
        500,
        complex_err,
        1e-14,
    ));

    // Even subalgebra of G(3,0,0) satisfies the quaternion table under
    // i = e12, j = e13, k = -e23.
    let g3 = Algebra::from_pqr(3, 0, 0).unwrap();
    let i_mv = g3.basis_from_labels(&[1, 2]).unwrap();
    let j_mv = g3.basis_from_labels(&[1, 3]).unwrap();
    let k_mv = g3.basis_from_labels(&[2, 3]).unwrap().scaled(-1.0);
    let one = g3.scalar(1.0);
    let cases: Vec<(&Multivector, &Multivector, Multivector)> = vec![
        (&i_mv, &i_mv, one.scaled(-1.0)),
        (&j_mv, &j_mv, one.scaled(-1.0)),
        (&k_mv, &k_mv, one.scaled(-1.0)),
        (&i_mv, &j_mv, k_mv.clone()),
        (&j_mv, &k_mv, i_mv.clone()),
        (&k_mv, &i_mv, j_mv.clone()),
        (&j_mv, &i_mv, k_mv.scaled(-1.0)),
        (&k_mv, &j_mv, i_mv.scaled(-1.0)),
        (&i_mv, &k_mv, j_mv.scaled(-1.0)),
    ];
    let mut quat_err: f64 = 0.0;
    for (a, b, expected) in &cases {
        let got = a.geometric_product(b).unwrap();
        quat_err = quat_err.max(got.max_abs_diff(expected));
    }
    reports.push(PropertyReport::new(
        "even subalgebra of G(3,0,0) = quaternion table",
        cases.len(),
        quat_err,
        0.0,
    ));

    reports
}

/// Random invertible plane (grade-1 element); in degenerate algebras the
/// e0 coefficient is free but the Euclidean normal stays away from zero.
pub fn random_plane(algebra: &Arc<Algebra>, rng: &mut impl Rng) -> Multivector {
    let sig = algebra.signature();
    loop {
        let comps: Vec<f64> = (0..algebra.dim())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let v = algebra.vector(&comps).expect("component count matches");
        let norm_sq: f64 = comps
            .iter()
            .enumerate()
            .map(|(i, c)| sig.metric(i) as f64 * c * c)
            .sum();
        if norm_sq.abs() > 0.1 {
            return v.scaled(1.0 / norm_sq.abs().sqrt());
        }
    }
}

/// Random even versor as a product of 2 or 4 random unit planes.
pub fn random_even_versor(algebra: &Arc<Algebra>, rng: &mut impl Rng) -> crate::pga::Versor {
    let k = if rng.random_bool(0.5) { 2 } else { 4 };
    let planes: Vec<Multivector> = (0..k.min(algebra.dim()))
        .map(|_| random_plane(algebra, rng))
        .collect();
    crate::pga::compose_reflections(&planes).expect("unit planes are invertible")
}

/// Pin-action invariant suite: grade preservation, isometry, double cover,
/// outermorphism multiplicativity, and Cartan-Dieudonne orthogonality.
pub fn pin_suite(seed: u64) -> Vec<PropertyReport> {
    use crate::pga::{compose_reflections, Parity};

    let mut reports = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g3 = Algebra::from_pqr(3, 0, 0).unwrap();
    let pga = Algebra::from_pqr(3, 0, 1).unwrap();

    // Grade preservation under random even versors.
    let mut off_grade: f64 = 0.0;
    let mut checks = 0;
    for algebra in [&g3, &pga] {
        for _ in 0..500 {
            let u = random_even_versor(algebra, &mut rng);
            let k = rng.random_range(0..=algebra.dim());
            let v = random_multivector(algebra, &mut rng)
                .grade_part(k)
                .unwrap();
            let out = u.pin_action(&v).unwrap();
            for g in 0..=algebra.dim() {
                if g != k {
                    off_grade = off_grade.max(out.grade_part(g).unwrap().max_abs());
                }
            }
            checks += 1;
        }
    }
    reports.push(PropertyReport::new(
        "grade preservation: even versors map k-vectors to k-vectors",
        checks,
        off_grade,
        1e-10,
    ));

    // Isometry: normalized versors preserve vector norms in G(3,0,0).
    let mut iso_err: f64 = 0.0;
    for _ in 0..1000 {
        let u = random_even_versor(&g3, &mut rng).normalize().unwrap();
        let v = random_multivector(&g3, &mut rng).grade_part(1).unwrap();
        let before = v.norm().unwrap();
        let after = u.pin_action(&v).unwrap().norm().unwrap();
        if before > 1e-6 {
            iso_err = iso_err.max((after - before).abs() / before);
        }
    }
    reports.push(PropertyReport::new(
        "isometry: |u v u^-1| = |v| for normalized u in G(3,0,0)",
        1000,
        iso_err,
        1e-10,
    ));

    // Double cover: u and -u act identically (bit-level).
    let mut cover_ok = true;
    for _ in 0..500 {
        let u = random_even_versor(&pga, &mut rng);
        let v = random_multivector(&pga, &mut rng);
        let a = u.pin_action(&v).unwrap();
        let b = u.negated().pin_action(&v).unwrap();
        cover_ok &= a.coeffs() == b.coeffs();
    }
    reports.push(PropertyReport::boolean(
        "double cover: pin(u, .) == pin(-u, .) bit-for-bit",
        500,
        cover_ok,
    ));

    // Outermorphism: pin(u, xy) = pin(u, x) pin(u, y) for even u.
    let mut outer_err: f64 = 0.0;
    for algebra in [&g3, &pga] {
        for _ in 0..300 {
            let u = random_even_versor(algebra, &mut rng);
            let x = random_multivector(algebra, &mut rng);
            let y = random_multivector(algebra, &mut rng);
            let lhs = u.pin_action(&x.geometric_product(&y).unwrap()).unwrap();
            let rhs = u
                .pin_action(&x)
                .unwrap()
                .geometric_product(&u.pin_action(&y).unwrap())
                .unwrap();
            outer_err = outer_err.max(lhs.max_abs_diff(&rhs));
        }
    }
    reports.push(PropertyReport::new(
        "outermorphism: pin(u, xy) = pin(u,x) pin(u,y) for even u",
        600,
        outer_err,
        1e-9,
    ));

    // Cartan-Dieudonne at n=3: compositions of <= 3 unit planes induce
    // orthogonal 3x3 maps with determinant (-1)^k.
    let mut ortho_err: f64 = 0.0;
    let mut det_err: f64 = 0.0;
    for _ in 0..300 {
        let k = rng.random_range(1..=3usize);
        let planes: Vec<Multivector> = (0..k).map(|_| random_plane(&g3, &mut rng)).collect();
        let u = compose_reflections(&planes).unwrap();
        debug_assert_eq!(
            u.parity(),
            if k % 2 == 0 { Parity::Even } else { Parity::Odd }
        );
        let mut m = [[0.0f64; 3]; 3];
        for (col, basis) in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
            .iter()
            .enumerate()
        {
            let image = u.pin_action(&g3.vector(basis).unwrap()).unwrap();
            for row in 0..3 {
                m[row][col] = image.coeff(1 + row);
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|t| m[t][i] * m[t][j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                ortho_err = ortho_err.max((dot - expected).abs());
            }
        }
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        let expected_det = if k % 2 == 0 { 1.0 } else { -1.0 };
        det_err = det_err.max((det - expected_det).abs());
    }
    reports.push(PropertyReport::new(
        "Cartan-Dieudonne: <=3 reflections give orthogonal maps, det=(-1)^k",
        300,
        ortho_err.max(det_err),
        1e-9,
    ));

    reports
}

/// Same suite but run against an externally supplied (possibly corrupted)
/// algebra; used by the verification self-test hook.
pub fn algebra_suite_for(algebra: &Arc<Algebra>, seed: u64) -> Vec<PropertyReport> {
    let (checked, mismatches) = check_table_against_oracle(algebra);
    let mut reports = vec![PropertyReport::boolean(
        format!(
            "cayley-oracle: table for {} vs symbolic products",
            algebra.signature()
        ),
        checked,
        mismatches == 0,
    )];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assoc_err: f64 = 0.0;
    for _ in 0..200 {
        let x = random_multivector(algebra, &mut rng);
        let y = random_multivector(algebra, &mut rng);
        let z = random_multivector(algebra, &mut rng);
        let xy_z = x
            .geometric_product(&y)
            .unwrap()
            .geometric_product(&z)
            .unwrap();
        let x_yz = x
            .geometric_product(&y.geometric_product(&z).unwrap())
            .unwrap();
        assoc_err = assoc_err.max(xy_z.max_abs_diff(&x_yz));
    }
    reports.push(PropertyReport::new(
        "associativity on random triples",
        200,
        assoc_err,
        PRODUCT_TOL,
    ));
    reports
}
