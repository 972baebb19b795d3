//! Action kernels: matrices that implement multiplication by an action
//! multivector and the derived sandwich a x a^(-1), restricted to the data
//! subspace a layer operates on.

use std::sync::Arc;

use crate::algebra::{Algebra, AlgebraExt, Multivector, NULL_VERSOR_TOL};
use crate::error::{Error, Result};

/// Dense matrix reproducing left-multiplication by `a`:
/// (L x)[t] = (a x)[t] = sum_{j,u} M[t][j][u] a[j] x[u].
pub fn left_mult_matrix(algebra: &Algebra, a: &[f64]) -> Vec<f64> {
    let table = algebra.table();
    let dim = table.dim();
    debug_assert_eq!(a.len(), dim);
    let mut l = vec![0.0; dim * dim];
    for (j, &aj) in a.iter().enumerate() {
        if aj == 0.0 {
            continue;
        }
        for u in 0..dim {
            let (t, s) = table.product(j, u);
            if s != 0.0 {
                l[t * dim + u] += s * aj;
            }
        }
    }
    l
}

/// Dense matrix reproducing right-multiplication by `c`:
/// (R x)[v] = (x c)[v] = sum_{t,k} M[v][t][k] x[t] c[k].
pub fn right_mult_matrix(algebra: &Algebra, c: &[f64]) -> Vec<f64> {
    let table = algebra.table();
    let dim = table.dim();
    debug_assert_eq!(c.len(), dim);
    let mut r = vec![0.0; dim * dim];
    for (k, &ck) in c.iter().enumerate() {
        if ck == 0.0 {
            continue;
        }
        for t in 0..dim {
            let (v, s) = table.product(t, k);
            if s != 0.0 {
                r[v * dim + t] += s * ck;
            }
        }
    }
    r
}

/// The pair of contraction kernels for the sandwich a x a^(-1):
/// `left` multiplies by a on the left, `right` by a^(-1) on the right.
#[derive(Clone, Debug)]
pub struct CliffordKernelPair {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub dim: usize,
}

impl CliffordKernelPair {
    pub fn apply_left(&self, x: &[f64]) -> Vec<f64> {
        self.apply(&self.left, x)
    }

    pub fn apply_right(&self, x: &[f64]) -> Vec<f64> {
        self.apply(&self.right, x)
    }

    fn apply(&self, m: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for v in 0..self.dim {
            let row = &m[v * self.dim..(v + 1) * self.dim];
            out[v] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        out
    }
}

/// Builds the kernel pair from an action: left-multiplication by `a` and
/// right-multiplication by the versor inverse of `a`.
pub fn get_clifford_kernel(algebra: &Arc<Algebra>, a: &Multivector) -> Result<CliffordKernelPair> {
    let inverse = a.versor_inverse()?;
    Ok(CliffordKernelPair {
        left: left_mult_matrix(algebra, a.coeffs()),
        right: right_mult_matrix(algebra, inverse.coeffs()),
        dim: algebra.blade_count(),
    })
}

/// Closed-form 3x3 matrix equivalent to the G(3,0,0) sandwich a x rev(a)
/// on vectors, for actions with scalar + bivector components
/// (a0, a12, a13, a23). For unit actions this is the rotation matrix; in
/// general R = (a rev(a)) times a rotation, and the trivector components of
/// the sandwich cancel identically.
pub fn rotational_kernel_g300(a: &Multivector) -> Result<[[f64; 3]; 3]> {
    let algebra = a.algebra();
    let sig = algebra.signature();
    if (sig.p, sig.q, sig.r) != (3, 0, 0) {
        return Err(Error::InvalidConfig(format!(
            "rotational kernel needs G(3,0,0), got {sig}"
        )));
    }
    for (i, &c) in a.coeffs().iter().enumerate() {
        if c != 0.0 && algebra.grade_of(i) % 2 == 1 {
            return Err(Error::MaskViolation { blade: i });
        }
    }
    if a.coeff(7) != 0.0 {
        return Err(Error::MaskViolation { blade: 7 });
    }
    let a0 = a.coeff(0);
    let a12 = a.coeff(4);
    let a13 = a.coeff(5);
    let a23 = a.coeff(6);
    Ok([
        [
            a0 * a0 - a12 * a12 - a13 * a13 + a23 * a23,
            2.0 * a0 * a12 - 2.0 * a23 * a13,
            2.0 * a0 * a13 + 2.0 * a12 * a23,
        ],
        [
            -2.0 * a0 * a12 - 2.0 * a13 * a23,
            a0 * a0 - a12 * a12 + a13 * a13 - a23 * a23,
            2.0 * a0 * a23 - 2.0 * a12 * a13,
        ],
        [
            -2.0 * a0 * a13 + 2.0 * a12 * a23,
            -2.0 * a0 * a23 - 2.0 * a12 * a13,
            a12 * a12 + a0 * a0 - a13 * a13 - a23 * a23,
        ],
    ])
}

/// Per-layer sandwich machinery for one (blade mask, data subspace) pair.
///
/// The mask lists the parameterized action blades; `active` lists the blade
/// indices the data lives on (the full algebra by default). Restricting to
/// a closed subspace is exact for versor actions by grade preservation and
/// projects drifted actions back onto the geometric template.
#[derive(Clone, Debug)]
pub struct ActionKernel {
    algebra: Arc<Algebra>,
    mask: Vec<usize>,
    active: Vec<usize>,
    parity_odd: bool,
    /// kappa[j] = reversion_sign * self_product per mask entry, so that
    /// scalar(reverse(a) a) = sum_j kappa[j] a[j]^2.
    kappa: Vec<f64>,
    rev_sign: Vec<f64>,
    parity_sign: Vec<f64>,
}

/// Forward cache for one action: the restricted sandwich matrix plus the
/// intermediates the analytic backward pass needs.
#[derive(Clone, Debug)]
pub struct SandwichData {
    /// Restricted sandwich matrix, row-major `active x active`, with the
    /// (-1)^(kl) orientation prefactor folded in.
    pub matrix: Vec<f64>,
    /// Columns of a * e_u for u in `active`, each a full-width vector.
    la_cols: Vec<f64>,
    /// Masked action coefficients.
    a_masked: Vec<f64>,
    /// scalar(reverse(a) a).
    pub study_scalar: f64,
}

impl ActionKernel {
    pub fn new(
        algebra: Arc<Algebra>,
        mask: Vec<usize>,
        active: Option<Vec<usize>>,
    ) -> Result<Self> {
        let dim = algebra.blade_count();
        let mut sorted = mask.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != mask.len() || mask.iter().any(|&b| b >= dim) {
            return Err(Error::InvalidConfig(
                "blade mask must be a set of valid blade indices".into(),
            ));
        }
        let active = active.unwrap_or_else(|| (0..dim).collect());
        if active.is_empty() || active.iter().any(|&b| b >= dim) {
            return Err(Error::InvalidConfig("invalid active blade set".into()));
        }
        let parity_odd = sorted.iter().all(|&b| algebra.grade_of(b) % 2 == 1);
        let kappa = sorted
            .iter()
            .map(|&b| algebra.reversion_sign(b) * algebra.self_product(b))
            .collect();
        let rev_sign = sorted.iter().map(|&b| algebra.reversion_sign(b)).collect();
        let parity_sign = active
            .iter()
            .map(|&b| {
                if parity_odd && algebra.grade_of(b) % 2 == 1 {
                    -1.0
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self {
            algebra,
            mask: sorted,
            active,
            parity_odd,
            kappa,
            rev_sign,
            parity_sign,
        })
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.algebra
    }

    pub fn mask(&self) -> &[usize] {
        &self.mask
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn mask_len(&self) -> usize {
        self.mask.len()
    }

    pub fn active_len(&self) -> usize {
        self.active.len()
    }

    pub fn is_parity_odd(&self) -> bool {
        self.parity_odd
    }

    /// scalar(reverse(a) a) for masked coefficients.
    pub fn study_scalar(&self, a_masked: &[f64]) -> f64 {
        self.kappa
            .iter()
            .zip(a_masked)
            .map(|(k, a)| k * a * a)
            .sum()
    }

    /// Builds the restricted sandwich matrix for one action. Errors when
    /// the action is not invertible.
    pub fn sandwich(&self, a_masked: &[f64]) -> Result<SandwichData> {
        debug_assert_eq!(a_masked.len(), self.mask.len());
        let table = self.algebra.table();
        let dim = self.algebra.blade_count();
        let v_len = self.active.len();

        let s = self.study_scalar(a_masked);
        if s.abs() <= NULL_VERSOR_TOL {
            return Err(Error::NullVersor { scalar: s });
        }
        // inverse coefficients over the mask: reverse(a)/s
        let c_masked: Vec<f64> = self
            .rev_sign
            .iter()
            .zip(a_masked)
            .map(|(r, a)| r * a / s)
            .collect();

        let mut la_cols = vec![0.0; v_len * dim];
        let mut matrix = vec![0.0; v_len * v_len];
        let mut row_of = vec![usize::MAX; dim];
        for (row, &b) in self.active.iter().enumerate() {
            row_of[b] = row;
        }
        for (ucol, &ub) in self.active.iter().enumerate() {
            let la = &mut la_cols[ucol * dim..(ucol + 1) * dim];
            for (jm, &jb) in self.mask.iter().enumerate() {
                let aj = a_masked[jm];
                if aj == 0.0 {
                    continue;
                }
                let (t, sg) = table.product(jb, ub);
                if sg != 0.0 {
                    la[t] += sg * aj;
                }
            }
            // multiply by the inverse on the right, keep active rows
            for t in 0..dim {
                let lt = la[t];
                if lt == 0.0 {
                    continue;
                }
                for (km, &kb) in self.mask.iter().enumerate() {
                    let ck = c_masked[km];
                    if ck == 0.0 {
                        continue;
                    }
                    let (v, sg) = table.product(t, kb);
                    if sg != 0.0 && row_of[v] != usize::MAX {
                        matrix[row_of[v] * v_len + ucol] += sg * lt * ck;
                    }
                }
            }
        }
        for (row, &ps) in self.parity_sign.iter().enumerate() {
            if ps < 0.0 {
                for u in 0..v_len {
                    matrix[row * v_len + u] = -matrix[row * v_len + u];
                }
            }
        }
        Ok(SandwichData {
            matrix,
            la_cols,
            a_masked: a_masked.to_vec(),
            study_scalar: s,
        })
    }

    /// Gradient of a scalar loss with respect to the masked action, given
    /// the gradient with respect to the (prefactor-folded) sandwich matrix.
    pub fn grad_action(&self, data: &SandwichData, grad_matrix: &[f64]) -> Vec<f64> {
        let table = self.algebra.table();
        let dim = self.algebra.blade_count();
        let v_len = self.active.len();
        let m_len = self.mask.len();
        debug_assert_eq!(grad_matrix.len(), v_len * v_len);

        // unfold the orientation prefactor
        let mut gs = grad_matrix.to_vec();
        for (row, &ps) in self.parity_sign.iter().enumerate() {
            if ps < 0.0 {
                for u in 0..v_len {
                    gs[row * v_len + u] = -gs[row * v_len + u];
                }
            }
        }

        let s = data.study_scalar;
        let a = &data.a_masked;
        let c_masked: Vec<f64> = self
            .rev_sign
            .iter()
            .zip(a)
            .map(|(r, av)| r * av / s)
            .collect();

        let mut row_of = vec![usize::MAX; dim];
        for (row, &b) in self.active.iter().enumerate() {
            row_of[b] = row;
        }

        // R(c)[v_row, t] = coeff_v(e_t c) for v in active
        let mut rc = vec![0.0; v_len * dim];
        for t in 0..dim {
            for (km, &kb) in self.mask.iter().enumerate() {
                let ck = c_masked[km];
                if ck == 0.0 {
                    continue;
                }
                let (v, sg) = table.product(t, kb);
                if sg != 0.0 && row_of[v] != usize::MAX {
                    rc[row_of[v] * dim + t] += sg * ck;
                }
            }
        }

        // direct path: dS[v,u]/da_j = sign(j,u) R(c)[v, target(j,u)]
        let mut grad_a = vec![0.0; m_len];
        for (jm, &jb) in self.mask.iter().enumerate() {
            let mut acc = 0.0;
            for (ucol, &ub) in self.active.iter().enumerate() {
                let (t, sg) = table.product(jb, ub);
                if sg == 0.0 {
                    continue;
                }
                for vrow in 0..v_len {
                    acc += gs[vrow * v_len + ucol] * sg * rc[vrow * dim + t];
                }
            }
            grad_a[jm] = acc;
        }

        // inverse path: P[v,t] = sum_u gs[v,u] La[t,u]
        let mut p = vec![0.0; v_len * dim];
        for vrow in 0..v_len {
            for (ucol, _) in self.active.iter().enumerate() {
                let g = gs[vrow * v_len + ucol];
                if g == 0.0 {
                    continue;
                }
                let la = &data.la_cols[ucol * dim..(ucol + 1) * dim];
                for t in 0..dim {
                    p[vrow * dim + t] += g * la[t];
                }
            }
        }
        let mut grad_c = vec![0.0; m_len];
        for (km, &kb) in self.mask.iter().enumerate() {
            let mut acc = 0.0;
            for t in 0..dim {
                let (v, sg) = table.product(t, kb);
                if sg != 0.0 && row_of[v] != usize::MAX {
                    acc += sg * p[row_of[v] * dim + t];
                }
            }
            grad_c[km] = acc;
        }
        // chain c = reverse(a)/s through to a
        let dot: f64 = grad_c
            .iter()
            .zip(self.rev_sign.iter())
            .zip(a.iter())
            .map(|((gc, r), av)| gc * r * av)
            .sum();
        for jm in 0..m_len {
            grad_a[jm] += self.rev_sign[jm] * grad_c[jm] / s
                - 2.0 * self.kappa[jm] * a[jm] / (s * s) * dot;
        }
        grad_a
    }

    /// Expands masked coefficients into a full-width multivector.
    pub fn unmask(&self, a_masked: &[f64]) -> Multivector {
        let mut m = self.algebra.zero();
        for (jm, &jb) in self.mask.iter().enumerate() {
            m.set_coeff(jb, a_masked[jm]);
        }
        m
    }

    /// Extracts masked coefficients, requiring off-mask mass below 1e-12.
    pub fn mask_coeffs(&self, m: &Multivector) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.mask.len()];
        let mut in_mask = vec![false; self.algebra.blade_count()];
        for (jm, &jb) in self.mask.iter().enumerate() {
            out[jm] = m.coeff(jb);
            in_mask[jb] = true;
        }
        for (i, &c) in m.coeffs().iter().enumerate() {
            if !in_mask[i] && c.abs() > 1e-12 {
                return Err(Error::MaskViolation { blade: i });
            }
        }
        Ok(out)
    }

    /// Normalizes masked coefficients to an exact unit versor where the
    /// algebra permits: scales by the study norm, then cancels any central
    /// nilpotent defect (the dual part of a motor) by Newton correction.
    pub fn normalize_versor(&self, a_masked: &[f64]) -> Result<Vec<f64>> {
        let mut a = self.unmask(a_masked);
        let s = self.study_scalar(a_masked);
        if s.abs() <= NULL_VERSOR_TOL {
            return Err(Error::NullVersor { scalar: s });
        }
        a = a.scaled(1.0 / s.abs().sqrt());
        for _ in 0..3 {
            let p = a.geometric_product(&a.reverse())?;
            let mut defect = p.clone();
            defect.set_coeff(0, p.scalar_part() - 1.0);
            if defect.max_abs() < 1e-15 {
                break;
            }
            // a <- a (1 - defect/2); exact when the defect is nilpotent and
            // central, which holds for the motor algebras used here
            let correction = a.algebra().scalar(1.0).sub(&defect.scaled(0.5))?;
            a = a.geometric_product(&correction)?;
        }
        self.mask_coeffs(&a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Algebra;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_mv(algebra: &Arc<Algebra>, rng: &mut impl Rng) -> Multivector {
        let coeffs = (0..algebra.blade_count())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        algebra.from_coeffs(coeffs).unwrap()
    }

    #[test]
    fn kernel_pair_for_identity_action_is_identity() {
        let algebra = Algebra::from_pqr(2, 0, 0).unwrap();
        let one = algebra.scalar(1.0);
        let pair = get_clifford_kernel(&algebra, &one).unwrap();
        let x = vec![0.3, -0.7, 0.2, 0.9];
        assert_eq!(pair.apply_left(&x), x);
        assert_eq!(pair.apply_right(&x), x);
    }

    #[test]
    fn left_kernel_matches_direct_product() {
        let algebra = Algebra::from_pqr(2, 0, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = random_mv(&algebra, &mut rng);
            let x = random_mv(&algebra, &mut rng);
            let l = left_mult_matrix(&algebra, a.coeffs());
            let pair = CliffordKernelPair {
                left: l,
                right: vec![0.0; 16],
                dim: 4,
            };
            let got = pair.apply_left(x.coeffs());
            let expected = a.geometric_product(&x).unwrap();
            for (g, e) in got.iter().zip(expected.coeffs()) {
                assert!((g - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_composition_equals_sandwich() {
        let algebra = Algebra::from_pqr(3, 0, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            // invertible even action
            let mut a = algebra.scalar(rng.random_range(0.5..1.5));
            for idx in [4, 5, 6] {
                a.set_coeff(idx, rng.random_range(-0.5..0.5));
            }
            let x = random_mv(&algebra, &mut rng);
            let pair = get_clifford_kernel(&algebra, &a).unwrap();
            let got = pair.apply_right(&pair.apply_left(x.coeffs()));
            let expected = a
                .geometric_product(&x)
                .unwrap()
                .geometric_product(&a.versor_inverse().unwrap())
                .unwrap();
            for (g, e) in got.iter().zip(expected.coeffs()) {
                assert!((g - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rotational_kernel_matches_table_sandwich() {
        let algebra = Algebra::from_pqr(3, 0, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut max_err: f64 = 0.0;
        for _ in 0..1000 {
            let mut a = algebra.scalar(rng.random_range(-1.0..1.0));
            for idx in [4, 5, 6] {
                a.set_coeff(idx, rng.random_range(-1.0..1.0));
            }
            if a.reverse_product_scalar().abs() < 0.05 {
                continue;
            }
            let r = rotational_kernel_g300(&a).unwrap();
            for basis in 0..3usize {
                let mut v = [0.0; 3];
                v[basis] = 1.0;
                let x = algebra.vector(&v).unwrap();
                let sand = a
                    .geometric_product(&x)
                    .unwrap()
                    .geometric_product(&a.reverse())
                    .unwrap();
                // trivector component cancels
                assert!(sand.coeff(7).abs() < 1e-12);
                for row in 0..3 {
                    max_err = max_err.max((r[row][basis] - sand.coeff(1 + row)).abs());
                }
            }
        }
        assert!(max_err < 1e-12, "max deviation {max_err:.3e}");
    }

    #[test]
    fn rotational_kernel_examples_and_mask_violation() {
        let algebra = Algebra::from_pqr(3, 0, 0).unwrap();
        let r = rotational_kernel_g300(&algebra.scalar(1.0)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(r[i][j], if i == j { 1.0 } else { 0.0 });
            }
        }

        let s = 1.0 / 2.0f64.sqrt();
        let mut a = algebra.scalar(s);
        a.set_coeff(4, s);
        let r = rotational_kernel_g300(&a).unwrap();
        // column of e1: (a0^2 - a12^2, -2 a0 a12, 0) = (0, -1, 0)
        assert!((r[0][0]).abs() < 1e-15);
        assert!((r[1][0] + 1.0).abs() < 1e-15);
        assert!(r[2][0].abs() < 1e-15);

        let mut bad = algebra.scalar(1.0);
        bad.set_coeff(1, 0.1);
        assert!(matches!(
            rotational_kernel_g300(&bad),
            Err(Error::MaskViolation { .. })
        ));
    }

    #[test]
    fn restricted_sandwich_matches_full_sandwich_for_versors() {
        // screw-masked versor in G(3,0,1) acting on the trivector subspace
        let algebra = Algebra::from_pqr(3, 0, 1).unwrap();
        let mask: Vec<usize> = std::iter::once(0)
            .chain(algebra.grade_range(2))
            .chain(algebra.grade_range(4))
            .collect();
        let active: Vec<usize> = algebra.grade_range(3).collect();
        let kernel =
            ActionKernel::new(algebra.clone(), mask.clone(), Some(active.clone())).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let raw: Vec<f64> = (0..mask.len())
                .map(|i| if i == 0 { 1.0 } else { rng.random_range(-0.2..0.2) })
                .collect();
            let a_masked = kernel.normalize_versor(&raw).unwrap();
            let data = kernel.sandwich(&a_masked).unwrap();

            let a = kernel.unmask(&a_masked);
            let inv = a.versor_inverse().unwrap();
            for (ucol, &ub) in active.iter().enumerate() {
                let x = algebra.basis_blade(ub);
                let full = a
                    .geometric_product(&x)
                    .unwrap()
                    .geometric_product(&inv)
                    .unwrap();
                // versor action stays on the active subspace
                for (i, &c) in full.coeffs().iter().enumerate() {
                    if !active.contains(&i) {
                        assert!(c.abs() < 1e-12, "leak at blade {i}: {c}");
                    }
                }
                for (vrow, &vb) in active.iter().enumerate() {
                    let got = data.matrix[vrow * active.len() + ucol];
                    assert!((got - full.coeff(vb)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn versor_normalization_projects_onto_the_motor_manifold() {
        let algebra = Algebra::from_pqr(3, 0, 1).unwrap();
        let mask: Vec<usize> = std::iter::once(0)
            .chain(algebra.grade_range(2))
            .chain(algebra.grade_range(4))
            .collect();
        let kernel = ActionKernel::new(algebra.clone(), mask, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let raw: Vec<f64> = (0..kernel.mask_len())
                .map(|i| if i == 0 { 1.0 } else { rng.random_range(-0.3..0.3) })
                .collect();
            let normed = kernel.normalize_versor(&raw).unwrap();
            let a = kernel.unmask(&normed);
            let p = a.geometric_product(&a.reverse()).unwrap();
            assert!((p.scalar_part() - 1.0).abs() < 1e-12);
            for &c in &p.coeffs()[1..] {
                assert!(c.abs() < 1e-12);
            }
        }
    }
}
