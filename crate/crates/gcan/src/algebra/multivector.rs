use std::sync::Arc;

use super::{Algebra, AlgebraExt};
use crate::error::{Error, Result};

/// Tolerance used by property tests over geometric products.
pub const PRODUCT_TOL: f64 = 1e-10;
/// Tolerance for exact-structure checks (grade preservation and the like).
pub const EXACT_TOL: f64 = 1e-12;
/// Largest non-scalar mass allowed in reverse(x)*x before `norm` refuses.
pub const NORM_NON_SCALAR_TOL: f64 = 1e-9;
/// Scalars below this are treated as null when inverting versors.
pub const NULL_VERSOR_TOL: f64 = 1e-12;

/// Dense multivector: one f64 coefficient per basis blade in canonical order.
#[derive(Clone, Debug)]
pub struct Multivector {
    algebra: Arc<Algebra>,
    coeffs: Vec<f64>,
}

impl Multivector {
    pub(crate) fn from_parts(algebra: Arc<Algebra>, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), algebra.blade_count());
        Self { algebra, coeffs }
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.algebra
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, blade_index: usize) -> f64 {
        self.coeffs[blade_index]
    }

    pub fn set_coeff(&mut self, blade_index: usize, value: f64) {
        self.coeffs[blade_index] = value;
    }

    pub fn scalar_part(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Grades whose coefficient mass exceeds `tol`.
    pub fn grades_present(&self, tol: f64) -> Vec<usize> {
        let mut grades = Vec::new();
        for k in 0..=self.algebra.dim() {
            let range = self.algebra.grade_range(k);
            if self.coeffs[range].iter().any(|c| c.abs() > tol) {
                grades.push(k);
            }
        }
        grades
    }

    fn check_same_algebra(&self, other: &Multivector) -> Result<()> {
        if self.algebra.signature() != other.algebra.signature() {
            return Err(Error::SignatureMismatch {
                left: self.algebra.signature().to_string(),
                right: other.algebra.signature().to_string(),
            });
        }
        Ok(())
    }

    /// The geometric product, computed from the Cayley table:
    /// out[i] += M[i][j][k] * x[j] * y[k].
    pub fn geometric_product(&self, other: &Multivector) -> Result<Multivector> {
        self.check_same_algebra(other)?;
        let table = self.algebra.table();
        let dim = table.dim();
        let mut out = vec![0.0f64; dim];
        for j in 0..dim {
            let xj = self.coeffs[j];
            if xj == 0.0 {
                continue;
            }
            for k in 0..dim {
                let yk = other.coeffs[k];
                if yk == 0.0 {
                    continue;
                }
                let (i, s) = table.product(j, k);
                if s != 0.0 {
                    out[i] += s * xj * yk;
                }
            }
        }
        Ok(Multivector::from_parts(self.algebra.clone(), out))
    }

    /// Projects onto grade k, zeroing every other blade.
    pub fn grade_part(&self, k: usize) -> Result<Multivector> {
        let n = self.algebra.dim();
        if k > n {
            return Err(Error::GradeOutOfRange { grade: k, n });
        }
        let mut out = vec![0.0f64; self.coeffs.len()];
        let range = self.algebra.grade_range(k);
        out[range.clone()].copy_from_slice(&self.coeffs[range]);
        Ok(Multivector::from_parts(self.algebra.clone(), out))
    }

    /// Grade reversion: grade k scaled by (-1)^(k(k-1)/2). An involution.
    pub fn reverse(&self) -> Multivector {
        let mut out = self.coeffs.clone();
        for (i, c) in out.iter_mut().enumerate() {
            *c *= self.algebra.reversion_sign(i);
        }
        Multivector::from_parts(self.algebra.clone(), out)
    }

    /// Scalar part of reverse(x) * x, computed directly from the table
    /// diagonal. Null-metric blades contribute nothing.
    pub fn reverse_product_scalar(&self) -> f64 {
        let mut s = 0.0;
        for (i, &c) in self.coeffs.iter().enumerate() {
            let kappa = self.algebra.reversion_sign(i) * self.algebra.self_product(i);
            s += kappa * c * c;
        }
        s
    }

    /// Norm sqrt(|scalar(reverse(x) * x)|).
    ///
    /// Requires reverse(x)*x to be numerically scalar; in degenerate
    /// algebras components annihilated by the null metric simply drop out of
    /// the product (the "study norm" reading of the table arithmetic).
    pub fn norm(&self) -> Result<f64> {
        let product = self.reverse().geometric_product(self)?;
        let scalar = product.scalar_part();
        let mut mass: f64 = 0.0;
        for &c in &product.coeffs[1..] {
            mass = mass.max(c.abs());
        }
        if mass > NORM_NON_SCALAR_TOL * 1.0f64.max(scalar.abs()) {
            return Err(Error::NotVersorNormable { mass });
        }
        Ok(scalar.abs().sqrt())
    }

    /// Versor inverse reverse(u) / scalar(reverse(u) * u).
    /// Errors on null elements such as e0 in G(3,0,1).
    pub fn versor_inverse(&self) -> Result<Multivector> {
        let s = self.reverse_product_scalar();
        if s.abs() <= NULL_VERSOR_TOL {
            return Err(Error::NullVersor { scalar: s });
        }
        let mut out = self.reverse();
        for c in out.coeffs.iter_mut() {
            *c /= s;
        }
        Ok(out)
    }

    /// Dual: the product x * I with the pseudoscalar. In degenerate algebras
    /// the product may annihilate components; that is not an error.
    pub fn dual(&self) -> Multivector {
        let pseudo = self.algebra.basis_blade(self.algebra.blade_count() - 1);
        self.geometric_product(&pseudo)
            .expect("same algebra by construction")
    }

    pub fn scaled(&self, factor: f64) -> Multivector {
        let coeffs = self.coeffs.iter().map(|c| c * factor).collect();
        Multivector::from_parts(self.algebra.clone(), coeffs)
    }

    pub fn add(&self, other: &Multivector) -> Result<Multivector> {
        self.check_same_algebra(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Multivector::from_parts(self.algebra.clone(), coeffs))
    }

    pub fn sub(&self, other: &Multivector) -> Result<Multivector> {
        self.check_same_algebra(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Multivector::from_parts(self.algebra.clone(), coeffs))
    }

    /// Largest absolute coefficient difference against `other`.
    pub fn max_abs_diff(&self, other: &Multivector) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max)
    }
}

impl std::ops::Neg for &Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scaled(-1.0)
    }
}

impl PartialEq for Multivector {
    fn eq(&self, other: &Self) -> bool {
        self.algebra.signature() == other.algebra.signature() && self.coeffs == other.coeffs
    }
}
