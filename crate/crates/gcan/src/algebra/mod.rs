//! Signatures, basis blades, Cayley tables, and multivector arithmetic.
//!
//! An [`Algebra`] is built once per signature and shared behind an `Arc`;
//! it is immutable after construction, so values can be used freely across
//! threads. All operations on [`Multivector`] are pure functions.

mod blade;
mod cayley;
mod format;
mod multivector;
mod signature;

pub use blade::{canonical_blade_order, BasisBlade};
pub use cayley::CayleyTable;
pub use format::parse_multivector;
pub use multivector::{
    Multivector, EXACT_TOL, NORM_NON_SCALAR_TOL, NULL_VERSOR_TOL, PRODUCT_TOL,
};
pub use signature::{Signature, MAX_DIM};

use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A geometric algebra: signature, canonical blade order, and Cayley table.
#[derive(Debug)]
pub struct Algebra {
    table: CayleyTable,
    grade_starts: Vec<usize>,
    grade_of: Vec<usize>,
    rev_sign: Vec<f64>,
    self_product: Vec<f64>,
}

impl Algebra {
    pub fn new(sig: Signature) -> Result<Arc<Algebra>> {
        let table = CayleyTable::build(sig)?;
        Ok(Arc::new(Self::from_table(table)))
    }

    pub fn from_pqr(p: usize, q: usize, r: usize) -> Result<Arc<Algebra>> {
        Self::new(Signature::new(p, q, r)?)
    }

    pub(crate) fn from_table(table: CayleyTable) -> Algebra {
        let n = table.signature().dim();
        let blades = table.blades();
        let mut grade_starts = vec![0usize; n + 2];
        let mut grade_of = Vec::with_capacity(blades.len());
        let mut rev_sign = Vec::with_capacity(blades.len());
        for b in blades {
            grade_of.push(b.grade());
        }
        for k in 0..=n {
            grade_starts[k + 1] = grade_starts[k] + grade_of.iter().filter(|&&g| g == k).count();
        }
        for b in blades {
            rev_sign.push(b.reversion_sign());
        }
        let mut self_product = Vec::with_capacity(blades.len());
        for i in 0..blades.len() {
            let (t, s) = table.product(i, i);
            debug_assert_eq!(t, 0);
            self_product.push(s);
        }
        Algebra {
            table,
            grade_starts,
            grade_of,
            rev_sign,
            self_product,
        }
    }

    /// Rebuilds an algebra around a (possibly corrupted) table. Test hook
    /// for verification suites; not part of the public contract.
    #[doc(hidden)]
    pub fn from_table_for_test(table: CayleyTable) -> Arc<Algebra> {
        Arc::new(Self::from_table(table))
    }

    pub fn signature(&self) -> Signature {
        self.table.signature()
    }

    /// Vector-space dimension n.
    pub fn dim(&self) -> usize {
        self.signature().dim()
    }

    /// Number of blades, 2^n.
    pub fn blade_count(&self) -> usize {
        self.table.dim()
    }

    pub fn table(&self) -> &CayleyTable {
        &self.table
    }

    pub fn blades(&self) -> &[BasisBlade] {
        self.table.blades()
    }

    /// Contiguous index range of the grade-k blades (canonical order is
    /// grade-major).
    pub fn grade_range(&self, k: usize) -> Range<usize> {
        self.grade_starts[k]..self.grade_starts[k + 1]
    }

    pub fn grade_of(&self, blade_index: usize) -> usize {
        self.grade_of[blade_index]
    }

    pub fn reversion_sign(&self, blade_index: usize) -> f64 {
        self.rev_sign[blade_index]
    }

    /// Scalar coefficient of e_u * e_u for the blade at `blade_index`.
    pub fn self_product(&self, blade_index: usize) -> f64 {
        self.self_product[blade_index]
    }

    /// Blade index of the basis vector at internal position `pos`.
    pub fn vector_blade_index(&self, pos: usize) -> usize {
        self.table.index_of(BasisBlade::from_positions(&[pos]))
    }

    /// Blade index from internal vector positions (must be distinct).
    pub fn blade_index(&self, positions: &[usize]) -> usize {
        self.table.index_of(BasisBlade::from_positions(positions))
    }
}

/// Constructors; free-standing so `Arc<Algebra>` receivers stay ergonomic.
pub trait AlgebraExt {
    fn zero(&self) -> Multivector;
    fn scalar(&self, value: f64) -> Multivector;
    fn basis_blade(&self, blade_index: usize) -> Multivector;
    fn from_coeffs(&self, coeffs: Vec<f64>) -> Result<Multivector>;
    /// Grade-1 element from components indexed by internal position.
    fn vector(&self, components: &[f64]) -> Result<Multivector>;
}

impl AlgebraExt for Arc<Algebra> {
    fn zero(&self) -> Multivector {
        Multivector::from_parts(self.clone(), vec![0.0; self.blade_count()])
    }

    fn scalar(&self, value: f64) -> Multivector {
        let mut m = self.zero();
        m.set_coeff(0, value);
        m
    }

    fn basis_blade(&self, blade_index: usize) -> Multivector {
        let mut m = self.zero();
        m.set_coeff(blade_index, 1.0);
        m
    }

    fn from_coeffs(&self, coeffs: Vec<f64>) -> Result<Multivector> {
        if coeffs.len() != self.blade_count() {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "expected {} coefficients for {}, got {}",
                    self.blade_count(),
                    self.signature(),
                    coeffs.len()
                ),
            });
        }
        Ok(Multivector::from_parts(self.clone(), coeffs))
    }

    fn vector(&self, components: &[f64]) -> Result<Multivector> {
        if components.len() != self.dim() {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "expected {} vector components for {}, got {}",
                    self.dim(),
                    self.signature(),
                    components.len()
                ),
            });
        }
        let mut m = self.zero();
        for (pos, &c) in components.iter().enumerate() {
            m.set_coeff(self.vector_blade_index(pos), c);
        }
        Ok(m)
    }
}

impl Algebra {
    /// Convenience used pervasively in tests: the multivector with a single
    /// named blade coefficient, e.g. `e(&[1,2])` for e12 (display labels).
    pub fn basis_from_labels(self: &Arc<Self>, labels: &[usize]) -> Result<Multivector> {
        let sig = self.signature();
        let mut positions = Vec::with_capacity(labels.len());
        for &l in labels {
            let pos = sig
                .position_of_label(l)
                .ok_or_else(|| Error::Parse(format!("no basis vector e{l} in {sig}")))?;
            positions.push(pos);
        }
        positions.sort_unstable();
        Ok(self.basis_blade(self.blade_index(&positions)))
    }
}
