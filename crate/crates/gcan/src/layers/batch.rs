use std::sync::Arc;

use crate::algebra::{Algebra, AlgebraExt, Multivector};
use crate::error::{Error, Result};

/// Shape of a batch: channels only, or channels over a 2D grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchDims {
    Flat {
        batch: usize,
        channels: usize,
    },
    Spatial {
        batch: usize,
        channels: usize,
        height: usize,
        width: usize,
    },
}

impl BatchDims {
    pub fn batch(&self) -> usize {
        match *self {
            BatchDims::Flat { batch, .. } | BatchDims::Spatial { batch, .. } => batch,
        }
    }

    pub fn channels(&self) -> usize {
        match *self {
            BatchDims::Flat { channels, .. } | BatchDims::Spatial { channels, .. } => channels,
        }
    }

    pub fn spatial(&self) -> Option<(usize, usize)> {
        match *self {
            BatchDims::Flat { .. } => None,
            BatchDims::Spatial { height, width, .. } => Some((height, width)),
        }
    }

    /// Number of multivector slots (product of all dims).
    pub fn positions(&self) -> usize {
        match *self {
            BatchDims::Flat { batch, channels } => batch * channels,
            BatchDims::Spatial {
                batch,
                channels,
                height,
                width,
            } => batch * channels * height * width,
        }
    }
}

/// Dense batch of multivectors: `dims x 2^n` coefficients, blade index
/// fastest-varying.
#[derive(Clone, Debug)]
pub struct MultivectorBatch {
    algebra: Arc<Algebra>,
    dims: BatchDims,
    coeffs: Vec<f64>,
}

impl MultivectorBatch {
    pub fn zeros(algebra: Arc<Algebra>, dims: BatchDims) -> Self {
        let len = dims.positions() * algebra.blade_count();
        Self {
            algebra,
            dims,
            coeffs: vec![0.0; len],
        }
    }

    pub fn from_coeffs(algebra: Arc<Algebra>, dims: BatchDims, coeffs: Vec<f64>) -> Result<Self> {
        let expected = dims.positions() * algebra.blade_count();
        if coeffs.len() != expected {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "batch wants {expected} coefficients ({dims:?} x {}), got {}",
                    algebra.blade_count(),
                    coeffs.len()
                ),
            });
        }
        Ok(Self {
            algebra,
            dims,
            coeffs,
        })
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.algebra
    }

    pub fn dims(&self) -> BatchDims {
        self.dims
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn blade_count(&self) -> usize {
        self.algebra.blade_count()
    }

    pub fn all_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Flat slot index for (batch, channel) in a flat batch.
    pub fn slot_flat(&self, b: usize, c: usize) -> usize {
        match self.dims {
            BatchDims::Flat { channels, .. } => b * channels + c,
            BatchDims::Spatial { .. } => panic!("slot_flat on a spatial batch"),
        }
    }

    /// Flat slot index for (batch, channel, y, x) in a spatial batch.
    pub fn slot_spatial(&self, b: usize, c: usize, y: usize, x: usize) -> usize {
        match self.dims {
            BatchDims::Spatial {
                channels,
                height,
                width,
                ..
            } => ((b * channels + c) * height + y) * width + x,
            BatchDims::Flat { .. } => panic!("slot_spatial on a flat batch"),
        }
    }

    pub fn slot(&self, slot: usize) -> &[f64] {
        let nb = self.blade_count();
        &self.coeffs[slot * nb..(slot + 1) * nb]
    }

    pub fn slot_mut(&mut self, slot: usize) -> &mut [f64] {
        let nb = self.blade_count();
        &mut self.coeffs[slot * nb..(slot + 1) * nb]
    }

    pub fn multivector_at(&self, slot: usize) -> Multivector {
        self.algebra
            .from_coeffs(self.slot(slot).to_vec())
            .expect("slot width matches blade count")
    }

    pub fn set_multivector(&mut self, slot: usize, m: &Multivector) {
        self.slot_mut(slot).copy_from_slice(m.coeffs());
    }

    /// Largest |coefficient| outside the given grade, across the batch.
    pub fn off_grade_mass(&self, grade: usize) -> f64 {
        let mut mass: f64 = 0.0;
        let nb = self.blade_count();
        for (i, &c) in self.coeffs.iter().enumerate() {
            if self.algebra.grade_of(i % nb) != grade {
                mass = mass.max(c.abs());
            }
        }
        mass
    }

    /// Largest |coefficient| outside the given blade set, across the batch.
    pub fn off_blade_mass(&self, blades: &[usize]) -> f64 {
        let nb = self.blade_count();
        let mut keep = vec![false; nb];
        for &b in blades {
            keep[b] = true;
        }
        let mut mass: f64 = 0.0;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if !keep[i % nb] {
                mass = mass.max(c.abs());
            }
        }
        mass
    }

    pub fn max_abs_diff(&self, other: &MultivectorBatch) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
