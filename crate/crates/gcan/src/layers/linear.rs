//! Group-action linear layer: out[o] = sum_i w[o,i] * a[o,i] x[i] a[o,i]^-1.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::batch::{BatchDims, MultivectorBatch};
use super::mix::ActionMix;
use crate::algebra::Algebra;
use crate::error::{Error, Result};
use crate::train::{ParamId, ParamStore};

/// Configuration for [`GcaLinear`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GcaLinearConfig {
    pub c_in: usize,
    pub c_out: usize,
    /// Parameterized action blades (canonical indices).
    pub blade_mask: Vec<usize>,
    /// Data subspace; `None` keeps all 2^n blades.
    pub active_blades: Option<Vec<usize>>,
    /// Std-dev of the non-scalar action components at init.
    pub action_std: f64,
}

impl GcaLinearConfig {
    pub fn new(c_in: usize, c_out: usize, blade_mask: Vec<usize>) -> Self {
        Self {
            c_in,
            c_out,
            blade_mask,
            active_blades: None,
            action_std: 0.05,
        }
    }

    pub fn with_active(mut self, active: Vec<usize>) -> Self {
        self.active_blades = Some(active);
        self
    }
}

pub struct GcaLinear {
    mix: ActionMix,
    c_in: usize,
    c_out: usize,
}

pub struct GcaLinearCache {
    x_compact: Vec<f64>,
    mats: super::mix::MixMatrices,
    batch: usize,
}

impl GcaLinear {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        algebra: Arc<Algebra>,
        cfg: &GcaLinearConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let mix = ActionMix::register(
            store,
            name,
            algebra,
            cfg.blade_mask.clone(),
            cfg.active_blades.clone(),
            cfg.c_out,
            cfg.c_in,
            cfg.c_in,
            cfg.action_std,
            rng,
        )?;
        Ok(Self {
            mix,
            c_in: cfg.c_in,
            c_out: cfg.c_out,
        })
    }

    pub fn weight_id(&self) -> ParamId {
        self.mix.w
    }

    pub fn action_id(&self) -> ParamId {
        self.mix.a
    }

    pub fn active_blades(&self) -> &[usize] {
        self.mix.kernel.active()
    }

    /// Effective dense mixing matrix (c_out*V) x (c_in*V): the scalar
    /// weights folded with the realized sandwich matrices.
    pub fn folded_weights(&self, store: &ParamStore) -> Result<Vec<f64>> {
        Ok(self.mix.build(store)?.w_mat)
    }

    fn check_input(&self, x: &MultivectorBatch) -> Result<usize> {
        let BatchDims::Flat { batch, channels } = x.dims() else {
            return Err(Error::ShapeMismatch {
                context: "gca_linear expects a flat (batch, channels) input".into(),
            });
        };
        if channels != self.c_in {
            return Err(Error::ShapeMismatch {
                context: format!("gca_linear expects {} channels, got {channels}", self.c_in),
            });
        }
        if x.algebra().signature() != self.mix.kernel.algebra().signature() {
            return Err(Error::SignatureMismatch {
                left: self.mix.kernel.algebra().signature().to_string(),
                right: x.algebra().signature().to_string(),
            });
        }
        Ok(batch)
    }

    fn gather(&self, x: &MultivectorBatch, batch: usize, channels: usize) -> Vec<f64> {
        let active = self.mix.kernel.active();
        let v = active.len();
        let nb = x.blade_count();
        let mut out = vec![0.0; batch * channels * v];
        let coeffs = x.coeffs();
        for slot in 0..batch * channels {
            let src = &coeffs[slot * nb..(slot + 1) * nb];
            let dst = &mut out[slot * v..(slot + 1) * v];
            for (u, &b) in active.iter().enumerate() {
                dst[u] = src[b];
            }
        }
        out
    }

    fn scatter(
        &self,
        compact: &[f64],
        batch: usize,
        channels: usize,
        algebra: Arc<Algebra>,
    ) -> MultivectorBatch {
        let active = self.mix.kernel.active();
        let v = active.len();
        let mut out = MultivectorBatch::zeros(algebra, BatchDims::Flat { batch, channels });
        let nb = out.blade_count();
        let coeffs = out.coeffs_mut();
        for slot in 0..batch * channels {
            let src = &compact[slot * v..(slot + 1) * v];
            let dst = &mut coeffs[slot * nb..(slot + 1) * nb];
            for (u, &b) in active.iter().enumerate() {
                dst[b] = src[u];
            }
        }
        out
    }

    pub fn forward(
        &self,
        store: &ParamStore,
        x: &MultivectorBatch,
    ) -> Result<(MultivectorBatch, GcaLinearCache)> {
        let batch = self.check_input(x)?;
        let mats = self.mix.build(store)?;
        let x_compact = self.gather(x, batch, self.c_in);
        let y_compact = self.mix.forward_compact(&mats, &x_compact, batch);
        let y = self.scatter(&y_compact, batch, self.c_out, x.algebra().clone());
        Ok((
            y,
            GcaLinearCache {
                x_compact,
                mats,
                batch,
            },
        ))
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &GcaLinearCache,
        grad_out: &MultivectorBatch,
    ) -> Result<MultivectorBatch> {
        let BatchDims::Flat { batch, channels } = grad_out.dims() else {
            return Err(Error::ShapeMismatch {
                context: "gca_linear backward expects a flat gradient".into(),
            });
        };
        if channels != self.c_out || batch != cache.batch {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "gradient dims ({batch},{channels}) do not match forward ({}, {})",
                    cache.batch, self.c_out
                ),
            });
        }
        let g_compact = self.gather(grad_out, batch, self.c_out);
        let gx_compact =
            self.mix
                .backward_compact(store, &cache.mats, &cache.x_compact, &g_compact, batch);
        Ok(self.scatter(&gx_compact, batch, self.c_in, grad_out.algebra().clone()))
    }
}
