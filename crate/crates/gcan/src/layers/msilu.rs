//! Multivector sigmoid linear unit: gates each grade-k part by
//! sigma(f_k(x)), where f_k is a linear combination of blade coefficients
//! (or a fixed sum / mean), so grades never mix.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::batch::MultivectorBatch;
use crate::algebra::Algebra;
use crate::error::{Error, Result};
use crate::train::{ParamId, ParamStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MsiLuMode {
    /// f_k(x) = sum_i beta[k,i] x_i with learnable beta.
    Linear,
    /// beta fixed to 1.
    Sum,
    /// beta fixed to 1 / 2^n.
    Mean,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MsiLuConfig {
    pub mode: MsiLuMode,
    /// When set, f_k sees the channel-mean multivector at each position
    /// instead of the channel's own coefficients.
    pub pooled: bool,
}

impl Default for MsiLuConfig {
    fn default() -> Self {
        Self {
            mode: MsiLuMode::Linear,
            pooled: false,
        }
    }
}

pub struct MsiLu {
    algebra: Arc<Algebra>,
    cfg: MsiLuConfig,
    beta: Option<ParamId>,
}

pub struct MsiLuCache {
    x: MultivectorBatch,
    /// Gate values per (gating site, grade).
    gates: Vec<f64>,
    /// Gating inputs per (gating site, blade) (pooled means or raw coeffs).
    gate_inputs: Vec<f64>,
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

impl MsiLu {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        algebra: Arc<Algebra>,
        cfg: MsiLuConfig,
    ) -> Result<Self> {
        let beta = match cfg.mode {
            MsiLuMode::Linear => {
                let grades = algebra.dim() + 1;
                let blades = algebra.blade_count();
                Some(store.register(
                    &format!("{name}.beta"),
                    &[grades, blades],
                    vec![0.0; grades * blades],
                )?)
            }
            _ => None,
        };
        Ok(Self { algebra, cfg, beta })
    }

    fn beta_value(&self, store: &ParamStore, k: usize, blade: usize) -> f64 {
        match self.cfg.mode {
            MsiLuMode::Linear => {
                let nb = self.algebra.blade_count();
                store.value(self.beta.expect("linear mode has beta"))[k * nb + blade]
            }
            MsiLuMode::Sum => 1.0,
            MsiLuMode::Mean => 1.0 / self.algebra.blade_count() as f64,
        }
    }

    /// Number of channels sharing one gating site (1 unless pooled).
    fn sites_and_span(&self, x: &MultivectorBatch) -> (usize, usize) {
        let channels = x.dims().channels();
        let slots = x.dims().positions();
        if self.cfg.pooled {
            (slots / channels, channels)
        } else {
            (slots, 1)
        }
    }

    /// Maps a slot index to its gating site. Slots are laid out with the
    /// channel index varying slower than spatial position, so pooling over
    /// channels at a fixed (batch, y, x) uses a stride.
    fn site_of_slot(&self, x: &MultivectorBatch, slot: usize) -> usize {
        if !self.cfg.pooled {
            return slot;
        }
        match x.dims() {
            super::batch::BatchDims::Flat { channels, .. } => {
                let b = slot / channels;
                b
            }
            super::batch::BatchDims::Spatial {
                channels,
                height,
                width,
                ..
            } => {
                let hw = height * width;
                let b = slot / (channels * hw);
                let within = slot % hw;
                b * hw + within
            }
        }
    }

    pub fn forward(
        &self,
        store: &ParamStore,
        x: &MultivectorBatch,
    ) -> Result<(MultivectorBatch, MsiLuCache)> {
        if x.algebra().signature() != self.algebra.signature() {
            return Err(Error::SignatureMismatch {
                left: self.algebra.signature().to_string(),
                right: x.algebra().signature().to_string(),
            });
        }
        let nb = self.algebra.blade_count();
        let grades = self.algebra.dim() + 1;
        let (sites, span) = self.sites_and_span(x);
        let slots = x.dims().positions();

        // gating inputs: per-site blade coefficients (channel mean if pooled)
        let mut gate_inputs = vec![0.0; sites * nb];
        for slot in 0..slots {
            let site = self.site_of_slot(x, slot);
            let src = x.slot(slot);
            let dst = &mut gate_inputs[site * nb..(site + 1) * nb];
            for u in 0..nb {
                dst[u] += src[u] / span as f64;
            }
        }

        let mut gates = vec![0.0; sites * grades];
        for site in 0..sites {
            let inp = &gate_inputs[site * nb..(site + 1) * nb];
            for k in 0..grades {
                let mut f = 0.0;
                for u in 0..nb {
                    f += self.beta_value(store, k, u) * inp[u];
                }
                gates[site * grades + k] = sigmoid(f);
            }
        }

        let mut y = x.clone();
        for slot in 0..slots {
            let site = self.site_of_slot(x, slot);
            let dst = y.slot_mut(slot);
            for u in 0..nb {
                let k = self.algebra.grade_of(u);
                dst[u] *= gates[site * grades + k];
            }
        }
        Ok((
            y,
            MsiLuCache {
                x: x.clone(),
                gates,
                gate_inputs,
            },
        ))
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &MsiLuCache,
        grad_out: &MultivectorBatch,
    ) -> Result<MultivectorBatch> {
        let x = &cache.x;
        let nb = self.algebra.blade_count();
        let grades = self.algebra.dim() + 1;
        let (sites, span) = self.sites_and_span(x);
        let slots = x.dims().positions();

        let mut grad_x = grad_out.clone();
        // per site and grade: sum over the gated path of g . x
        let mut gdot = vec![0.0; sites * grades];
        for slot in 0..slots {
            let site = self.site_of_slot(x, slot);
            let g = grad_out.slot(slot);
            let xs = x.slot(slot);
            for u in 0..nb {
                let k = self.algebra.grade_of(u);
                gdot[site * grades + k] += g[u] * xs[u];
            }
        }

        // direct path: grad scaled by the gate
        for slot in 0..slots {
            let site = self.site_of_slot(x, slot);
            let dst = grad_x.slot_mut(slot);
            for u in 0..nb {
                let k = self.algebra.grade_of(u);
                dst[u] *= cache.gates[site * grades + k];
            }
        }

        // gate path: d sigma / d f = sigma (1 - sigma), spread over the
        // blades feeding f_k (divided across channels when pooled)
        let mut grad_beta = vec![0.0; if self.beta.is_some() { grades * nb } else { 0 }];
        for slot in 0..slots {
            let site = self.site_of_slot(x, slot);
            let dst = grad_x.slot_mut(slot);
            for k in 0..grades {
                let s = cache.gates[site * grades + k];
                let coef = gdot[site * grades + k] * s * (1.0 - s);
                if coef == 0.0 {
                    continue;
                }
                for u in 0..nb {
                    let beta = self.beta_value(store, k, u);
                    if beta != 0.0 {
                        dst[u] += coef * beta / span as f64;
                    }
                }
            }
        }
        if let Some(beta_id) = self.beta {
            for site in 0..sites {
                let inp = &cache.gate_inputs[site * nb..(site + 1) * nb];
                for k in 0..grades {
                    let s = cache.gates[site * grades + k];
                    let coef = gdot[site * grades + k] * s * (1.0 - s);
                    if coef == 0.0 {
                        continue;
                    }
                    for u in 0..nb {
                        grad_beta[k * nb + u] += coef * inp[u];
                    }
                }
            }
            for (dst, src) in store.grad_mut(beta_id).iter_mut().zip(&grad_beta) {
                *dst += src;
            }
        }
        Ok(grad_x)
    }
}
