//! Multivector group normalization: per grade k and channel group,
//! subtract the group mean of [x]_k and divide by the group mean of
//! ||[x]_k|| (+ epsilon), then rescale by a learnable per-grade s_k.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::batch::MultivectorBatch;
use crate::algebra::Algebra;
use crate::error::{Error, Result};
use crate::train::{ParamId, ParamStore};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GcaNormConfig {
    /// Channels per normalization group; must divide the channel count.
    pub group_size: usize,
    pub eps: f64,
    /// Average over channels x spatial positions (true) or channels only.
    pub include_spatial: bool,
}

impl GcaNormConfig {
    pub fn new(group_size: usize) -> Self {
        Self {
            group_size,
            eps: 1e-6,
            include_spatial: true,
        }
    }
}

pub struct GcaNorm {
    algebra: Arc<Algebra>,
    cfg: GcaNormConfig,
    s: ParamId,
}

pub struct GcaNormCache {
    x: MultivectorBatch,
    /// Pre-scale normalized values (x - mean) / denom.
    normalized: Vec<f64>,
    /// Per (region, grade): the denominator eps + mean ||[x]_k||.
    denoms: Vec<f64>,
    /// Per (slot, grade): the study norm of the slot's grade-k part.
    slot_norms: Vec<f64>,
    /// Per (slot, grade): sign of the squared-norm scalar (for gradients).
    slot_signs: Vec<f64>,
    regions: RegionLayout,
}

/// How slots are grouped into normalization regions.
#[derive(Clone, Copy, Debug)]
struct RegionLayout {
    n_regions: usize,
    channels: usize,
    group_size: usize,
    spatial: usize,
    include_spatial: bool,
}

impl RegionLayout {
    fn region_of_slot(&self, slot: usize) -> (usize, usize) {
        // slot = (b * channels + c) * spatial + pos
        let pos = slot % self.spatial;
        let bc = slot / self.spatial;
        let c = bc % self.channels;
        let b = bc / self.channels;
        let group = c / self.group_size;
        let groups_per_batch = self.channels / self.group_size;
        if self.include_spatial {
            (b * groups_per_batch + group, pos)
        } else {
            ((b * groups_per_batch + group) * self.spatial + pos, 0)
        }
    }

    fn region_size(&self) -> usize {
        if self.include_spatial {
            self.group_size * self.spatial
        } else {
            self.group_size
        }
    }
}

impl GcaNorm {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        algebra: Arc<Algebra>,
        cfg: GcaNormConfig,
    ) -> Result<Self> {
        if cfg.eps <= 0.0 {
            return Err(Error::InvalidConfig("gca_norm eps must be positive".into()));
        }
        let grades = algebra.dim() + 1;
        let s = store.register(&format!("{name}.s"), &[grades], vec![1.0; grades])?;
        Ok(Self { algebra, cfg, s })
    }

    pub fn scale_id(&self) -> ParamId {
        self.s
    }

    fn layout(&self, x: &MultivectorBatch) -> Result<RegionLayout> {
        let channels = x.dims().channels();
        if channels % self.cfg.group_size != 0 {
            return Err(Error::InvalidConfig(format!(
                "group size {} does not divide channel count {channels}",
                self.cfg.group_size
            )));
        }
        let spatial = x.dims().spatial().map(|(h, w)| h * w).unwrap_or(1);
        let batch = x.dims().batch();
        let groups_per_batch = channels / self.cfg.group_size;
        let n_regions = if self.cfg.include_spatial {
            batch * groups_per_batch
        } else {
            batch * groups_per_batch * spatial
        };
        Ok(RegionLayout {
            n_regions,
            channels,
            group_size: self.cfg.group_size,
            spatial,
            include_spatial: self.cfg.include_spatial,
        })
    }

    /// Study norm of the grade-k part of one slot: sqrt(|sum kappa_u x_u^2|)
    /// with kappa from the table diagonal (null blades contribute nothing).
    fn grade_norm(&self, slot: &[f64], k: usize) -> (f64, f64) {
        let mut q = 0.0;
        for u in self.algebra.grade_range(k) {
            q += self.algebra.reversion_sign(u) * self.algebra.self_product(u) * slot[u] * slot[u];
        }
        (q.abs().sqrt(), if q >= 0.0 { 1.0 } else { -1.0 })
    }

    pub fn forward(
        &self,
        store: &ParamStore,
        x: &MultivectorBatch,
    ) -> Result<(MultivectorBatch, GcaNormCache)> {
        if x.algebra().signature() != self.algebra.signature() {
            return Err(Error::SignatureMismatch {
                left: self.algebra.signature().to_string(),
                right: x.algebra().signature().to_string(),
            });
        }
        let regions = self.layout(x)?;
        let nb = self.algebra.blade_count();
        let grades = self.algebra.dim() + 1;
        let slots = x.dims().positions();
        let region_size = regions.region_size() as f64;

        // per (region, blade) means and per (region, grade) norm means
        let mut means = vec![0.0; regions.n_regions * nb];
        let mut denoms = vec![0.0; regions.n_regions * grades];
        let mut slot_norms = vec![0.0; slots * grades];
        let mut slot_signs = vec![0.0; slots * grades];
        for slot in 0..slots {
            let (region, _) = regions.region_of_slot(slot);
            let src = x.slot(slot);
            for u in 0..nb {
                means[region * nb + u] += src[u] / region_size;
            }
            for k in 0..grades {
                let (n, sign) = self.grade_norm(src, k);
                slot_norms[slot * grades + k] = n;
                slot_signs[slot * grades + k] = sign;
                denoms[region * grades + k] += n / region_size;
            }
        }
        for d in denoms.iter_mut() {
            *d += self.cfg.eps;
        }

        let s_vals = store.value(self.s).to_vec();
        let mut y = MultivectorBatch::zeros(x.algebra().clone(), x.dims());
        let mut normalized = vec![0.0; slots * nb];
        for slot in 0..slots {
            let (region, _) = regions.region_of_slot(slot);
            let src = x.slot(slot);
            let dst = y.slot_mut(slot);
            for u in 0..nb {
                let k = self.algebra.grade_of(u);
                let nv = (src[u] - means[region * nb + u]) / denoms[region * grades + k];
                normalized[slot * nb + u] = nv;
                dst[u] = s_vals[k] * nv;
            }
        }
        Ok((
            y,
            GcaNormCache {
                x: x.clone(),
                normalized,
                denoms,
                slot_norms,
                slot_signs,
                regions,
            },
        ))
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &GcaNormCache,
        grad_out: &MultivectorBatch,
    ) -> Result<MultivectorBatch> {
        let regions = cache.regions;
        let nb = self.algebra.blade_count();
        let grades = self.algebra.dim() + 1;
        let slots = cache.x.dims().positions();
        let region_size = regions.region_size() as f64;
        let s_vals = store.value(self.s).to_vec();

        // grad wrt s_k: sum of g * normalized per grade
        let mut grad_s = vec![0.0; grades];
        // region accumulators: sum of g (per blade) and sum of g*normalized
        // (per grade) for the mean and denominator paths
        let mut sum_g = vec![0.0; regions.n_regions * nb];
        let mut sum_gn = vec![0.0; regions.n_regions * grades];
        for slot in 0..slots {
            let (region, _) = regions.region_of_slot(slot);
            let g = grad_out.slot(slot);
            for u in 0..nb {
                let k = self.algebra.grade_of(u);
                let nv = cache.normalized[slot * nb + u];
                grad_s[k] += g[u] * nv;
                sum_g[region * nb + u] += g[u];
                sum_gn[region * grades + k] += g[u] * nv;
            }
        }
        for (dst, src) in store.grad_mut(self.s).iter_mut().zip(&grad_s) {
            *dst += src;
        }

        let mut grad_x = MultivectorBatch::zeros(cache.x.algebra().clone(), cache.x.dims());
        for slot in 0..slots {
            let (region, _) = regions.region_of_slot(slot);
            let g = grad_out.slot(slot);
            let xs = cache.x.slot(slot);
            let dst = grad_x.slot_mut(slot);
            for u in 0..nb {
                let k = self.algebra.grade_of(u);
                let denom = cache.denoms[region * grades + k];
                let sk = s_vals[k];
                // direct and mean-subtraction paths
                let mut acc =
                    sk * (g[u] - sum_g[region * nb + u] / region_size) / denom;
                // denominator path: d denom / d x_u spreads through this
                // slot's study norm
                let n = cache.slot_norms[slot * grades + k];
                if n > 1e-300 {
                    let kappa =
                        self.algebra.reversion_sign(u) * self.algebra.self_product(u);
                    if kappa != 0.0 {
                        let dn_dx =
                            cache.slot_signs[slot * grades + k] * kappa * xs[u] / n;
                        let ddenom = dn_dx / region_size;
                        acc -= sk * sum_gn[region * grades + k] / denom * ddenom;
                    }
                }
                dst[u] = acc;
            }
        }
        Ok(grad_x)
    }
}
