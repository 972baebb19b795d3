//! The two compared models: a GCA-MLP operating on points embedded as
//! G(3,0,1) trivectors (velocities as vector components, weights shared),
//! and a plain MLP baseline on flattened coordinates with matched
//! parameter count.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::data::{N_IN_STEPS, N_LOCATIONS, N_OUT_STEPS};
use crate::algebra::{Algebra, AlgebraExt};
use crate::error::{Error, Result};
use crate::layers::{
    screw_mask_g301, BatchDims, GcaLinear, GcaLinearCache, GcaLinearConfig, GcaNorm, GcaNormCache,
    GcaNormConfig, MsiLu, MsiLuCache, MsiLuConfig, MultivectorBatch,
};
use crate::linalg;
use crate::train::{seeded_rng, ParamId, ParamStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gca,
    Mlp,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gca" => Ok(ModelKind::Gca),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::Parse(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TetrisModelConfig {
    pub kind: ModelKind,
    /// Hidden channels (GCA) or hidden units (baseline).
    pub hidden: usize,
    pub include_velocities: bool,
}

/// Coordinate components per location and step: 3, or 6 with velocities.
pub fn components(include_velocities: bool) -> usize {
    if include_velocities {
        6
    } else {
        3
    }
}

/// Values per sample on the input side.
pub fn input_width(include_velocities: bool) -> usize {
    N_IN_STEPS * N_LOCATIONS * components(include_velocities)
}

/// Values per sample on the target side.
pub fn output_width(include_velocities: bool) -> usize {
    N_OUT_STEPS * N_LOCATIONS * components(include_velocities)
}

// ---------------------------------------------------------------------------
// GCA-MLP

pub struct GcaMlp {
    algebra: Arc<Algebra>,
    hidden: usize,
    include_velocities: bool,
    l1: GcaLinear,
    l2: GcaLinear,
    l3: GcaLinear,
    n1: GcaNorm,
    n2: GcaNorm,
    a1: MsiLu,
    a2: MsiLu,
    /// Free homogeneous weight of each layer's input points.
    deltas: [ParamId; 3],
    // blade indices (canonical order) used by the embedding
    e1: usize,
    e2: usize,
    e3: usize,
    e012: usize,
    e013: usize,
    e023: usize,
    e123: usize,
}

pub struct GcaMlpCache {
    batch: usize,
    l1c: GcaLinearCache,
    n1c: GcaNormCache,
    a1c: MsiLuCache,
    l2c: GcaLinearCache,
    n2c: GcaNormCache,
    a2c: MsiLuCache,
    l3c: GcaLinearCache,
}

impl GcaMlp {
    pub fn new(
        store: &mut ParamStore,
        cfg: &TetrisModelConfig,
        seed: u64,
    ) -> Result<Self> {
        let algebra = Algebra::from_pqr(3, 0, 1)?;
        let mask = screw_mask_g301(&algebra);
        // geometric template subspace: trivectors, plus the full grade-1
        // space when velocities ride along
        let mut active: Vec<usize> = algebra.grade_range(3).collect();
        if cfg.include_velocities {
            active = algebra
                .grade_range(1)
                .chain(algebra.grade_range(3))
                .collect();
        }
        let c_io = N_IN_STEPS * N_LOCATIONS;
        let h = cfg.hidden;

        let mut rng = seeded_rng(seed, 1);
        let l1 = GcaLinear::new(
            store,
            "gca.l1",
            algebra.clone(),
            &GcaLinearConfig::new(c_io, h, mask.clone()).with_active(active.clone()),
            &mut rng,
        )?;
        let mut rng = seeded_rng(seed, 2);
        let l2 = GcaLinear::new(
            store,
            "gca.l2",
            algebra.clone(),
            &GcaLinearConfig::new(h, h, mask.clone()).with_active(active.clone()),
            &mut rng,
        )?;
        let mut rng = seeded_rng(seed, 3);
        let l3 = GcaLinear::new(
            store,
            "gca.l3",
            algebra.clone(),
            &GcaLinearConfig::new(h, c_io, mask).with_active(active.clone()),
            &mut rng,
        )?;
        let n1 = GcaNorm::new(store, "gca.n1", algebra.clone(), GcaNormConfig::new(h))?;
        let n2 = GcaNorm::new(store, "gca.n2", algebra.clone(), GcaNormConfig::new(h))?;
        let a1 = MsiLu::new(store, "gca.a1", algebra.clone(), MsiLuConfig::default())?;
        let a2 = MsiLu::new(store, "gca.a2", algebra.clone(), MsiLuConfig::default())?;
        let deltas = [
            store.register("gca.delta0", &[1], vec![1.0])?,
            store.register("gca.delta1", &[1], vec![1.0])?,
            store.register("gca.delta2", &[1], vec![1.0])?,
        ];
        Ok(Self {
            algebra: algebra.clone(),
            hidden: h,
            include_velocities: cfg.include_velocities,
            l1,
            l2,
            l3,
            n1,
            n2,
            a1,
            a2,
            deltas,
            e1: algebra.blade_index(&[1]),
            e2: algebra.blade_index(&[2]),
            e3: algebra.blade_index(&[3]),
            e012: algebra.blade_index(&[0, 1, 2]),
            e013: algebra.blade_index(&[0, 1, 3]),
            e023: algebra.blade_index(&[0, 2, 3]),
            e123: algebra.blade_index(&[1, 2, 3]),
        })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Embeds one sample batch: channel (t * N_LOCATIONS + loc) holds the
    /// point at input step t and location loc as x e023 - y e013 + z e012 +
    /// delta e123, with velocities as vector components when enabled.
    fn embed(&self, store: &ParamStore, inputs: &[f64], batch: usize) -> MultivectorBatch {
        let comps = components(self.include_velocities);
        let c_in = N_IN_STEPS * N_LOCATIONS;
        let delta = store.value(self.deltas[0])[0];
        let mut x = MultivectorBatch::zeros(
            self.algebra.clone(),
            BatchDims::Flat {
                batch,
                channels: c_in,
            },
        );
        for b in 0..batch {
            for ch in 0..c_in {
                let src = &inputs[(b * c_in + ch) * comps..(b * c_in + ch) * comps + comps];
                let slot = x.slot_flat(b, ch);
                let dst = x.slot_mut(slot);
                dst[self.e023] = src[0];
                dst[self.e013] = -src[1];
                dst[self.e012] = src[2];
                dst[self.e123] = delta;
                if self.include_velocities {
                    dst[self.e1] = src[3];
                    dst[self.e2] = src[4];
                    dst[self.e3] = src[5];
                }
            }
        }
        x
    }

    fn add_delta(&self, store: &ParamStore, x: &mut MultivectorBatch, which: usize) {
        let delta = store.value(self.deltas[which])[0];
        let nb = x.blade_count();
        let coeffs = x.coeffs_mut();
        let mut i = self.e123;
        while i < coeffs.len() {
            coeffs[i] += delta;
            i += nb;
        }
    }

    /// Reads predicted coordinates (and velocities) off the output blades.
    fn decode(&self, y: &MultivectorBatch, batch: usize) -> Vec<f64> {
        let comps = components(self.include_velocities);
        let c_out = N_OUT_STEPS * N_LOCATIONS;
        let mut out = vec![0.0; batch * c_out * comps];
        for b in 0..batch {
            for ch in 0..c_out {
                let src = y.slot(y.slot_flat(b, ch));
                let dst = &mut out[(b * c_out + ch) * comps..(b * c_out + ch) * comps + comps];
                dst[0] = src[self.e023];
                dst[1] = -src[self.e013];
                dst[2] = src[self.e012];
                if self.include_velocities {
                    dst[3] = src[self.e1];
                    dst[4] = src[self.e2];
                    dst[5] = src[self.e3];
                }
            }
        }
        out
    }

    pub fn forward(
        &self,
        store: &ParamStore,
        inputs: &[f64],
        batch: usize,
    ) -> Result<(Vec<f64>, GcaMlpCache)> {
        let x = self.embed(store, inputs, batch);
        let (h1, l1c) = self.l1.forward(store, &x)?;
        let (h1n, n1c) = self.n1.forward(store, &h1)?;
        let (mut h1a, a1c) = self.a1.forward(store, &h1n)?;
        self.add_delta(store, &mut h1a, 1);
        let (h2, l2c) = self.l2.forward(store, &h1a)?;
        let (h2n, n2c) = self.n2.forward(store, &h2)?;
        let (mut h2a, a2c) = self.a2.forward(store, &h2n)?;
        self.add_delta(store, &mut h2a, 2);
        let (y, l3c) = self.l3.forward(store, &h2a)?;
        Ok((
            self.decode(&y, batch),
            GcaMlpCache {
                batch,
                l1c,
                n1c,
                a1c,
                l2c,
                n2c,
                a2c,
                l3c,
            },
        ))
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &GcaMlpCache,
        grad_pred: &[f64],
    ) -> Result<()> {
        let batch = cache.batch;
        let comps = components(self.include_velocities);
        let c_out = N_OUT_STEPS * N_LOCATIONS;

        // gradient on the output blades (inverse of decode's sign map)
        let mut gy = MultivectorBatch::zeros(
            self.algebra.clone(),
            BatchDims::Flat {
                batch,
                channels: c_out,
            },
        );
        for b in 0..batch {
            for ch in 0..c_out {
                let src = &grad_pred[(b * c_out + ch) * comps..(b * c_out + ch) * comps + comps];
                let slot = gy.slot_flat(b, ch);
                let dst = gy.slot_mut(slot);
                dst[self.e023] = src[0];
                dst[self.e013] = -src[1];
                dst[self.e012] = src[2];
                if self.include_velocities {
                    dst[self.e1] = src[3];
                    dst[self.e2] = src[4];
                    dst[self.e3] = src[5];
                }
            }
        }

        let g_h2a = self.l3.backward(store, &cache.l3c, &gy)?;
        self.accumulate_delta_grad(store, &g_h2a, 2);
        let g_h2n = self.a2.backward(store, &cache.a2c, &g_h2a)?;
        let g_h2 = self.n2.backward(store, &cache.n2c, &g_h2n)?;
        let g_h1a = self.l2.backward(store, &cache.l2c, &g_h2)?;
        self.accumulate_delta_grad(store, &g_h1a, 1);
        let g_h1n = self.a1.backward(store, &cache.a1c, &g_h1a)?;
        let g_h1 = self.n1.backward(store, &cache.n1c, &g_h1n)?;
        let g_x = self.l1.backward(store, &cache.l1c, &g_h1)?;
        self.accumulate_delta_grad(store, &g_x, 0);
        Ok(())
    }

    fn accumulate_delta_grad(&self, store: &mut ParamStore, grad: &MultivectorBatch, which: usize) {
        let nb = grad.blade_count();
        let mut acc = 0.0;
        let coeffs = grad.coeffs();
        let mut i = self.e123;
        while i < coeffs.len() {
            acc += coeffs[i];
            i += nb;
        }
        store.grad_mut(self.deltas[which])[0] += acc;
    }

    /// Largest |coefficient| outside the designated blades over the hidden
    /// activations of one forward pass.
    pub fn audit_off_blade_mass(
        &self,
        store: &ParamStore,
        inputs: &[f64],
        batch: usize,
    ) -> Result<f64> {
        let mut designated: Vec<usize> = self.algebra.grade_range(3).collect();
        if self.include_velocities {
            designated.extend(self.algebra.grade_range(1));
        }
        let x = self.embed(store, inputs, batch);
        let (h1, _) = self.l1.forward(store, &x)?;
        let (h1n, _) = self.n1.forward(store, &h1)?;
        let (mut h1a, _) = self.a1.forward(store, &h1n)?;
        self.add_delta(store, &mut h1a, 1);
        let (h2, _) = self.l2.forward(store, &h1a)?;
        let (h2n, _) = self.n2.forward(store, &h2)?;
        let (mut h2a, _) = self.a2.forward(store, &h2n)?;
        self.add_delta(store, &mut h2a, 2);
        let (y, _) = self.l3.forward(store, &h2a)?;
        let mut mass: f64 = 0.0;
        for h in [&x, &h1, &h1n, &h1a, &h2, &h2n, &h2a, &y] {
            mass = mass.max(h.off_blade_mass(&designated));
        }
        Ok(mass)
    }
}

// ---------------------------------------------------------------------------
// Baseline MLP

pub struct BaselineMlp {
    in_dim: usize,
    hidden: usize,
    out_dim: usize,
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
    w3: ParamId,
    b3: ParamId,
}

pub struct BaselineMlpCache {
    batch: usize,
    x: Vec<f64>,
    z1: Vec<f64>,
    h1: Vec<f64>,
    z2: Vec<f64>,
    h2: Vec<f64>,
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn silu(z: f64) -> f64 {
    z * sigmoid(z)
}

fn silu_prime(z: f64) -> f64 {
    let s = sigmoid(z);
    s * (1.0 + z * (1.0 - s))
}

impl BaselineMlp {
    pub fn new(store: &mut ParamStore, cfg: &TetrisModelConfig, seed: u64) -> Result<Self> {
        let in_dim = input_width(cfg.include_velocities);
        let out_dim = output_width(cfg.include_velocities);
        let h = cfg.hidden;
        let mut rng = seeded_rng(seed, 11);
        let mut glorot = |fan_in: usize, fan_out: usize, n: usize| -> Vec<f64> {
            use rand::Rng;
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..n).map(|_| rng.random_range(-limit..limit)).collect()
        };
        let w1 = store.register("mlp.w1", &[h, in_dim], glorot(in_dim, h, h * in_dim))?;
        let w2 = store.register("mlp.w2", &[h, h], glorot(h, h, h * h))?;
        let w3 = store.register("mlp.w3", &[out_dim, h], glorot(h, out_dim, out_dim * h))?;
        let b1 = store.register("mlp.b1", &[h], vec![0.0; h])?;
        let b2 = store.register("mlp.b2", &[h], vec![0.0; h])?;
        let b3 = store.register("mlp.b3", &[out_dim], vec![0.0; out_dim])?;
        Ok(Self {
            in_dim,
            hidden: h,
            out_dim,
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
        })
    }

    fn affine(
        &self,
        store: &ParamStore,
        w: ParamId,
        b: ParamId,
        x: &[f64],
        batch: usize,
        n_in: usize,
        n_out: usize,
    ) -> Vec<f64> {
        // z[b, o] = sum_i x[b, i] W[o, i] + b[o]
        let mut z = vec![0.0; batch * n_out];
        linalg::gemm_nt(&mut z, x, store.value(w), batch, n_out, n_in);
        let bias = store.value(b);
        for row in 0..batch {
            for (zo, bo) in z[row * n_out..(row + 1) * n_out].iter_mut().zip(bias) {
                *zo += bo;
            }
        }
        z
    }

    pub fn forward(
        &self,
        store: &ParamStore,
        inputs: &[f64],
        batch: usize,
    ) -> Result<(Vec<f64>, BaselineMlpCache)> {
        if inputs.len() != batch * self.in_dim {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "baseline expects {} inputs, got {}",
                    batch * self.in_dim,
                    inputs.len()
                ),
            });
        }
        let z1 = self.affine(store, self.w1, self.b1, inputs, batch, self.in_dim, self.hidden);
        let h1: Vec<f64> = z1.iter().map(|&z| silu(z)).collect();
        let z2 = self.affine(store, self.w2, self.b2, &h1, batch, self.hidden, self.hidden);
        let h2: Vec<f64> = z2.iter().map(|&z| silu(z)).collect();
        let out = self.affine(store, self.w3, self.b3, &h2, batch, self.hidden, self.out_dim);
        Ok((
            out,
            BaselineMlpCache {
                batch,
                x: inputs.to_vec(),
                z1,
                h1,
                z2,
                h2,
            },
        ))
    }

    fn affine_backward(
        &self,
        store: &mut ParamStore,
        w: ParamId,
        b: ParamId,
        x: &[f64],
        grad_z: &[f64],
        batch: usize,
        n_in: usize,
        n_out: usize,
    ) -> Vec<f64> {
        // grad_w[o, i] += sum_b g[b, o] x[b, i]
        let mut gw = vec![0.0; n_out * n_in];
        linalg::gemm_tn(&mut gw, grad_z, x, n_out, n_in, batch);
        for (dst, src) in store.grad_mut(w).iter_mut().zip(&gw) {
            *dst += src;
        }
        let gb = store.grad_mut(b);
        for row in 0..batch {
            for (dst, g) in gb.iter_mut().zip(&grad_z[row * n_out..(row + 1) * n_out]) {
                *dst += g;
            }
        }
        // grad_x = g W
        let mut gx = vec![0.0; batch * n_in];
        linalg::gemm_nn(&mut gx, grad_z, store.value(w), batch, n_in, n_out);
        gx
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &BaselineMlpCache,
        grad_out: &[f64],
    ) -> Result<()> {
        let batch = cache.batch;
        let gh2 = self.affine_backward(
            store,
            self.w3,
            self.b3,
            &cache.h2,
            grad_out,
            batch,
            self.hidden,
            self.out_dim,
        );
        let gz2: Vec<f64> = gh2
            .iter()
            .zip(&cache.z2)
            .map(|(g, &z)| g * silu_prime(z))
            .collect();
        let gh1 = self.affine_backward(
            store,
            self.w2,
            self.b2,
            &cache.h1,
            &gz2,
            batch,
            self.hidden,
            self.hidden,
        );
        let gz1: Vec<f64> = gh1
            .iter()
            .zip(&cache.z1)
            .map(|(g, &z)| g * silu_prime(z))
            .collect();
        self.affine_backward(
            store,
            self.w1,
            self.b1,
            &cache.x,
            &gz1,
            batch,
            self.in_dim,
            self.hidden,
        );
        Ok(())
    }
}

// ---------------------------------------------------------------------------

pub enum TetrisModel {
    Gca(GcaMlp),
    Mlp(BaselineMlp),
}

pub enum TetrisCache {
    Gca(GcaMlpCache),
    Mlp(BaselineMlpCache),
}

impl TetrisModel {
    pub fn build(store: &mut ParamStore, cfg: &TetrisModelConfig, seed: u64) -> Result<Self> {
        match cfg.kind {
            ModelKind::Gca => Ok(TetrisModel::Gca(GcaMlp::new(store, cfg, seed)?)),
            ModelKind::Mlp => Ok(TetrisModel::Mlp(BaselineMlp::new(store, cfg, seed)?)),
        }
    }

    pub fn forward(
        &self,
        store: &ParamStore,
        inputs: &[f64],
        batch: usize,
    ) -> Result<(Vec<f64>, TetrisCache)> {
        match self {
            TetrisModel::Gca(m) => {
                let (p, c) = m.forward(store, inputs, batch)?;
                Ok((p, TetrisCache::Gca(c)))
            }
            TetrisModel::Mlp(m) => {
                let (p, c) = m.forward(store, inputs, batch)?;
                Ok((p, TetrisCache::Mlp(c)))
            }
        }
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &TetrisCache,
        grad: &[f64],
    ) -> Result<()> {
        match (self, cache) {
            (TetrisModel::Gca(m), TetrisCache::Gca(c)) => m.backward(store, c, grad),
            (TetrisModel::Mlp(m), TetrisCache::Mlp(c)) => m.backward(store, c, grad),
            _ => Err(Error::InvalidConfig("model/cache kind mismatch".into())),
        }
    }
}

/// Total parameter count of a freshly built model.
pub fn parameter_count(cfg: &TetrisModelConfig) -> Result<usize> {
    let mut store = ParamStore::new();
    TetrisModel::build(&mut store, cfg, 0)?;
    Ok(store.scalar_count())
}

/// Baseline hidden width whose parameter count best matches `target`.
/// Errors when no width lands within 5%.
pub fn matching_baseline_width(target: usize, include_velocities: bool) -> Result<usize> {
    let in_dim = input_width(include_velocities) as i64;
    let out_dim = output_width(include_velocities) as i64;
    let count = |m: i64| -> i64 { in_dim * m + m + m * m + m + m * out_dim + out_dim };
    let mut best = (1i64, i64::MAX);
    for m in 1..4096i64 {
        let diff = (count(m) - target as i64).abs();
        if diff < best.1 {
            best = (m, diff);
        }
    }
    let achieved = count(best.0);
    if (achieved - target as i64).unsigned_abs() as usize * 20 > target {
        return Err(Error::InvalidConfig(format!(
            "no baseline width matches {target} parameters within 5% (closest: {achieved})"
        )));
    }
    Ok(best.0 as usize)
}
