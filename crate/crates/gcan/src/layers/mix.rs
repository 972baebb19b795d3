//! Shared machinery for group-action mixing layers: a bank of sandwich
//! actions (one per output-channel / input-slot pair) with scalar mixing
//! weights, compiled each step into a dense matrix over the active blades.

use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::kernel::{ActionKernel, SandwichData};
use crate::algebra::Algebra;
use crate::error::{Error, Result};
use crate::linalg;
use crate::train::{ParamId, ParamStore};

pub(crate) struct ActionMix {
    pub kernel: ActionKernel,
    pub c_out: usize,
    /// Input slots: channels for a linear layer, channels x k x k for conv.
    pub slots: usize,
    pub w: ParamId,
    pub a: ParamId,
}

pub(crate) struct MixMatrices {
    /// (c_out * V) x (slots * V)
    pub w_mat: Vec<f64>,
    /// transpose of `w_mat`
    pub wt_mat: Vec<f64>,
    pub datas: Vec<SandwichData>,
}

impl ActionMix {
    #[allow(clippy::too_many_arguments)]
    pub fn register(
        store: &mut ParamStore,
        name: &str,
        algebra: Arc<Algebra>,
        blade_mask: Vec<usize>,
        active: Option<Vec<usize>>,
        c_out: usize,
        slots: usize,
        fan_in: usize,
        action_std: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if c_out == 0 || slots == 0 {
            return Err(Error::InvalidConfig(format!(
                "layer '{name}' needs nonzero channel counts"
            )));
        }
        let kernel = ActionKernel::new(algebra.clone(), blade_mask, active)?;
        let dim = algebra.blade_count();

        // Glorot-uniform scalar mixing weights
        let limit = (6.0 / (fan_in + c_out) as f64).sqrt();
        let w_init: Vec<f64> = (0..c_out * slots)
            .map(|_| rng.random_range(-limit..limit))
            .collect();

        // near-identity unit-versor actions, dense storage with only the
        // masked blades nonzero
        let mask_has_scalar = kernel.mask().contains(&0);
        let mut a_init = vec![0.0; c_out * slots * dim];
        for pair in 0..c_out * slots {
            let raw: Vec<f64> = kernel
                .mask()
                .iter()
                .map(|&b| {
                    if b == 0 && mask_has_scalar {
                        1.0
                    } else {
                        action_std * sample_standard_normal(rng)
                    }
                })
                .collect();
            let normed = kernel.normalize_versor(&raw)?;
            for (jm, &jb) in kernel.mask().iter().enumerate() {
                a_init[pair * dim + jb] = normed[jm];
            }
        }

        let w = store.register(&format!("{name}.w"), &[c_out, slots], w_init)?;
        let a = store.register(&format!("{name}.a"), &[c_out, slots, dim], a_init)?;
        Ok(Self {
            kernel,
            c_out,
            slots,
            w,
            a,
        })
    }

    pub fn v_len(&self) -> usize {
        self.kernel.active_len()
    }

    /// Compiles the sandwich matrices and the dense mixing matrix.
    pub fn build(&self, store: &ParamStore) -> Result<MixMatrices> {
        let dim = self.kernel.algebra().blade_count();
        let v = self.v_len();
        let w_vals = store.value(self.w);
        let a_vals = store.value(self.a);
        let rows = self.c_out * v;
        let cols = self.slots * v;
        let mut w_mat = vec![0.0; rows * cols];
        let mut wt_mat = vec![0.0; cols * rows];
        let mut datas = Vec::with_capacity(self.c_out * self.slots);
        for o in 0..self.c_out {
            for i in 0..self.slots {
                let pair = o * self.slots + i;
                let a_masked: Vec<f64> = self
                    .kernel
                    .mask()
                    .iter()
                    .map(|&b| a_vals[pair * dim + b])
                    .collect();
                let data = self.kernel.sandwich(&a_masked).map_err(|e| match e {
                    Error::NullVersor { .. } => Error::NonInvertibleAction {
                        out_channel: o,
                        in_channel: i,
                    },
                    other => other,
                })?;
                let wv = w_vals[pair];
                for vr in 0..v {
                    for uc in 0..v {
                        let val = wv * data.matrix[vr * v + uc];
                        let row = o * v + vr;
                        let col = i * v + uc;
                        w_mat[row * cols + col] = val;
                        wt_mat[col * rows + row] = val;
                    }
                }
                datas.push(data);
            }
        }
        Ok(MixMatrices {
            w_mat,
            wt_mat,
            datas,
        })
    }

    /// Forward on compact activations: y[B x (c_out V)] = x *
    /// W^T, accumulated slot-ascending so results are reproducible.
    pub fn forward_compact(&self, mats: &MixMatrices, x: &[f64], batch: usize) -> Vec<f64> {
        let v = self.v_len();
        let mut y = vec![0.0; batch * self.c_out * v];
        linalg::gemm_nn(&mut y, x, &mats.wt_mat, batch, self.c_out * v, self.slots * v);
        y
    }

    /// Backward on compact activations; accumulates parameter gradients and
    /// returns the gradient with respect to the compact input.
    pub fn backward_compact(
        &self,
        store: &mut ParamStore,
        mats: &MixMatrices,
        x: &[f64],
        grad_y: &[f64],
        batch: usize,
    ) -> Vec<f64> {
        let v = self.v_len();
        let rows = self.c_out * v;
        let cols = self.slots * v;

        let mut grad_x = vec![0.0; batch * cols];
        linalg::gemm_nn(&mut grad_x, grad_y, &mats.w_mat, batch, cols, rows);

        // cmat[ov, iu] = sum_b grad_y[b, ov] * x[b, iu]
        let mut cmat = vec![0.0; rows * cols];
        linalg::gemm_tn(&mut cmat, grad_y, x, rows, cols, batch);

        let dim = self.kernel.algebra().blade_count();
        let w_vals = store.value(self.w).to_vec();
        let mut grad_w_acc = vec![0.0; self.c_out * self.slots];
        let mut grad_a_acc = vec![0.0; self.c_out * self.slots * dim];
        let mut block = vec![0.0; v * v];
        for o in 0..self.c_out {
            for i in 0..self.slots {
                let pair = o * self.slots + i;
                let data = &mats.datas[pair];
                let mut gw = 0.0;
                for vr in 0..v {
                    for uc in 0..v {
                        let c = cmat[(o * v + vr) * cols + i * v + uc];
                        gw += data.matrix[vr * v + uc] * c;
                        block[vr * v + uc] = w_vals[pair] * c;
                    }
                }
                grad_w_acc[pair] = gw;
                let ga = self.kernel.grad_action(data, &block);
                for (jm, &jb) in self.kernel.mask().iter().enumerate() {
                    grad_a_acc[pair * dim + jb] = ga[jm];
                }
            }
        }
        for (dst, src) in store.grad_mut(self.w).iter_mut().zip(&grad_w_acc) {
            *dst += src;
        }
        for (dst, src) in store.grad_mut(self.a).iter_mut().zip(&grad_a_acc) {
            *dst += src;
        }
        grad_x
    }
}

/// Box-Muller standard normal draw; rand_distr stays out of the
/// dependencies for this one use.
pub(crate) fn sample_standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u1: f64 = rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        if u1 > f64::MIN_POSITIVE {
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}
