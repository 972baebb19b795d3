//! Group-action 2D convolution (cross-correlation orientation): at each
//! output position, sum over channel x k x k patch slots of
//! w_i * a_i x_i a_i^-1.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::batch::{BatchDims, MultivectorBatch};
use super::mix::ActionMix;
use crate::algebra::Algebra;
use crate::error::{Error, Result};
use crate::train::{ParamId, ParamStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// No padding; output shrinks by k-1.
    Valid,
    /// Zero padding, same output size.
    Zero,
    /// Periodic padding, same output size.
    Circular,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GcaConv2dConfig {
    pub c_in: usize,
    pub c_out: usize,
    /// Odd kernel size.
    pub kernel: usize,
    pub padding: Padding,
    pub blade_mask: Vec<usize>,
    pub active_blades: Option<Vec<usize>>,
    pub action_std: f64,
}

impl GcaConv2dConfig {
    pub fn new(c_in: usize, c_out: usize, kernel: usize, blade_mask: Vec<usize>) -> Self {
        Self {
            c_in,
            c_out,
            kernel,
            padding: Padding::Zero,
            blade_mask,
            active_blades: None,
            action_std: 0.05,
        }
    }
}

pub struct GcaConv2d {
    mix: ActionMix,
    c_in: usize,
    c_out: usize,
    kernel: usize,
    padding: Padding,
}

pub struct GcaConv2dCache {
    x_cols: Vec<f64>,
    mats: super::mix::MixMatrices,
    in_dims: BatchDims,
    out_dims: BatchDims,
}

impl GcaConv2d {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        algebra: Arc<Algebra>,
        cfg: &GcaConv2dConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if cfg.kernel % 2 == 0 || cfg.kernel == 0 {
            return Err(Error::InvalidConfig(format!(
                "kernel size must be odd, got {}",
                cfg.kernel
            )));
        }
        let slots = cfg.c_in * cfg.kernel * cfg.kernel;
        let mix = ActionMix::register(
            store,
            name,
            algebra,
            cfg.blade_mask.clone(),
            cfg.active_blades.clone(),
            cfg.c_out,
            slots,
            slots,
            cfg.action_std,
            rng,
        )?;
        Ok(Self {
            mix,
            c_in: cfg.c_in,
            c_out: cfg.c_out,
            kernel: cfg.kernel,
            padding: cfg.padding,
        })
    }

    pub fn weight_id(&self) -> ParamId {
        self.mix.w
    }

    pub fn action_id(&self) -> ParamId {
        self.mix.a
    }

    fn out_dims(&self, x: &MultivectorBatch) -> Result<BatchDims> {
        let BatchDims::Spatial {
            batch,
            channels,
            height,
            width,
        } = x.dims()
        else {
            return Err(Error::ShapeMismatch {
                context: "gca_conv2d expects a (batch, channels, h, w) input".into(),
            });
        };
        if channels != self.c_in {
            return Err(Error::ShapeMismatch {
                context: format!("gca_conv2d expects {} channels, got {channels}", self.c_in),
            });
        }
        match self.padding {
            Padding::Valid => {
                if height < self.kernel || width < self.kernel {
                    return Err(Error::KernelTooLarge {
                        h: height,
                        w: width,
                        k: self.kernel,
                    });
                }
                Ok(BatchDims::Spatial {
                    batch,
                    channels: self.c_out,
                    height: height - self.kernel + 1,
                    width: width - self.kernel + 1,
                })
            }
            Padding::Zero | Padding::Circular => Ok(BatchDims::Spatial {
                batch,
                channels: self.c_out,
                height,
                width,
            }),
        }
    }

    /// Source pixel for output position (oy, ox) and kernel offset (ky, kx),
    /// or None when it falls outside (zero padding).
    fn source_pixel(
        &self,
        oy: usize,
        ox: usize,
        ky: usize,
        kx: usize,
        height: usize,
        width: usize,
    ) -> Option<(usize, usize)> {
        match self.padding {
            Padding::Valid => Some((oy + ky, ox + kx)),
            Padding::Zero => {
                let off = (self.kernel / 2) as isize;
                let sy = oy as isize + ky as isize - off;
                let sx = ox as isize + kx as isize - off;
                if sy < 0 || sx < 0 || sy >= height as isize || sx >= width as isize {
                    None
                } else {
                    Some((sy as usize, sx as usize))
                }
            }
            Padding::Circular => {
                let off = (self.kernel / 2) as isize;
                let sy = (oy as isize + ky as isize - off).rem_euclid(height as isize);
                let sx = (ox as isize + kx as isize - off).rem_euclid(width as isize);
                Some((sy as usize, sx as usize))
            }
        }
    }

    /// Gathers patches into rows of (c_in * k * k * V) compact values.
    fn im2col(&self, x: &MultivectorBatch, out_dims: BatchDims) -> Vec<f64> {
        let active = self.mix.kernel.active();
        let v = active.len();
        let BatchDims::Spatial { height, width, .. } = x.dims() else {
            unreachable!()
        };
        let BatchDims::Spatial {
            batch,
            height: oh,
            width: ow,
            ..
        } = out_dims
        else {
            unreachable!()
        };
        let k = self.kernel;
        let row_width = self.c_in * k * k * v;
        let mut cols = vec![0.0; batch * oh * ow * row_width];
        let mut row = 0;
        for b in 0..batch {
            for oy in 0..oh {
                for ox in 0..ow {
                    let dst_row = &mut cols[row * row_width..(row + 1) * row_width];
                    for c in 0..self.c_in {
                        for ky in 0..k {
                            for kx in 0..k {
                                let slot_off = ((c * k + ky) * k + kx) * v;
                                if let Some((sy, sx)) =
                                    self.source_pixel(oy, ox, ky, kx, height, width)
                                {
                                    let src = x.slot(x.slot_spatial(b, c, sy, sx));
                                    for (u, &blade) in active.iter().enumerate() {
                                        dst_row[slot_off + u] = src[blade];
                                    }
                                }
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
        cols
    }

    /// Scatters compact patch-gradient rows back onto the input grid.
    fn col2im(&self, grad_cols: &[f64], in_dims: BatchDims, out_dims: BatchDims) -> MultivectorBatch {
        let active = self.mix.kernel.active();
        let v = active.len();
        let algebra = self.mix.kernel.algebra().clone();
        let mut grad_x = MultivectorBatch::zeros(algebra, in_dims);
        let BatchDims::Spatial { height, width, .. } = in_dims else {
            unreachable!()
        };
        let BatchDims::Spatial {
            batch,
            height: oh,
            width: ow,
            ..
        } = out_dims
        else {
            unreachable!()
        };
        let k = self.kernel;
        let row_width = self.c_in * k * k * v;
        let mut row = 0;
        for b in 0..batch {
            for oy in 0..oh {
                for ox in 0..ow {
                    let src_row = &grad_cols[row * row_width..(row + 1) * row_width];
                    for c in 0..self.c_in {
                        for ky in 0..k {
                            for kx in 0..k {
                                let slot_off = ((c * k + ky) * k + kx) * v;
                                if let Some((sy, sx)) =
                                    self.source_pixel(oy, ox, ky, kx, height, width)
                                {
                                    let slot = grad_x.slot_spatial(b, c, sy, sx);
                                    let dst = grad_x.slot_mut(slot);
                                    for (u, &blade) in active.iter().enumerate() {
                                        dst[blade] += src_row[slot_off + u];
                                    }
                                }
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
        grad_x
    }

    pub fn forward(
        &self,
        store: &ParamStore,
        x: &MultivectorBatch,
    ) -> Result<(MultivectorBatch, GcaConv2dCache)> {
        if x.algebra().signature() != self.mix.kernel.algebra().signature() {
            return Err(Error::SignatureMismatch {
                left: self.mix.kernel.algebra().signature().to_string(),
                right: x.algebra().signature().to_string(),
            });
        }
        let out_dims = self.out_dims(x)?;
        let mats = self.mix.build(store)?;
        let x_cols = self.im2col(x, out_dims);
        let BatchDims::Spatial {
            batch,
            height: oh,
            width: ow,
            ..
        } = out_dims
        else {
            unreachable!()
        };
        let rows = batch * oh * ow;
        let y_compact = self.mix.forward_compact(&mats, &x_cols, rows);

        // scatter rows (b, oy, ox) x (c_out, V) onto the output layout
        let active = self.mix.kernel.active();
        let v = active.len();
        let mut y = MultivectorBatch::zeros(x.algebra().clone(), out_dims);
        let mut row = 0;
        for b in 0..batch {
            for oy in 0..oh {
                for ox in 0..ow {
                    for o in 0..self.c_out {
                        let slot = y.slot_spatial(b, o, oy, ox);
                        let dst = y.slot_mut(slot);
                        for (u, &blade) in active.iter().enumerate() {
                            dst[blade] = y_compact[row * self.c_out * v + o * v + u];
                        }
                    }
                    row += 1;
                }
            }
        }
        Ok((
            y,
            GcaConv2dCache {
                x_cols,
                mats,
                in_dims: x.dims(),
                out_dims,
            },
        ))
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &GcaConv2dCache,
        grad_out: &MultivectorBatch,
    ) -> Result<MultivectorBatch> {
        if grad_out.dims() != cache.out_dims {
            return Err(Error::ShapeMismatch {
                context: "conv gradient dims do not match forward output".into(),
            });
        }
        let BatchDims::Spatial {
            batch,
            height: oh,
            width: ow,
            ..
        } = cache.out_dims
        else {
            unreachable!()
        };
        let active = self.mix.kernel.active();
        let v = active.len();
        let rows = batch * oh * ow;
        let mut g_compact = vec![0.0; rows * self.c_out * v];
        let mut row = 0;
        for b in 0..batch {
            for oy in 0..oh {
                for ox in 0..ow {
                    for o in 0..self.c_out {
                        let src = grad_out.slot(grad_out.slot_spatial(b, o, oy, ox));
                        for (u, &blade) in active.iter().enumerate() {
                            g_compact[row * self.c_out * v + o * v + u] = src[blade];
                        }
                    }
                    row += 1;
                }
            }
        }
        let grad_cols =
            self.mix
                .backward_compact(store, &cache.mats, &cache.x_cols, &g_compact, rows);
        Ok(self.col2im(&grad_cols, cache.in_dims, cache.out_dims))
    }
}
