//! Analytic backward passes vs central finite differences for every layer.
//! The input batch is registered as a parameter buffer so its gradient is
//! checked through the same machinery as the weights.

use std::sync::Arc;

use rand::prelude::*;

use gcan::algebra::{Algebra, AlgebraExt};
use gcan::layers::{
    rotation_mask_g300, screw_mask_g301, BatchDims, GcaConv2d, GcaConv2dConfig, GcaLinear,
    GcaLinearConfig, GcaNorm, GcaNormConfig, MsiLu, MsiLuConfig, MsiLuMode, MultivectorBatch,
    Padding,
};
use gcan::train::{grad_check, seeded_rng, ParamStore, GRAD_CHECK_TOL};

fn batch_from(
    algebra: &Arc<Algebra>,
    dims: BatchDims,
    values: &[f64],
) -> MultivectorBatch {
    MultivectorBatch::from_coeffs(algebra.clone(), dims, values.to_vec()).unwrap()
}

fn projection(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed, 99);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn linear_backward_matches_finite_differences() {
    let algebra = Algebra::from_pqr(3, 0, 1).unwrap();
    for seed in 0..5u64 {
        let mut rng = seeded_rng(seed, 0);
        let mut store = ParamStore::new();
        let dims = BatchDims::Flat { batch: 2, channels: 3 };
        let x_init: Vec<f64> = (0..2 * 3 * 16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x_id = store.register("x", &[2 * 3 * 16], x_init).unwrap();
        let layer = GcaLinear::new(
            &mut store,
            "lin",
            algebra.clone(),
            &GcaLinearConfig::new(3, 2, screw_mask_g301(&algebra)),
            &mut rng,
        )
        .unwrap();
        let proj = projection(2 * 2 * 16, seed);

        store.zero_grads();
        let x = batch_from(&algebra, dims, store.value(x_id));
        let (y, cache) = layer.forward(&store, &x).unwrap();
        let grad_out = batch_from(
            &algebra,
            y.dims(),
            &proj,
        );
        let grad_in = layer.backward(&mut store, &cache, &grad_out).unwrap();
        store
            .grad_mut(x_id)
            .copy_from_slice(grad_in.coeffs());

        let report = grad_check(&mut store, GRAD_CHECK_TOL, |s| {
            let x = batch_from(&algebra, dims, s.value(x_id));
            let (y, _) = layer.forward(s, &x).unwrap();
            dot(y.coeffs(), &proj)
        });
        assert!(
            report.passed(),
            "seed {seed}: max rel err {:.3e} ({:?})",
            report.max_rel_err,
            report.per_param
        );
    }
}

#[test]
fn restricted_linear_backward_matches_finite_differences() {
    let algebra = Algebra::from_pqr(3, 0, 1).unwrap();
    let active: Vec<usize> = algebra
        .grade_range(1)
        .chain(algebra.grade_range(3))
        .collect();
    let mut rng = seeded_rng(77, 0);
    let mut store = ParamStore::new();
    let dims = BatchDims::Flat { batch: 2, channels: 2 };
    // input supported on the active subspace only
    let mut x_init = vec![0.0; 2 * 2 * 16];
    for slot in 0..4 {
        for &u in &active {
            x_init[slot * 16 + u] = rng.random_range(-1.0..1.0);
        }
    }
    let x_id = store.register("x", &[2 * 2 * 16], x_init).unwrap();
    let layer = GcaLinear::new(
        &mut store,
        "lin",
        algebra.clone(),
        &GcaLinearConfig::new(2, 2, screw_mask_g301(&algebra)).with_active(active),
        &mut rng,
    )
    .unwrap();
    let proj = projection(2 * 2 * 16, 77);

    store.zero_grads();
    let x = batch_from(&algebra, dims, store.value(x_id));
    let (_, cache) = layer.forward(&store, &x).unwrap();
    let grad_out = batch_from(&algebra, dims, &proj);
    let grad_in = layer.backward(&mut store, &cache, &grad_out).unwrap();
    store.grad_mut(x_id).copy_from_slice(grad_in.coeffs());

    let report = grad_check(&mut store, GRAD_CHECK_TOL, |s| {
        let x = batch_from(&algebra, dims, s.value(x_id));
        let (y, _) = layer.forward(s, &x).unwrap();
        dot(y.coeffs(), &proj)
    });
    assert!(report.passed(), "max rel err {:.3e}", report.max_rel_err);
}

#[test]
fn conv_backward_matches_finite_differences() {
    let algebra = Algebra::from_pqr(3, 0, 0).unwrap();
    for (seed, padding) in [(1u64, Padding::Valid), (2, Padding::Zero), (3, Padding::Circular)] {
        let mut rng = seeded_rng(seed, 10);
        let mut store = ParamStore::new();
        let dims = BatchDims::Spatial { batch: 1, channels: 2, height: 4, width: 4 };
        let x_init: Vec<f64> = (0..2 * 16 * 8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x_id = store.register("x", &[2 * 16 * 8], x_init).unwrap();
        let mut cfg = GcaConv2dConfig::new(2, 2, 3, rotation_mask_g300(&algebra));
        cfg.padding = padding;
        let layer = GcaConv2d::new(&mut store, "conv", algebra.clone(), &cfg, &mut rng).unwrap();

        store.zero_grads();
        let x = batch_from(&algebra, dims, store.value(x_id));
        let (y, cache) = layer.forward(&store, &x).unwrap();
        let proj = projection(y.coeffs().len(), seed);
        let grad_out = batch_from(&algebra, y.dims(), &proj);
        let grad_in = layer.backward(&mut store, &cache, &grad_out).unwrap();
        store.grad_mut(x_id).copy_from_slice(grad_in.coeffs());

        let report = grad_check(&mut store, GRAD_CHECK_TOL, |s| {
            let x = batch_from(&algebra, dims, s.value(x_id));
            let (y, _) = layer.forward(s, &x).unwrap();
            dot(y.coeffs(), &proj)
        });
        assert!(
            report.passed(),
            "{padding:?}: max rel err {:.3e}",
            report.max_rel_err
        );
    }
}

#[test]
fn msilu_backward_matches_finite_differences() {
    let algebra = Algebra::from_pqr(3, 0, 1).unwrap();
    for (seed, mode, pooled) in [
        (1u64, MsiLuMode::Linear, false),
        (2, MsiLuMode::Linear, true),
        (3, MsiLuMode::Sum, false),
        (4, MsiLuMode::Mean, false),
    ] {
        let mut rng = seeded_rng(seed, 20);
        let mut store = ParamStore::new();
        let dims = BatchDims::Flat { batch: 2, channels: 3 };
        let x_init: Vec<f64> = (0..2 * 3 * 16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x_id = store.register("x", &[2 * 3 * 16], x_init).unwrap();
        let layer = MsiLu::new(&mut store, "act", algebra.clone(), MsiLuConfig { mode, pooled })
            .unwrap();
        if mode == MsiLuMode::Linear {
            let beta = store.value_mut(store.id_of("act.beta").unwrap());
            for b in beta.iter_mut() {
                *b = rng.random_range(-0.8..0.8);
            }
        }
        let proj = projection(2 * 3 * 16, seed + 100);

        store.zero_grads();
        let x = batch_from(&algebra, dims, store.value(x_id));
        let (_, cache) = layer.forward(&store, &x).unwrap();
        let grad_out = batch_from(&algebra, dims, &proj);
        let grad_in = layer.backward(&mut store, &cache, &grad_out).unwrap();
        store.grad_mut(x_id).copy_from_slice(grad_in.coeffs());

        let report = grad_check(&mut store, GRAD_CHECK_TOL, |s| {
            let x = batch_from(&algebra, dims, s.value(x_id));
            let (y, _) = layer.forward(s, &x).unwrap();
            dot(y.coeffs(), &proj)
        });
        assert!(
            report.passed(),
            "mode {mode:?} pooled={pooled}: max rel err {:.3e}",
            report.max_rel_err
        );
    }
}

#[test]
fn msilu_gradient_at_zero_is_half_for_scalar_sum_mode() {
    // d/dx sigma(x) x = sigma(0) = 0.5 at x = 0
    let algebra = Algebra::from_pqr(0, 0, 0).unwrap();
    let mut store = ParamStore::new();
    let layer = MsiLu::new(
        &mut store,
        "act",
        algebra.clone(),
        MsiLuConfig { mode: MsiLuMode::Sum, pooled: false },
    )
    .unwrap();
    let x = MultivectorBatch::zeros(algebra.clone(), BatchDims::Flat { batch: 1, channels: 1 });
    let (_, cache) = layer.forward(&store, &x).unwrap();
    let mut grad_out = MultivectorBatch::zeros(algebra.clone(), x.dims());
    grad_out.slot_mut(0)[0] = 1.0;
    let grad_in = layer.backward(&mut store, &cache, &grad_out).unwrap();
    assert!((grad_in.slot(0)[0] - 0.5).abs() < 1e-15);
}

#[test]
fn norm_backward_matches_finite_differences() {
    let algebra = Algebra::from_pqr(3, 0, 1).unwrap();
    for (seed, include_spatial, spatial) in [(1u64, true, false), (2, false, false), (3, true, true)] {
        let mut rng = seeded_rng(seed, 30);
        let mut store = ParamStore::new();
        let dims = if spatial {
            BatchDims::Spatial { batch: 1, channels: 4, height: 2, width: 2 }
        } else {
            BatchDims::Flat { batch: 2, channels: 4 }
        };
        let total = dims.positions() * 16;
        // grade 4 in G(3,0,1) has identically zero study norm, so its
        // normalized values are x/eps ~ 1e6; keep the base point off that
        // grade or finite differences drown in the amplified components
        let quad = algebra.grade_range(4).next().unwrap();
        let x_init: Vec<f64> = (0..total)
            .map(|i| {
                if i % 16 == quad {
                    0.0
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        let x_id = store.register("x", &[total], x_init).unwrap();
        let mut cfg = GcaNormConfig::new(2);
        cfg.include_spatial = include_spatial;
        let layer = GcaNorm::new(&mut store, "norm", algebra.clone(), cfg).unwrap();
        for (k, sv) in store
            .value_mut(store.id_of("norm.s").unwrap())
            .iter_mut()
            .enumerate()
        {
            *sv = 0.8 + 0.1 * k as f64;
        }
        let proj = projection(total, seed + 200);

        store.zero_grads();
        let x = batch_from(&algebra, dims, store.value(x_id));
        let (_, cache) = layer.forward(&store, &x).unwrap();
        let grad_out = batch_from(&algebra, dims, &proj);
        let grad_in = layer.backward(&mut store, &cache, &grad_out).unwrap();
        store.grad_mut(x_id).copy_from_slice(grad_in.coeffs());

        let report = grad_check(&mut store, GRAD_CHECK_TOL, |s| {
            let x = batch_from(&algebra, dims, s.value(x_id));
            let (y, _) = layer.forward(s, &x).unwrap();
            dot(y.coeffs(), &proj)
        });
        assert!(
            report.passed(),
            "spatial={spatial} include_spatial={include_spatial}: max rel err {:.3e} ({:?})",
            report.max_rel_err,
            report.per_param
        );
    }
}

#[test]
fn norm_with_zero_scale_blocks_input_gradient_but_not_scale_gradient() {
    let algebra = Algebra::from_pqr(2, 0, 0).unwrap();
    let mut rng = seeded_rng(9, 40);
    let mut store = ParamStore::new();
    let layer = GcaNorm::new(&mut store, "norm", algebra.clone(), GcaNormConfig::new(2)).unwrap();
    store.value_mut(store.id_of("norm.s").unwrap()).fill(0.0);

    let dims = BatchDims::Flat { batch: 1, channels: 2 };
    let coeffs: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = batch_from(&algebra, dims, &coeffs);
    let (_, cache) = layer.forward(&store, &x).unwrap();
    let mut grad_out = MultivectorBatch::zeros(algebra.clone(), dims);
    for c in grad_out.coeffs_mut() {
        *c = 1.0;
    }
    let grad_in = layer.backward(&mut store, &cache, &grad_out).unwrap();
    assert!(grad_in.coeffs().iter().all(|&g| g == 0.0));
    let gs = store.grad(store.id_of("norm.s").unwrap());
    assert!(gs.iter().any(|&g| g != 0.0));
}

#[test]
fn zero_grad_out_produces_zero_gradients() {
    let algebra = Algebra::from_pqr(3, 0, 1).unwrap();
    let mut rng = seeded_rng(13, 50);
    let mut store = ParamStore::new();
    let layer = GcaLinear::new(
        &mut store,
        "lin",
        algebra.clone(),
        &GcaLinearConfig::new(2, 2, screw_mask_g301(&algebra)),
        &mut rng,
    )
    .unwrap();
    let dims = BatchDims::Flat { batch: 2, channels: 2 };
    let coeffs: Vec<f64> = (0..2 * 2 * 16).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = batch_from(&algebra, dims, &coeffs);
    store.zero_grads();
    let (_, cache) = layer.forward(&store, &x).unwrap();
    let grad_out = MultivectorBatch::zeros(algebra.clone(), dims);
    let grad_in = layer.backward(&mut store, &cache, &grad_out).unwrap();
    assert!(grad_in.coeffs().iter().all(|&g| g == 0.0));
    assert!(store.grad(layer.weight_id()).iter().all(|&g| g == 0.0));
    assert!(store.grad(layer.action_id()).iter().all(|&g| g == 0.0));
}

#[test]
fn unit_weight_scalar_grad_example() {
    // w = 1, a = 1, x = e1, grad_out = e1: dL/dw = <x, grad> = 1
    let algebra = Algebra::from_pqr(3, 0, 0).unwrap();
    let mut rng = seeded_rng(17, 60);
    let mut store = ParamStore::new();
    let layer = GcaLinear::new(
        &mut store,
        "lin",
        algebra.clone(),
        &GcaLinearConfig::new(1, 1, rotation_mask_g300(&algebra)),
        &mut rng,
    )
    .unwrap();
    store.value_mut(layer.weight_id()).fill(1.0);
    let a = store.value_mut(layer.action_id());
    a.fill(0.0);
    a[0] = 1.0;

    let dims = BatchDims::Flat { batch: 1, channels: 1 };
    let mut x = MultivectorBatch::zeros(algebra.clone(), dims);
    x.slot_mut(0)[1] = 1.0;
    store.zero_grads();
    let (_, cache) = layer.forward(&store, &x).unwrap();
    let mut grad_out = MultivectorBatch::zeros(algebra.clone(), dims);
    grad_out.slot_mut(0)[1] = 1.0;
    layer.backward(&mut store, &cache, &grad_out).unwrap();
    assert!((store.grad(layer.weight_id())[0] - 1.0).abs() < 1e-15);
}
