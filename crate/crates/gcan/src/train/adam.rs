use serde::{Deserialize, Serialize};

use super::store::ParamStore;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// Adam with bias correction. Moment buffers are laid out per parameter in
/// store order, so updates are deterministic.
pub struct AdamState {
    cfg: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(cfg: AdamConfig, store: &ParamStore) -> Self {
        let m = store.iter().map(|(_, e)| vec![0.0; e.value.len()]).collect();
        let v = store.iter().map(|(_, e)| vec![0.0; e.value.len()]).collect();
        Self {
            cfg,
            step: 0,
            m,
            v,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update from the gradients currently in the store. A non-finite
    /// gradient aborts with the offending parameter's name.
    pub fn step(&mut self, store: &mut ParamStore) -> Result<()> {
        self.step += 1;
        let t = self.step;
        let bc1 = 1.0 - self.cfg.beta1.powi(t as i32);
        let bc2 = 1.0 - self.cfg.beta2.powi(t as i32);
        for idx in 0..store.len() {
            let (name, value, grad) = store.value_and_grad_mut(idx);
            for g in grad.iter() {
                if !g.is_finite() {
                    return Err(Error::NonFiniteGradient {
                        param: name.to_string(),
                        step: t,
                    });
                }
            }
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            for i in 0..value.len() {
                let g = grad[i];
                m[i] = self.cfg.beta1 * m[i] + (1.0 - self.cfg.beta1) * g;
                v[i] = self.cfg.beta2 * v[i] + (1.0 - self.cfg.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                value[i] -= self.cfg.lr * m_hat / (v_hat.sqrt() + self.cfg.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut store = ParamStore::new();
        store.register("p", &[3], vec![1.0, -2.0, 0.5]).unwrap();
        let mut adam = AdamState::new(AdamConfig::default(), &store);
        adam.step(&mut store).unwrap();
        assert_eq!(
            store.value(store.id_of("p").unwrap()),
            &[1.0, -2.0, 0.5]
        );
    }

    #[test]
    fn first_step_moves_by_about_the_learning_rate() {
        let mut store = ParamStore::new();
        let id = store.register("p", &[1], vec![0.0]).unwrap();
        store.grad_mut(id)[0] = 1.0;
        let mut adam = AdamState::new(AdamConfig::default(), &store);
        adam.step(&mut store).unwrap();
        let p = store.value(id)[0];
        assert!((p + 1e-3).abs() < 1e-5, "first step was {p}");
    }

    #[test]
    fn converges_on_a_scalar_quadratic() {
        let mut store = ParamStore::new();
        let id = store.register("p", &[1], vec![0.0]).unwrap();
        let mut adam = AdamState::new(AdamConfig::with_lr(0.05), &store);
        for _ in 0..200 {
            store.zero_grads();
            let p = store.value(id)[0];
            store.grad_mut(id)[0] = 2.0 * (p - 3.0);
            adam.step(&mut store).unwrap();
        }
        let p = store.value(id)[0];
        assert!((p - 3.0).abs() < 0.1, "ended at {p}");
    }

    #[test]
    fn non_finite_gradient_aborts_with_the_parameter_name() {
        let mut store = ParamStore::new();
        store.register("fine", &[1], vec![0.0]).unwrap();
        let bad = store.register("exploded", &[1], vec![0.0]).unwrap();
        store.grad_mut(bad)[0] = f64::NAN;
        let mut adam = AdamState::new(AdamConfig::default(), &store);
        match adam.step(&mut store) {
            Err(Error::NonFiniteGradient { param, .. }) => assert_eq!(param, "exploded"),
            other => panic!("expected NonFiniteGradient, got {other:?}"),
        }
    }
}
