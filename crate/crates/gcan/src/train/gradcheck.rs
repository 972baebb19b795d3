use super::store::ParamStore;

/// Step size for central differences.
pub const GRAD_CHECK_H: f64 = 1e-6;
/// Default pass threshold on the relative error.
pub const GRAD_CHECK_TOL: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// (parameter name, max relative error over its entries)
    pub per_param: Vec<(String, f64)>,
    pub max_rel_err: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

/// Relative error with an absolute floor so near-zero gradient pairs do not
/// produce spurious failures from finite-difference noise.
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(1e-3);
    (analytic - numeric).abs() / scale
}

/// Central-difference check of analytic gradients.
///
/// `loss_fn` must be a deterministic function of the store's parameter
/// values. The analytic gradients are read from the store's gradient
/// buffers (populate them before calling), and every parameter entry is
/// perturbed by +/- h.
pub fn grad_check(
    store: &mut ParamStore,
    tolerance: f64,
    mut loss_fn: impl FnMut(&ParamStore) -> f64,
) -> GradCheckReport {
    let mut per_param = Vec::new();
    let mut max_rel: f64 = 0.0;
    for idx in 0..store.len() {
        let (name, numel) = {
            let (name, value, _) = store.value_and_grad_mut(idx);
            (name.to_string(), value.len())
        };
        let mut worst: f64 = 0.0;
        for i in 0..numel {
            let original = {
                let (_, value, _) = store.value_and_grad_mut(idx);
                value[i]
            };
            {
                let (_, value, _) = store.value_and_grad_mut(idx);
                value[i] = original + GRAD_CHECK_H;
            }
            let plus = loss_fn(store);
            {
                let (_, value, _) = store.value_and_grad_mut(idx);
                value[i] = original - GRAD_CHECK_H;
            }
            let minus = loss_fn(store);
            {
                let (_, value, _) = store.value_and_grad_mut(idx);
                value[i] = original;
            }
            let numeric = (plus - minus) / (2.0 * GRAD_CHECK_H);
            let analytic = {
                let (_, _, grad) = store.value_and_grad_mut(idx);
                grad[i]
            };
            worst = worst.max(rel_err(analytic, numeric));
        }
        max_rel = max_rel.max(worst);
        per_param.push((name, worst));
    }
    GradCheckReport {
        per_param,
        max_rel_err: max_rel,
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_a_linear_scalar_model() {
        // loss = sum(w . x) with fixed x; gradient is x exactly
        let x = [0.3, -0.7, 1.2];
        let mut store = ParamStore::new();
        let id = store.register("w", &[3], vec![0.1, 0.2, 0.3]).unwrap();
        for (g, xv) in store.grad_mut(id).iter_mut().zip(&x) {
            *g = *xv;
        }
        let report = grad_check(&mut store, GRAD_CHECK_TOL, |s| {
            s.value(s.id_of("w").unwrap())
                .iter()
                .zip(&x)
                .map(|(w, xv)| w * xv)
                .sum()
        });
        assert!(report.passed());
        assert!(report.max_rel_err < 1e-9, "err {:.3e}", report.max_rel_err);
    }

    #[test]
    fn detects_a_sign_flipped_gradient() {
        let mut store = ParamStore::new();
        let id = store.register("w", &[1], vec![0.8]).unwrap();
        // true gradient of w^2 is 2w = 1.6; corrupt the sign
        store.grad_mut(id)[0] = -1.6;
        let report = grad_check(&mut store, GRAD_CHECK_TOL, |s| {
            let w = s.value(s.id_of("w").unwrap())[0];
            w * w
        });
        assert!(!report.passed());
    }
}
