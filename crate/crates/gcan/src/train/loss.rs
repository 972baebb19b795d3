use crate::error::{Error, Result};

/// Mean squared error with an explicit per-sample normalizer: the summed
/// squared error is divided by `locations` per sample and averaged over the
/// batch. The gradient is 2 (pred - target) / (locations * batch).
pub fn mse_loss(pred: &[f64], target: &[f64], locations: usize, batch: usize) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "mse_loss: prediction has {} values, target {}",
                pred.len(),
                target.len()
            ),
        });
    }
    if locations == 0 || batch == 0 {
        return Err(Error::InvalidConfig(
            "mse_loss needs nonzero locations and batch".into(),
        ));
    }
    let scale = 1.0 / (locations as f64 * batch as f64);
    let mut loss = 0.0;
    let mut grad = vec![0.0; pred.len()];
    for i in 0..pred.len() {
        let d = pred[i] - target[i];
        loss += d * d * scale;
        grad[i] = 2.0 * d * scale;
    }
    Ok((loss, grad))
}
