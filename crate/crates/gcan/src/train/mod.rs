//! Parameter registry, Adam, MSE loss, gradient checking, and training-log
//! records.
//!
//! Randomness: everything derives from ChaCha8 streams. `seeded_rng(seed,
//! stream)` splits one master seed into independent streams — one per
//! parameter-initialization site or per trajectory — so initialization and
//! data generation are reproducible bit-for-bit for a given seed.

mod adam;
mod gradcheck;
mod loss;
mod store;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, GradCheckReport, GRAD_CHECK_H, GRAD_CHECK_TOL};
pub use loss::mse_loss;
pub use store::{ParamEntry, ParamId, ParamStore};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Named, seedable 64-bit generator with explicit stream splitting.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One line of the newline-delimited training log.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainRecord {
    pub step: u64,
    pub train_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_loss: Option<f64>,
    pub wall_ms: u64,
}

impl TrainRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}
