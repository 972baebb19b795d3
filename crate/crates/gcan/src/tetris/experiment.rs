//! Training and evaluation driver for the rigid-body prediction comparison.

use std::time::Instant;

use rand::Rng;

use super::data::{
    generate_dataset, Dataset, GeneratorConfig, N_IN_STEPS, N_LOCATIONS, N_OUT_STEPS, N_POINTS,
    N_STEPS,
};
use super::model::{
    components, matching_baseline_width, parameter_count, ModelKind, TetrisModel,
    TetrisModelConfig,
};
use crate::error::{Error, Result};
use crate::train::{mse_loss, seeded_rng, AdamConfig, AdamState, ParamStore, TrainRecord};

/// Flattened (input, target) pairs: inputs are the first four steps,
/// targets the last four, laid out [sample][step][location][component].
#[derive(Clone, Debug)]
pub struct Samples {
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub n: usize,
    pub comps: usize,
}

impl Samples {
    pub fn input_width(&self) -> usize {
        N_IN_STEPS * N_LOCATIONS * self.comps
    }

    pub fn target_width(&self) -> usize {
        N_OUT_STEPS * N_LOCATIONS * self.comps
    }

    pub fn gather(&self, indices: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let iw = self.input_width();
        let tw = self.target_width();
        let mut inputs = Vec::with_capacity(indices.len() * iw);
        let mut targets = Vec::with_capacity(indices.len() * tw);
        for &i in indices {
            inputs.extend_from_slice(&self.inputs[i * iw..(i + 1) * iw]);
            targets.extend_from_slice(&self.targets[i * tw..(i + 1) * tw]);
        }
        (inputs, targets)
    }
}

/// Splits a dataset into per-sample input/target tensors.
pub fn extract_samples(ds: &Dataset, include_velocities: bool) -> Result<Samples> {
    if include_velocities && ds.velocities.is_none() {
        return Err(Error::InvalidConfig(
            "dataset was generated without velocities".into(),
        ));
    }
    let comps = components(include_velocities);
    let n = ds.len();
    let mut inputs = vec![0.0; n * N_IN_STEPS * N_LOCATIONS * comps];
    let mut targets = vec![0.0; n * N_OUT_STEPS * N_LOCATIONS * comps];
    for traj in 0..n {
        for step in 0..N_STEPS {
            for loc in 0..N_LOCATIONS {
                let (obj, pt) = (loc / N_POINTS, loc % N_POINTS);
                let pos = ds.position(traj, obj, pt, step);
                let (buf, t) = if step < N_IN_STEPS {
                    (&mut inputs, step)
                } else {
                    (&mut targets, step - N_IN_STEPS)
                };
                let base = ((traj * N_IN_STEPS + t) * N_LOCATIONS + loc) * comps;
                buf[base..base + 3].copy_from_slice(&pos);
                if include_velocities {
                    let vel = ds.velocity(traj, obj, pt, step).expect("checked above");
                    buf[base + 3..base + 6].copy_from_slice(&vel);
                }
            }
        }
    }
    Ok(Samples {
        inputs,
        targets,
        n,
        comps,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct TrainOptions {
    pub steps: u64,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            steps: 5000,
            batch_size: 128,
            lr: 1e-3,
            seed: 0,
        }
    }
}

/// Trains in place; one record per step. Errors (e.g. non-finite
/// gradients) propagate to the caller.
pub fn train_model(
    store: &mut ParamStore,
    model: &TetrisModel,
    samples: &Samples,
    opts: &TrainOptions,
) -> Result<Vec<TrainRecord>> {
    let mut adam = AdamState::new(AdamConfig::with_lr(opts.lr), store);
    let mut rng = seeded_rng(opts.seed, 7000);
    let mut order: Vec<usize> = (0..samples.n).collect();
    let mut cursor = samples.n; // forces an initial shuffle
    let mut records = Vec::with_capacity(opts.steps as usize);
    let start = Instant::now();
    for step in 0..opts.steps {
        let batch = opts.batch_size.min(samples.n);
        if cursor + batch > samples.n {
            // new epoch: Fisher-Yates shuffle
            for i in (1..samples.n).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            cursor = 0;
        }
        let indices = &order[cursor..cursor + batch];
        cursor += batch;

        let (inputs, targets) = samples.gather(indices);
        store.zero_grads();
        let (pred, cache) = model.forward(store, &inputs, batch)?;
        let (loss, grad) = mse_loss(&pred, &targets, N_LOCATIONS, batch)?;
        model.backward(store, &cache, &grad)?;
        adam.step(store)?;
        records.push(TrainRecord {
            step: step + 1,
            train_loss: loss,
            val_loss: None,
            wall_ms: start.elapsed().as_millis() as u64,
        });
    }
    Ok(records)
}

/// Mean loss over a sample set, evaluated in fixed-size chunks.
pub fn evaluate(store: &ParamStore, model: &TetrisModel, samples: &Samples) -> Result<f64> {
    let chunk = 256usize;
    let mut total = 0.0;
    let mut seen = 0usize;
    let mut i = 0;
    while i < samples.n {
        let hi = (i + chunk).min(samples.n);
        let indices: Vec<usize> = (i..hi).collect();
        let (inputs, targets) = samples.gather(&indices);
        let (pred, _) = model.forward(store, &inputs, indices.len())?;
        let (loss, _) = mse_loss(&pred, &targets, N_LOCATIONS, indices.len())?;
        total += loss * indices.len() as f64;
        seen += indices.len();
        i = hi;
    }
    Ok(total / seen as f64)
}

#[derive(Clone, Copy, Debug)]
pub struct ExperimentOptions {
    pub train_size: usize,
    pub test_size: usize,
    pub steps: u64,
    pub batch_size: usize,
    pub lr: f64,
    pub include_velocities: bool,
    /// GCA hidden channels; the baseline width is derived to match counts.
    pub gca_hidden: usize,
    pub data_seed: u64,
    pub model_seeds: [u64; 3],
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            train_size: 256,
            test_size: 256,
            steps: 5000,
            batch_size: 128,
            lr: 1e-3,
            include_velocities: false,
            gca_hidden: 38,
            data_seed: 2024,
            model_seeds: [1, 2, 3],
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeedOutcome {
    pub seed: u64,
    /// Test MSE, or None when training diverged (reported, not fatal).
    pub gca_mse: Option<f64>,
    pub mlp_mse: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub outcomes: Vec<SeedOutcome>,
    pub gca_params: usize,
    pub mlp_params: usize,
    pub mlp_hidden: usize,
    pub gca_median: Option<f64>,
    pub mlp_median: Option<f64>,
}

fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Some(values[values.len() / 2])
}

/// Offset between train and test generation seeds.
const TEST_SEED_OFFSET: u64 = 1_000_003;

pub fn experiment_datasets(opts: &ExperimentOptions) -> Result<(Dataset, Dataset)> {
    let mut train_cfg = GeneratorConfig::new(opts.train_size, opts.data_seed);
    train_cfg.with_velocities = opts.include_velocities;
    let mut test_cfg = GeneratorConfig::new(opts.test_size, opts.data_seed + TEST_SEED_OFFSET);
    test_cfg.with_velocities = opts.include_velocities;
    Ok((generate_dataset(&train_cfg)?, generate_dataset(&test_cfg)?))
}

fn run_single(
    kind: ModelKind,
    hidden: usize,
    opts: &ExperimentOptions,
    train: &Samples,
    test: &Samples,
    seed: u64,
) -> Result<f64> {
    let cfg = TetrisModelConfig {
        kind,
        hidden,
        include_velocities: opts.include_velocities,
    };
    let mut store = ParamStore::new();
    let model = TetrisModel::build(&mut store, &cfg, seed)?;
    let train_opts = TrainOptions {
        steps: opts.steps,
        batch_size: opts.batch_size,
        lr: opts.lr,
        seed,
    };
    train_model(&mut store, &model, train, &train_opts)?;
    evaluate(&store, &model, test)
}

/// Trains both models over the configured seeds and reports test MSE.
pub fn run_experiment(opts: &ExperimentOptions) -> Result<ExperimentResult> {
    let gca_cfg = TetrisModelConfig {
        kind: ModelKind::Gca,
        hidden: opts.gca_hidden,
        include_velocities: opts.include_velocities,
    };
    let gca_params = parameter_count(&gca_cfg)?;
    let mlp_hidden = matching_baseline_width(gca_params, opts.include_velocities)?;
    let mlp_cfg = TetrisModelConfig {
        kind: ModelKind::Mlp,
        hidden: mlp_hidden,
        include_velocities: opts.include_velocities,
    };
    let mlp_params = parameter_count(&mlp_cfg)?;

    let (train_ds, test_ds) = experiment_datasets(opts)?;
    let train = extract_samples(&train_ds, opts.include_velocities)?;
    let test = extract_samples(&test_ds, opts.include_velocities)?;

    let mut outcomes = Vec::new();
    for &seed in &opts.model_seeds {
        let gca_mse = match run_single(ModelKind::Gca, opts.gca_hidden, opts, &train, &test, seed)
        {
            Ok(m) if m.is_finite() => Some(m),
            Ok(_) | Err(Error::NonFiniteGradient { .. }) => None,
            Err(e) => return Err(e),
        };
        let mlp_mse = match run_single(ModelKind::Mlp, mlp_hidden, opts, &train, &test, seed) {
            Ok(m) if m.is_finite() => Some(m),
            Ok(_) | Err(Error::NonFiniteGradient { .. }) => None,
            Err(e) => return Err(e),
        };
        outcomes.push(SeedOutcome {
            seed,
            gca_mse,
            mlp_mse,
        });
    }
    let mut gca: Vec<f64> = outcomes.iter().filter_map(|o| o.gca_mse).collect();
    let mut mlp: Vec<f64> = outcomes.iter().filter_map(|o| o.mlp_mse).collect();
    Ok(ExperimentResult {
        outcomes,
        gca_params,
        mlp_params,
        mlp_hidden,
        gca_median: median(&mut gca),
        mlp_median: median(&mut mlp),
    })
}

impl ExperimentResult {
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "model        params   hidden   test MSE per seed\n"
        ));
        let fmt = |v: &Option<f64>| match v {
            Some(m) => format!("{m:.4}"),
            None => "diverged".to_string(),
        };
        let gca_line: Vec<String> = self.outcomes.iter().map(|o| fmt(&o.gca_mse)).collect();
        let mlp_line: Vec<String> = self.outcomes.iter().map(|o| fmt(&o.mlp_mse)).collect();
        out.push_str(&format!(
            "gca-mlp      {:7}  {:7}  {}  (median {})\n",
            self.gca_params,
            "-",
            gca_line.join("  "),
            fmt(&self.gca_median)
        ));
        out.push_str(&format!(
            "baseline-mlp {:7}  {:7}  {}  (median {})\n",
            self.mlp_params,
            self.mlp_hidden,
            mlp_line.join("  "),
            fmt(&self.mlp_median)
        ));
        out
    }
}
