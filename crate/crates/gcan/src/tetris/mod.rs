//! Rigid-body trajectory data and the GCA-MLP vs baseline-MLP comparison.

mod data;
mod experiment;
mod model;
mod shapes;

pub use data::{
    generate_dataset, Dataset, GeneratorConfig, N_COORDS, N_IN_STEPS, N_LOCATIONS, N_OBJECTS,
    N_OUT_STEPS, N_POINTS, N_STEPS, TRAJ_STRIDE,
};
pub use experiment::{
    evaluate, experiment_datasets, extract_samples, run_experiment, train_model,
    ExperimentOptions, ExperimentResult, Samples, SeedOutcome, TrainOptions,
};
pub use model::{
    components, input_width, matching_baseline_width, output_width, parameter_count, BaselineMlp,
    GcaMlp, ModelKind, TetrisCache, TetrisModel, TetrisModelConfig,
};
pub use shapes::{centered_shape, TETROMINOES};
