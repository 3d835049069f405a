//! Synthetic data, dataset handling and error metrics.

pub mod dataset;
pub mod metrics;
pub mod noise;

pub use dataset::{
    kfold_indices, load_csv, normalize_minmax, split, split_indices, MinMaxRecord, SplitSpec,
    TabularDataset, TargetColumn, TrainSize,
};
pub use metrics::{rmse_predictions, rmse_weights};
pub use noise::{
    generate_linear_data, inner_noise_presets, sample_noise, sample_noise_detailed, InnerNoise,
    NoiseModel, PRESET_NAMES,
};
