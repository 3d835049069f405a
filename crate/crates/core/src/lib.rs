//! Robust regression for linear-in-parameters models under the maximum
//! correntropy criterion with a variable kernel center.
//!
//! The crate is organized as:
//!
//! * [`kernel`]: Gaussian kernel, correntropy, and `(σ, c)` selection;
//! * [`lip`]: feature maps (linear, extreme learning machine) and predictions;
//! * [`solvers`]: ridge closed form and the fixed-point correntropy solvers;
//! * [`data`]: impulsive-noise generators, CSV datasets, splits and metrics;
//! * [`bench`]: benchmark protocols and report types behind the `mccvc` CLI.

pub mod bench;
pub mod data;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod lip;
pub mod solvers;
pub mod stats;

pub use error::{Error, Result};
pub use kernel::{
    center_from_rule, empirical_correntropy, gaussian_kernel, mcc_vc_cost, optimize_params,
    param_objective, CenterRule, ErrorVector, KernelParams, ParamGrid,
};
pub use lip::{
    build_linear_features, elm_features, init_elm, predict, DesignMatrix, FeatureMap,
    HiddenLayerSpec,
};
pub use solvers::{fit_mcc, fit_mcc_vc, ridge_solve, weighted_ridge_step, FitConfig, FitResult};
