//! Fitting a single CSV and persisting the result as a self-contained model.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Method, ModelKind, SolverSettings};
use crate::data::{self, MinMaxRecord, TabularDataset, TargetColumn};
use crate::error::{Error, Result};
use crate::lip::{DesignMatrix, FeatureMap};
use crate::solvers::{self, FitConfig};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCommandConfig {
    pub csv: PathBuf,
    pub has_header: bool,
    pub target: TargetColumn,
    pub method: Method,
    pub model: ModelKind,
    pub hidden: usize,
    pub bias_column: bool,
    /// Min-max scale features and target before fitting.
    pub normalize: bool,
    pub seed: u64,
    pub lambda_prime: f64,
    /// Kernel width of the fixed-width method.
    pub mcc_sigma: f64,
    /// Add the selected center to MCC-VC predictions.
    pub add_center: bool,
    pub solver: SolverSettings,
}

/// Location and spread of the training residuals, in target units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub mad: f64,
    pub min: f64,
    pub max: f64,
}

impl ResidualSummary {
    pub fn of(residuals: &[f64]) -> Self {
        let (min, max) = residuals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        Self {
            mean: stats::mean(residuals),
            std: stats::sample_std(residuals),
            median: stats::median(residuals),
            mad: stats::mad(residuals),
            min,
            max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub method: Method,
    pub feature_map: FeatureMap,
    pub normalization: Option<MinMaxRecord>,
    pub beta: Vec<f64>,
    /// Final (σ, c) of the iterative methods.
    pub sigma: Option<f64>,
    pub center: Option<f64>,
    /// Added to `hβ` before undoing the target scaling.
    pub offset: f64,
    pub iterations_run: Option<usize>,
    pub converged: Option<bool>,
    pub training_rows: usize,
    pub training_rmse: f64,
    pub residuals: ResidualSummary,
    pub config: FitCommandConfig,
}

impl FittedModel {
    /// Predictions in the original target units for raw feature rows.
    pub fn predict(&self, features: &DMatrix<f64>) -> Result<DVector<f64>> {
        let scaled = match &self.normalization {
            Some(rec) => rec.transform_features(features)?,
            None => features.clone(),
        };
        let h = self.feature_map.apply(&scaled)?;
        let beta = DVector::from_column_slice(&self.beta);
        let y = crate::lip::predict(&h, &beta)?.add_scalar(self.offset);
        Ok(match &self.normalization {
            Some(rec) => rec.inverse_targets(&y),
            None => y,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Fits a model on an in-memory dataset.
pub fn fit_dataset(data: &TabularDataset, config: &FitCommandConfig) -> Result<FittedModel> {
    let (work, normalization) = if config.normalize {
        let (d, r) = data::normalize_minmax(data);
        (d, Some(r))
    } else {
        (data.clone(), None)
    };
    let feature_map = match config.model {
        ModelKind::Linear => FeatureMap::linear(work.n_features(), config.bias_column),
        ModelKind::Elm => FeatureMap::elm(work.n_features(), config.hidden, config.seed)?,
    };
    let design = DesignMatrix::new(feature_map.apply(&work.features)?, work.targets.clone())?;

    let (beta, sigma, center, iterations_run, converged, offset) = match config.method {
        Method::Mmse => (
            solvers::ridge_solve(&design, config.lambda_prime)?,
            None,
            None,
            None,
            None,
            0.0,
        ),
        Method::Mcc => {
            let f = solvers::fit_mcc(
                &design,
                config.mcc_sigma,
                config.lambda_prime,
                config.solver.max_iterations,
                config.solver.tolerance,
            )?;
            let p = f.final_params();
            (
                f.beta,
                Some(p.sigma()),
                Some(p.center()),
                Some(f.iterations_run),
                Some(f.converged),
                0.0,
            )
        }
        Method::MccVc => {
            let f = solvers::fit_mcc_vc(
                &design,
                &FitConfig {
                    lambda_prime: config.lambda_prime,
                    max_iterations: config.solver.max_iterations,
                    tolerance: config.solver.tolerance,
                    grid: config.solver.grid.clone(),
                    initial_beta: None,
                },
            )?;
            let p = f.final_params();
            let offset = if config.add_center { p.center() } else { 0.0 };
            (
                f.beta,
                Some(p.sigma()),
                Some(p.center()),
                Some(f.iterations_run),
                Some(f.converged),
                offset,
            )
        }
    };

    let mut model = FittedModel {
        method: config.method,
        feature_map,
        normalization,
        beta: beta.as_slice().to_vec(),
        sigma,
        center,
        offset,
        iterations_run,
        converged,
        training_rows: data.n_rows(),
        training_rmse: f64::NAN,
        residuals: ResidualSummary::of(&[0.0]),
        config: config.clone(),
    };
    let predicted = model.predict(&data.features)?;
    let residuals: Vec<f64> = data
        .targets
        .iter()
        .zip(predicted.iter())
        .map(|(t, y)| t - y)
        .collect();
    model.training_rmse = data::rmse_predictions(predicted.as_slice(), data.targets.as_slice())?;
    model.residuals = ResidualSummary::of(&residuals);
    Ok(model)
}

/// Loads `config.csv` and fits it.
pub fn run_fit(config: &FitCommandConfig) -> Result<FittedModel> {
    if config.model == ModelKind::Elm && config.hidden == 0 {
        return Err(Error::InvalidParameter(
            "hidden layer size must be >= 1".into(),
        ));
    }
    let data = data::load_csv(&config.csv, config.has_header, &config.target)?;
    fit_dataset(&data, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::ParamGrid;

    fn config(method: Method, model: ModelKind) -> FitCommandConfig {
        FitCommandConfig {
            csv: PathBuf::new(),
            has_header: false,
            target: TargetColumn::Last,
            method,
            model,
            hidden: 20,
            bias_column: false,
            normalize: model == ModelKind::Elm,
            seed: 1,
            lambda_prime: 1e-4,
            mcc_sigma: 1.0,
            add_center: true,
            solver: SolverSettings {
                max_iterations: 100,
                tolerance: 1e-10,
                grid: ParamGrid::linear_default(),
            },
        }
    }

    fn linear_data(n: usize) -> TabularDataset {
        let x = DMatrix::from_fn(n, 2, |i, j| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0);
        let t = DVector::from_fn(n, |i, _| x[(i, 0)] + 2.0 * x[(i, 1)]);
        TabularDataset::new(x, t).unwrap()
    }

    #[test]
    fn noise_free_recovery() {
        let mut cfg = config(Method::MccVc, ModelKind::Linear);
        cfg.lambda_prime = 0.0;
        cfg.add_center = false;
        let m = fit_dataset(&linear_data(60), &cfg).unwrap();
        assert!(
            (m.beta[0] - 1.0).abs() < 1e-6 && (m.beta[1] - 2.0).abs() < 1e-6,
            "{:?}",
            m.beta
        );
    }

    #[test]
    fn training_rmse_round_trip() {
        let data = linear_data(50);
        for method in super::super::Method::ALL {
            let m = fit_dataset(&data, &config(method, ModelKind::Elm)).unwrap();
            let p = m.predict(&data.features).unwrap();
            let rmse = data::rmse_predictions(p.as_slice(), data.targets.as_slice()).unwrap();
            assert!((rmse - m.training_rmse).abs() <= 1e-10);
        }
    }

    #[test]
    fn save_and_reload() {
        let data = linear_data(40);
        let m = fit_dataset(&data, &config(Method::MccVc, ModelKind::Elm)).unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        m.save(file.path()).unwrap();
        let back = FittedModel::load(file.path()).unwrap();
        assert_eq!(back, m);
        assert_eq!(
            back.predict(&data.features).unwrap(),
            m.predict(&data.features).unwrap()
        );
    }
}
