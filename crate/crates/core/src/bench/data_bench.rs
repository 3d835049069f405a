//! Dataset benchmark: repeated random splits, k-fold selection of the
//! regularization (and, for the fixed-width method, the kernel width), refit
//! on the training part and prediction RMSE on both parts.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{fmt_pm, summarize, Summary};
use super::{Method, ModelKind, SolverSettings};
use crate::data::{
    self, MinMaxRecord, NoiseModel, SplitSpec, TabularDataset, TargetColumn, TrainSize,
};
use crate::error::{Error, Result};
use crate::kernel::ParamGrid;
use crate::lip::{DesignMatrix, FeatureMap};
use crate::solvers::{self, FitConfig};

const FOLD_STREAM: u64 = 0xD1B5_4A32_D192_ED03;
const NOISE_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// Method list, hyperparameter grids and solver settings shared by the
/// dataset benchmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub methods: Vec<Method>,
    pub model: ModelKind,
    pub hidden: usize,
    pub bias_column: bool,
    pub folds: usize,
    pub lambda_grid: Vec<f64>,
    /// Widths cross-validated for the fixed-width method.
    pub mcc_sigmas: Vec<f64>,
    /// Add the selected center to MCC-VC predictions.
    pub add_center: bool,
    pub solver: SolverSettings,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            model: ModelKind::Elm,
            hidden: 100,
            bias_column: false,
            folds: 5,
            lambda_grid: vec![0.0, 1e-6, 1e-4, 1e-2, 1.0],
            mcc_sigmas: vec![0.5, 1.0, 2.0, 5.0],
            add_center: true,
            solver: SolverSettings {
                max_iterations: solvers::DEFAULT_MAX_ITERATIONS,
                tolerance: solvers::DEFAULT_TOLERANCE,
                grid: ParamGrid::elm_default(),
            },
        }
    }
}

impl Protocol {
    fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods given".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidParameter(
                "at least 2 folds are needed".into(),
            ));
        }
        if self.lambda_grid.is_empty()
            || self
                .lambda_grid
                .iter()
                .any(|l| !(*l >= 0.0 && l.is_finite()))
        {
            return Err(Error::InvalidParameter(
                "lambda' grid must be non-empty and >= 0".into(),
            ));
        }
        if self.methods.contains(&Method::Mcc)
            && (self.mcc_sigmas.is_empty() || self.mcc_sigmas.iter().any(|s| !(*s > 0.0)))
        {
            return Err(Error::InvalidParameter(
                "MCC widths must be positive".into(),
            ));
        }
        if self.model == ModelKind::Elm && self.hidden == 0 {
            return Err(Error::InvalidParameter(
                "hidden layer size must be >= 1".into(),
            ));
        }
        Ok(())
    }

    fn candidates(&self, method: Method) -> Vec<Hyper> {
        let mut out = Vec::new();
        for &lambda_prime in &self.lambda_grid {
            match method {
                Method::Mcc => out.extend(self.mcc_sigmas.iter().map(|&s| Hyper {
                    lambda_prime,
                    sigma: Some(s),
                })),
                _ => out.push(Hyper {
                    lambda_prime,
                    sigma: None,
                }),
            }
        }
        out
    }

    fn feature_map(&self, input_dim: usize, seed: u64) -> Result<FeatureMap> {
        match self.model {
            ModelKind::Linear => Ok(FeatureMap::linear(input_dim, self.bias_column)),
            ModelKind::Elm => FeatureMap::elm(input_dim, self.hidden, seed),
        }
    }
}

/// Cross-validated hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub lambda_prime: f64,
    pub sigma: Option<f64>,
}

struct Predictor {
    beta: DVector<f64>,
    offset: f64,
    kernel: Option<(f64, f64)>,
}

impl Predictor {
    fn predict(&self, h: &DMatrix<f64>) -> DVector<f64> {
        (h * &self.beta).add_scalar(self.offset)
    }
}

fn train(
    method: Method,
    design: &DesignMatrix,
    hyper: Hyper,
    protocol: &Protocol,
) -> Result<Predictor> {
    let s = &protocol.solver;
    match method {
        Method::Mmse => Ok(Predictor {
            beta: solvers::ridge_solve(design, hyper.lambda_prime)?,
            offset: 0.0,
            kernel: None,
        }),
        Method::Mcc => {
            let sigma = hyper.sigma.expect("fixed-width candidates carry a width");
            let f = solvers::fit_mcc(
                design,
                sigma,
                hyper.lambda_prime,
                s.max_iterations,
                s.tolerance,
            )?;
            Ok(Predictor {
                beta: f.beta,
                offset: 0.0,
                kernel: Some((sigma, 0.0)),
            })
        }
        Method::MccVc => {
            let config = FitConfig {
                lambda_prime: hyper.lambda_prime,
                max_iterations: s.max_iterations,
                tolerance: s.tolerance,
                grid: s.grid.clone(),
                initial_beta: None,
            };
            let f = solvers::fit_mcc_vc(design, &config)?;
            let p = f.final_params();
            Ok(Predictor {
                beta: f.beta,
                offset: if protocol.add_center { p.center() } else { 0.0 },
                kernel: Some((p.sigma(), p.center())),
            })
        }
    }
}

fn rmse(predicted: &DVector<f64>, targets: &DVector<f64>) -> Result<f64> {
    data::rmse_predictions(predicted.as_slice(), targets.as_slice())
}

fn rows(h: &DMatrix<f64>, t: &DVector<f64>, idx: &[usize]) -> Result<DesignMatrix> {
    DesignMatrix::new(
        h.select_rows(idx),
        DVector::from_iterator(idx.len(), idx.iter().map(|&i| t[i])),
    )
}

/// Mean validation RMSE of every candidate; failing candidates are `None`.
fn cross_validate(
    method: Method,
    design: &DesignMatrix,
    protocol: &Protocol,
    seed: u64,
) -> Result<Vec<(Hyper, Option<f64>)>> {
    let folds = data::kfold_indices(design.n_samples(), protocol.folds, seed)?;
    let parts = folds
        .iter()
        .map(|(tr, va)| {
            Ok((
                rows(design.h(), design.targets(), tr)?,
                rows(design.h(), design.targets(), va)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(protocol
        .candidates(method)
        .into_iter()
        .map(|hyper| {
            let mut total = 0.0;
            for (tr, va) in &parts {
                match train(method, tr, hyper, protocol)
                    .and_then(|p| rmse(&p.predict(va.h()), va.targets()))
                {
                    Ok(r) if r.is_finite() => total += r,
                    _ => return (hyper, None),
                }
            }
            (hyper, Some(total / parts.len() as f64))
        })
        .collect())
}

/// Outcome of one method on one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRun {
    pub selected: Hyper,
    pub cv_rmse: f64,
    /// Final (σ, c) of the refit, for the correntropy methods.
    pub kernel: Option<(f64, f64)>,
    pub train_rmse: f64,
    pub test_rmse: f64,
    /// Wall-clock seconds of the refit on the training part.
    pub seconds: f64,
}

/// Selects, refits and scores one method. Test targets may differ from the
/// training distribution (e.g. noise-free).
fn run_method(
    method: Method,
    train_design: &DesignMatrix,
    test_h: &DMatrix<f64>,
    test_t: &DVector<f64>,
    protocol: &Protocol,
    fold_seed: u64,
) -> Result<MethodRun> {
    let scores = cross_validate(method, train_design, protocol, fold_seed)?;
    let (selected, cv_rmse) = scores
        .into_iter()
        .filter_map(|(h, s)| s.map(|s| (h, s)))
        .fold(None, |best: Option<(Hyper, f64)>, (h, s)| match best {
            Some((_, b)) if b <= s => best,
            _ => Some((h, s)),
        })
        .ok_or_else(|| {
            Error::Data(format!(
                "every {method} candidate failed in cross-validation"
            ))
        })?;
    let start = Instant::now();
    let predictor = train(method, train_design, selected, protocol)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(MethodRun {
        selected,
        cv_rmse,
        kernel: predictor.kernel,
        train_rmse: rmse(&predictor.predict(train_design.h()), train_design.targets())?,
        test_rmse: rmse(&predictor.predict(test_h), test_t)?,
        seconds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMethodReport {
    pub method: String,
    pub runs: usize,
    pub failures: usize,
    pub train_rmse: Summary,
    pub test_rmse: Summary,
    pub time_sec: Summary,
    pub seeds: Vec<u64>,
    /// Per repetition; `None` marks a failure.
    pub repetitions: Vec<Option<MethodRun>>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub name: String,
    pub rows: usize,
    pub features: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub methods: Vec<DataMethodReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataBenchReport {
    pub command: String,
    pub config: serde_json::Value,
    pub datasets: Vec<DatasetReport>,
    pub notes: Vec<String>,
}

fn method_reports(
    protocol: &Protocol,
    seeds: &[u64],
    reps: Vec<Vec<std::result::Result<MethodRun, String>>>,
) -> Vec<DataMethodReport> {
    protocol
        .methods
        .iter()
        .enumerate()
        .map(|(m, &method)| {
            let runs: Vec<&std::result::Result<MethodRun, String>> =
                reps.iter().map(|r| &r[m]).collect();
            let ok: Vec<&MethodRun> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
            let collect =
                |f: fn(&MethodRun) -> f64| summarize(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            DataMethodReport {
                method: method.label(protocol.model).to_string(),
                runs: runs.len(),
                failures: runs.len() - ok.len(),
                train_rmse: collect(|r| r.train_rmse),
                test_rmse: collect(|r| r.test_rmse),
                time_sec: collect(|r| r.seconds),
                seeds: seeds.to_vec(),
                repetitions: runs.iter().map(|r| r.as_ref().ok().cloned()).collect(),
                errors: runs
                    .iter()
                    .filter_map(|r| r.as_ref().err().cloned())
                    .collect(),
            }
        })
        .collect()
}

/// Where the min-max scaling is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizeScope {
    /// Whole file, before splitting.
    Full,
    /// Training part only, then applied to the test part.
    Train,
    None,
}

impl std::str::FromStr for NormalizeScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(NormalizeScope::Full),
            "train" => Ok(NormalizeScope::Train),
            "none" => Ok(NormalizeScope::None),
            other => Err(Error::InvalidParameter(format!(
                "unknown normalization scope {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataBenchConfig {
    pub csv: Vec<PathBuf>,
    pub has_header: bool,
    pub target: TargetColumn,
    pub seed: u64,
    pub runs: usize,
    pub train: TrainSize,
    pub normalize: NormalizeScope,
    pub protocol: Protocol,
}

impl Default for DataBenchConfig {
    fn default() -> Self {
        Self {
            csv: Vec::new(),
            has_header: false,
            target: TargetColumn::Last,
            seed: 42,
            runs: 100,
            train: TrainSize::Fraction(0.5),
            normalize: NormalizeScope::Full,
            protocol: Protocol::default(),
        }
    }
}

fn repetition(
    data: &TabularDataset,
    config: &DataBenchConfig,
    seed: u64,
) -> Result<Vec<std::result::Result<MethodRun, String>>> {
    let spec = SplitSpec {
        train: config.train,
        seed,
        folds: Some(config.protocol.folds),
    };
    let (mut tr, mut te) = data::split(data, &spec)?;
    if config.normalize == NormalizeScope::Train {
        let rec = MinMaxRecord::fit(&tr);
        tr = rec.apply(&tr)?;
        te = rec.apply(&te)?;
    }
    let map = config.protocol.feature_map(data.n_features(), seed)?;
    let train_design = DesignMatrix::new(map.apply(&tr.features)?, tr.targets.clone())?;
    let test_h = map.apply(&te.features)?;
    Ok(config
        .protocol
        .methods
        .iter()
        .map(|&m| {
            run_method(
                m,
                &train_design,
                &test_h,
                &te.targets,
                &config.protocol,
                seed ^ FOLD_STREAM,
            )
            .map_err(|e| e.to_string())
        })
        .collect())
}

/// Benchmarks every CSV in `config.csv`.
pub fn run_data_bench(config: &DataBenchConfig) -> Result<DataBenchReport> {
    config.protocol.validate()?;
    if config.csv.is_empty() {
        return Err(Error::InvalidParameter("no CSV files given".into()));
    }
    if config.runs == 0 {
        return Err(Error::InvalidParameter("runs must be >= 1".into()));
    }
    let seeds: Vec<u64> = (0..config.runs)
        .map(|r| config.seed.wrapping_add(r as u64))
        .collect();
    let mut datasets = Vec::new();
    for path in &config.csv {
        let raw = data::load_csv(path, config.has_header, &config.target)?;
        let data = match config.normalize {
            NormalizeScope::Full => data::normalize_minmax(&raw).0,
            _ => raw,
        };
        let spec = SplitSpec {
            train: config.train,
            seed: config.seed,
            folds: Some(config.protocol.folds),
        };
        let train_rows = spec.train_count(data.n_rows())?;
        let reps = seeds
            .par_iter()
            .map(|&s| repetition(&data, config, s))
            .collect::<Result<Vec<_>>>()?;
        datasets.push(DatasetReport {
            name: path.display().to_string(),
            rows: data.n_rows(),
            features: data.n_features(),
            train_rows,
            test_rows: data.n_rows() - train_rows,
            methods: method_reports(&config.protocol, &seeds, reps),
        });
    }
    let mut notes = vec![
        format!(
            "repetition r uses seed {} + r for the split, the folds and the hidden layer",
            config.seed
        ),
        "RMSE is measured on min-max normalized targets".to_string(),
        "mcc-vc cross-validates lambda' only; its width and center are chosen inside every fit"
            .to_string(),
    ];
    if config.protocol.add_center {
        notes.push("mcc-vc predictions include the selected kernel center".into());
    }
    Ok(DataBenchReport {
        command: "data-bench".into(),
        config: serde_json::to_value(config)?,
        datasets,
        notes,
    })
}

/// Synthetic regression task `t = sinc(‖x‖) + ρ` with x uniform on a cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SincBenchConfig {
    pub seed: u64,
    pub runs: usize,
    pub input_dim: usize,
    /// Inputs are uniform on [-half_width, half_width]^d.
    pub half_width: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub noise: NoiseModel,
    pub protocol: Protocol,
}

impl Default for SincBenchConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            runs: 20,
            input_dim: 2,
            half_width: 5.0,
            n_train: 500,
            n_test: 500,
            noise: data::inner_noise_presets()[1],
            protocol: Protocol {
                add_center: false,
                ..Protocol::default()
            },
        }
    }
}

pub fn sinc(r: f64) -> f64 {
    if r.abs() < 1e-8 {
        1.0 - r * r / 6.0
    } else {
        r.sin() / r
    }
}

/// Inputs, noisy targets and noise-free targets for one repetition.
pub fn sinc_data(
    config: &SincBenchConfig,
    n: usize,
    seed: u64,
) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = config.half_width;
    let x = DMatrix::from_fn(n, config.input_dim, |_, _| rng.gen_range(-a..=a));
    let clean = DVector::from_fn(n, |i, _| sinc(x.row(i).norm()));
    let rho = data::sample_noise(&config.noise, n, seed ^ NOISE_STREAM)?;
    let noisy = &clean + DVector::from_vec(rho);
    Ok((x, noisy, clean))
}

fn sinc_repetition(
    config: &SincBenchConfig,
    seed: u64,
) -> Result<Vec<std::result::Result<MethodRun, String>>> {
    let (x_train, t_train, _) = sinc_data(config, config.n_train, seed)?;
    let (x_test, _, clean_test) = sinc_data(config, config.n_test, seed.wrapping_add(1 << 32))?;
    let map = config.protocol.feature_map(config.input_dim, seed)?;
    let train_design = DesignMatrix::new(map.apply(&x_train)?, t_train)?;
    let test_h = map.apply(&x_test)?;
    Ok(config
        .protocol
        .methods
        .iter()
        .map(|&m| {
            run_method(
                m,
                &train_design,
                &test_h,
                &clean_test,
                &config.protocol,
                seed ^ FOLD_STREAM,
            )
            .map_err(|e| e.to_string())
        })
        .collect())
}

/// Synthetic ELM benchmark; test RMSE is measured against noise-free targets.
pub fn run_sinc_bench(config: &SincBenchConfig) -> Result<DataBenchReport> {
    config.protocol.validate()?;
    config.noise.validate()?;
    if config.runs == 0
        || config.input_dim == 0
        || config.n_train < config.protocol.folds
        || config.n_test == 0
    {
        return Err(Error::InvalidParameter(
            "invalid sinc benchmark sizes".into(),
        ));
    }
    let seeds: Vec<u64> = (0..config.runs)
        .map(|r| config.seed.wrapping_add(r as u64))
        .collect();
    let reps = seeds
        .par_iter()
        .map(|&s| sinc_repetition(config, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(DataBenchReport {
        command: "sinc-bench".into(),
        config: serde_json::to_value(config)?,
        datasets: vec![DatasetReport {
            name: "sinc".into(),
            rows: config.n_train + config.n_test,
            features: config.input_dim,
            train_rows: config.n_train,
            test_rows: config.n_test,
            methods: method_reports(&config.protocol, &seeds, reps),
        }],
        notes: vec![
            format!("repetition r uses seed {} + r", config.seed),
            "training targets are noisy, test targets are noise-free".into(),
        ],
    })
}

pub fn render_table(report: &DataBenchReport) -> String {
    let mut out = format!(
        "{:<28} {:<11} {:>18} {:>18} {:>9}\n",
        "dataset", "method", "train RMSE", "test RMSE", "failures"
    );
    for d in &report.datasets {
        let name = if d.name.len() > 28 {
            format!("…{}", &d.name[d.name.len() - 27..])
        } else {
            d.name.clone()
        };
        for m in &d.methods {
            out.push_str(&format!(
                "{:<28} {:<11} {:>18} {:>18} {:>9}\n",
                name,
                m.method,
                fmt_pm(&m.train_rmse),
                fmt_pm(&m.test_rmse),
                m.failures
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn small_protocol() -> Protocol {
        Protocol {
            hidden: 10,
            folds: 3,
            lambda_grid: vec![1e-4, 1e-2],
            mcc_sigmas: vec![0.5, 1.0],
            ..Protocol::default()
        }
    }

    fn csv_file(rows: usize) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..rows {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            writeln!(
                f,
                "{a},{b},{}",
                a.sin() + 0.5 * b + rng.gen_range(-0.1..0.1)
            )
            .unwrap();
        }
        f
    }

    fn strip(mut r: DataBenchReport) -> DataBenchReport {
        for d in &mut r.datasets {
            for m in &mut d.methods {
                m.time_sec = summarize(&[0.0]);
                for run in m.repetitions.iter_mut().flatten() {
                    run.seconds = 0.0;
                }
            }
        }
        r
    }

    #[test]
    fn data_bench_is_deterministic_with_three_columns() {
        let f = csv_file(60);
        let config = DataBenchConfig {
            csv: vec![f.path().to_path_buf()],
            runs: 2,
            protocol: small_protocol(),
            ..DataBenchConfig::default()
        };
        let a = run_data_bench(&config).unwrap();
        let b = run_data_bench(&config).unwrap();
        assert_eq!(strip(a.clone()), strip(b));
        let labels: Vec<&str> = a.datasets[0]
            .methods
            .iter()
            .map(|m| m.method.as_str())
            .collect();
        assert_eq!(labels, vec!["relm", "elm-mcc", "elm-mcc-vc"]);
        assert_eq!(
            (a.datasets[0].train_rows, a.datasets[0].test_rows),
            (30, 30)
        );
        for m in &a.datasets[0].methods {
            assert_eq!(m.failures, 0, "{:?}", m.errors);
            assert!(m.test_rmse.mean < 0.2);
        }
    }

    #[test]
    fn half_split_of_166_rows() {
        let f = csv_file(166);
        let config = DataBenchConfig {
            csv: vec![f.path().to_path_buf()],
            runs: 1,
            protocol: Protocol {
                methods: vec![Method::Mmse],
                ..small_protocol()
            },
            ..DataBenchConfig::default()
        };
        let r = run_data_bench(&config).unwrap();
        assert_eq!(
            (r.datasets[0].train_rows, r.datasets[0].test_rows),
            (83, 83)
        );
    }

    #[test]
    fn too_small_for_folds() {
        let f = csv_file(6);
        let config = DataBenchConfig {
            csv: vec![f.path().to_path_buf()],
            runs: 1,
            protocol: Protocol {
                folds: 5,
                ..small_protocol()
            },
            ..DataBenchConfig::default()
        };
        assert!(matches!(run_data_bench(&config), Err(Error::Data(_))));
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        assert!((sinc(std::f64::consts::PI)).abs() < 1e-16);
        assert!((sinc(1.0) - 1f64.sin()).abs() < 1e-16);
    }

    #[test]
    fn small_sinc_bench_runs() {
        let config = SincBenchConfig {
            runs: 1,
            n_train: 120,
            n_test: 50,
            protocol: Protocol {
                add_center: false,
                ..small_protocol()
            },
            ..SincBenchConfig::default()
        };
        let r = run_sinc_bench(&config).unwrap();
        assert_eq!(r.datasets[0].methods.len(), 3);
    }
}
