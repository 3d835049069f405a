//! Monte Carlo benchmark on the two-dimensional linear system `t = x·w* + ρ`.
//!
//! Every replication draws one dataset per noise case and fits each
//! requested method on it. MCC is run for every width in the sweep and the
//! width with the lowest mean RMSE is reported, emulating hand tuning.

use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{fmt_pm, summarize, Summary};
use super::{Method, ModelKind, SolverSettings};
use crate::data::{self, NoiseModel};
use crate::error::{Error, Result};
use crate::kernel::ParamGrid;
use crate::lip::DesignMatrix;
use crate::solvers::{self, FitConfig, FitResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthBenchConfig {
    pub seed: u64,
    pub runs: usize,
    pub n_samples: usize,
    pub w_star: Vec<f64>,
    /// 1-based noise preset indices.
    pub cases: Vec<usize>,
    pub methods: Vec<Method>,
    pub lambda_prime: f64,
    /// Widths tried for the fixed-width MCC baseline.
    pub mcc_sigmas: Vec<f64>,
    pub solver: SolverSettings,
}

impl Default for SynthBenchConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            runs: 100,
            n_samples: 400,
            w_star: vec![1.0, 2.0],
            cases: vec![1, 2, 3, 4],
            methods: Method::ALL.to_vec(),
            lambda_prime: solvers::DEFAULT_LAMBDA_PRIME,
            mcc_sigmas: vec![0.5, 1.0, 2.0, 5.0],
            solver: SolverSettings {
                max_iterations: solvers::DEFAULT_MAX_ITERATIONS,
                tolerance: solvers::DEFAULT_TOLERANCE,
                grid: ParamGrid::linear_default(),
            },
        }
    }
}

impl SynthBenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidParameter("runs must be >= 1".into()));
        }
        if self.n_samples == 0 || self.w_star.is_empty() {
            return Err(Error::InvalidParameter(
                "need samples and a weight vector".into(),
            ));
        }
        if self.cases.is_empty() || self.cases.iter().any(|c| !(1..=4).contains(c)) {
            return Err(Error::InvalidParameter("cases must be within 1..=4".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods given".into()));
        }
        if self.methods.contains(&Method::Mcc)
            && (self.mcc_sigmas.is_empty() || self.mcc_sigmas.iter().any(|s| !(*s > 0.0)))
        {
            return Err(Error::InvalidParameter(
                "MCC widths must be positive".into(),
            ));
        }
        FitConfig {
            lambda_prime: self.lambda_prime,
            max_iterations: self.solver.max_iterations,
            tolerance: self.solver.tolerance,
            grid: self.solver.grid.clone(),
            initial_beta: None,
        }
        .validate()
    }

    /// Seed of replication `r`.
    pub fn replication_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }
}

/// Mean/std of one width of the MCC sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub sigma: f64,
    pub rmse: Summary,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub runs: usize,
    pub failures: usize,
    pub rmse: Summary,
    pub time_sec: Summary,
    /// Mean number of fixed-point iterations (iterative methods).
    pub mean_iterations: Option<f64>,
    pub converged_runs: Option<usize>,
    /// Width picked from the sweep (MCC only).
    pub selected_sigma: Option<f64>,
    pub sweep: Option<Vec<SweepEntry>>,
    pub seeds: Vec<u64>,
    /// Per-replication RMSE, `None` for failed fits.
    pub rmse_runs: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: usize,
    pub name: String,
    pub noise: NoiseModel,
    pub methods: Vec<MethodReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthBenchReport {
    pub command: String,
    pub config: SynthBenchConfig,
    pub cases: Vec<CaseReport>,
    pub notes: Vec<String>,
}

/// One fit of one replication.
#[derive(Debug, Clone)]
pub struct ReplicationRecord {
    pub case: usize,
    pub method: Method,
    /// Fixed width of an MCC fit.
    pub sigma: Option<f64>,
    pub replication: usize,
    pub seed: u64,
    pub seconds: f64,
    pub outcome: std::result::Result<Fitted, String>,
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub beta: DVector<f64>,
    pub rmse: f64,
    /// Fixed-point diagnostics (absent for the closed form).
    pub fit: Option<FitResult>,
}

pub struct SynthBenchOutput {
    pub report: SynthBenchReport,
    /// Every fit, including all widths of the MCC sweep.
    pub records: Vec<ReplicationRecord>,
}

/// Regenerates the design of one replication of one case.
pub fn case_design(
    config: &SynthBenchConfig,
    case: usize,
    replication: usize,
) -> Result<DesignMatrix> {
    let noise = data::inner_noise_presets()
        .get(case.wrapping_sub(1))
        .copied()
        .ok_or_else(|| Error::InvalidParameter(format!("no noise case {case}")))?;
    let (x, t) = data::generate_linear_data(
        &config.w_star,
        config.n_samples,
        &noise,
        config.replication_seed(replication),
    )?;
    DesignMatrix::new(crate::lip::build_linear_features(&x)?, t)
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> (f64, Result<T>) {
    let start = Instant::now();
    let out = f();
    (start.elapsed().as_secs_f64(), out)
}

fn run_replication(config: &SynthBenchConfig, case: usize, r: usize) -> Vec<ReplicationRecord> {
    let seed = config.replication_seed(r);
    let design = match case_design(config, case, r) {
        Ok(d) => d,
        Err(e) => {
            return vec![ReplicationRecord {
                case,
                method: config.methods[0],
                sigma: None,
                replication: r,
                seed,
                seconds: 0.0,
                outcome: Err(e.to_string()),
            }]
        }
    };
    let score = |beta: DVector<f64>, fit: Option<FitResult>| -> Result<Fitted> {
        let rmse = data::rmse_weights(beta.as_slice(), &config.w_star)?;
        Ok(Fitted { beta, rmse, fit })
    };
    let record = |method, sigma, (seconds, outcome): (f64, Result<Fitted>)| ReplicationRecord {
        case,
        method,
        sigma,
        replication: r,
        seed,
        seconds,
        outcome: outcome.map_err(|e| e.to_string()),
    };

    let mut out = Vec::new();
    for &method in &config.methods {
        match method {
            Method::Mmse => {
                let (secs, res) = timed(|| solvers::ridge_solve(&design, config.lambda_prime));
                out.push(record(
                    method,
                    None,
                    (secs, res.and_then(|b| score(b, None))),
                ));
            }
            Method::Mcc => {
                for &sigma in &config.mcc_sigmas {
                    let (secs, res) = timed(|| {
                        solvers::fit_mcc(
                            &design,
                            sigma,
                            config.lambda_prime,
                            config.solver.max_iterations,
                            config.solver.tolerance,
                        )
                    });
                    let res = res.and_then(|f| score(f.beta.clone(), Some(f)));
                    out.push(record(method, Some(sigma), (secs, res)));
                }
            }
            Method::MccVc => {
                let fit_config = FitConfig {
                    lambda_prime: config.lambda_prime,
                    max_iterations: config.solver.max_iterations,
                    tolerance: config.solver.tolerance,
                    grid: config.solver.grid.clone(),
                    initial_beta: None,
                };
                let (secs, res) = timed(|| solvers::fit_mcc_vc(&design, &fit_config));
                let res = res.and_then(|f| score(f.beta.clone(), Some(f)));
                out.push(record(method, None, (secs, res)));
            }
        }
    }
    out
}

fn method_report(
    label: &str,
    records: &[&ReplicationRecord],
    seeds: &[u64],
    runs: usize,
) -> MethodReport {
    let rmse_runs: Vec<Option<f64>> = records
        .iter()
        .map(|r| r.outcome.as_ref().ok().map(|f| f.rmse))
        .collect();
    let ok: Vec<&Fitted> = records
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .collect();
    let rmse: Vec<f64> = ok.iter().map(|f| f.rmse).collect();
    let times: Vec<f64> = records
        .iter()
        .filter(|r| r.outcome.is_ok())
        .map(|r| r.seconds)
        .collect();
    let iterative: Vec<&FitResult> = ok.iter().filter_map(|f| f.fit.as_ref()).collect();
    let (mean_iterations, converged_runs) = if iterative.is_empty() {
        (None, None)
    } else {
        let total: usize = iterative.iter().map(|f| f.iterations_run).sum();
        (
            Some(total as f64 / iterative.len() as f64),
            Some(iterative.iter().filter(|f| f.converged).count()),
        )
    };
    MethodReport {
        method: label.to_string(),
        runs,
        failures: records.len() - ok.len(),
        rmse: summarize(&rmse),
        time_sec: summarize(&times),
        mean_iterations,
        converged_runs,
        selected_sigma: None,
        sweep: None,
        seeds: seeds.to_vec(),
        rmse_runs,
    }
}

/// Runs the benchmark and returns the report together with every fit.
pub fn run_synth_bench(config: &SynthBenchConfig) -> Result<SynthBenchOutput> {
    config.validate()?;
    let presets = data::inner_noise_presets();
    let seeds: Vec<u64> = (0..config.runs)
        .map(|r| config.replication_seed(r))
        .collect();
    let mut all_records = Vec::new();
    let mut cases = Vec::new();

    for &case in &config.cases {
        let records: Vec<ReplicationRecord> = (0..config.runs)
            .into_par_iter()
            .map(|r| run_replication(config, case, r))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect();

        let mut methods = Vec::new();
        for &method in &config.methods {
            let label = method.label(ModelKind::Linear);
            match method {
                Method::Mcc => {
                    let mut sweep = Vec::new();
                    let mut best: Option<(f64, MethodReport)> = None;
                    for &sigma in &config.mcc_sigmas {
                        let subset: Vec<&ReplicationRecord> = records
                            .iter()
                            .filter(|r| r.method == method && r.sigma == Some(sigma))
                            .collect();
                        let rep = method_report(label, &subset, &seeds, config.runs);
                        sweep.push(SweepEntry {
                            sigma,
                            rmse: rep.rmse,
                            failures: rep.failures,
                        });
                        let better = match &best {
                            None => true,
                            Some((_, b)) => {
                                rep.rmse.count > 0
                                    && (b.rmse.count == 0 || rep.rmse.mean < b.rmse.mean)
                            }
                        };
                        if better {
                            best = Some((sigma, rep));
                        }
                    }
                    let (sigma, mut rep) = best.expect("sweep is non-empty");
                    rep.selected_sigma = Some(sigma);
                    rep.sweep = Some(sweep);
                    methods.push(rep);
                }
                _ => {
                    let subset: Vec<&ReplicationRecord> =
                        records.iter().filter(|r| r.method == method).collect();
                    methods.push(method_report(label, &subset, &seeds, config.runs));
                }
            }
        }
        cases.push(CaseReport {
            case,
            name: data::PRESET_NAMES[case - 1].to_string(),
            noise: presets[case - 1],
            methods,
        });
        all_records.extend(records);
    }

    let mut notes = vec![
        format!(
            "replication r uses seed {} + r for inputs and noise",
            config.seed
        ),
        "timing is wall-clock seconds per fit, excluding data generation".to_string(),
    ];
    if config.methods.contains(&Method::Mmse) {
        notes.push(
            "mmse is a closed form with no iterations; its time is reported for comparison only"
                .into(),
        );
    }
    if config.methods.contains(&Method::Mcc) {
        notes.push("mcc reports the sweep width with the lowest mean RMSE".into());
    }

    Ok(SynthBenchOutput {
        report: SynthBenchReport {
            command: "synth-bench".into(),
            config: config.clone(),
            cases,
            notes,
        },
        records: all_records,
    })
}

/// Aligned plain-text rendering of a report.
pub fn render_table(report: &SynthBenchReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<18} {:<8} {:>22} {:>22} {:>9}\n",
        "case", "method", "RMSE", "time (s)", "failures"
    ));
    for case in &report.cases {
        for m in &case.methods {
            let name = match m.selected_sigma {
                Some(s) => format!("{} σ={s}", m.method),
                None => m.method.clone(),
            };
            out.push_str(&format!(
                "{:<18} {:<8} {:>22} {:>22} {:>9}\n",
                format!("{}) {}", case.case, case.name),
                name,
                fmt_pm(&m.rmse),
                format!("{:.5} ± {:.5}", m.time_sec.mean, m.time_sec.std),
                m.failures
            ));
        }
    }
    out
}
