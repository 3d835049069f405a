use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mccvc::bench::data_bench::{self, NormalizeScope, Protocol};
use mccvc::bench::{
    self, fit, synth, trace, DataBenchConfig, FitCommandConfig, Method, ModelKind, SincBenchConfig,
    SolverSettings, SynthBenchConfig, TraceConfig,
};
use mccvc::data::{self, TargetColumn, TrainSize};
use mccvc::kernel::{CenterRule, ParamGrid};
use mccvc::lip::{build_linear_features, DesignMatrix};
use mccvc::solvers::FitConfig;
use mccvc::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mccvc",
    version,
    about = "Correntropy regression with a variable kernel center"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo weight recovery on the four noise cases.
    SynthBench(SynthArgs),
    /// Cross-validated benchmark on CSV datasets.
    DataBench(DataArgs),
    /// Synthetic sinc regression with a random hidden layer.
    SincBench(SincArgs),
    /// Fit one CSV and write a model file.
    Fit(FitArgs),
    /// Residual histograms and fitted kernels at chosen iterations.
    KernelTrace(TraceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Grid,
    Mean,
    Median,
}

impl From<RuleArg> for CenterRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Grid => CenterRule::ExplicitGrid,
            RuleArg::Mean => CenterRule::MeanOfErrors,
            RuleArg::Median => CenterRule::MedianOfErrors,
        }
    }
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Report or model file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated methods (mmse|relm, mcc|elm-mcc, mcc-vc|elm-mcc-vc).
    #[arg(long)]
    methods: Option<String>,
    #[arg(long, default_value_t = mccvc::solvers::DEFAULT_LAMBDA_PRIME)]
    lambda_prime: f64,
    /// Kernel widths as start:step:end.
    #[arg(long)]
    sigma_grid: Option<String>,
    /// Kernel centers as start:step:end.
    #[arg(long)]
    center_grid: Option<String>,
    #[arg(long, value_enum)]
    center_rule: Option<RuleArg>,
    #[arg(long, default_value_t = mccvc::solvers::DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    #[arg(long, default_value_t = mccvc::solvers::DEFAULT_TOLERANCE)]
    tol: f64,
}

impl Common {
    fn grid(&self, base: ParamGrid) -> Result<ParamGrid> {
        let sigmas = match &self.sigma_grid {
            Some(s) => bench::parse_range(s)?,
            None => base.sigma_set().to_vec(),
        };
        let mut centers = match &self.center_grid {
            Some(s) => bench::parse_range(s)?,
            None => base.center_set().to_vec(),
        };
        let rule = match self.center_rule {
            Some(r) => r.into(),
            None if self.center_grid.is_some() => CenterRule::ExplicitGrid,
            None => base.center_rule(),
        };
        if rule == CenterRule::ExplicitGrid && centers.is_empty() {
            centers = ParamGrid::linear_default().center_set().to_vec();
        }
        ParamGrid::new(sigmas, centers, rule)
    }

    fn solver(&self, base: ParamGrid) -> Result<SolverSettings> {
        Ok(SolverSettings {
            max_iterations: self.max_iter,
            tolerance: self.tol,
            grid: self.grid(base)?,
        })
    }

    fn methods(&self) -> Result<Vec<Method>> {
        match &self.methods {
            Some(list) => bench::parse_methods(list),
            None => Ok(Method::ALL.to_vec()),
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// Noise cases to run (1-4).
    #[arg(long, default_value = "1,2,3,4")]
    cases: String,
    #[arg(long, default_value_t = 400)]
    n_samples: usize,
    /// Widths swept for the fixed-width method.
    #[arg(long, default_value = "0.5,1,2,5")]
    mcc_sigmas: String,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long)]
    csv: Vec<PathBuf>,
    /// Target column: name, 0-based index or "last".
    #[arg(long, default_value = "last")]
    target: String,
    #[arg(long)]
    has_header: bool,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value = "elm")]
    model: String,
    #[arg(long, default_value_t = 100)]
    hidden: usize,
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    bias_column: bool,
}

impl DatasetArgs {
    fn model(&self) -> Result<ModelKind> {
        self.model.parse()
    }

    fn target(&self) -> TargetColumn {
        self.target.parse().unwrap_or(TargetColumn::Last)
    }

    fn default_grid(&self) -> Result<ParamGrid> {
        Ok(match self.model()? {
            ModelKind::Linear => ParamGrid::linear_default(),
            ModelKind::Elm => ParamGrid::elm_default(),
        })
    }
}

#[derive(Args)]
struct DataArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    dataset: DatasetArgs,
    #[arg(long, default_value_t = 0.5)]
    train_frac: f64,
    /// Cross-validated lambda' values.
    #[arg(long, default_value = "0,1e-6,1e-4,1e-2,1")]
    lambda_grid: String,
    /// Cross-validated widths of the fixed-width method.
    #[arg(long, default_value = "0.5,1,2,5")]
    mcc_sigmas: String,
    /// Where min-max scaling is fitted: full, train or none.
    #[arg(long, default_value = "full")]
    normalize_scope: String,
    /// Add the selected kernel center to mcc-vc predictions.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    add_center: bool,
}

#[derive(Args)]
struct SincArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 100)]
    hidden: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 500)]
    n_train: usize,
    #[arg(long, default_value_t = 500)]
    n_test: usize,
    #[arg(long, default_value = "0,1e-6,1e-4,1e-2,1")]
    lambda_grid: String,
    #[arg(long, default_value = "0.5,1,2,5")]
    mcc_sigmas: String,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    dataset: DatasetArgs,
    #[arg(long, default_value = "mcc-vc")]
    method: String,
    /// Width of the fixed-width method.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Min-max scale before fitting (default: on for elm, off for linear).
    #[arg(long, action = clap::ArgAction::Set)]
    normalize: Option<bool>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    add_center: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    common: Common,
    /// Synthetic noise case (1-4), used when no CSV is given.
    #[arg(long, default_value_t = 2)]
    case: usize,
    #[arg(long, default_value_t = 400)]
    n_samples: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value = "last")]
    target: String,
    #[arg(long)]
    has_header: bool,
    /// 1-based iterations to capture.
    #[arg(long, default_value = "1,2")]
    iterations: String,
    #[arg(long, default_value_t = trace::DEFAULT_BINS)]
    bins: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

fn write_out(path: Option<&Path>, contents: &str) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, contents)?;
    }
    Ok(())
}

fn print(text: &str) {
    let _ = io::stdout().write_all(text.as_bytes());
}

fn synth_bench(a: SynthArgs) -> Result<()> {
    let config = SynthBenchConfig {
        seed: a.common.seed,
        runs: a.common.runs,
        n_samples: a.n_samples,
        cases: bench::parse_list(&a.cases)?,
        methods: a.common.methods()?,
        lambda_prime: a.common.lambda_prime,
        mcc_sigmas: bench::parse_list(&a.mcc_sigmas)?,
        solver: a.common.solver(ParamGrid::linear_default())?,
        ..SynthBenchConfig::default()
    };
    let out = bench::run_synth_bench(&config)?;
    write_out(
        a.common.out.as_deref(),
        &serde_json::to_string_pretty(&out.report)?,
    )?;
    print(&synth::render_table(&out.report));
    Ok(())
}

fn data_bench(a: DataArgs) -> Result<()> {
    if a.dataset.csv.is_empty() {
        return Err(Error::InvalidParameter("--csv is required".into()));
    }
    let config = DataBenchConfig {
        csv: a.dataset.csv.clone(),
        has_header: a.dataset.has_header,
        target: a.dataset.target(),
        seed: a.common.seed,
        runs: a.common.runs,
        train: TrainSize::Fraction(a.train_frac),
        normalize: a.normalize_scope.parse::<NormalizeScope>()?,
        protocol: Protocol {
            methods: a.common.methods()?,
            model: a.dataset.model()?,
            hidden: a.dataset.hidden,
            bias_column: a.dataset.bias_column,
            folds: a.dataset.folds,
            lambda_grid: bench::parse_list(&a.lambda_grid)?,
            mcc_sigmas: bench::parse_list(&a.mcc_sigmas)?,
            add_center: a.add_center,
            solver: a.common.solver(a.dataset.default_grid()?)?,
        },
    };
    let report = bench::run_data_bench(&config)?;
    write_out(
        a.common.out.as_deref(),
        &serde_json::to_string_pretty(&report)?,
    )?;
    print(&data_bench::render_table(&report));
    Ok(())
}

fn sinc_bench(a: SincArgs) -> Result<()> {
    let config = SincBenchConfig {
        seed: a.common.seed,
        runs: a.common.runs,
        n_train: a.n_train,
        n_test: a.n_test,
        protocol: Protocol {
            methods: a.common.methods()?,
            hidden: a.hidden,
            folds: a.folds,
            lambda_grid: bench::parse_list(&a.lambda_grid)?,
            mcc_sigmas: bench::parse_list(&a.mcc_sigmas)?,
            add_center: false,
            solver: a.common.solver(ParamGrid::elm_default())?,
            ..Protocol::default()
        },
        ..SincBenchConfig::default()
    };
    let report = bench::run_sinc_bench(&config)?;
    write_out(
        a.common.out.as_deref(),
        &serde_json::to_string_pretty(&report)?,
    )?;
    print(&data_bench::render_table(&report));
    Ok(())
}

fn fit_cmd(a: FitArgs) -> Result<()> {
    let csv = match a.dataset.csv.as_slice() {
        [one] => one.clone(),
        [] => return Err(Error::InvalidParameter("--csv is required".into())),
        _ => return Err(Error::InvalidParameter("fit takes a single --csv".into())),
    };
    let model = a.dataset.model()?;
    let config = FitCommandConfig {
        csv,
        has_header: a.dataset.has_header,
        target: a.dataset.target(),
        method: a.method.parse()?,
        model,
        hidden: a.dataset.hidden,
        bias_column: a.dataset.bias_column,
        normalize: a.normalize.unwrap_or(model == ModelKind::Elm),
        seed: a.common.seed,
        lambda_prime: a.common.lambda_prime,
        mcc_sigma: a.sigma,
        add_center: a.add_center,
        solver: a.common.solver(a.dataset.default_grid()?)?,
    };
    let fitted = fit::run_fit(&config)?;
    if let Some(p) = &a.common.out {
        fitted.save(p)?;
    }
    let r = &fitted.residuals;
    let mut text = format!(
        "method {}\nrows {}\ntraining RMSE {:.10e}\nresiduals: mean {:.6} std {:.6} median {:.6} mad {:.6} min {:.6} max {:.6}\n",
        fitted.method.label(model),
        fitted.training_rows,
        fitted.training_rmse,
        r.mean,
        r.std,
        r.median,
        r.mad,
        r.min,
        r.max
    );
    if let (Some(s), Some(c)) = (fitted.sigma, fitted.center) {
        text.push_str(&format!("sigma* {s}\nc* {c}\n"));
    }
    if let (Some(k), Some(conv)) = (fitted.iterations_run, fitted.converged) {
        text.push_str(&format!("iterations {k} converged {conv}\n"));
    }
    print(&text);
    Ok(())
}

fn kernel_trace_cmd(a: TraceArgs) -> Result<()> {
    let (design, source) = match &a.csv {
        Some(path) => {
            let target: TargetColumn = a.target.parse().unwrap_or(TargetColumn::Last);
            let d = data::load_csv(path, a.has_header, &target)?;
            (
                DesignMatrix::new(build_linear_features(&d.features)?, d.targets)?,
                path.display().to_string(),
            )
        }
        None => {
            let config = SynthBenchConfig {
                seed: a.common.seed,
                n_samples: a.n_samples,
                ..SynthBenchConfig::default()
            };
            (
                synth::case_design(&config, a.case, 0)?,
                format!("case {} seed {}", a.case, a.common.seed),
            )
        }
    };
    let config = TraceConfig {
        fit: FitConfig {
            lambda_prime: a.common.lambda_prime,
            max_iterations: a.common.max_iter,
            tolerance: a.common.tol,
            grid: a.common.grid(ParamGrid::linear_default())?,
            initial_beta: None,
        },
        iterations: bench::parse_list(&a.iterations)?,
        bins: a.bins,
        range: None,
    };
    let t = bench::kernel_trace(&design, &config, &source)?;
    if let Some(p) = &a.common.out {
        match a.format {
            Format::Json => fs::write(p, serde_json::to_string_pretty(&t)?)?,
            Format::Csv => t.write_csv(fs::File::create(p)?)?,
        }
    }
    let mut text = format!(
        "{} iterations run, converged {}\n",
        t.iterations_run, t.converged
    );
    for f in &t.frames {
        text.push_str(&format!(
            "iteration {}: sigma* {} c* {} residual median {:.4} kernel peak {:.4} max bin density {:.4}\n",
            f.iteration,
            f.sigma,
            f.center,
            f.residual_median,
            f.kernel_peak(),
            f.histogram.max_density()
        ));
    }
    print(&text);
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else if matches!(e, Error::InvalidParameter(_)) {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::SynthBench(a) => synth_bench(a),
        Command::DataBench(a) => data_bench(a),
        Command::SincBench(a) => sinc_bench(a),
        Command::Fit(a) => fit_cmd(a),
        Command::KernelTrace(a) => kernel_trace_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
