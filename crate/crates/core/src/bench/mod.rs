//! Benchmark protocols behind the `mccvc` command line tool.

pub mod data_bench;
pub mod fit;
pub mod report;
pub mod synth;
pub mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::ParamGrid;

pub use data_bench::{
    run_data_bench, run_sinc_bench, DataBenchConfig, DataBenchReport, SincBenchConfig,
};
pub use fit::{run_fit, FitCommandConfig, FittedModel};
pub use report::{summarize, Summary};
pub use synth::{run_synth_bench, SynthBenchConfig, SynthBenchOutput, SynthBenchReport};
pub use trace::{kernel_trace, KernelTrace, TraceConfig};

/// Fitting criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Regularized least squares (closed form).
    Mmse,
    /// Zero-center correntropy with a fixed width.
    Mcc,
    /// Correntropy with width and center chosen every iteration.
    MccVc,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Mmse, Method::Mcc, Method::MccVc];

    pub fn label(self, model: ModelKind) -> &'static str {
        match (model, self) {
            (ModelKind::Linear, Method::Mmse) => "mmse",
            (ModelKind::Linear, Method::Mcc) => "mcc",
            (ModelKind::Linear, Method::MccVc) => "mcc-vc",
            (ModelKind::Elm, Method::Mmse) => "relm",
            (ModelKind::Elm, Method::Mcc) => "elm-mcc",
            (ModelKind::Elm, Method::MccVc) => "elm-mcc-vc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label(ModelKind::Linear))
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mmse" | "relm" | "ridge" => Ok(Method::Mmse),
            "mcc" | "elm-mcc" | "elm-rcc" | "rcc" => Ok(Method::Mcc),
            "mcc-vc" | "mccvc" | "elm-mcc-vc" => Ok(Method::MccVc),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

/// Parses a comma-separated method list, keeping the given order.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let m: Method = part.parse()?;
        if out.contains(&m) {
            return Err(Error::InvalidParameter(format!("method {m} listed twice")));
        }
        out.push(m);
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter("no methods given".into()));
    }
    Ok(out)
}

/// Feature map family used by the dataset commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Elm,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(ModelKind::Linear),
            "elm" => Ok(ModelKind::Elm),
            other => Err(Error::InvalidParameter(format!("unknown model {other:?}"))),
        }
    }
}

/// Parses `start:step:end` into an inclusive equally spaced list.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidParameter(format!("expected start:step:end, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    crate::kernel::stepped_range(nums[0], nums[1], nums[2])
}

/// Parses a comma-separated list of numbers.
pub fn parse_list<T: FromStr>(list: &str) -> Result<Vec<T>> {
    list.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim().parse::<T>().map_err(|_| {
                Error::InvalidParameter(format!("cannot parse {p:?} in list {list:?}"))
            })
        })
        .collect()
}

/// Settings shared by every fixed-point fit in a benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub grid: ParamGrid,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_parsing() {
        assert_eq!(
            parse_methods("relm,elm-mcc,elm-mcc-vc").unwrap(),
            vec![Method::Mmse, Method::Mcc, Method::MccVc]
        );
        assert_eq!(
            parse_methods("mcc-vc, mmse").unwrap(),
            vec![Method::MccVc, Method::Mmse]
        );
        assert!(parse_methods("mmse,relm").is_err());
        assert!(parse_methods("lasso").is_err());
        assert_eq!(Method::MccVc.label(ModelKind::Elm), "elm-mcc-vc");
    }

    #[test]
    fn range_parsing() {
        assert_eq!(
            parse_range("0.1:0.1:0.5").unwrap(),
            vec![0.1, 0.2, 0.3, 0.4, 0.5]
        );
        assert_eq!(
            parse_range("-1:0.5:1").unwrap(),
            vec![-1.0, -0.5, 0.0, 0.5, 1.0]
        );
        assert!(parse_range("1:2").is_err());
        assert!(parse_range("1:-1:3").is_err());
        assert_eq!(parse_list::<f64>("0.5,1,2").unwrap(), vec![0.5, 1.0, 2.0]);
    }
}
