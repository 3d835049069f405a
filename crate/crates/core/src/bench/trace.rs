//! Residual histograms and the fitted kernel at chosen fixed-point iterations.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{gaussian_kernel, KernelParams};
use crate::lip::DesignMatrix;
use crate::solvers::{fit_mcc_vc, FitConfig, FitResult};
use crate::stats;

pub const DEFAULT_BINS: usize = 40;
pub const CURVE_POINTS: usize = 201;
/// Half-width of the default histogram range, in robust standard deviations.
const RANGE_SPREAD: f64 = 5.0;
const MAD_TO_SD: f64 = 1.4826;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub fit: FitConfig,
    /// 1-based iterations to capture.
    pub iterations: Vec<usize>,
    pub bins: usize,
    /// Histogram support; derived from the residuals when absent.
    pub range: Option<(f64, f64)>,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            iterations: vec![1, 2],
            bins: DEFAULT_BINS,
            range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Counts divided by (in-range count × bin width).
    pub density: Vec<f64>,
    /// Samples falling outside the edges.
    pub outside: usize,
}

impl Histogram {
    pub fn new(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidParameter(format!(
                "histogram needs bins >= 1 and lo < hi, got {bins} bins on [{lo}, {hi}]"
            )));
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0usize; bins];
        let mut outside = 0;
        for &s in samples {
            if s < lo || s > hi {
                outside += 1;
                continue;
            }
            let idx = (((s - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let inside = samples.len() - outside;
        if inside == 0 {
            return Err(Error::Data(
                "no residuals fall inside the histogram range".into(),
            ));
        }
        let density = counts
            .iter()
            .zip(edges.windows(2))
            .map(|(&c, e)| c as f64 / (inside as f64 * (e[1] - e[0])))
            .collect();
        Ok(Self {
            edges,
            counts,
            density,
            outside,
        })
    }

    /// ∫ density over the support.
    pub fn integral(&self) -> f64 {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }
}

/// Snapshot of one iteration: residuals of β_{k-1} against the kernel
/// selected from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFrame {
    pub iteration: usize,
    pub sigma: f64,
    pub center: f64,
    pub residual_median: f64,
    pub histogram: Histogram,
    pub curve_x: Vec<f64>,
    pub curve_y: Vec<f64>,
}

impl TraceFrame {
    pub fn params(&self) -> KernelParams {
        KernelParams::new(self.sigma, self.center).expect("recorded parameters are valid")
    }

    /// Kernel value at its own peak, `1/(√(2π) σ*)`.
    pub fn kernel_peak(&self) -> f64 {
        self.params().peak()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTrace {
    pub command: String,
    pub source: String,
    pub config: TraceConfig,
    pub iterations_run: usize,
    pub converged: bool,
    pub frames: Vec<TraceFrame>,
}

impl KernelTrace {
    /// Long-format CSV `iteration,kind,x,value`. `histogram` rows hold the
    /// left edge and density of each bin, `curve` rows the sampled kernel.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "kind", "x", "value"])?;
        for f in &self.frames {
            let it = f.iteration.to_string();
            for (e, d) in f.histogram.edges.iter().zip(&f.histogram.density) {
                w.write_record([it.as_str(), "histogram", &e.to_string(), &d.to_string()])?;
            }
            for (x, y) in f.curve_x.iter().zip(&f.curve_y) {
                w.write_record([it.as_str(), "curve", &x.to_string(), &y.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn default_range(residuals: &[f64]) -> (f64, f64) {
    let med = stats::median(residuals);
    let spread = RANGE_SPREAD * MAD_TO_SD * stats::mad(residuals);
    if spread > 0.0 {
        (med - spread, med + spread)
    } else {
        let (lo, hi) = residuals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        }
    }
}

fn frame(
    design: &DesignMatrix,
    fit: &FitResult,
    k: usize,
    bins: usize,
    range: Option<(f64, f64)>,
) -> Result<TraceFrame> {
    let beta_prev: DVector<f64> = fit
        .beta_at(k - 1)
        .expect("k checked against iterations_run");
    let residuals = design.residuals(&beta_prev)?;
    let residuals = residuals.as_slice();
    let params = fit.trace[k - 1].params();
    let (lo, hi) = range.unwrap_or_else(|| default_range(residuals));
    let histogram = Histogram::new(residuals, lo, hi, bins)?;
    let step = (hi - lo) / (CURVE_POINTS - 1) as f64;
    let curve_x: Vec<f64> = (0..CURVE_POINTS).map(|i| lo + step * i as f64).collect();
    let curve_y = curve_x
        .iter()
        .map(|&x| gaussian_kernel(x - params.center(), params.sigma()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(TraceFrame {
        iteration: k,
        sigma: params.sigma(),
        center: params.center(),
        residual_median: stats::median(residuals),
        histogram,
        curve_x,
        curve_y,
    })
}

/// Fits `design` and captures the requested iterations.
pub fn kernel_trace(
    design: &DesignMatrix,
    config: &TraceConfig,
    source: &str,
) -> Result<KernelTrace> {
    if config.iterations.is_empty() {
        return Err(Error::InvalidParameter("no iterations requested".into()));
    }
    if let Some(&k) = config.iterations.iter().find(|&&k| k == 0) {
        return Err(Error::InvalidParameter(format!(
            "iteration indices start at 1, got {k}"
        )));
    }
    let fit = fit_mcc_vc(design, &config.fit)?;
    if let Some(&k) = config.iterations.iter().find(|&&k| k > fit.iterations_run) {
        return Err(Error::InvalidParameter(format!(
            "iteration {k} requested but the fit stopped after {}",
            fit.iterations_run
        )));
    }
    let frames = config
        .iterations
        .iter()
        .map(|&k| frame(design, &fit, k, config.bins, config.range))
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelTrace {
        command: "kernel-trace".into(),
        source: source.to_string(),
        config: config.clone(),
        iterations_run: fit.iterations_run,
        converged: fit.converged,
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_linear_data, inner_noise_presets};
    use crate::lip::build_linear_features;

    fn case2(seed: u64) -> DesignMatrix {
        let (x, t) =
            generate_linear_data(&[1.0, 2.0], 400, &inner_noise_presets()[1], seed).unwrap();
        DesignMatrix::new(build_linear_features(&x).unwrap(), t).unwrap()
    }

    #[test]
    fn histogram_is_a_density() {
        let h = Histogram::new(&[0.1, 0.2, 0.2, 0.9, 1.0, 5.0], 0.0, 1.0, 4).unwrap();
        assert_eq!(h.counts, vec![3, 0, 0, 2]);
        assert_eq!(h.outside, 1);
        assert!((h.integral() - 1.0).abs() < 1e-12);
        assert!(Histogram::new(&[1.0], 1.0, 1.0, 3).is_err());
    }

    #[test]
    fn first_iteration_tracks_the_noise_location() {
        let trace = kernel_trace(&case2(3), &TraceConfig::default(), "case 2").unwrap();
        assert_eq!(trace.frames.len(), 2);
        let f = &trace.frames[0];
        assert!((f.center - f.residual_median).abs() <= 0.5);
        assert!((f.histogram.integral() - 1.0).abs() < 1e-6);
        assert!(f.curve_x.len() >= 200);
    }

    #[test]
    fn iteration_bounds_are_checked() {
        let d = case2(4);
        let mut cfg = TraceConfig {
            iterations: vec![0],
            ..TraceConfig::default()
        };
        assert!(kernel_trace(&d, &cfg, "").is_err());
        cfg.iterations = vec![10_000];
        assert!(kernel_trace(&d, &cfg, "").is_err());
    }

    #[test]
    fn csv_has_one_row_per_point() {
        let cfg = TraceConfig {
            iterations: vec![1],
            bins: 10,
            ..TraceConfig::default()
        };
        let trace = kernel_trace(&case2(5), &cfg, "").unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 10 + CURVE_POINTS);
    }
}
