//! Gaussian kernel, correntropy with a variable center, and kernel
//! parameter selection.
//!
//! The kernel is always the normalized Gaussian density
//!
//! ```text
//! G_σ(u) = exp(-u² / (2σ²)) / (√(2π) σ)
//! ```
//!
//! The correntropy of an error sample about center `c` is the sample mean of
//! `G_σ(e_i - c)`. Selecting `(σ, c)` minimizes the integrated squared
//! distance between the shifted kernel and the error density, which for a
//! finite sample reduces to
//!
//! ```text
//! 1 / (2√π σ) - (2/N) Σ G_σ(e_i - c)
//! ```
//!
//! evaluated over a finite grid of admissible widths and centers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// 1/√(2π)
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// 1/(2√π)
const FRAC_1_2SQRT_PI: f64 = 0.282_094_791_773_878_14;

/// Relative tolerance below which two grid objectives count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Smallest admissible width relative to the error sample's standard deviation.
pub const MIN_SIGMA_FRACTION: f64 = 1e-3;

#[inline]
fn density(u: f64, sigma: f64) -> f64 {
    FRAC_1_SQRT_2PI / sigma * (-(u * u) / (2.0 * sigma * sigma)).exp()
}

/// Normalized Gaussian kernel `G_σ(u)`.
pub fn gaussian_kernel(u: f64, sigma: f64) -> Result<f64> {
    if !u.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "kernel argument {u} is not finite"
        )));
    }
    check_sigma(sigma)?;
    Ok(density(u, sigma))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kernel width must be positive and finite, got {sigma}"
        )));
    }
    Ok(())
}

/// Kernel width and center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    sigma: f64,
    center: f64,
}

impl KernelParams {
    pub fn new(sigma: f64, center: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if !center.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kernel center must be finite, got {center}"
            )));
        }
        Ok(Self { sigma, center })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Kernel weight `G_σ(e - c)` of a single error.
    #[inline]
    pub fn weight(&self, error: f64) -> f64 {
        density(error - self.center, self.sigma)
    }

    /// Peak value `1/(√(2π)σ)`.
    pub fn peak(&self) -> f64 {
        FRAC_1_SQRT_2PI / self.sigma
    }
}

/// A non-empty vector of finite residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorVector(Vec<f64>);

impl ErrorVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("error vector"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "error sample {i} is not finite"
            )));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Sample correntropy `(1/N) Σ G_σ(e_i - c)`.
pub fn empirical_correntropy(errors: &ErrorVector, params: KernelParams) -> f64 {
    let sum: f64 = errors.0.iter().map(|&e| params.weight(e)).sum();
    sum / errors.len() as f64
}

/// Classical zero-center correntropy `(1/N) Σ G_σ(e_i)`.
pub fn classical_correntropy(errors: &ErrorVector, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let sum: f64 = errors.0.iter().map(|&e| density(e, sigma)).sum();
    Ok(sum / errors.len() as f64)
}

/// Gaussian kernel density estimate of `samples` at `point`.
pub fn gaussian_kde(samples: &[f64], point: f64, bandwidth: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("kde samples"));
    }
    check_sigma(bandwidth)?;
    let sum: f64 = samples.iter().map(|&x| density(point - x, bandwidth)).sum();
    Ok(sum / samples.len() as f64)
}

/// Regularized cost `-(1/N) Σ G_σ(e_i - c) + λ‖β‖²`.
pub fn mcc_vc_cost(
    errors: &ErrorVector,
    params: KernelParams,
    weight_norm_sq: f64,
    lambda: f64,
) -> Result<f64> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    if !(weight_norm_sq >= 0.0 && weight_norm_sq.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "squared weight norm must be >= 0, got {weight_norm_sq}"
        )));
    }
    Ok(-empirical_correntropy(errors, params) + lambda * weight_norm_sq)
}

/// Kernel-to-density matching objective `1/(2√π σ) - 2 V_{σ,c}`.
pub fn param_objective(errors: &ErrorVector, sigma: f64, center: f64) -> Result<f64> {
    let params = KernelParams::new(sigma, center)?;
    Ok(objective_unchecked(errors, params))
}

#[inline]
fn objective_unchecked(errors: &ErrorVector, params: KernelParams) -> f64 {
    FRAC_1_2SQRT_PI / params.sigma - 2.0 * empirical_correntropy(errors, params)
}

/// How the kernel center is chosen during parameter selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterRule {
    /// Search the explicit center set.
    ExplicitGrid,
    /// Fix the center at the mean of the errors.
    MeanOfErrors,
    /// Fix the center at the median of the errors.
    MedianOfErrors,
}

/// Center prescribed by a mean/median rule.
pub fn center_from_rule(errors: &ErrorVector, rule: CenterRule) -> Result<f64> {
    match rule {
        CenterRule::MeanOfErrors => Ok(stats::mean(&errors.0)),
        CenterRule::MedianOfErrors => Ok(stats::median(&errors.0)),
        CenterRule::ExplicitGrid => Err(Error::InvalidParameter(
            "explicit-grid rule does not prescribe a center".into(),
        )),
    }
}

/// Admissible kernel widths and centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    sigma_set: Vec<f64>,
    center_set: Vec<f64>,
    center_rule: CenterRule,
}

impl ParamGrid {
    pub fn new(sigma_set: Vec<f64>, center_set: Vec<f64>, center_rule: CenterRule) -> Result<Self> {
        if sigma_set.is_empty() {
            return Err(Error::Empty("sigma grid"));
        }
        if sigma_set.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter(
                "sigma grid values must be positive".into(),
            ));
        }
        if !strictly_increasing(&sigma_set) {
            return Err(Error::InvalidParameter(
                "sigma grid must be strictly increasing".into(),
            ));
        }
        if center_rule == CenterRule::ExplicitGrid {
            if center_set.is_empty() {
                return Err(Error::Empty("center grid"));
            }
            if center_set.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidParameter(
                    "center grid values must be finite".into(),
                ));
            }
            if !strictly_increasing(&center_set) {
                return Err(Error::InvalidParameter(
                    "center grid must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self {
            sigma_set,
            center_set,
            center_rule,
        })
    }

    /// A single fixed `(σ, c)` pair.
    pub fn singleton(params: KernelParams) -> Self {
        Self {
            sigma_set: vec![params.sigma],
            center_set: vec![params.center],
            center_rule: CenterRule::ExplicitGrid,
        }
    }

    /// Widths 0.2..=5.0 step 0.2, centers -5.0..=5.0 step 0.1.
    pub fn linear_default() -> Self {
        Self::new(
            stepped_range(0.2, 0.2, 5.0).unwrap(),
            stepped_range(-5.0, 0.1, 5.0).unwrap(),
            CenterRule::ExplicitGrid,
        )
        .unwrap()
    }

    /// Widths 0.1..=2.0 step 0.1 with the center at the error median.
    pub fn elm_default() -> Self {
        Self::new(
            stepped_range(0.1, 0.1, 2.0).unwrap(),
            Vec::new(),
            CenterRule::MedianOfErrors,
        )
        .unwrap()
    }

    pub fn sigma_set(&self) -> &[f64] {
        &self.sigma_set
    }

    pub fn center_set(&self) -> &[f64] {
        &self.center_set
    }

    pub fn center_rule(&self) -> CenterRule {
        self.center_rule
    }

    pub fn with_center_rule(mut self, rule: CenterRule) -> Result<Self> {
        self.center_rule = rule;
        Self::new(self.sigma_set, self.center_set, self.center_rule)
    }
}

fn strictly_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] < w[1])
}

/// Equally spaced values `start, start + step, ..., end` (inclusive when `end`
/// lies on the lattice). Values are rounded to 12 decimals to avoid drift.
pub fn stepped_range(start: f64, step: f64, end: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && step.is_finite() && end.is_finite()) || step <= 0.0 || end < start {
        return Err(Error::InvalidParameter(format!(
            "invalid range {start}:{step}:{end}"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count)
        .map(|i| ((start + step * i as f64) * 1e12).round() / 1e12)
        .collect())
}

/// Widths actually searched: grid values below the degeneracy floor are
/// raised to it, duplicates after raising are dropped.
pub fn effective_sigmas(errors: &ErrorVector, grid: &ParamGrid) -> Vec<f64> {
    let sd = stats::sample_std(&errors.0);
    let floor = MIN_SIGMA_FRACTION * if sd > 0.0 { sd } else { 1.0 };
    let mut out: Vec<f64> = Vec::with_capacity(grid.sigma_set.len());
    let mut clamped = 0usize;
    for &s in &grid.sigma_set {
        let s = if s < floor {
            clamped += 1;
            floor
        } else {
            s
        };
        if out.last().is_none_or(|&last| s > last) {
            out.push(s);
        }
    }
    if clamped > 0 {
        log::debug!("raised {clamped} kernel width(s) to the floor {floor:e}");
    }
    out
}

/// Grid search for the `(σ, c)` pair minimizing [`param_objective`].
///
/// Ties within [`TIE_TOLERANCE`] prefer the smaller width, then the center
/// closest to the error median.
pub fn optimize_params(errors: &ErrorVector, grid: &ParamGrid) -> Result<(KernelParams, f64)> {
    let sigmas = effective_sigmas(errors, grid);
    let centers = match grid.center_rule {
        CenterRule::ExplicitGrid => grid.center_set.clone(),
        rule => vec![center_from_rule(errors, rule)?],
    };
    if sigmas.is_empty() || centers.is_empty() {
        return Err(Error::Empty("parameter grid"));
    }
    let median = if centers.len() > 1 {
        stats::median(&errors.0)
    } else {
        0.0
    };

    let mut best: Option<(KernelParams, f64)> = None;
    for &sigma in &sigmas {
        for &center in &centers {
            let params = KernelParams { sigma, center };
            let value = objective_unchecked(errors, params);
            let replace = match best {
                None => true,
                Some((incumbent, best_value)) => {
                    let scale = value.abs().max(best_value.abs());
                    if value < best_value - TIE_TOLERANCE * scale {
                        true
                    } else if (value - best_value).abs() <= TIE_TOLERANCE * scale {
                        sigma < incumbent.sigma
                            || (sigma == incumbent.sigma
                                && (center - median).abs() < (incumbent.center - median).abs())
                    } else {
                        false
                    }
                }
            };
            if replace {
                best = Some((params, value));
            }
        }
    }
    Ok(best.expect("grid is non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ev(v: &[f64]) -> ErrorVector {
        ErrorVector::new(v.to_vec()).unwrap()
    }

    // Reference values computed with 30-digit arithmetic.
    const G_0_1: f64 = 0.398_942_280_401_432_677_9;
    const G_1_1: f64 = 0.241_970_724_519_143_349_8;
    const CORR_101: f64 = 0.294_294_576_479_906_459_2;

    #[test]
    fn kernel_values() {
        assert_relative_eq!(
            gaussian_kernel(0.0, 1.0).unwrap(),
            G_0_1,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            gaussian_kernel(0.0, 2.0).unwrap(),
            0.199_471_140_200_716_338_97,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            gaussian_kernel(1.0, 1.0).unwrap(),
            G_1_1,
            max_relative = 1e-15
        );
    }

    #[test]
    fn kernel_rejects_bad_input() {
        assert!(gaussian_kernel(0.0, 0.0).is_err());
        assert!(gaussian_kernel(0.0, -1.0).is_err());
        assert!(gaussian_kernel(f64::NAN, 1.0).is_err());
        assert!(gaussian_kernel(0.0, f64::INFINITY).is_err());
        assert!(KernelParams::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn far_outlier_underflows_to_zero() {
        assert_eq!(gaussian_kernel(1e4, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn correntropy_examples() {
        let p = KernelParams::new(0.7, 2.5).unwrap();
        assert_relative_eq!(
            empirical_correntropy(&ev(&[2.5, 2.5, 2.5]), p),
            p.peak(),
            max_relative = 1e-15
        );
        let unit = KernelParams::new(1.0, 0.0).unwrap();
        assert_relative_eq!(
            empirical_correntropy(&ev(&[0.0]), unit),
            G_0_1,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            empirical_correntropy(&ev(&[-1.0, 0.0, 1.0]), unit),
            CORR_101,
            max_relative = 1e-15
        );
        assert!(ErrorVector::new(vec![]).is_err());
        assert!(ErrorVector::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn cost_examples() {
        let p = KernelParams::new(1.3, -0.4).unwrap();
        assert_relative_eq!(
            mcc_vc_cost(&ev(&[-0.4, -0.4]), p, 0.0, 0.0).unwrap(),
            -p.peak(),
            max_relative = 1e-15
        );
        let unit = KernelParams::new(1.0, 0.0).unwrap();
        assert_relative_eq!(
            mcc_vc_cost(&ev(&[0.0]), unit, 0.0, 0.0).unwrap(),
            -G_0_1,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            mcc_vc_cost(&ev(&[-1.0, 0.0, 1.0]), unit, 4.0, 0.1).unwrap(),
            0.105_705_423_520_093_540_8,
            max_relative = 1e-14
        );
        assert!(mcc_vc_cost(&ev(&[0.0]), unit, 1.0, -1.0).is_err());
    }

    #[test]
    fn objective_examples() {
        assert_relative_eq!(
            param_objective(&ev(&[1.5, 1.5]), 1.0, 1.5).unwrap(),
            -0.515_789_769_028_987_212_4,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            param_objective(&ev(&[-1.0, 0.0, 1.0]), 1.0, 0.0).unwrap(),
            -0.306_494_361_185_934_774_9,
            max_relative = 1e-14
        );
        let errors = ev(&[-0.3, 0.8, 2.0]);
        let mut previous = f64::NEG_INFINITY;
        for sigma in [1e2, 1e3, 1e4, 1e5] {
            let v = param_objective(&errors, sigma, 0.0).unwrap();
            assert!(v < 0.0);
            assert!(v > previous);
            previous = v;
        }
        assert!(previous > -1e-5);
    }

    #[test]
    fn optimize_examples() {
        let grid = ParamGrid::new(vec![1.0], vec![0.0, 3.0], CenterRule::ExplicitGrid).unwrap();
        let (p, value) = optimize_params(&ev(&[3.0; 5]), &grid).unwrap();
        assert_eq!((p.sigma(), p.center()), (1.0, 3.0));
        assert_eq!(value, param_objective(&ev(&[3.0; 5]), 1.0, 3.0).unwrap());

        let tight = ev(&[-0.05, -0.02, 0.0, 0.01, 0.04]);
        let grid = ParamGrid::new(vec![0.5, 5.0], vec![0.0], CenterRule::ExplicitGrid).unwrap();
        let narrow = param_objective(&tight, 0.5, 0.0).unwrap();
        let wide = param_objective(&tight, 5.0, 0.0).unwrap();
        assert!(narrow < wide);
        let (p, _) = optimize_params(&tight, &grid).unwrap();
        assert_eq!(p.sigma(), 0.5);

        let single = ParamGrid::singleton(KernelParams::new(0.9, -1.1).unwrap());
        let (p, _) = optimize_params(&ev(&[4.0, -2.0, 7.5]), &single).unwrap();
        assert_eq!((p.sigma(), p.center()), (0.9, -1.1));
    }

    #[test]
    fn tie_breaks_toward_median_center() {
        // With a narrow width the far samples underflow, so centers -1 and +1
        // score exactly the same; the median (1) decides.
        let errors = ev(&[-1.0, 1.0, 5.0]);
        let grid = ParamGrid::new(vec![0.01], vec![-1.0, 1.0], CenterRule::ExplicitGrid).unwrap();
        assert_eq!(
            param_objective(&errors, 0.01, -1.0).unwrap(),
            param_objective(&errors, 0.01, 1.0).unwrap()
        );
        let (p, _) = optimize_params(&errors, &grid).unwrap();
        assert_eq!(p.center(), 1.0);

        // Equidistant from the median: the first candidate stays.
        let symmetric = ev(&[-1.0, 1.0]);
        let grid = ParamGrid::new(vec![0.3], vec![-1.0, 1.0], CenterRule::ExplicitGrid).unwrap();
        let (p, _) = optimize_params(&symmetric, &grid).unwrap();
        assert_eq!(p.center(), -1.0);
    }

    #[test]
    fn center_rules() {
        assert_eq!(
            center_from_rule(&ev(&[1.0, 2.0, 3.0]), CenterRule::MeanOfErrors).unwrap(),
            2.0
        );
        assert_eq!(
            center_from_rule(&ev(&[1.0, 2.0, 3.0, 100.0]), CenterRule::MedianOfErrors).unwrap(),
            2.5
        );
        for rule in [CenterRule::MeanOfErrors, CenterRule::MedianOfErrors] {
            assert_eq!(center_from_rule(&ev(&[5.0]), rule).unwrap(), 5.0);
        }
        assert!(center_from_rule(&ev(&[5.0]), CenterRule::ExplicitGrid).is_err());
    }

    #[test]
    fn median_rule_searches_only_sigma() {
        let errors = ev(&[1.0, 2.0, 3.0, 100.0]);
        let grid = ParamGrid::new(vec![0.5, 1.0, 2.0], vec![], CenterRule::MedianOfErrors).unwrap();
        let (p, _) = optimize_params(&errors, &grid).unwrap();
        assert_eq!(p.center(), 2.5);
    }

    #[test]
    fn grid_validation() {
        assert!(ParamGrid::new(vec![], vec![0.0], CenterRule::ExplicitGrid).is_err());
        assert!(ParamGrid::new(vec![1.0, 1.0], vec![0.0], CenterRule::ExplicitGrid).is_err());
        assert!(ParamGrid::new(vec![0.0, 1.0], vec![0.0], CenterRule::ExplicitGrid).is_err());
        assert!(ParamGrid::new(vec![1.0], vec![], CenterRule::ExplicitGrid).is_err());
        assert!(ParamGrid::new(vec![1.0], vec![2.0, 1.0], CenterRule::ExplicitGrid).is_err());
        assert!(ParamGrid::new(vec![1.0], vec![], CenterRule::MeanOfErrors).is_ok());
    }

    #[test]
    fn default_grids() {
        let g = ParamGrid::linear_default();
        assert_eq!(g.sigma_set().len(), 25);
        assert_eq!(g.sigma_set()[0], 0.2);
        assert_eq!(g.sigma_set()[24], 5.0);
        assert_eq!(g.center_set().len(), 101);
        assert_eq!(g.center_set()[0], -5.0);
        assert_eq!(g.center_set()[50], 0.0);
        assert_eq!(g.center_set()[100], 5.0);
        let e = ParamGrid::elm_default();
        assert_eq!(e.sigma_set().len(), 20);
        assert_eq!(e.sigma_set()[2], 0.3);
        assert_eq!(e.center_rule(), CenterRule::MedianOfErrors);
    }

    #[test]
    fn degenerate_widths_are_floored() {
        let errors = ev(&[0.0, 1.0, 2.0]); // sd = 1
        let grid =
            ParamGrid::new(vec![1e-9, 1e-6, 0.5], vec![0.0], CenterRule::ExplicitGrid).unwrap();
        assert_eq!(effective_sigmas(&errors, &grid), vec![1e-3, 0.5]);
        let constant = ev(&[2.0, 2.0]);
        let grid = ParamGrid::new(vec![1e-9, 0.5], vec![2.0], CenterRule::ExplicitGrid).unwrap();
        let (p, _) = optimize_params(&constant, &grid).unwrap();
        assert_eq!(p.sigma(), 1e-3);
    }

    proptest! {
        #[test]
        fn kernel_symmetric(u in -50.0f64..50.0, sigma in 0.01f64..20.0) {
            prop_assert_eq!(gaussian_kernel(u, sigma).unwrap(), gaussian_kernel(-u, sigma).unwrap());
        }

        #[test]
        fn kernel_scaling(u in -20.0f64..20.0, sigma in 0.05f64..20.0) {
            let lhs = gaussian_kernel(u, sigma).unwrap();
            let rhs = gaussian_kernel(u / sigma, 1.0).unwrap() / sigma;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1e-300));
        }

        #[test]
        fn kernel_peak_dominates(u in -30.0f64..30.0, sigma in 0.05f64..20.0) {
            let peak = gaussian_kernel(0.0, sigma).unwrap();
            let value = gaussian_kernel(u, sigma).unwrap();
            prop_assert!(value <= peak);
            if u.abs() > 1e-6 * sigma {
                prop_assert!(value < peak);
            }
        }

        #[test]
        fn correntropy_is_kde_at_center(
            errors in prop::collection::vec(-20.0f64..20.0, 1..60),
            sigma in 0.01f64..10.0,
            center in -10.0f64..10.0,
        ) {
            let p = KernelParams::new(sigma, center).unwrap();
            let corr = empirical_correntropy(&ev(&errors), p);
            let kde = gaussian_kde(&errors, center, sigma).unwrap();
            prop_assert_eq!(corr.to_bits(), kde.to_bits());
        }

        #[test]
        fn zero_center_is_classical(
            errors in prop::collection::vec(-20.0f64..20.0, 1..60),
            sigma in 0.01f64..10.0,
        ) {
            let e = ev(&errors);
            let vc = empirical_correntropy(&e, KernelParams::new(sigma, 0.0).unwrap());
            prop_assert_eq!(vc.to_bits(), classical_correntropy(&e, sigma).unwrap().to_bits());
        }

        #[test]
        fn correntropy_translation_equivariant(
            errors in prop::collection::vec(-5.0f64..5.0, 1..40),
            sigma in 0.5f64..5.0,
            center in -3.0f64..3.0,
            shift in -10.0f64..10.0,
        ) {
            let base = empirical_correntropy(&ev(&errors), KernelParams::new(sigma, center).unwrap());
            let shifted: Vec<f64> = errors.iter().map(|e| e + shift).collect();
            let moved = empirical_correntropy(
                &ev(&shifted),
                KernelParams::new(sigma, center + shift).unwrap(),
            );
            prop_assert!((base - moved).abs() <= 1e-12 * base);
        }

        #[test]
        fn optimizer_translation_equivariant(
            ticks in prop::collection::vec(-256i32..256, 2..40),
            shift in -8i32..8,
        ) {
            // Dyadic errors and integer shifts keep every difference exact.
            let errors: Vec<f64> = ticks.iter().map(|&t| t as f64 / 64.0).collect();
            let shifted: Vec<f64> = errors.iter().map(|e| e + shift as f64).collect();
            let sigmas = vec![0.25, 0.5, 1.0, 2.0];
            let centers: Vec<f64> = (-16..=16).map(|i| i as f64 / 4.0).collect();
            let moved: Vec<f64> = centers.iter().map(|c| c + shift as f64).collect();
            let grid = ParamGrid::new(sigmas.clone(), centers, CenterRule::ExplicitGrid).unwrap();
            let grid_moved = ParamGrid::new(sigmas, moved, CenterRule::ExplicitGrid).unwrap();
            let (a, _) = optimize_params(&ev(&errors), &grid).unwrap();
            let (b, _) = optimize_params(&ev(&shifted), &grid_moved).unwrap();
            prop_assert_eq!(a.sigma(), b.sigma());
            prop_assert_eq!(a.center() + shift as f64, b.center());
        }

        #[test]
        fn optimum_is_no_worse_than_any_grid_point(
            errors in prop::collection::vec(-20.0f64..20.0, 2..80),
            sigmas in prop::collection::btree_set(5u32..400, 1..8),
            centers in prop::collection::btree_set(-200i32..200, 1..20),
        ) {
            let sigmas: Vec<f64> = sigmas.into_iter().map(|s| s as f64 / 100.0).collect();
            let centers: Vec<f64> = centers.into_iter().map(|c| c as f64 / 10.0).collect();
            let e = ev(&errors);
            let grid = ParamGrid::new(sigmas.clone(), centers.clone(), CenterRule::ExplicitGrid).unwrap();
            let (_, best) = optimize_params(&e, &grid).unwrap();
            for &s in &sigmas {
                for &c in &centers {
                    let v = param_objective(&e, s, c).unwrap();
                    prop_assert!(best <= v + TIE_TOLERANCE * best.abs().max(v.abs()));
                }
            }
        }
    }
}
