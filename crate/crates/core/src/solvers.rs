//! Regularized least squares and the correntropy fixed-point solvers.
//!
//! [`fit_mcc_vc`] alternates two steps until the regularized cost
//! stabilizes:
//!
//! 1. with the model fixed, pick `(σ, c)` from the grid so that the shifted
//!    kernel best matches the residual density;
//! 2. with `(σ, c)` fixed, take one weighted ridge step
//!    `β ← (HᵀΛH + λ′I)⁻¹ HᵀΛ(T - c)` where `Λ_ii = G_σ(e_i - c)`.
//!
//! [`fit_mcc`] is the same loop with `(σ, c) = (σ₀, 0)` frozen.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{self, ErrorVector, KernelParams, ParamGrid};
use crate::linalg;
use crate::lip::DesignMatrix;

pub const DEFAULT_LAMBDA_PRIME: f64 = 1e-4;
pub const DEFAULT_MAX_ITERATIONS: usize = 100;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Settings of the fixed-point loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// λ′ = 2Nλ.
    pub lambda_prime: f64,
    /// K
    pub max_iterations: usize,
    /// ξ, threshold on the change of the cost between iterations.
    pub tolerance: f64,
    pub grid: ParamGrid,
    /// β₀; zeros when absent.
    pub initial_beta: Option<Vec<f64>>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda_prime: DEFAULT_LAMBDA_PRIME,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
            grid: ParamGrid::linear_default(),
            initial_beta: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        check_loop_settings(self.lambda_prime, self.max_iterations, self.tolerance)
    }
}

fn check_loop_settings(lambda_prime: f64, max_iterations: usize, tolerance: f64) -> Result<()> {
    if !(lambda_prime >= 0.0 && lambda_prime.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda' must be >= 0, got {lambda_prime}"
        )));
    }
    if max_iterations == 0 {
        return Err(Error::InvalidParameter(
            "max iterations must be >= 1".into(),
        ));
    }
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be > 0, got {tolerance}"
        )));
    }
    Ok(())
}

/// Diagnostics of one fixed-point iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration index k.
    pub iteration: usize,
    pub sigma: f64,
    pub center: f64,
    /// Regularized cost at β_k under this iteration's (σ, c).
    pub cost: f64,
    /// max |β_k - β_{k-1}|
    pub max_abs_delta: f64,
    /// β_k
    pub beta: Vec<f64>,
    /// Diagonal jitter added to a semidefinite system, if any.
    pub jitter: Option<f64>,
}

impl IterationRecord {
    pub fn params(&self) -> KernelParams {
        KernelParams::new(self.sigma, self.center).expect("recorded parameters are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: DVector<f64>,
    pub initial_beta: DVector<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
}

impl FitResult {
    /// Kernel parameters selected at the last iteration.
    pub fn final_params(&self) -> KernelParams {
        self.trace
            .last()
            .expect("a fit runs at least one iteration")
            .params()
    }

    /// β_{k} for k in 0..=iterations_run.
    pub fn beta_at(&self, k: usize) -> Option<DVector<f64>> {
        if k == 0 {
            Some(self.initial_beta.clone())
        } else {
            self.trace
                .get(k - 1)
                .map(|r| DVector::from_column_slice(&r.beta))
        }
    }
}

/// Solves `(Hᵀ diag(w) H + λ I) β = Hᵀ diag(w) r`.
pub fn solve_weighted_normal(
    h: &DMatrix<f64>,
    weights: &DVector<f64>,
    rhs_targets: &DVector<f64>,
    lambda: f64,
    allow_jitter: bool,
) -> Result<linalg::SpdSolution> {
    if weights.len() != h.nrows() || rhs_targets.len() != h.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} rows, weights {}, targets {}",
            h.nrows(),
            weights.len(),
            rhs_targets.len()
        )));
    }
    let mut hw = h.clone();
    for (i, mut row) in hw.row_iter_mut().enumerate() {
        row *= weights[i];
    }
    let mut a = h.tr_mul(&hw);
    for i in 0..a.nrows() {
        a[(i, i)] += lambda;
    }
    let b = hw.tr_mul(rhs_targets);
    linalg::solve_spd(&a, &b, allow_jitter)
}

/// Closed-form regularized least squares `(HᵀH + λI)⁻¹HᵀT`.
pub fn ridge_solve(design: &DesignMatrix, lambda: f64) -> Result<DVector<f64>> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let ones = DVector::from_element(design.n_samples(), 1.0);
    Ok(solve_weighted_normal(design.h(), &ones, design.targets(), lambda, false)?.x)
}

fn weighted_step_from_residuals(
    design: &DesignMatrix,
    residuals: &ErrorVector,
    params: KernelParams,
    lambda_prime: f64,
) -> Result<linalg::SpdSolution> {
    let weights = DVector::from_iterator(
        residuals.len(),
        residuals.as_slice().iter().map(|&e| params.weight(e)),
    );
    if lambda_prime == 0.0 && weights.iter().all(|&w| w == 0.0) {
        return Err(Error::DegenerateWeights {
            sigma: params.sigma(),
        });
    }
    let shifted = design.targets().map(|t| t - params.center());
    solve_weighted_normal(
        design.h(),
        &weights,
        &shifted,
        lambda_prime,
        lambda_prime == 0.0,
    )
}

fn residual_vector(design: &DesignMatrix, beta: &DVector<f64>) -> Result<ErrorVector> {
    ErrorVector::new(design.residuals(beta)?.as_slice().to_vec())
}

/// One fixed-point step: weights from the residuals at `beta_prev`, then a
/// weighted ridge solve against the center-shifted targets.
pub fn weighted_ridge_step(
    design: &DesignMatrix,
    params: KernelParams,
    lambda_prime: f64,
    beta_prev: &DVector<f64>,
) -> Result<DVector<f64>> {
    if !(lambda_prime >= 0.0 && lambda_prime.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda' must be >= 0, got {lambda_prime}"
        )));
    }
    let residuals = residual_vector(design, beta_prev)?;
    Ok(weighted_step_from_residuals(design, &residuals, params, lambda_prime)?.x)
}

/// Regularized cost `-(1/N) Σ G_σ(e_i - c) + λ‖β‖²` at `beta`.
pub fn cost_at(
    design: &DesignMatrix,
    params: KernelParams,
    lambda: f64,
    beta: &DVector<f64>,
) -> Result<f64> {
    let residuals = residual_vector(design, beta)?;
    kernel::mcc_vc_cost(&residuals, params, beta.norm_squared(), lambda)
}

/// Gradient of [`cost_at`] with respect to β:
/// `-(1/N) Σ G_σ(e_i - c) (e_i - c)/σ² h_iᵀ + 2λβ`.
pub fn cost_gradient(
    design: &DesignMatrix,
    params: KernelParams,
    lambda: f64,
    beta: &DVector<f64>,
) -> Result<DVector<f64>> {
    let residuals = design.residuals(beta)?;
    let sigma2 = params.sigma() * params.sigma();
    let scaled = residuals.map(|e| params.weight(e) * (e - params.center()) / sigma2);
    let n = design.n_samples() as f64;
    Ok(design.h().tr_mul(&scaled) * (-1.0 / n) + beta * (2.0 * lambda))
}

enum Selection<'a> {
    Grid(&'a ParamGrid),
    Fixed(KernelParams),
}

impl Selection<'_> {
    fn pick(&self, residuals: &ErrorVector) -> Result<KernelParams> {
        match self {
            Selection::Grid(grid) => Ok(kernel::optimize_params(residuals, grid)?.0),
            Selection::Fixed(p) => Ok(*p),
        }
    }
}

fn run_fixed_point(
    design: &DesignMatrix,
    selection: Selection<'_>,
    lambda_prime: f64,
    max_iterations: usize,
    tolerance: f64,
    initial_beta: Option<&[f64]>,
) -> Result<FitResult> {
    check_loop_settings(lambda_prime, max_iterations, tolerance)?;
    let dim = design.n_features();
    let initial = match initial_beta {
        Some(b) if b.len() != dim => {
            return Err(Error::DimensionMismatch(format!(
                "initial weight vector has length {}, design has {dim} columns",
                b.len()
            )))
        }
        Some(b) => DVector::from_column_slice(b),
        None => DVector::zeros(dim),
    };
    let lambda = lambda_prime / (2.0 * design.n_samples() as f64);

    let mut beta = initial.clone();
    let mut previous_cost: Option<f64> = None;
    let mut trace = Vec::new();
    let mut converged = false;

    for k in 1..=max_iterations {
        let residuals = residual_vector(design, &beta)?;
        let params = selection.pick(&residuals)?;
        let prior = match previous_cost {
            Some(c) => c,
            None => kernel::mcc_vc_cost(&residuals, params, beta.norm_squared(), lambda)?,
        };

        let step = weighted_step_from_residuals(design, &residuals, params, lambda_prime)?;
        let next = step.x;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration: k });
        }
        let cost = cost_at(design, params, lambda, &next)?;
        let max_abs_delta = (&next - &beta).amax();
        trace.push(IterationRecord {
            iteration: k,
            sigma: params.sigma(),
            center: params.center(),
            cost,
            max_abs_delta,
            beta: next.as_slice().to_vec(),
            jitter: step.jitter,
        });
        beta = next;

        if (cost - prior).abs() < tolerance {
            converged = true;
            break;
        }
        previous_cost = Some(cost);
    }

    Ok(FitResult {
        beta,
        initial_beta: initial,
        iterations_run: trace.len(),
        converged,
        trace,
    })
}

/// Fixed-point solver with per-iteration kernel width/center selection.
pub fn fit_mcc_vc(design: &DesignMatrix, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    run_fixed_point(
        design,
        Selection::Grid(&config.grid),
        config.lambda_prime,
        config.max_iterations,
        config.tolerance,
        config.initial_beta.as_deref(),
    )
}

/// Classical zero-center correntropy solver with a fixed width.
pub fn fit_mcc(
    design: &DesignMatrix,
    sigma: f64,
    lambda_prime: f64,
    max_iterations: usize,
    tolerance: f64,
) -> Result<FitResult> {
    let params = KernelParams::new(sigma, 0.0)?;
    run_fixed_point(
        design,
        Selection::Fixed(params),
        lambda_prime,
        max_iterations,
        tolerance,
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::CenterRule;
    use approx::assert_relative_eq;

    fn design(rows: &[&[f64]], t: &[f64]) -> DesignMatrix {
        let h = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
        DesignMatrix::new(h, DVector::from_column_slice(t)).unwrap()
    }

    fn ols(d: &DesignMatrix) -> DVector<f64> {
        let a = d.h().tr_mul(d.h());
        let b = d.h().tr_mul(d.targets());
        a.lu().solve(&b).unwrap()
    }

    fn sample_design() -> DesignMatrix {
        design(
            &[
                &[1.0, 0.5],
                &[-0.3, 2.0],
                &[0.7, -1.2],
                &[1.5, 0.1],
                &[-1.1, -0.4],
            ],
            &[1.2, 3.1, -2.0, 1.9, -1.4],
        )
    }

    #[test]
    fn ridge_examples() {
        let t = [1.0, -2.0, 0.5];
        let eye = design(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]], &t);
        let b0 = ridge_solve(&eye, 0.0).unwrap();
        let b1 = ridge_solve(&eye, 1.0).unwrap();
        for i in 0..3 {
            assert_relative_eq!(b0[i], t[i], max_relative = 1e-15);
            assert_relative_eq!(b1[i], t[i] / 2.0, max_relative = 1e-15);
        }
        let mean = design(&[&[1.0], &[1.0]], &[1.0, 3.0]);
        assert_relative_eq!(
            ridge_solve(&mean, 0.0).unwrap()[0],
            2.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn ridge_singular_is_reported() {
        let d = design(&[&[1.0, 1.0], &[2.0, 2.0], &[3.0, 3.0]], &[1.0, 2.0, 3.0]);
        assert!(matches!(ridge_solve(&d, 0.0), Err(Error::Singular)));
        assert!(ridge_solve(&d, 1e-3).is_ok());
        assert!(ridge_solve(&d, -1.0).is_err());
    }

    #[test]
    fn weighted_step_huge_sigma_is_ols() {
        let d = sample_design();
        let p = KernelParams::new(1e8, 0.0).unwrap();
        let beta = weighted_ridge_step(&d, p, 0.0, &DVector::zeros(2)).unwrap();
        let reference = ols(&d);
        for i in 0..2 {
            assert_relative_eq!(beta[i], reference[i], max_relative = 1e-6);
        }
    }

    #[test]
    fn weighted_step_residuals_at_center_is_shifted_ols() {
        let d = sample_design();
        let beta_prev = DVector::from_vec(vec![0.4, -0.2]);
        let fitted = d.h() * &beta_prev;
        let c = 0.75;
        let t = fitted.map(|y| y + c);
        let at_center = DesignMatrix::new(d.h().clone(), t.clone()).unwrap();
        let p = KernelParams::new(0.3, c).unwrap();
        let beta = weighted_ridge_step(&at_center, p, 0.0, &beta_prev).unwrap();
        let shifted = DesignMatrix::new(d.h().clone(), t.map(|v| v - c)).unwrap();
        let reference = ols(&shifted);
        for i in 0..2 {
            assert_relative_eq!(beta[i], reference[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn weighted_step_downweights_outlier() {
        let d = design(&[&[1.0], &[1.0]], &[0.0, 10.0]);
        let p = KernelParams::new(1.0, 0.0).unwrap();
        let beta = weighted_ridge_step(&d, p, 0.0, &DVector::zeros(1)).unwrap();
        // Σ w h t / Σ w h² with w = (G(0), G(10)); 30-digit reference value.
        assert_relative_eq!(beta[0], 1.928_749_847_963_917_783e-21, max_relative = 1e-10);
    }

    #[test]
    fn weighted_step_degenerate_weights() {
        let d = design(&[&[1.0], &[1.0]], &[1e4, -1e4]);
        let p = KernelParams::new(0.01, 0.0).unwrap();
        assert!(matches!(
            weighted_ridge_step(&d, p, 0.0, &DVector::zeros(1)),
            Err(Error::DegenerateWeights { .. })
        ));
        let beta = weighted_ridge_step(&d, p, 1e-3, &DVector::zeros(1)).unwrap();
        assert_eq!(beta[0], 0.0);
    }

    #[test]
    fn ridge_reduction_with_unit_weights() {
        let d = sample_design();
        let c = 0.4;
        let shifted_t = d.targets().map(|t| t - c);
        let ones = DVector::from_element(d.n_samples(), 1.0);
        let hook = solve_weighted_normal(d.h(), &ones, &shifted_t, 0.3, true)
            .unwrap()
            .x;
        let ridge =
            ridge_solve(&DesignMatrix::new(d.h().clone(), shifted_t).unwrap(), 0.3).unwrap();
        assert_eq!(hook, ridge);
    }

    #[test]
    fn noise_free_targets_are_recovered() {
        let h = DMatrix::from_fn(40, 2, |i, j| ((i * 7 + j * 3) % 11) as f64 / 2.5 - 2.0);
        let beta_true = DVector::from_vec(vec![1.0, 2.0]);
        let d = DesignMatrix::new(h.clone(), &h * &beta_true).unwrap();
        let config = FitConfig {
            lambda_prime: 0.0,
            ..FitConfig::default()
        };
        let fit = fit_mcc_vc(&d, &config).unwrap();
        assert!(fit.iterations_run <= config.max_iterations);
        assert!((&fit.beta - &beta_true).amax() <= 1e-6);
    }

    #[test]
    fn singleton_grid_matches_mcc() {
        let d = sample_design();
        let config = FitConfig {
            lambda_prime: 1e-3,
            grid: ParamGrid::new(vec![1.3], vec![0.0], CenterRule::ExplicitGrid).unwrap(),
            ..FitConfig::default()
        };
        let vc = fit_mcc_vc(&d, &config).unwrap();
        let mcc = fit_mcc(&d, 1.3, 1e-3, config.max_iterations, config.tolerance).unwrap();
        assert_eq!(vc, mcc);
    }

    #[test]
    fn trace_bookkeeping() {
        let d = sample_design();
        let config = FitConfig {
            max_iterations: 3,
            tolerance: 1e-300,
            ..FitConfig::default()
        };
        let fit = fit_mcc_vc(&d, &config).unwrap();
        assert_eq!(fit.iterations_run, 3);
        assert_eq!(fit.trace.len(), 3);
        assert!(!fit.converged);
        assert_eq!(fit.beta_at(0).unwrap(), DVector::zeros(2));
        assert_eq!(fit.beta_at(3).unwrap(), fit.beta);
        assert!(fit.beta_at(4).is_none());
        let step2 = weighted_ridge_step(
            &d,
            fit.trace[1].params(),
            config.lambda_prime,
            &fit.beta_at(1).unwrap(),
        )
        .unwrap();
        assert_eq!(step2.as_slice(), fit.trace[1].beta.as_slice());
    }

    #[test]
    fn config_validation() {
        let d = sample_design();
        let mut config = FitConfig::default();
        config.max_iterations = 0;
        assert!(fit_mcc_vc(&d, &config).is_err());
        let mut config = FitConfig::default();
        config.tolerance = 0.0;
        assert!(fit_mcc_vc(&d, &config).is_err());
        let mut config = FitConfig::default();
        config.initial_beta = Some(vec![0.0; 3]);
        assert!(matches!(
            fit_mcc_vc(&d, &config),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(fit_mcc(&d, 0.0, 0.0, 10, 1e-6).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = sample_design();
        let p = KernelParams::new(0.9, 0.3).unwrap();
        let beta = DVector::from_vec(vec![0.7, -0.4]);
        let g = cost_gradient(&d, p, 0.05, &beta).unwrap();
        for j in 0..2 {
            let mut up = beta.clone();
            let mut down = beta.clone();
            up[j] += 1e-6;
            down[j] -= 1e-6;
            let fd =
                (cost_at(&d, p, 0.05, &up).unwrap() - cost_at(&d, p, 0.05, &down).unwrap()) / 2e-6;
            assert_relative_eq!(g[j], fd, max_relative = 1e-4);
        }
    }

    #[test]
    fn tight_tolerance_reaches_a_stationary_point() {
        let noise = crate::data::inner_noise_presets()[1];
        let (x, t) = crate::data::generate_linear_data(&[1.0, 2.0], 400, &noise, 11).unwrap();
        let d = DesignMatrix::new(x, t).unwrap();
        let config = FitConfig {
            tolerance: 1e-12,
            ..FitConfig::default()
        };
        let fit = fit_mcc_vc(&d, &config).unwrap();
        assert!(fit.converged);
        let p = fit.final_params();
        let lambda = config.lambda_prime / 800.0;
        let g = cost_gradient(&d, p, lambda, &fit.beta).unwrap();
        assert!(g.amax() <= 1e-5 * (1.0 + fit.beta.amax()), "{g}");
    }
}
