//! Impulsive mixture noise `(1 - g) B + g O` and the synthetic linear system.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offset mixed into the seed of the noise stream so that inputs and noise
/// drawn from the same user seed are independent.
const NOISE_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// Distribution of the inner (non-outlier) noise `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum InnerNoise {
    Gaussian { mean: f64, variance: f64 },
    Laplace { mean: f64, variance: f64 },
    ChiSquare { dof: u32 },
}

impl InnerNoise {
    pub fn mean(&self) -> f64 {
        match *self {
            InnerNoise::Gaussian { mean, .. } | InnerNoise::Laplace { mean, .. } => mean,
            InnerNoise::ChiSquare { dof } => dof as f64,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            InnerNoise::Gaussian { variance, .. } | InnerNoise::Laplace { variance, .. } => {
                variance
            }
            InnerNoise::ChiSquare { dof } => 2.0 * dof as f64,
        }
    }

    /// Laplace scale `b` with variance `2b²`.
    pub fn laplace_scale(variance: f64) -> f64 {
        (variance / 2.0).sqrt()
    }

    fn validate(&self) -> Result<()> {
        match *self {
            InnerNoise::Gaussian { mean, variance } | InnerNoise::Laplace { mean, variance } => {
                if !mean.is_finite() || !(variance > 0.0 && variance.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "inner noise needs finite mean and positive variance, got ({mean}, {variance})"
                    )));
                }
            }
            InnerNoise::ChiSquare { dof } => {
                if dof == 0 {
                    return Err(Error::InvalidParameter(
                        "chi-square dof must be >= 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            InnerNoise::Gaussian { mean, variance } => {
                mean + variance.sqrt() * standard_normal(rng)
            }
            InnerNoise::Laplace { mean, variance } => {
                // Inverse CDF on u in (-1/2, 1/2).
                let b = Self::laplace_scale(variance);
                let u: f64 = rng.gen::<f64>() - 0.5;
                mean - b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            InnerNoise::ChiSquare { dof } => (0..dof)
                .map(|_| {
                    let z = standard_normal(rng);
                    z * z
                })
                .sum(),
        }
    }
}

/// Contaminated noise `ρ = (1 - g) B + g O` with `g ~ Bernoulli(p)` and a
/// Gaussian outlier `O`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p: f64,
    pub inner: InnerNoise,
    pub outlier_mean: f64,
    pub outlier_variance: f64,
}

impl NoiseModel {
    pub fn new(
        p: f64,
        inner: InnerNoise,
        outlier_mean: f64,
        outlier_variance: f64,
    ) -> Result<Self> {
        let model = Self {
            p,
            inner,
            outlier_mean,
            outlier_variance,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidParameter(format!(
                "outlier probability must lie in [0, 1], got {}",
                self.p
            )));
        }
        if !self.outlier_mean.is_finite()
            || !(self.outlier_variance > 0.0 && self.outlier_variance.is_finite())
        {
            return Err(Error::InvalidParameter(
                "outlier needs finite mean and positive variance".into(),
            ));
        }
        self.inner.validate()
    }
}

/// Standard normal by Box–Muller on the seeded uniform stream.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // 1 - U lies in (0, 1], keeping the logarithm finite.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Outcome of drawing mixture noise, with the outlier indicators.
#[derive(Debug, Clone)]
pub struct NoiseDraw {
    pub values: Vec<f64>,
    pub outlier: Vec<bool>,
}

/// Draws `n` mixture samples, returning the indicator draws as well.
pub fn sample_noise_detailed(model: &NoiseModel, n: usize, seed: u64) -> Result<NoiseDraw> {
    model.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter(
            "noise sample size must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outlier_sd = model.outlier_variance.sqrt();
    let mut values = Vec::with_capacity(n);
    let mut outlier = Vec::with_capacity(n);
    for _ in 0..n {
        // All three variables are drawn every time so the stream layout does
        // not depend on p.
        let g = rng.gen::<f64>() < model.p;
        let b = model.inner.sample(&mut rng);
        let o = model.outlier_mean + outlier_sd * standard_normal(&mut rng);
        values.push(if g { o } else { b });
        outlier.push(g);
    }
    Ok(NoiseDraw { values, outlier })
}

pub fn sample_noise(model: &NoiseModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(sample_noise_detailed(model, n, seed)?.values)
}

/// The four contamination settings of the linear benchmark: p = 0.1,
/// outliers N(0, 10⁴), inner noise N(0,2), N(3,1), Laplace(0, var 1), χ²(3).
pub fn inner_noise_presets() -> [NoiseModel; 4] {
    let with = |inner| NoiseModel {
        p: 0.1,
        inner,
        outlier_mean: 0.0,
        outlier_variance: 10_000.0,
    };
    [
        with(InnerNoise::Gaussian {
            mean: 0.0,
            variance: 2.0,
        }),
        with(InnerNoise::Gaussian {
            mean: 3.0,
            variance: 1.0,
        }),
        with(InnerNoise::Laplace {
            mean: 0.0,
            variance: 1.0,
        }),
        with(InnerNoise::ChiSquare { dof: 3 }),
    ]
}

/// Short labels for the presets, in order.
pub const PRESET_NAMES: [&str; 4] = [
    "gaussian(0,2)",
    "gaussian(3,1)",
    "laplace(0,1)",
    "chi-square(3)",
];

/// Inputs uniform on [-2, 2]^d and targets `X w* + ρ`.
pub fn generate_linear_data(
    w_star: &[f64],
    n: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if w_star.is_empty() || n == 0 {
        return Err(Error::InvalidParameter(
            "need at least one weight and one sample".into(),
        ));
    }
    let d = w_star.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            x[(i, j)] = rng.gen_range(-2.0..=2.0);
        }
    }
    let rho = sample_noise(noise, n, seed ^ NOISE_STREAM)?;
    let w = DVector::from_column_slice(w_star);
    let t = &x * w + DVector::from_vec(rho);
    Ok((x, t))
}
