//! Linear-in-parameters models: feature maps and predictions `y = H β`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden-node activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let ez = z.exp();
                    ez / (1.0 + ez)
                }
            }
        }
    }
}

/// Random, fixed hidden layer of an extreme learning machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenLayerSpec {
    /// Ñ×d, one row per hidden node.
    pub input_weights: DMatrix<f64>,
    /// Length Ñ.
    pub biases: DVector<f64>,
    pub activation: Activation,
}

impl HiddenLayerSpec {
    pub fn new(
        input_weights: DMatrix<f64>,
        biases: DVector<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if input_weights.nrows() == 0 || input_weights.ncols() == 0 {
            return Err(Error::Empty("hidden layer"));
        }
        if input_weights.nrows() != biases.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} hidden nodes but {} biases",
                input_weights.nrows(),
                biases.len()
            )));
        }
        if input_weights
            .iter()
            .chain(biases.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidParameter(
                "hidden layer has non-finite entries".into(),
            ));
        }
        Ok(Self {
            input_weights,
            biases,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_weights.ncols()
    }

    pub fn hidden_count(&self) -> usize {
        self.input_weights.nrows()
    }
}

/// Mapping from raw inputs to the regressor rows `h_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureMap {
    Linear { input_dim: usize, bias_column: bool },
    Elm { seed: u64, hidden: HiddenLayerSpec },
}

impl FeatureMap {
    pub fn linear(input_dim: usize, bias_column: bool) -> Self {
        FeatureMap::Linear {
            input_dim,
            bias_column,
        }
    }

    pub fn elm(input_dim: usize, hidden_count: usize, seed: u64) -> Result<Self> {
        Ok(FeatureMap::Elm {
            seed,
            hidden: init_elm(input_dim, hidden_count, seed)?,
        })
    }

    pub fn input_dim(&self) -> usize {
        match self {
            FeatureMap::Linear { input_dim, .. } => *input_dim,
            FeatureMap::Elm { hidden, .. } => hidden.input_dim(),
        }
    }

    /// Ñ, the number of regressors.
    pub fn output_dim(&self) -> usize {
        match self {
            FeatureMap::Linear {
                input_dim,
                bias_column,
            } => input_dim + usize::from(*bias_column),
            FeatureMap::Elm { hidden, .. } => hidden.hidden_count(),
        }
    }

    pub fn apply(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if inputs.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "feature map expects {} input columns, got {}",
                self.input_dim(),
                inputs.ncols()
            )));
        }
        match self {
            FeatureMap::Linear { bias_column, .. } => {
                let h = build_linear_features(inputs)?;
                if *bias_column {
                    let cols = h.ncols();
                    Ok(h.insert_column(cols, 1.0))
                } else {
                    Ok(h)
                }
            }
            FeatureMap::Elm { hidden, .. } => elm_features(hidden, inputs),
        }
    }
}

/// Identity feature map: `φ_j(x) = x_j`.
pub fn build_linear_features(inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if inputs.nrows() == 0 || inputs.ncols() == 0 {
        return Err(Error::Empty("input matrix"));
    }
    if let Some(i) = inputs.iter().position(|v| !v.is_finite()) {
        let (row, col) = (i % inputs.nrows(), i / inputs.nrows());
        return Err(Error::InvalidParameter(format!(
            "input entry ({row}, {col}) is not finite"
        )));
    }
    Ok(inputs.clone())
}

/// Draws an ELM hidden layer: weights uniform on [-1, 1], biases uniform on [0, 1].
pub fn init_elm(input_dim: usize, hidden_count: usize, seed: u64) -> Result<HiddenLayerSpec> {
    if input_dim == 0 || hidden_count == 0 {
        return Err(Error::InvalidParameter(
            "input dimension and hidden node count must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = DMatrix::zeros(hidden_count, input_dim);
    for j in 0..hidden_count {
        for k in 0..input_dim {
            weights[(j, k)] = rng.gen_range(-1.0..=1.0);
        }
    }
    let biases = DVector::from_fn(hidden_count, |_, _| rng.gen_range(0.0..=1.0));
    HiddenLayerSpec::new(weights, biases, Activation::Sigmoid)
}

/// Hidden-layer outputs: entry (i, j) is `act(w_j · x_i + b_j)`.
pub fn elm_features(spec: &HiddenLayerSpec, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if inputs.ncols() != spec.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "hidden layer expects {} input columns, got {}",
            spec.input_dim(),
            inputs.ncols()
        )));
    }
    let mut z = inputs * spec.input_weights.transpose();
    for (j, mut col) in z.column_iter_mut().enumerate() {
        let b = spec.biases[j];
        col.apply(|v| *v = spec.activation.apply(*v + b));
    }
    Ok(z)
}

/// Model outputs `H β`.
pub fn predict(h: &DMatrix<f64>, beta: &DVector<f64>) -> Result<DVector<f64>> {
    if h.ncols() != beta.len() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} columns but weight vector has length {}",
            h.ncols(),
            beta.len()
        )));
    }
    Ok(h * beta)
}

/// Regressor matrix paired with its targets.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    h: DMatrix<f64>,
    targets: DVector<f64>,
}

impl DesignMatrix {
    pub fn new(h: DMatrix<f64>, targets: DVector<f64>) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(Error::Empty("design matrix"));
        }
        if h.nrows() != targets.len() {
            return Err(Error::DimensionMismatch(format!(
                "design has {} rows but {} targets",
                h.nrows(),
                targets.len()
            )));
        }
        if h.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "design has non-finite entries".into(),
            ));
        }
        Ok(Self { h, targets })
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    /// N
    pub fn n_samples(&self) -> usize {
        self.h.nrows()
    }

    /// Ñ
    pub fn n_features(&self) -> usize {
        self.h.ncols()
    }

    /// Residuals `t - H β`.
    pub fn residuals(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.targets - predict(&self.h, beta)?)
    }
}
