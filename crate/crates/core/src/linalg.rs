//! Symmetric positive-definite solves for the (weighted) normal equations.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative diagonal jitter used when a semidefinite system must be solved.
pub const JITTER_SCALE: f64 = 1e-10;

/// Solution of an SPD system, with the jitter that had to be added (if any).
#[derive(Debug, Clone)]
pub struct SpdSolution {
    pub x: DVector<f64>,
    pub jitter: Option<f64>,
}

/// Bound on `‖A x - b‖∞` accepted after a solve.
pub fn residual_bound(b: &DVector<f64>) -> f64 {
    1e-8 * (1.0 + b.amax())
}

fn factor(a: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let n = a.nrows();
    let max_diag = a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let chol = Cholesky::new(a)?;
    // Pivots that are tiny relative to the diagonal mean the matrix is
    // numerically singular even though the factorization ran to completion.
    let floor = n as f64 * f64::EPSILON * max_diag;
    let min_pivot = chol
        .l_dirty()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |m, v| m.min(v * v));
    if !(min_pivot > floor) {
        return None;
    }
    Some(chol)
}

/// Solves `A x = b` for symmetric positive-definite `A` by Cholesky.
///
/// With `allow_jitter`, a failed factorization is retried once with
/// `JITTER_SCALE · trace(A) / n` added to the diagonal.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>, allow_jitter: bool) -> Result<SpdSolution> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "system matrix {}x{} with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if n == 0 {
        return Err(Error::Empty("linear system"));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "linear system has non-finite entries".into(),
        ));
    }

    let (system, jitter) = match factor(a.clone()) {
        Some(chol) => ((a.clone(), chol), None),
        None if allow_jitter => {
            let jitter = JITTER_SCALE * a.trace() / n as f64;
            let mut shifted = a.clone();
            for i in 0..n {
                shifted[(i, i)] += jitter;
            }
            let chol = factor(shifted.clone()).ok_or(Error::Singular)?;
            log::debug!("semidefinite system: added diagonal jitter {jitter:e}");
            ((shifted, chol), Some(jitter))
        }
        None => return Err(Error::Singular),
    };
    let (matrix, chol) = system;
    let x = chol.solve(b);

    let residual = (&matrix * &x - b).amax();
    let bound = residual_bound(b);
    if !(residual <= bound) {
        return Err(Error::ResidualCheck { residual, bound });
    }
    Ok(SpdSolution { x, jitter })
}
