//! Per-arm least-squares estimation.
//!
//! An [`EstimatorState`] keeps the sufficient statistics `ΘᵀΘ` and `ΘᵀY` of an
//! arm's history and solves the normal equations on demand, either plainly
//! (OLS) or with a ridge term `λI`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{norm, Cholesky, LinalgError, Matrix};

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_RIDGE_LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("confidence widths need a ridge estimator with lambda > 0")]
    RidgeRequired,
    #[error("confidence parameter delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    Ols,
    Ridge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub arm: usize,
    /// `ΘᵀΘ`, without the ridge term.
    pub gram: Matrix,
    /// `ΘᵀY`
    pub moment: Vec<f64>,
    pub count: usize,
    pub ridge_lambda: f64,
    pub mode: EstimatorMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceWidth {
    pub arm: usize,
    pub width: f64,
    pub delta: f64,
}

impl EstimatorState {
    pub fn ols(arm: usize, dim: usize) -> Self {
        Self {
            arm,
            gram: Matrix::zeros(dim),
            moment: vec![0.0; dim],
            count: 0,
            ridge_lambda: 0.0,
            mode: EstimatorMode::Ols,
        }
    }

    pub fn ridge(arm: usize, dim: usize, lambda: f64) -> Self {
        Self {
            ridge_lambda: lambda,
            mode: EstimatorMode::Ridge,
            ..Self::ols(arm, dim)
        }
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    /// Adds one observation: `gram += xxᵀ`, `moment += y·x`.
    pub fn absorb(&mut self, context: &[f64], response: f64) {
        assert_eq!(context.len(), self.dim(), "context has wrong dimension");
        self.gram.add_outer(context, 1.0);
        for (m, x) in self.moment.iter_mut().zip(context) {
            *m += response * x;
        }
        self.count += 1;
    }

    /// By-value form of [`absorb`](Self::absorb).
    pub fn absorbed(mut self, context: &[f64], response: f64) -> Self {
        self.absorb(context, response);
        self
    }

    /// `ΘᵀΘ + λI` (just `ΘᵀΘ` in OLS mode).
    pub fn regularized_gram(&self) -> Matrix {
        match self.mode {
            EstimatorMode::Ols => self.gram.clone(),
            EstimatorMode::Ridge => self.gram.shifted(self.ridge_lambda),
        }
    }

    /// Solution of the normal equations, without the unit-ball projection.
    pub fn solve(&self) -> Result<Vec<f64>, LinalgError> {
        Ok(Cholesky::factor(&self.regularized_gram())?.solve(&self.moment))
    }

    /// The displayed attribute estimate: the normal-equation solution scaled
    /// back onto the unit ball when it lands outside.
    pub fn estimate(&self) -> Result<Vec<f64>, LinalgError> {
        let mut mu = self.solve()?;
        let n = norm(&mu);
        if n > 1.0 {
            mu.iter_mut().for_each(|v| *v /= n);
        }
        Ok(mu)
    }

    /// [`estimate`](Self::estimate), or the zero vector while the arm is not
    /// yet identifiable.
    pub fn estimate_or_zero(&self) -> Vec<f64> {
        self.estimate().unwrap_or_else(|_| vec![0.0; self.dim()])
    }

    /// `‖x‖` in the metric of `(ΘᵀΘ + λI)⁻¹`.
    pub fn width_norm(&self, context: &[f64]) -> Result<f64, LinalgError> {
        crate::linalg::quad_norm_inv(&self.regularized_gram(), context)
    }

    /// Ridge confidence width at round `t`:
    /// `‖x‖_{(ΘᵀΘ+λI)⁻¹} · (m·√(d·ln((1 + t/λ)/δ)) + √λ)`.
    pub fn confidence_width(
        &self,
        context: &[f64],
        delta: f64,
        m: usize,
        t: usize,
    ) -> Result<ConfidenceWidth, EstimationError> {
        if self.mode != EstimatorMode::Ridge || self.ridge_lambda.is_nan() || self.ridge_lambda <= 0.0 {
            return Err(EstimationError::RidgeRequired);
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(EstimationError::InvalidDelta(delta));
        }
        let lambda = self.ridge_lambda;
        let radius =
            m as f64 * (self.dim() as f64 * ((1.0 + t as f64 / lambda) / delta).ln()).sqrt() + lambda.sqrt();
        Ok(ConfidenceWidth {
            arm: self.arm,
            width: self.width_norm(context)? * radius,
            delta,
        })
    }
}
