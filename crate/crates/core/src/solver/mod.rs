//! Fitting venue-score weight vectors.
//!
//! The objective is `mean_i w_i·L(a_i·x, b_i) + (λ/2)·‖x‖²` with the bias
//! column left out of the penalty. Its stationarity condition for the squared
//! loss is `(AᵀA + mλI)x = Aᵀb`, which [`ridge_closed_form`] solves directly
//! and [`sgd_fit`] reaches iteratively.

mod loss;
mod ridge;
mod sgd;
mod sparse;

use thiserror::Error;

pub use loss::Loss;
pub use ridge::{normal_equation_residual, ridge_closed_form, MAX_DENSE_COLUMNS};
pub use sgd::{objective, sgd_fit, FitProblem, FitResult, LearningRate, SolverConfig, TrainingReport};
pub use sparse::CsrMatrix;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid target {label} for {loss:?}")]
    InvalidLabel { label: f64, loss: Loss },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("training diverged in epoch {epoch} at learning rate {learning_rate:e}")]
    Divergence { epoch: usize, learning_rate: f64 },
    #[error("normal equations are singular")]
    Singular,
    #[error("{0} columns is too many to densify (limit {MAX_DENSE_COLUMNS})")]
    TooLarge(usize),
}
