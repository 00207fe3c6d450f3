use serde::{Deserialize, Serialize};

use super::SolverError;

/// Per-row loss `L(y_hat, y)`.
///
/// `Squared` is `½(y − ŷ)²`, which coincides with the quadratic branch of
/// `Huber`. `ModifiedHuber` and `Logistic` are margin losses on labels in
/// `{−1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loss {
    Squared,
    Huber { delta: f64 },
    ModifiedHuber,
    Logistic,
}

impl Loss {
    pub fn is_classification(&self) -> bool {
        matches!(self, Loss::ModifiedHuber | Loss::Logistic)
    }

    pub fn check_target(&self, y: f64) -> Result<(), SolverError> {
        if !y.is_finite() || (self.is_classification() && y != 1.0 && y != -1.0) {
            return Err(SolverError::InvalidLabel { label: y, loss: *self });
        }
        Ok(())
    }

    pub fn value(&self, y_hat: f64, y: f64) -> Result<f64, SolverError> {
        self.check_target(y)?;
        Ok(self.value_unchecked(y_hat, y))
    }

    /// Derivative with respect to `y_hat`.
    pub fn grad(&self, y_hat: f64, y: f64) -> Result<f64, SolverError> {
        self.check_target(y)?;
        Ok(self.grad_unchecked(y_hat, y))
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, y_hat: f64, y: f64) -> f64 {
        match *self {
            Loss::Squared => {
                let r = y - y_hat;
                0.5 * r * r
            }
            Loss::Huber { delta } => {
                let r = (y - y_hat).abs();
                if r <= delta {
                    0.5 * r * r
                } else {
                    delta * r - 0.5 * delta * delta
                }
            }
            Loss::ModifiedHuber => {
                let z = y * y_hat;
                if z >= -1.0 {
                    let m = (1.0 - z).max(0.0);
                    m * m
                } else {
                    -4.0 * z
                }
            }
            Loss::Logistic => {
                let z = y * y_hat;
                if z > 0.0 {
                    (-z).exp().ln_1p()
                } else {
                    -z + z.exp().ln_1p()
                }
            }
        }
    }

    #[inline]
    pub(crate) fn grad_unchecked(&self, y_hat: f64, y: f64) -> f64 {
        match *self {
            Loss::Squared => y_hat - y,
            Loss::Huber { delta } => {
                let r = y_hat - y;
                if r.abs() <= delta {
                    r
                } else {
                    delta * r.signum()
                }
            }
            Loss::ModifiedHuber => {
                let z = y * y_hat;
                if z >= -1.0 {
                    -2.0 * y * (1.0 - z).max(0.0)
                } else {
                    -4.0 * y
                }
            }
            Loss::Logistic => {
                let z = y * y_hat;
                -y / (1.0 + z.exp())
            }
        }
    }
}
