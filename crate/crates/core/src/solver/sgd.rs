use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CsrMatrix, Loss, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningRate {
    Constant,
    /// `η_t = η₀ / (1 + η₀·λ·t)`.
    InverseScaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub eta0: f64,
    pub schedule: LearningRate,
    pub seed: u64,
    pub shuffle: bool,
    /// Stop once the epoch-average loss improves by less than this fraction.
    pub tol: Option<f64>,
    /// Return the average of all iterates from the second half of the
    /// configured epochs instead of the last iterate.
    pub average: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.03,
            epochs: 20,
            eta0: 0.01,
            schedule: LearningRate::InverseScaling,
            seed: 0,
            shuffle: true,
            tol: Some(1e-6),
            average: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<(), SolverError> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(SolverError::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.epochs == 0 {
            return Err(SolverError::Config("epochs must be >= 1".into()));
        }
        if !(self.eta0 > 0.0) || !self.eta0.is_finite() {
            return Err(SolverError::Config(format!("eta0 must be > 0, got {}", self.eta0)));
        }
        Ok(())
    }

    fn rate(&self, t: u64) -> f64 {
        match self.schedule {
            LearningRate::Constant => self.eta0,
            LearningRate::InverseScaling => self.eta0 / (1.0 + self.eta0 * self.lambda * t as f64),
        }
    }
}

/// A regression problem over a sparse matrix.
#[derive(Debug, Clone, Copy)]
pub struct FitProblem<'a> {
    pub matrix: &'a CsrMatrix,
    pub targets: &'a [f64],
    /// Per-row sample weights; all ones when `None`.
    pub weights: Option<&'a [f64]>,
    /// Column excluded from the L2 penalty.
    pub bias_col: Option<usize>,
}

impl FitProblem<'_> {
    fn validate(&self, loss: Loss) -> Result<(), SolverError> {
        let m = self.matrix.nrows();
        if self.targets.len() != m {
            return Err(SolverError::Dimension(format!(
                "{m} rows but {} targets",
                self.targets.len()
            )));
        }
        if let Some(w) = self.weights {
            if w.len() != m {
                return Err(SolverError::Dimension(format!("{m} rows but {} weights", w.len())));
            }
            if let Some(bad) = w.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                return Err(SolverError::Config(format!("row weight {bad} is not positive")));
            }
        }
        if let Some(b) = self.bias_col {
            if b >= self.matrix.ncols() {
                return Err(SolverError::Dimension(format!("bias column {b} out of range")));
            }
        }
        for &y in self.targets {
            loss.check_target(y)?;
        }
        Ok(())
    }

    #[inline]
    fn weight(&self, i: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[i])
    }
}

/// Loss and objective history of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub loss: Loss,
    pub config: SolverConfig,
    pub rows: usize,
    pub columns: usize,
    /// Weighted mean loss accumulated during each epoch's pass.
    pub epoch_losses: Vec<f64>,
    pub epochs_run: usize,
    pub early_stopped: bool,
    /// Full objective at the returned weights.
    pub final_objective: f64,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    /// One weight per matrix column, bias included.
    pub weights: Vec<f64>,
    pub report: TrainingReport,
}

/// `mean_i w_i·L(a_i·x, b_i) + (λ/2)·Σ_{j≠bias} x_j²`.
pub fn objective(problem: &FitProblem<'_>, loss: Loss, lambda: f64, x: &[f64]) -> f64 {
    let m = problem.matrix.nrows();
    let data: f64 = (0..m)
        .map(|i| {
            let y_hat = problem.matrix.row_dot(i, x);
            problem.weight(i) * loss.value_unchecked(y_hat, problem.targets[i])
        })
        .sum();
    let penalty: f64 = x
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != problem.bias_col)
        .map(|(_, v)| v * v)
        .sum();
    data / m.max(1) as f64 + 0.5 * lambda * penalty
}

/// Plain stochastic gradient descent, one row per step.
///
/// The penalized coordinates are stored as `scale · v` so the L2 shrinkage
/// is O(1) per step; only the nonzeros of the sampled row are touched.
/// Results are bit-reproducible for a fixed configuration.
pub fn sgd_fit(problem: &FitProblem<'_>, loss: Loss, config: &SolverConfig) -> Result<FitResult, SolverError> {
    config.validate()?;
    problem.validate(loss)?;
    let matrix = problem.matrix;
    let (m, n) = (matrix.nrows(), matrix.ncols());
    let bias_col = problem.bias_col;

    let mut v = vec![0.0; n];
    let mut scale = 1.0;
    let mut bias = 0.0;
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut early_stopped = false;
    let mut t: u64 = 0;
    let mut avg: Option<(Vec<f64>, u64)> = None;

    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let last_epoch = epoch + 1 == config.epochs;
        if config.average && epoch == config.epochs / 2 {
            avg = Some((vec![0.0; n], 0));
        }
        let mut total = 0.0;
        for &i in &order {
            let eta = config.rate(t);
            let (idx, val) = matrix.row(i);
            let mut dot = 0.0;
            for (&j, &a) in idx.iter().zip(val) {
                let j = j as usize;
                dot += if Some(j) == bias_col {
                    a * bias
                } else {
                    a * scale * v[j]
                };
            }
            let y = problem.targets[i];
            let w = problem.weight(i);
            total += w * loss.value_unchecked(dot, y);
            let g = w * loss.grad_unchecked(dot, y);
            if !dot.is_finite() || !g.is_finite() {
                return Err(SolverError::Divergence {
                    epoch,
                    learning_rate: eta,
                });
            }

            let shrink = 1.0 - eta * config.lambda;
            if shrink <= 0.0 {
                return Err(SolverError::Divergence {
                    epoch,
                    learning_rate: eta,
                });
            }
            scale *= shrink;
            if g != 0.0 {
                for (&j, &a) in idx.iter().zip(val) {
                    let j = j as usize;
                    if Some(j) == bias_col {
                        bias -= eta * g * a;
                    } else {
                        v[j] -= eta * g * a / scale;
                    }
                }
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|x| *x *= scale);
                scale = 1.0;
            }
            if let Some((sum, count)) = avg.as_mut() {
                for (s, x) in sum.iter_mut().zip(&v) {
                    *s += scale * x;
                }
                if let Some(b) = bias_col {
                    sum[b] += bias;
                }
                *count += 1;
            }
            t += 1;
        }
        if !scale.is_finite() || v.iter().any(|x| !x.is_finite()) || !bias.is_finite() {
            return Err(SolverError::Divergence {
                epoch,
                learning_rate: config.rate(t),
            });
        }
        let mean = total / m.max(1) as f64;
        epoch_losses.push(mean);
        log::debug!("epoch {epoch}: mean loss {mean:.6e}");
        if let (Some(tol), [.., prev, cur]) = (config.tol, epoch_losses.as_slice()) {
            if prev - cur < tol * prev.abs().max(f64::MIN_POSITIVE) {
                early_stopped = !last_epoch;
                if early_stopped {
                    break;
                }
            }
        }
    }

    let weights = match avg {
        Some((sum, count)) if count > 0 => sum.into_iter().map(|s| s / count as f64).collect(),
        _ => {
            let mut x: Vec<f64> = v.iter().map(|x| scale * x).collect();
            if let Some(b) = bias_col {
                x[b] = bias;
            }
            x
        }
    };
    let final_objective = objective(problem, loss, config.lambda, &weights);
    Ok(FitResult {
        report: TrainingReport {
            loss,
            config: config.clone(),
            rows: m,
            columns: n,
            epochs_run: epoch_losses.len(),
            epoch_losses,
            early_stopped,
            final_objective,
        },
        weights,
    })
}
