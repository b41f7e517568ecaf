//! Sequential minimal optimization with second-order working-set selection
//! (the LIBSVM WSS2 rule).
//!
//! Internally the solver minimizes `f(a) = 1/2 a'Qa - e'a` with
//! `Q_ij = y_i y_j K(x_i, x_j)`, which is the negated dual.

use super::{KernelParams, Sample, SvmError};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoConfig {
    /// Stop once the maximal KKT violation drops to this value.
    pub tolerance: f64,
    /// Iteration cap, in units of the training-set size.
    pub max_sweeps: usize,
}

impl Default for SmoConfig {
    fn default() -> Self {
        SmoConfig {
            tolerance: 1e-5,
            max_sweeps: 10_000,
        }
    }
}

pub(super) struct Solution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

/// Lazily filled rows of the signed kernel matrix.
struct QMatrix<'a> {
    data: &'a [Sample],
    kernel: &'a KernelParams,
    y: Vec<f64>,
    rows: Vec<Option<Vec<f64>>>,
    diag: Vec<f64>,
}

impl<'a> QMatrix<'a> {
    fn new(data: &'a [Sample], kernel: &'a KernelParams) -> Self {
        let y: Vec<f64> = data.iter().map(|s| s.y.sign()).collect();
        let diag = data
            .iter()
            .map(|s| kernel.eval_unchecked(s.x.as_slice(), s.x.as_slice()))
            .collect();
        QMatrix {
            data,
            kernel,
            y,
            rows: vec![None; data.len()],
            diag,
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        if self.rows[i].is_none() {
            let xi = self.data[i].x.as_slice();
            let yi = self.y[i];
            let row = self
                .data
                .iter()
                .zip(&self.y)
                .map(|(s, &yj)| yi * yj * self.kernel.eval_unchecked(xi, s.x.as_slice()))
                .collect();
            self.rows[i] = Some(row);
        }
        self.rows[i].as_deref().unwrap()
    }
}

pub(super) fn solve(data: &[Sample], c: f64, kernel: &KernelParams, cfg: &SmoConfig) -> Result<Solution, SvmError> {
    let n = data.len();
    let mut q = QMatrix::new(data, kernel);
    let y = q.y.clone();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = cfg.max_sweeps.saturating_mul(n);
    let mut iterations = 0;

    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    loop {
        // i: maximal violating index from I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }

        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut obj_min = f64::INFINITY;
        if let Some(i) = i_sel {
            let qi = q.row(i).to_vec();
            for t in 0..n {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                let v = y[t] * grad[t];
                if v > gmax2 {
                    gmax2 = v;
                }
                let b = gmax + v;
                if b > 0.0 {
                    let a = q.diag[i] + q.diag[t] - 2.0 * y[i] * y[t] * qi[t];
                    let a = if a > 0.0 { a } else { TAU };
                    let obj = -(b * b) / a;
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }

        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) if gmax + gmax2 >= cfg.tolerance => (i, j),
            _ => break,
        };
        if iterations >= max_iter {
            return Err(SvmError::NoConvergence { iterations });
        }
        iterations += 1;

        let qi = q.row(i).to_vec();
        let qj = q.row(j).to_vec();
        let old_ai = alpha[i];
        let old_aj = alpha[j];

        if y[i] != y[j] {
            let mut quad = q.diag[i] + q.diag[j] + 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q.diag[i] + q.diag[j] - 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let dai = alpha[i] - old_ai;
        let daj = alpha[j] - old_aj;
        for t in 0..n {
            grad[t] += qi[t] * dai + qj[t] * daj;
        }
    }

    Ok(Solution {
        bias: -rho(&alpha, &grad, &y, c),
        alphas: alpha,
        iterations,
    })
}

/// Offset from the KKT conditions: averaged over free multipliers, or the
/// midpoint of the feasible interval when every multiplier sits at a bound.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free_count += 1;
            free_sum += yg;
        }
    }
    if free_count > 0 {
        free_sum / free_count as f64
    } else {
        (upper + lower) / 2.0
    }
}
