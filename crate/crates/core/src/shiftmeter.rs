//! OOD score: how well a linear discriminator separates training inputs from
//! evaluation inputs. 0.5 means indistinguishable, 1 means perfectly separable.

use crate::error::{Error, Result};
use crate::numcore::{pairwise_sum, Matrix, Rng};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OodConfig {
    pub seed: u64,
    /// Fraction of each (balanced) side held out for scoring.
    pub holdout_frac: f64,
    /// Full-batch gradient steps for the logistic regression.
    pub steps: usize,
    pub lr: f64,
}

impl Default for OodConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            holdout_frac: 0.2,
            steps: 30,
            lr: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OodScoreReport {
    /// Mean predicted probability of "evaluation" over held-out evaluation inputs.
    pub score: f64,
    /// Held-out accuracy over both sides.
    pub discriminator_accuracy: f64,
    pub n_train_used: usize,
    pub n_eval_used: usize,
}

pub const MIN_SAMPLES_PER_SIDE: usize = 10;

/// Fits a logistic-regression discriminator (train = 0, eval = 1) on balanced,
/// standardized inputs and scores the held-out evaluation inputs.
pub fn ood_score(train_inputs: &Matrix, eval_inputs: &Matrix, cfg: &OodConfig) -> Result<OodScoreReport> {
    for (side, m) in [("train", train_inputs), ("eval", eval_inputs)] {
        if m.rows() < MIN_SAMPLES_PER_SIDE {
            return Err(Error::InsufficientData {
                side,
                have: m.rows(),
                need: MIN_SAMPLES_PER_SIDE,
            });
        }
    }
    if train_inputs.cols() != eval_inputs.cols() {
        return Err(Error::arg("train and eval inputs differ in width"));
    }
    if !(cfg.holdout_frac > 0.0 && cfg.holdout_frac < 1.0) {
        return Err(Error::arg("holdout fraction must lie in (0, 1)"));
    }
    let d = train_inputs.cols();
    let n = train_inputs.rows().min(eval_inputs.rows());
    let n_hold = ((n as f64 * cfg.holdout_frac).round() as usize).clamp(1, n - 1);
    let mut rng = Rng::new(cfg.seed);
    let train_idx: Vec<usize> = rng.permutation(train_inputs.rows()).into_iter().take(n).collect();
    let eval_idx: Vec<usize> = rng.permutation(eval_inputs.rows()).into_iter().take(n).collect();

    let (t_hold, t_fit) = train_idx.split_at(n_hold);
    let (e_hold, e_fit) = eval_idx.split_at(n_hold);

    let mut fit_rows: Vec<&[f64]> = t_fit.iter().map(|&i| train_inputs.row(i)).collect();
    fit_rows.extend(e_fit.iter().map(|&i| eval_inputs.row(i)));
    let fit_labels: Vec<f64> = std::iter::repeat(0.0)
        .take(t_fit.len())
        .chain(std::iter::repeat(1.0).take(e_fit.len()))
        .collect();

    let (mean, scale) = standardizer(&fit_rows, d);
    let standardize = |row: &[f64]| -> Vec<f64> {
        row.iter()
            .zip(&mean)
            .zip(&scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    };
    let x_fit: Vec<Vec<f64>> = fit_rows.iter().map(|r| standardize(r)).collect();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let m = x_fit.len() as f64;
    for _ in 0..cfg.steps {
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for (x, y) in x_fit.iter().zip(&fit_labels) {
            let r = sigmoid(dot(&w, x) + b) - y;
            gb += r;
            for (g, xi) in gw.iter_mut().zip(x) {
                *g += r * xi;
            }
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= cfg.lr * g / m;
        }
        b -= cfg.lr * gb / m;
    }

    let prob = |row: &[f64]| sigmoid(dot(&w, &standardize(row)) + b);
    let eval_probs: Vec<f64> = e_hold.iter().map(|&i| prob(eval_inputs.row(i))).collect();
    let train_probs: Vec<f64> = t_hold.iter().map(|&i| prob(train_inputs.row(i))).collect();
    let correct = eval_probs.iter().filter(|&&p| p >= 0.5).count() + train_probs.iter().filter(|&&p| p < 0.5).count();
    let score = (pairwise_sum(&eval_probs) / eval_probs.len() as f64).clamp(0.0, 1.0);
    Ok(OodScoreReport {
        score,
        discriminator_accuracy: correct as f64 / (2 * n_hold) as f64,
        n_train_used: n,
        n_eval_used: n,
    })
}

fn standardizer(rows: &[&[f64]], d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r.iter()) {
            *m += x / n;
        }
    }
    let mut var = vec![0.0; d];
    for r in rows {
        for ((v, x), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
            *v += (x - m) * (x - m) / n;
        }
    }
    let pooled = (var.iter().sum::<f64>() / d as f64).sqrt();
    let s = if pooled > 1e-16 { pooled } else { 1.0 };
    (mean, vec![s; d])
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
