//! Losses, their optimal constant solutions and distance-to-OCS metrics.
//!
//! Output conventions per loss:
//!
//! | loss            | width | meaning                                   |
//! |-----------------|-------|-------------------------------------------|
//! | cross entropy   | K     | class logits                              |
//! | MSE reward      | K + 1 | predicted reward per action, abstain last |
//! | Gaussian NLL    | 2     | `(μ, s)` with `σ = exp(s)`                |

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numcore::{logsumexp, pairwise_sum, softmax, Matrix};

/// Reward table of the selective-classification task; actions are the `K`
/// classes followed by abstain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardSpec {
    pub num_classes: usize,
    pub correct: f64,
    pub incorrect: f64,
    pub abstain: f64,
}

impl RewardSpec {
    pub fn new(num_classes: usize, correct: f64, incorrect: f64, abstain: f64) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::arg("reward task needs at least two classes"));
        }
        if !(correct > abstain && abstain > incorrect) {
            return Err(Error::arg(format!(
                "rewards must satisfy correct > abstain > incorrect, got ({correct}, {incorrect}, {abstain})"
            )));
        }
        Ok(Self {
            num_classes,
            correct,
            incorrect,
            abstain,
        })
    }

    /// +1 correct, −4 incorrect, 0 abstain.
    pub fn standard(num_classes: usize) -> Self {
        Self::new(num_classes, 1.0, -4.0, 0.0).expect("standard rewards are ordered")
    }

    pub fn num_actions(&self) -> usize {
        self.num_classes + 1
    }

    pub fn abstain_action(&self) -> usize {
        self.num_classes
    }

    /// Reward of action index `action` when the true class is `truth`.
    pub fn reward(&self, action: usize, truth: usize) -> Result<f64> {
        if truth >= self.num_classes {
            return Err(Error::arg(format!("true class {truth} out of range")));
        }
        match action {
            a if a == self.num_classes => Ok(self.abstain),
            a if a == truth => Ok(self.correct),
            a if a < self.num_classes => Ok(self.incorrect),
            a => Err(Error::arg(format!(
                "action {a} outside the {} available actions",
                self.num_actions()
            ))),
        }
    }

    /// The full per-action reward row for a sample of class `truth`.
    pub fn reward_row(&self, truth: usize) -> Vec<f64> {
        let mut row = vec![self.incorrect; self.num_actions()];
        row[truth] = self.correct;
        row[self.num_classes] = self.abstain;
        row
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LossSpec {
    CrossEntropy { num_classes: usize },
    MseReward(RewardSpec),
    GaussianNll,
}

impl LossSpec {
    pub fn cross_entropy(num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::arg("cross entropy needs at least two classes"));
        }
        Ok(LossSpec::CrossEntropy { num_classes })
    }

    pub fn output_width(&self) -> usize {
        match self {
            LossSpec::CrossEntropy { num_classes } => *num_classes,
            LossSpec::MseReward(r) => r.num_actions(),
            LossSpec::GaussianNll => 2,
        }
    }

    pub fn num_classes(&self) -> Option<usize> {
        match self {
            LossSpec::CrossEntropy { num_classes } => Some(*num_classes),
            LossSpec::MseReward(r) => Some(r.num_classes),
            LossSpec::GaussianNll => None,
        }
    }

    pub fn is_classification(&self) -> bool {
        self.num_classes().is_some()
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            LossSpec::CrossEntropy { .. } => "cross_entropy",
            LossSpec::MseReward(_) => "mse_reward",
            LossSpec::GaussianNll => "gaussian_nll",
        }
    }
}

/// Compact tag used in checkpoint metadata: `cross_entropy:10`,
/// `mse_reward:10:1:-4:0`, `gaussian_nll`.
impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossSpec::CrossEntropy { num_classes } => write!(f, "cross_entropy:{num_classes}"),
            LossSpec::MseReward(r) => write!(
                f,
                "mse_reward:{}:{}:{}:{}",
                r.num_classes, r.correct, r.incorrect, r.abstain
            ),
            LossSpec::GaussianNll => write!(f, "gaussian_nll"),
        }
    }
}

impl FromStr for LossSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::arg(format!("unrecognized loss tag {s:?}"));
        let num = |p: &str| p.parse::<f64>().map_err(|_| bad());
        match parts.as_slice() {
            ["cross_entropy", k] => LossSpec::cross_entropy(k.parse().map_err(|_| bad())?),
            ["mse_reward", k, c, i, a] => Ok(LossSpec::MseReward(RewardSpec::new(
                k.parse().map_err(|_| bad())?,
                num(c)?,
                num(i)?,
                num(a)?,
            )?)),
            ["gaussian_nll"] => Ok(LossSpec::GaussianNll),
            _ => Err(bad()),
        }
    }
}

/// Supervision for one sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    Class(usize),
    Value(f64),
}

/// The optimal constant output for a loss over a training set.
#[derive(Clone, Debug, PartialEq)]
pub enum Ocs {
    /// Empirical label marginal.
    CrossEntropy { marginal: Vec<f64> },
    /// Mean reward per action, abstain last.
    MseReward { rewards: Vec<f64> },
    /// Label mean and root-mean-square deviation.
    GaussianNll { mean: f64, std: f64 },
}

impl Ocs {
    /// The constant network output realizing this OCS. Cross-entropy classes
    /// with zero training mass map to `-inf` logits.
    pub fn output(&self) -> Vec<f64> {
        match self {
            Ocs::CrossEntropy { marginal } => marginal.iter().map(|p| p.ln()).collect(),
            Ocs::MseReward { rewards } => rewards.clone(),
            Ocs::GaussianNll { mean, std } => vec![*mean, std.ln()],
        }
    }
}

/// Training supervision from which an OCS is computed.
#[derive(Clone, Copy, Debug)]
pub enum TrainingTargets<'a> {
    /// Class labels. For the reward loss every sample supervises all actions.
    Labels(&'a [usize]),
    /// Real-valued regression labels.
    Values(&'a [f64]),
    /// `(action, reward)` tuples for the reward loss.
    ActionRewards(&'a [(usize, f64)]),
}

pub fn compute_ocs(loss: &LossSpec, targets: TrainingTargets<'_>) -> Result<Ocs> {
    match (loss, targets) {
        (LossSpec::CrossEntropy { num_classes }, TrainingTargets::Labels(labels)) => {
            let counts = class_counts(labels, *num_classes)?;
            let n = labels.len() as f64;
            Ok(Ocs::CrossEntropy {
                marginal: counts.iter().map(|&c| c as f64 / n).collect(),
            })
        }
        (LossSpec::MseReward(spec), TrainingTargets::Labels(labels)) => {
            let counts = class_counts(labels, spec.num_classes)?;
            let n = labels.len();
            let mut rewards: Vec<f64> = counts
                .iter()
                .map(|&c| (c as f64 * spec.correct + (n - c) as f64 * spec.incorrect) / n as f64)
                .collect();
            rewards.push(spec.abstain);
            Ok(Ocs::MseReward { rewards })
        }
        (LossSpec::MseReward(spec), TrainingTargets::ActionRewards(tuples)) => {
            if tuples.is_empty() {
                return Err(Error::arg("no training tuples"));
            }
            let mut sums = vec![0.0; spec.num_actions()];
            let mut counts = vec![0usize; spec.num_actions()];
            for &(a, r) in tuples {
                if a >= spec.num_actions() {
                    return Err(Error::arg(format!("action {a} out of range")));
                }
                sums[a] += r;
                counts[a] += 1;
            }
            if let Some(a) = counts.iter().position(|&c| c == 0) {
                return Err(Error::arg(format!("action {a} has no training tuples")));
            }
            Ok(Ocs::MseReward {
                rewards: sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect(),
            })
        }
        (LossSpec::GaussianNll, TrainingTargets::Values(values)) => {
            if values.is_empty() {
                return Err(Error::arg("no training labels"));
            }
            let n = values.len() as f64;
            let mean = pairwise_sum(values) / n;
            let sq: Vec<f64> = values.iter().map(|y| (y - mean) * (y - mean)).collect();
            let var = pairwise_sum(&sq) / n;
            if var <= 0.0 {
                return Err(Error::DegenerateVariance);
            }
            Ok(Ocs::GaussianNll {
                mean,
                std: var.sqrt(),
            })
        }
        (loss, _) => Err(Error::arg(format!(
            "training targets do not match the {} loss",
            loss.short_name()
        ))),
    }
}

fn class_counts(labels: &[usize], num_classes: usize) -> Result<Vec<usize>> {
    if labels.is_empty() {
        return Err(Error::arg("no training labels"));
    }
    let mut counts = vec![0usize; num_classes];
    for &y in labels {
        if y >= num_classes {
            return Err(Error::arg(format!("label {y} outside {num_classes} classes")));
        }
        counts[y] += 1;
    }
    Ok(counts)
}

/// Per-sample loss value.
pub fn loss_eval(loss: &LossSpec, output: &[f64], target: Target) -> Result<f64> {
    loss_and_grad(loss, output, target, false).map(|(l, _)| l)
}

/// Per-sample loss and its gradient with respect to the network output.
pub fn loss_grad(loss: &LossSpec, output: &[f64], target: Target) -> Result<(f64, Vec<f64>)> {
    loss_and_grad(loss, output, target, true)
}

fn loss_and_grad(
    loss: &LossSpec,
    output: &[f64],
    target: Target,
    want_grad: bool,
) -> Result<(f64, Vec<f64>)> {
    if output.len() != loss.output_width() {
        return Err(Error::arg(format!(
            "output width {} does not match the {} loss (width {})",
            output.len(),
            loss.short_name(),
            loss.output_width()
        )));
    }
    match (loss, target) {
        (LossSpec::CrossEntropy { num_classes }, Target::Class(y)) => {
            check_class(y, *num_classes)?;
            let lse = logsumexp(output)?;
            let value = lse - output[y];
            let grad = if want_grad {
                let mut g = softmax(output);
                g[y] -= 1.0;
                g
            } else {
                Vec::new()
            };
            Ok((value, grad))
        }
        (LossSpec::MseReward(spec), Target::Class(y)) => {
            check_class(y, spec.num_classes)?;
            let row = spec.reward_row(y);
            let value = output.iter().zip(&row).map(|(f, r)| (f - r) * (f - r)).sum();
            let grad = if want_grad {
                output.iter().zip(&row).map(|(f, r)| 2.0 * (f - r)).collect()
            } else {
                Vec::new()
            };
            Ok((value, grad))
        }
        (LossSpec::GaussianNll, Target::Value(y)) => {
            let (mu, s) = (output[0], output[1]);
            let sigma = s.exp();
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::Numeric(format!("decoded sigma {sigma} is not positive")));
            }
            let inv_var = (-2.0 * s).exp();
            let r = y - mu;
            let value = 2.0 * s + r * r * inv_var;
            let grad = if want_grad {
                vec![-2.0 * r * inv_var, 2.0 - 2.0 * r * r * inv_var]
            } else {
                Vec::new()
            };
            Ok((value, grad))
        }
        (loss, t) => Err(Error::arg(format!(
            "target {t:?} does not fit the {} loss",
            loss.short_name()
        ))),
    }
}

fn check_class(y: usize, k: usize) -> Result<()> {
    if y >= k {
        return Err(Error::arg(format!("label {y} outside {k} classes")));
    }
    Ok(())
}

/// `KL(N(μ₁, σ₁²) ‖ N(μ₂, σ₂²))`.
pub fn gaussian_kl(mu1: f64, sigma1: f64, mu2: f64, sigma2: f64) -> f64 {
    (sigma2 / sigma1).ln() + (sigma1 * sigma1 + (mu1 - mu2) * (mu1 - mu2)) / (2.0 * sigma2 * sigma2)
        - 0.5
}

/// `KL(softmax(logits) ‖ q)`. Fails when `q` has a zero entry that the
/// prediction gives positive mass.
pub fn categorical_kl_from_logits(logits: &[f64], q: &[f64], sample: usize) -> Result<f64> {
    let lse = logsumexp(logits)?;
    let mut terms = Vec::with_capacity(q.len());
    for (c, (&z, &qc)) in logits.iter().zip(q).enumerate() {
        let log_p = z - lse;
        let p = log_p.exp();
        if p == 0.0 {
            continue;
        }
        if qc <= 0.0 {
            return Err(Error::InfiniteKl { sample, class: c });
        }
        terms.push(p * (log_p - qc.ln()));
    }
    Ok(pairwise_sum(&terms).max(0.0))
}

/// Per-sample distance between model outputs and the OCS: KL for the
/// probabilistic losses, squared error for the reward loss.
pub fn distances_to_ocs(predictions: &Matrix, ocs: &Ocs, loss: &LossSpec) -> Result<Vec<f64>> {
    if predictions.rows() == 0 {
        return Err(Error::arg("no predictions"));
    }
    if predictions.cols() != loss.output_width() {
        return Err(Error::arg("prediction width does not match the loss"));
    }
    predictions
        .row_iter()
        .enumerate()
        .map(|(i, out)| match (loss, ocs) {
            (LossSpec::CrossEntropy { num_classes }, Ocs::CrossEntropy { marginal })
                if marginal.len() == *num_classes =>
            {
                categorical_kl_from_logits(out, marginal, i)
            }
            (LossSpec::MseReward(spec), Ocs::MseReward { rewards })
                if rewards.len() == spec.num_actions() =>
            {
                Ok(out.iter().zip(rewards).map(|(f, r)| (f - r) * (f - r)).sum())
            }
            (LossSpec::GaussianNll, Ocs::GaussianNll { mean, std }) => {
                let sigma = out[1].exp();
                if !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::Numeric(format!("sample {i}: sigma {sigma} is not positive")));
                }
                Ok(gaussian_kl(out[0], sigma, *mean, *std).max(0.0))
            }
            _ => Err(Error::arg("OCS kind does not match the loss")),
        })
        .collect()
}

/// Mean of [`distances_to_ocs`].
pub fn distance_to_ocs(predictions: &Matrix, ocs: &Ocs, loss: &LossSpec) -> Result<f64> {
    let d = distances_to_ocs(predictions, ocs, loss)?;
    Ok(pairwise_sum(&d) / d.len() as f64)
}
