//! Selective classification with an abstain action.
//!
//! Action indices are `0..K` for the classes and `K` for abstain. Every argmax
//! breaks ties toward the lowest index, so abstain loses ties.

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::netcore::Mlp;
use crate::numcore::{logsumexp, pairwise_sum, softmax, Matrix};

pub use crate::objectives::RewardSpec;

/// Reward of one action against the true class.
pub fn env_reward(spec: &RewardSpec, action: usize, true_class: usize) -> Result<f64> {
    spec.reward(action, true_class)
}

/// Maps an input to an action index.
pub trait Policy {
    fn num_classes(&self) -> usize;

    fn act(&self, x: &[f64]) -> Result<usize>;

    fn act_batch(&self, inputs: &Matrix) -> Result<Vec<usize>> {
        inputs.row_iter().map(|x| self.act(x)).collect()
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Picks the action with the highest predicted reward.
#[derive(Clone, Debug)]
pub struct RewardPolicy {
    model: Mlp,
    num_classes: usize,
}

pub fn reward_policy(reward_model: &Mlp, spec: &RewardSpec) -> Result<RewardPolicy> {
    if reward_model.output_dim() != spec.num_actions() {
        return Err(Error::arg(format!(
            "reward model outputs {} values, the task has {} actions",
            reward_model.output_dim(),
            spec.num_actions()
        )));
    }
    Ok(RewardPolicy {
        model: reward_model.clone(),
        num_classes: spec.num_classes,
    })
}

impl RewardPolicy {
    /// The decision rule on an explicit reward vector.
    pub fn choose(predicted_rewards: &[f64]) -> usize {
        argmax(predicted_rewards)
    }
}

impl Policy for RewardPolicy {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn act(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.model.forward(x)?))
    }

    fn act_batch(&self, inputs: &Matrix) -> Result<Vec<usize>> {
        Ok(self.model.predict(inputs)?.row_iter().map(argmax).collect())
    }
}

/// Always classifies: argmax over class logits.
#[derive(Clone, Debug)]
pub struct ClassifierPolicy {
    model: Mlp,
}

pub fn classifier_policy(classifier: &Mlp, spec: &RewardSpec) -> Result<ClassifierPolicy> {
    if classifier.output_dim() != spec.num_classes {
        return Err(Error::arg(format!(
            "classifier outputs {} logits for {} classes",
            classifier.output_dim(),
            spec.num_classes
        )));
    }
    Ok(ClassifierPolicy {
        model: classifier.clone(),
    })
}

impl Policy for ClassifierPolicy {
    fn num_classes(&self) -> usize {
        self.model.output_dim()
    }

    fn act(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.model.forward(x)?))
    }

    fn act_batch(&self, inputs: &Matrix) -> Result<Vec<usize>> {
        Ok(self.model.predict(inputs)?.row_iter().map(argmax).collect())
    }
}

/// Smallest confidence `p` at which classifying is worth as much as abstaining:
/// `p·r_correct + (1−p)·r_incorrect = r_abstain`.
pub fn oracle_threshold(spec: &RewardSpec) -> f64 {
    (spec.abstain - spec.incorrect) / (spec.correct - spec.incorrect)
}

/// Expected reward of classifying when the chosen class is right with probability `p`.
pub fn expected_classify_reward(spec: &RewardSpec, p: f64) -> f64 {
    spec.incorrect + p * (spec.correct - spec.incorrect)
}

pub const TEMPERATURE_BOUNDS: (f64, f64) = (0.05, 20.0);
pub const TEMPERATURE_TOL: f64 = 1e-4;

/// Mean cross entropy of `softmax(logits / T)`.
pub fn temperature_nll(logits: &Matrix, labels: &[usize], temperature: f64) -> Result<f64> {
    let per: Vec<f64> = logits
        .row_iter()
        .zip(labels)
        .map(|(z, &y)| {
            let scaled: Vec<f64> = z.iter().map(|v| v / temperature).collect();
            logsumexp(&scaled).map(|l| l - scaled[y])
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&per) / per.len() as f64)
}

/// Golden-section search for the temperature minimizing [`temperature_nll`].
pub fn fit_temperature(logits: &Matrix, labels: &[usize]) -> Result<f64> {
    if logits.rows() == 0 || logits.rows() != labels.len() {
        return Err(Error::arg("temperature fitting needs one label per logit row"));
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= logits.cols()) {
        return Err(Error::arg(format!("label {y} out of range")));
    }
    const MAX_ITER: usize = 200;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = TEMPERATURE_BOUNDS;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = temperature_nll(logits, labels, c)?;
    let mut fd = temperature_nll(logits, labels, d)?;
    for _ in 0..MAX_ITER {
        if b - a <= TEMPERATURE_TOL {
            return Ok((a + b) / 2.0);
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = temperature_nll(logits, labels, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = temperature_nll(logits, labels, d)?;
        }
    }
    Err(Error::IterationLimit {
        what: "temperature search",
        max_iter: MAX_ITER,
    })
}

/// Temperature-calibrated classifier that abstains below the reward-optimal confidence.
#[derive(Clone, Debug)]
pub struct OraclePolicy {
    model: Mlp,
    pub temperature: f64,
    pub threshold: f64,
}

/// Calibrates `classifier` on labelled `calibration_data` (the evaluation set itself).
pub fn oracle_policy(classifier: &Mlp, calibration_data: &Dataset, spec: &RewardSpec) -> Result<OraclePolicy> {
    classifier_policy(classifier, spec)?;
    let labels = calibration_data
        .labels()
        .ok_or_else(|| Error::arg("calibration data must be labelled with classes"))?;
    let logits = classifier.predict(calibration_data.inputs())?;
    Ok(OraclePolicy {
        model: classifier.clone(),
        temperature: fit_temperature(&logits, labels)?,
        threshold: oracle_threshold(spec),
    })
}

impl OraclePolicy {
    fn decide(&self, logits: &[f64]) -> usize {
        let scaled: Vec<f64> = logits.iter().map(|v| v / self.temperature).collect();
        let p = softmax(&scaled);
        let best = argmax(&p);
        if p[best] < self.threshold {
            logits.len()
        } else {
            best
        }
    }
}

impl Policy for OraclePolicy {
    fn num_classes(&self) -> usize {
        self.model.output_dim()
    }

    fn act(&self, x: &[f64]) -> Result<usize> {
        Ok(self.decide(&self.model.forward(x)?))
    }

    fn act_batch(&self, inputs: &Matrix) -> Result<Vec<usize>> {
        Ok(self.model.predict(inputs)?.row_iter().map(|z| self.decide(z)).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOutcome {
    /// Counts per action, abstain last.
    pub histogram: Vec<usize>,
    pub abstain_rate: f64,
    pub mean_reward: f64,
    /// Standard error of `mean_reward`.
    pub reward_std_err: f64,
    /// Accuracy over the samples where the policy did not abstain.
    pub accuracy_when_classifying: Option<f64>,
}

pub fn evaluate_policy(policy: &dyn Policy, data: &Dataset, spec: &RewardSpec) -> Result<PolicyOutcome> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::arg("policy evaluation needs class labels"))?;
    if policy.num_classes() != spec.num_classes {
        return Err(Error::arg("policy and reward spec disagree on the class count"));
    }
    let actions = policy.act_batch(data.inputs())?;
    let mut histogram = vec![0usize; spec.num_actions()];
    let mut rewards = Vec::with_capacity(actions.len());
    let mut correct = 0usize;
    for (&a, &y) in actions.iter().zip(labels) {
        rewards.push(env_reward(spec, a, y)?);
        histogram[a] += 1;
        if a == y {
            correct += 1;
        }
    }
    let n = actions.len() as f64;
    let abstained = histogram[spec.abstain_action()];
    let mean_reward = pairwise_sum(&rewards) / n;
    let var: Vec<f64> = rewards.iter().map(|r| (r - mean_reward) * (r - mean_reward)).collect();
    let reward_std_err = if rewards.len() > 1 {
        (pairwise_sum(&var) / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    let classified = actions.len() - abstained;
    Ok(PolicyOutcome {
        histogram,
        abstain_rate: abstained as f64 / n,
        mean_reward,
        reward_std_err,
        accuracy_when_classifying: (classified > 0).then(|| correct as f64 / classified as f64),
    })
}
