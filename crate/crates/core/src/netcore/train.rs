use super::mlp::{backward, Mlp};
use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::numcore::Rng;
use crate::objectives::{LossSpec, Target};

/// Plain minibatch SGD at a fixed learning rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
    /// L2 penalty on weight matrices (biases are not decayed), applied as
    /// `W <- (1 - lr * weight_decay) W` after each step.
    pub weight_decay: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Mlp,
    /// `(step, mean minibatch loss before the update)`, one entry per step.
    pub history: Vec<(usize, f64)>,
}

const DIVERGENCE_LOSS: f64 = 1e10;

/// Trains a copy of `model`. Batches are drawn by walking a fresh seeded
/// permutation of the dataset each epoch.
pub fn train(model: &Mlp, data: &Dataset, loss: &LossSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if !(cfg.lr >= 0.0) {
        return Err(Error::arg("learning rate must be non-negative"));
    }
    if !(cfg.weight_decay >= 0.0) || cfg.lr * cfg.weight_decay >= 1.0 {
        return Err(Error::arg("weight decay must be non-negative with lr * weight_decay < 1"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::arg("batch size must be positive"));
    }
    if data.dim() != model.input_dim() {
        return Err(Error::arg("dataset width does not match the network input"));
    }
    let n = data.len();
    let batch = cfg.batch_size.min(n);
    let targets: Vec<Target> = data.target_list();
    let mut rng = Rng::new(cfg.seed);
    let mut order = rng.permutation(n);
    let mut cursor = 0;
    let mut model = model.clone();
    let mut history = Vec::with_capacity(cfg.steps);

    for step in 0..cfg.steps {
        if cursor + batch > n {
            order = rng.permutation(n);
            cursor = 0;
        }
        let idx = &order[cursor..cursor + batch];
        cursor += batch;
        let x = data.inputs().select_rows(idx);
        let t: Vec<Target> = idx.iter().map(|&i| targets[i]).collect();
        let (grads, value) = match backward(&model, &x, &t, loss) {
            Ok(r) => r,
            Err(Error::NonFiniteLoss { .. }) => {
                return Err(Error::Divergence { step, loss: f64::NAN });
            }
            Err(e) => return Err(e),
        };
        if !value.is_finite() || value > DIVERGENCE_LOSS {
            return Err(Error::Divergence { step, loss: value });
        }
        history.push((step, value));
        if cfg.lr > 0.0 {
            model.apply_update(&grads, cfg.lr);
            if cfg.weight_decay > 0.0 {
                model.decay_weights(1.0 - cfg.lr * cfg.weight_decay);
            }
        }
    }
    Ok(TrainOutcome { model, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::make_blobs;
    use crate::netcore::BiasMode;

    fn setup() -> (Mlp, Dataset, LossSpec) {
        let data = make_blobs(2, 2, 100, 3.0, 5).unwrap();
        let model = Mlp::glorot(&[2, 8, 2], BiasMode::All, &mut Rng::new(1)).unwrap();
        (model, data, LossSpec::cross_entropy(2).unwrap())
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let (model, data, loss) = setup();
        let cfg = TrainConfig { lr: 0.0, batch_size: 16, steps: 25, seed: 3, weight_decay: 0.0 };
        let out = train(&model, &data, &loss, &cfg).unwrap();
        assert_eq!(out.model, model);
        assert_eq!(out.history.len(), 25);
    }

    #[test]
    fn weight_decay_shrinks_weights_only() {
        let (model, data, loss) = setup();
        let plain = TrainConfig { lr: 0.0, batch_size: 16, steps: 10, seed: 3, weight_decay: 0.0 };
        let decayed = TrainConfig { weight_decay: 0.5, lr: 0.1, ..plain };
        let zero_grad = TrainConfig { lr: 0.1, ..plain };
        let a = train(&model, &data, &loss, &zero_grad).unwrap().model;
        let b = train(&model, &data, &loss, &decayed).unwrap().model;
        let norm = |m: &Mlp| m.weights().iter().map(|w| w.as_slice().iter().map(|v| v * v).sum::<f64>()).sum::<f64>();
        assert!(norm(&b) < norm(&a));
        assert!(train(&model, &data, &loss, &TrainConfig { weight_decay: -1.0, ..plain }).is_err());
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let (model, data, loss) = setup();
        let cfg = TrainConfig { lr: 0.1, batch_size: 16, steps: 200, seed: 3, weight_decay: 0.0 };
        let a = train(&model, &data, &loss, &cfg).unwrap().model.parameters();
        let b = train(&model, &data, &loss, &cfg).unwrap().model.parameters();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn divergence_is_reported_with_step() {
        let (_, data, _) = setup();
        let data = data.with_targets(crate::datagen::Targets::Values(
            (0..data.len()).map(|i| (i % 7) as f64 * 1e3).collect(),
        ))
        .unwrap();
        let model = Mlp::glorot(&[2, 8, 2], BiasMode::All, &mut Rng::new(1)).unwrap();
        let cfg = TrainConfig { lr: 10.0, batch_size: 8, steps: 500, seed: 0, weight_decay: 0.0 };
        let err = train(&model, &data, &LossSpec::GaussianNll, &cfg).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err:?}");
    }

    #[test]
    fn rejects_negative_rate() {
        let (model, data, loss) = setup();
        let cfg = TrainConfig { lr: -1.0, batch_size: 8, steps: 1, seed: 0, weight_decay: 0.0 };
        assert!(train(&model, &data, &loss, &cfg).is_err());
    }
}
