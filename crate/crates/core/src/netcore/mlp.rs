use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numcore::{Matrix, Rng};
use crate::objectives::{loss_grad, LossSpec, Target};

/// Which biases exist (are trainable). Frozen biases are exactly zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BiasMode {
    /// Every layer has a trainable bias.
    All,
    /// No biases: the network is positively homogeneous in its weights.
    None,
    /// Only the output layer carries a bias.
    FinalOnly,
}

impl BiasMode {
    fn trainable(self, layer: usize, num_layers: usize) -> bool {
        match self {
            BiasMode::All => true,
            BiasMode::None => false,
            BiasMode::FinalOnly => layer + 1 == num_layers,
        }
    }
}

impl fmt::Display for BiasMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BiasMode::All => "all",
            BiasMode::None => "none",
            BiasMode::FinalOnly => "final_only",
        })
    }
}

impl FromStr for BiasMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(BiasMode::All),
            "none" => Ok(BiasMode::None),
            "final_only" => Ok(BiasMode::FinalOnly),
            other => Err(Error::arg(format!("unknown bias mode {other:?}"))),
        }
    }
}

/// ReLU multilayer perceptron. Layer `i` maps `φᵢ` (with `φ₀ = x`) to
/// `Wᵢφᵢ + bᵢ`; hidden layers apply ReLU, the output layer does not.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
    bias_mode: BiasMode,
}

/// Per-layer record of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    /// `φᵢ`, the input to linear layer `i`; `representations[0]` is the network input.
    pub representations: Vec<Vec<f64>>,
    /// `Wᵢφᵢ + bᵢ` for every layer.
    pub pre_activations: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

impl ForwardTrace {
    /// `max(0, pre)` for a hidden layer, i.e. `φ_{i+1}`.
    pub fn post_activation(&self, layer: usize) -> &[f64] {
        &self.representations[layer + 1]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.flatten().iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Result of a batched backward pass.
#[derive(Clone, Debug)]
pub struct BatchBackward {
    /// Mean per-sample loss.
    pub loss: f64,
    /// Gradients of the mean loss.
    pub grads: Gradients,
    /// Gradient of each sample's own loss with respect to its input, when requested.
    pub input_grads: Option<Matrix>,
}

impl Mlp {
    pub fn from_parts(weights: Vec<Matrix>, biases: Vec<Vec<f64>>, bias_mode: BiasMode) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::arg("need one bias vector per weight matrix and at least one layer"));
        }
        let mut layer_sizes = vec![weights[0].cols()];
        for (i, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.cols() != *layer_sizes.last().unwrap() {
                return Err(Error::arg(format!(
                    "weight {i} has {} columns, expected {}",
                    w.cols(),
                    layer_sizes.last().unwrap()
                )));
            }
            if b.len() != w.rows() {
                return Err(Error::arg(format!("bias {i} has length {}, expected {}", b.len(), w.rows())));
            }
            if !w.is_finite() || b.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("layer {i} has non-finite parameters")));
            }
            if !bias_mode.trainable(i, weights.len()) && b.iter().any(|&v| v != 0.0) {
                return Err(Error::arg(format!("bias {i} must be zero in {bias_mode} mode")));
            }
            layer_sizes.push(w.rows());
        }
        Ok(Self {
            layer_sizes,
            weights,
            biases,
            bias_mode,
        })
    }

    /// Weights uniform in `±√(6/(fan_in+fan_out))`, biases zero.
    pub fn glorot(layer_sizes: &[usize], bias_mode: BiasMode, rng: &mut Rng) -> Result<Self> {
        Self::check_sizes(layer_sizes)?;
        let weights = layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Matrix::from_fn(fan_out, fan_in, |_, _| rng.uniform_in(-limit, limit))
            })
            .collect();
        let biases = layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Self::from_parts(weights, biases, bias_mode)
    }

    pub fn zeros(layer_sizes: &[usize], bias_mode: BiasMode) -> Result<Self> {
        Self::check_sizes(layer_sizes)?;
        let weights = layer_sizes.windows(2).map(|w| Matrix::zeros(w[1], w[0])).collect();
        let biases = layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Self::from_parts(weights, biases, bias_mode)
    }

    fn check_sizes(layer_sizes: &[usize]) -> Result<()> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::arg(format!("invalid layer sizes {layer_sizes:?}")));
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    /// Number of linear layers `L`.
    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn bias_mode(&self) -> BiasMode {
        self.bias_mode
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weight(&self, layer: usize) -> &Matrix {
        &self.weights[layer]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        &self.biases[layer]
    }

    /// Copy with every weight matrix multiplied by `alpha`; biases unchanged.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            weights: self.weights.iter().map(|w| w.scale(alpha)).collect(),
            ..self.clone()
        }
    }

    /// All parameters, layer by layer: weights row-major, then bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.iter().zip(&self.biases).map(|(w, b)| w.as_slice().len() + b.len()).sum()
    }

    /// Copy carrying `params` (as laid out by [`Mlp::parameters`]).
    pub fn with_parameters(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.num_parameters() {
            return Err(Error::arg("parameter vector has the wrong length"));
        }
        let mut weights = Vec::with_capacity(self.weights.len());
        let mut biases = Vec::with_capacity(self.biases.len());
        let mut at = 0;
        for w in &self.weights {
            let n = w.as_slice().len();
            weights.push(Matrix::new(w.rows(), w.cols(), params[at..at + n].to_vec())?);
            at += n;
            biases.push(params[at..at + w.rows()].to_vec());
            at += w.rows();
        }
        Self::from_parts(weights, biases, self.bias_mode)
    }

    pub(crate) fn apply_update(&mut self, grads: &Gradients, lr: f64) {
        let l = self.weights.len();
        for i in 0..l {
            let w = self.weights[i].as_mut_slice();
            for (p, g) in w.iter_mut().zip(grads.weights[i].as_slice()) {
                *p -= lr * g;
            }
            if self.bias_mode.trainable(i, l) {
                for (p, g) in self.biases[i].iter_mut().zip(&grads.biases[i]) {
                    *p -= lr * g;
                }
            }
        }
    }

    pub(crate) fn decay_weights(&mut self, factor: f64) {
        for w in &mut self.weights {
            for p in w.as_mut_slice() {
                *p *= factor;
            }
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::arg(format!(
                "input has length {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn layer(&self, i: usize, input: &[f64]) -> Vec<f64> {
        let mut z = self.weights[i].matvec(input);
        for (zj, bj) in z.iter_mut().zip(&self.biases[i]) {
            *zj += bj;
        }
        z
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        self.run_from(0, x.to_vec())
    }

    /// Runs layers `k..L` on the representation `φ_k`.
    pub fn forward_from(&self, layer: usize, representation: &[f64]) -> Result<Vec<f64>> {
        if layer >= self.num_layers() {
            return Err(Error::arg(format!(
                "layer {layer} out of range for a {}-layer network",
                self.num_layers()
            )));
        }
        if representation.len() != self.layer_sizes[layer] {
            return Err(Error::arg(format!(
                "representation for layer {layer} must have length {}",
                self.layer_sizes[layer]
            )));
        }
        self.run_from(layer, representation.to_vec())
    }

    fn run_from(&self, start: usize, mut h: Vec<f64>) -> Result<Vec<f64>> {
        let l = self.num_layers();
        for i in start..l {
            h = self.layer(i, &h);
            if i + 1 < l {
                relu_in_place(&mut h);
            }
        }
        Ok(h)
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        self.check_input(x)?;
        let l = self.num_layers();
        let mut representations = vec![x.to_vec()];
        let mut pre_activations = Vec::with_capacity(l);
        for i in 0..l {
            let z = self.layer(i, &representations[i]);
            if i + 1 < l {
                let mut a = z.clone();
                relu_in_place(&mut a);
                representations.push(a);
            }
            pre_activations.push(z);
        }
        let output = pre_activations[l - 1].clone();
        Ok(ForwardTrace {
            representations,
            pre_activations,
            output,
        })
    }

    /// Outputs for every row of `inputs`.
    pub fn predict(&self, inputs: &Matrix) -> Result<Matrix> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::arg(format!(
                "inputs have width {}, network expects {}",
                inputs.cols(),
                self.input_dim()
            )));
        }
        Ok(self.batch_forward(inputs).pop().unwrap())
    }

    /// `φᵢ` for every layer `i` and every row of `inputs` (`φ₀` is the input itself).
    pub fn layer_inputs(&self, inputs: &Matrix) -> Result<Vec<Matrix>> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::arg("inputs do not match the network width"));
        }
        let pre = self.batch_forward(inputs);
        let mut reps = vec![inputs.clone()];
        reps.extend(pre[..pre.len() - 1].iter().map(|z| z.map(|v| v.max(0.0))));
        Ok(reps)
    }

    /// Batched forward keeping every layer's pre-activation `Z_i` (rows = samples).
    fn batch_forward(&self, inputs: &Matrix) -> Vec<Matrix> {
        let l = self.num_layers();
        let mut pre = Vec::with_capacity(l);
        let mut a = inputs.clone();
        for i in 0..l {
            let mut z = a.matmul_bt(&self.weights[i]);
            for r in 0..z.rows() {
                for (zj, bj) in z.row_mut(r).iter_mut().zip(&self.biases[i]) {
                    *zj += bj;
                }
            }
            if i + 1 < l {
                a = z.map(|v| v.max(0.0));
            }
            pre.push(z);
        }
        pre
    }

    /// Backpropagation for an arbitrary per-sample loss.
    ///
    /// `per_sample(i, output)` returns the loss of sample `i` and its gradient with
    /// respect to the output. ReLU's derivative at 0 is taken to be 0.
    pub fn backward_with<F>(&self, inputs: &Matrix, want_input_grads: bool, mut per_sample: F) -> Result<BatchBackward>
    where
        F: FnMut(usize, &[f64]) -> Result<(f64, Vec<f64>)>,
    {
        let b = inputs.rows();
        if b == 0 {
            return Err(Error::arg("empty batch"));
        }
        if inputs.cols() != self.input_dim() {
            return Err(Error::arg("batch width does not match the network input"));
        }
        let l = self.num_layers();
        let pre = self.batch_forward(inputs);

        let out = &pre[l - 1];
        let mut g = Matrix::zeros(b, self.output_dim());
        let mut losses = Vec::with_capacity(b);
        for i in 0..b {
            let (loss, grad) = per_sample(i, out.row(i))?;
            if !loss.is_finite() || grad.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteLoss { sample: i });
            }
            losses.push(loss);
            g.row_mut(i).copy_from_slice(&grad);
        }

        let mut wgrads = vec![Matrix::zeros(0, 0); l];
        let mut bgrads = vec![Vec::new(); l];
        let mut input_grads = None;
        let scale = 1.0 / b as f64;
        for i in (0..l).rev() {
            let a_in = if i == 0 {
                inputs.clone()
            } else {
                pre[i - 1].map(|v| v.max(0.0))
            };
            wgrads[i] = g.matmul_at(&a_in).scale(scale);
            bgrads[i] = if self.bias_mode.trainable(i, l) {
                let mut s = vec![0.0; g.cols()];
                for row in g.row_iter() {
                    for (sj, gj) in s.iter_mut().zip(row) {
                        *sj += gj;
                    }
                }
                s.into_iter().map(|v| v * scale).collect()
            } else {
                vec![0.0; g.cols()]
            };
            if i > 0 {
                let mut da = g.matmul(&self.weights[i]);
                let zprev = &pre[i - 1];
                for (d, z) in da.as_mut_slice().iter_mut().zip(zprev.as_slice()) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
                g = da;
            } else if want_input_grads {
                input_grads = Some(g.matmul(&self.weights[0]));
            }
        }
        Ok(BatchBackward {
            loss: crate::numcore::pairwise_sum(&losses) * scale,
            grads: Gradients {
                weights: wgrads,
                biases: bgrads,
            },
            input_grads,
        })
    }
}

/// Gradients of the mean batch loss, and that mean loss.
pub fn backward(model: &Mlp, inputs: &Matrix, targets: &[Target], loss: &LossSpec) -> Result<(Gradients, f64)> {
    if targets.len() != inputs.rows() {
        return Err(Error::arg("one target per input row is required"));
    }
    if model.output_dim() != loss.output_width() {
        return Err(Error::arg(format!(
            "network output width {} does not match the {} loss",
            model.output_dim(),
            loss.short_name()
        )));
    }
    let bw = model.backward_with(inputs, false, |i, out| {
        loss_grad(loss, out, targets[i]).map_err(|e| match e {
            Error::Numeric(_) => Error::NonFiniteLoss { sample: i },
            other => other,
        })
    })?;
    Ok((bw.grads, bw.loss))
}

fn relu_in_place(v: &mut [f64]) {
    for x in v {
        *x = x.max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::RewardSpec;

    fn random_net(sizes: &[usize], seed: u64) -> Mlp {
        let mut rng = Rng::new(seed);
        let m = Mlp::glorot(sizes, BiasMode::All, &mut rng).unwrap();
        let biases: Vec<Vec<f64>> = m.biases().iter().map(|b| b.iter().map(|_| rng.normal() * 0.3).collect()).collect();
        Mlp::from_parts(m.weights().to_vec(), biases, BiasMode::All).unwrap()
    }

    #[test]
    fn zero_weights_propagate_biases() {
        let w = vec![Matrix::zeros(2, 3), Matrix::zeros(2, 2)];
        let b = vec![vec![1.0, -1.0], vec![0.5, 0.25]];
        let m = Mlp::from_parts(w, b, BiasMode::All).unwrap();
        assert_eq!(m.forward(&[3.0, 4.0, 5.0]).unwrap(), vec![0.5, 0.25]);
    }

    #[test]
    fn identity_layer() {
        let m = Mlp::from_parts(vec![Matrix::identity(3)], vec![vec![0.0; 3]], BiasMode::All).unwrap();
        assert_eq!(m.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn trace_replays_exactly() {
        let m = random_net(&[4, 6, 5, 3], 1);
        let mut rng = Rng::new(2);
        for _ in 0..20 {
            let x: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
            let t = m.forward_trace(&x).unwrap();
            assert_eq!(t.output, m.forward(&x).unwrap());
            for k in 0..m.num_layers() {
                assert_eq!(m.forward_from(k, &t.representations[k]).unwrap(), t.output);
            }
            for i in 0..m.num_layers() - 1 {
                let relu: Vec<f64> = t.pre_activations[i].iter().map(|v| v.max(0.0)).collect();
                assert_eq!(t.post_activation(i), relu.as_slice());
            }
            let batch = Matrix::new(1, 4, x.clone()).unwrap();
            assert_eq!(m.predict(&batch).unwrap().row(0), t.output.as_slice());
        }
    }

    #[test]
    fn dimension_errors() {
        let m = random_net(&[2, 3, 1], 0);
        assert!(matches!(m.forward(&[1.0]), Err(Error::Argument(_))));
        assert!(matches!(m.forward_from(2, &[1.0]), Err(Error::Argument(_))));
        assert!(Mlp::from_parts(vec![Matrix::zeros(2, 2)], vec![vec![1.0, 0.0]], BiasMode::None).is_err());
    }

    #[test]
    fn single_linear_layer_mse_gradient() {
        // With reward rows as targets the loss is ‖Wx+b−y‖², gradient 2(Wx+b−y)xᵀ.
        let spec = RewardSpec::standard(2);
        let loss = LossSpec::MseReward(spec);
        let w = Matrix::new(3, 2, vec![0.5, -1.0, 2.0, 0.25, -0.75, 1.5]).unwrap();
        let b = vec![0.1, -0.2, 0.3];
        let m = Mlp::from_parts(vec![w.clone()], vec![b.clone()], BiasMode::All).unwrap();
        let x = [0.8, -0.6];
        let y = spec.reward_row(1);
        let (g, _) = backward(&m, &Matrix::new(1, 2, x.to_vec()).unwrap(), &[Target::Class(1)], &loss).unwrap();
        let r: Vec<f64> = w.matvec(&x).iter().zip(&b).zip(&y).map(|((wx, bi), yi)| wx + bi - yi).collect();
        for i in 0..3 {
            for j in 0..2 {
                assert!((g.weights[0].get(i, j) - 2.0 * r[i] * x[j]).abs() < 1e-14);
            }
            assert!((g.biases[0][i] - 2.0 * r[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn stationary_at_interpolating_optimum() {
        let spec = RewardSpec::standard(2);
        let loss = LossSpec::MseReward(spec);
        let row = spec.reward_row(0);
        let m = Mlp::from_parts(vec![Matrix::zeros(3, 2)], vec![row], BiasMode::All).unwrap();
        let x = Matrix::new(2, 2, vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        let (g, l) = backward(&m, &x, &[Target::Class(0), Target::Class(0)], &loss).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.norm() < 1e-10);
    }

    #[test]
    fn non_finite_loss_reports_sample() {
        let m = Mlp::from_parts(vec![Matrix::new(2, 1, vec![0.0, -1.0]).unwrap()], vec![vec![0.0, 0.0]], BiasMode::All).unwrap();
        let x = Matrix::new(2, 1, vec![0.0, 1000.0]).unwrap();
        let err = backward(&m, &x, &[Target::Value(0.0), Target::Value(1.0)], &LossSpec::GaussianNll).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { sample: 1 }), "{err:?}");
    }

    #[test]
    fn frozen_biases_get_no_gradient() {
        let mut rng = Rng::new(4);
        let m = Mlp::glorot(&[3, 4, 1], BiasMode::FinalOnly, &mut rng).unwrap();
        let x = Matrix::from_fn(5, 3, |_, _| rng.normal());
        let bw = m.backward_with(&x, true, |_, o| Ok(((-o[0]).exp(), vec![-(-o[0]).exp()]))).unwrap();
        assert!(bw.grads.biases[0].iter().all(|&v| v == 0.0));
        assert!(bw.grads.biases[1][0] != 0.0);
        assert_eq!(bw.input_grads.unwrap().shape(), (5, 3));
    }

    #[test]
    fn parameters_round_trip() {
        let m = random_net(&[3, 4, 2], 8);
        assert_eq!(m.with_parameters(&m.parameters()).unwrap(), m);
    }
}
