//! Gradient descent on deep homogeneous ReLU networks under the exponential loss,
//! with the margin, rank and feature-norm diagnostics used to check the theory.

use crate::error::{Error, Result};
use crate::netcore::{BiasMode, Mlp};
use crate::numcore::{jacobi_svd, mean, pairwise_sum, pearson, Matrix, Rng};

/// Binary data with labels in {−1, +1} and inputs inside the unit ball.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryData {
    inputs: Matrix,
    labels: Vec<f64>,
}

impl BinaryData {
    pub fn new(inputs: Matrix, labels: Vec<f64>) -> Result<Self> {
        if inputs.rows() == 0 || inputs.rows() != labels.len() {
            return Err(Error::arg("binary data needs one label per input row"));
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::arg("labels must be -1 or +1"));
        }
        for (i, x) in inputs.row_iter().enumerate() {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1.0 + 1e-12 {
                return Err(Error::arg(format!("input {i} has norm {norm} > 1")));
            }
        }
        Ok(Self { inputs, labels })
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowConfig {
    /// Number of weight layers `L`.
    pub depth: usize,
    pub width: usize,
    pub lr: f64,
    pub steps: usize,
    pub seed: u64,
    /// Adds a trainable scalar bias to the output layer.
    pub final_bias: bool,
    /// Multiplies the Glorot initialization.
    pub init_scale: f64,
    /// Upper bound on recorded checkpoints (log spaced, always including 0 and `steps`).
    pub checkpoints: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            depth: 3,
            width: 32,
            lr: 1e-2,
            steps: 5000,
            seed: 0,
            final_bias: false,
            init_scale: 1.0,
            checkpoints: 40,
        }
    }
}

pub const MAX_FLOW_LR: f64 = 1e-2;
pub const DEFAULT_MARGIN_TOL: f64 = 0.01;

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 2 {
            return Err(Error::arg("depth must be at least 2"));
        }
        if self.width == 0 {
            return Err(Error::arg("width must be positive"));
        }
        if !(self.lr > 0.0 && self.lr <= MAX_FLOW_LR) {
            return Err(Error::arg(format!("learning rate must lie in (0, {MAX_FLOW_LR}]")));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(Error::arg("init scale must be positive"));
        }
        Ok(())
    }

    pub fn bias_mode(&self) -> BiasMode {
        if self.final_bias {
            BiasMode::FinalOnly
        } else {
            BiasMode::None
        }
    }
}

/// Bias-free ReLU network `d → m → … → m → 1` with `cfg.depth` weight layers.
pub fn make_homogeneous_net(cfg: &FlowConfig, input_dim: usize) -> Result<Mlp> {
    cfg.validate()?;
    if input_dim == 0 {
        return Err(Error::arg("input dimension must be positive"));
    }
    let mut sizes = vec![input_dim];
    sizes.extend(std::iter::repeat_n(cfg.width, cfg.depth - 1));
    sizes.push(1);
    let net = Mlp::glorot(&sizes, cfg.bias_mode(), &mut Rng::new(cfg.seed))?;
    Ok(if cfg.init_scale == 1.0 { net } else { net.scaled(cfg.init_scale) })
}

/// Scalar outputs for every input row.
pub fn outputs(net: &Mlp, inputs: &Matrix) -> Result<Vec<f64>> {
    if net.output_dim() != 1 {
        return Err(Error::arg("flow networks have a single output"));
    }
    Ok(net.predict(inputs)?.into_vec())
}

/// `yᵢ·f(xᵢ)` for every sample.
pub fn margins(net: &Mlp, data: &BinaryData) -> Result<Vec<f64>> {
    Ok(outputs(net, data.inputs())?
        .into_iter()
        .zip(data.labels())
        .map(|(f, y)| y * f)
        .collect())
}

/// Mean of `exp(−yᵢ f(xᵢ))`.
pub fn exp_loss(net: &Mlp, data: &BinaryData) -> Result<f64> {
    let terms: Vec<f64> = margins(net, data)?.into_iter().map(|q| (-q).exp()).collect();
    Ok(pairwise_sum(&terms) / terms.len() as f64)
}

/// Indices whose margin is within `tol_rel` of the minimum margin.
pub fn margin_points(net: &Mlp, data: &BinaryData, tol_rel: f64) -> Result<Vec<usize>> {
    margin_points_of(&margins(net, data)?, tol_rel)
}

/// [`margin_points`] on precomputed margins.
pub fn margin_points_of(margins: &[f64], tol_rel: f64) -> Result<Vec<usize>> {
    if !(tol_rel >= 0.0) {
        return Err(Error::arg("tolerance must be non-negative"));
    }
    let (mut idx, mut min) = (0, f64::INFINITY);
    for (i, &q) in margins.iter().enumerate() {
        if q < min {
            (idx, min) = (i, q);
        }
    }
    if margins.is_empty() || !(min > 0.0) {
        return Err(Error::NotFitted { index: idx, margin: min });
    }
    let cut = (1.0 + tol_rel) * min;
    Ok((0..margins.len()).filter(|&i| margins[i] <= cut).collect())
}

/// `‖W‖_F² / ‖W‖_op²`.
pub fn stable_rank(w: &Matrix) -> Result<f64> {
    let op = operator_norm(w)?;
    if op == 0.0 {
        return Err(Error::Numeric("stable rank of a zero matrix".into()));
    }
    Ok(w.frobenius_norm_sq() / (op * op))
}

pub fn operator_norm(w: &Matrix) -> Result<f64> {
    Ok(jacobi_svd(w)?.sigmas[0])
}

/// Top singular value, its right singular vector, and `‖W(I − vvᵀ)‖_F / σ₁`.
pub fn rank_one_residual(w: &Matrix) -> Result<(f64, Vec<f64>, f64)> {
    let svd = jacobi_svd(w)?;
    let s1 = svd.sigmas[0];
    if s1 == 0.0 {
        return Err(Error::Numeric("rank-one residual of a zero matrix".into()));
    }
    let rest = pairwise_sum(&svd.sigmas[1..].iter().map(|s| s * s).collect::<Vec<_>>());
    Ok((s1, svd.v.column(0), rest.sqrt() / s1))
}

/// Per layer `j`: `Πₖ≥ⱼ ‖Wₖ‖_op · E‖φⱼ‖ − E|f − b|`, divided by the bound
/// (0 when the bound is 0). `φⱼ` is the input to layer `j` and `b` the output bias.
pub fn chain_slack(net: &Mlp, inputs: &Matrix) -> Result<Vec<f64>> {
    let l = net.num_layers();
    let ops: Vec<f64> = net.weights().iter().map(operator_norm).collect::<Result<_>>()?;
    let bias = net.bias(l - 1)[0];
    let lhs = mean(&outputs(net, inputs)?.iter().map(|f| (f - bias).abs()).collect::<Vec<_>>());
    let phis = net.layer_inputs(inputs)?;
    (0..l)
        .map(|j| {
            let norms: Vec<f64> = phis[j]
                .row_iter()
                .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect();
            let bound = ops[j..].iter().product::<f64>() * mean(&norms);
            Ok(if bound == 0.0 { 0.0 } else { (bound - lhs) / bound })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowCheckpoint {
    pub step: usize,
    pub loss: f64,
    pub min_margin: f64,
    /// Minimum margin over the product of operator norms.
    pub normalized_margin: f64,
    pub stable_ranks: Vec<f64>,
    /// Empty while some training margin is non-positive.
    pub margin_points: Vec<usize>,
    /// Output bias, present for networks with a final bias.
    pub bias: Option<f64>,
    pub chain_slack: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowReport {
    pub checkpoints: Vec<FlowCheckpoint>,
}

impl FlowReport {
    pub fn last(&self) -> &FlowCheckpoint {
        self.checkpoints.last().expect("a flow report always has checkpoints")
    }
}

/// `0`, `steps`, and up to `count − 2` log-spaced steps in between.
pub fn log_checkpoints(steps: usize, count: usize) -> Vec<usize> {
    let mut out = vec![0];
    if steps == 0 {
        return out;
    }
    let count = count.max(2);
    let top = (steps as f64).ln();
    for i in 0..count - 1 {
        let s = (top * i as f64 / (count - 2).max(1) as f64).exp().round() as usize;
        out.push(s.clamp(1, steps));
    }
    out.push(steps);
    out.dedup();
    out
}

fn checkpoint(net: &Mlp, data: &BinaryData, step: usize) -> Result<FlowCheckpoint> {
    let q = margins(net, data)?;
    let terms: Vec<f64> = q.iter().map(|m| (-m).exp()).collect();
    let min_margin = q.iter().copied().fold(f64::INFINITY, f64::min);
    let ops: Vec<f64> = net.weights().iter().map(operator_norm).collect::<Result<_>>()?;
    let prod: f64 = ops.iter().product();
    let stable_ranks = net
        .weights()
        .iter()
        .zip(&ops)
        .map(|(w, &op)| if op > 0.0 { w.frobenius_norm_sq() / (op * op) } else { f64::NAN })
        .collect();
    Ok(FlowCheckpoint {
        step,
        loss: pairwise_sum(&terms) / terms.len() as f64,
        min_margin,
        normalized_margin: if prod > 0.0 { min_margin / prod } else { 0.0 },
        stable_ranks,
        margin_points: margin_points_of(&q, DEFAULT_MARGIN_TOL).unwrap_or_default(),
        bias: (net.bias_mode() == BiasMode::FinalOnly).then(|| net.bias(net.num_layers() - 1)[0]),
        chain_slack: chain_slack(net, data.inputs())?,
    })
}

/// Full-batch gradient descent on the mean exponential loss.
pub fn gradient_flow(net: &Mlp, data: &BinaryData, cfg: &FlowConfig) -> Result<(Mlp, FlowReport)> {
    cfg.validate()?;
    if net.output_dim() != 1 || net.input_dim() != data.dim() {
        return Err(Error::arg("network shape does not fit the binary data"));
    }
    let labels = data.labels();
    let marks = log_checkpoints(cfg.steps, cfg.checkpoints);
    let mut next = 0;
    let mut net = net.clone();
    let mut checkpoints = Vec::with_capacity(marks.len());
    for step in 0..=cfg.steps {
        if next < marks.len() && marks[next] == step {
            checkpoints.push(checkpoint(&net, data, step)?);
            next += 1;
        }
        if step == cfg.steps {
            break;
        }
        let out = net.backward_with(data.inputs(), false, |i, f| {
            let e = (-labels[i] * f[0]).exp();
            Ok((e, vec![-labels[i] * e]))
        });
        let out = match out {
            Ok(o) => o,
            Err(Error::NonFiniteLoss { .. }) => return Err(Error::Divergence { step, loss: f64::INFINITY }),
            Err(e) => return Err(e),
        };
        if !(out.loss <= 1e10) {
            return Err(Error::Divergence { step, loss: out.loss });
        }
        net.apply_update(&out.grads, cfg.lr);
    }
    Ok((net, FlowReport { checkpoints }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasCheck {
    pub bias: f64,
    /// Sign of the bias update `−∂L/∂b`.
    pub update_direction: f64,
    pub margin_points: Vec<usize>,
    pub margin_label_sum: f64,
    /// `sign(b) == sign(Σ y over margin points)`.
    pub agrees: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoryReport {
    pub chain_slack_train: Vec<f64>,
    pub chain_slack_ood: Vec<f64>,
    pub stable_ranks: Vec<f64>,
    pub off_rank_one: Vec<f64>,
    /// Mean `‖(I − vⱼvⱼᵀ)φⱼ‖` on the OOD inputs, per layer.
    pub ood_off_subspace_mass: Vec<f64>,
    /// Pearson correlation between that mass and `|f(x)|` on OOD inputs.
    pub ood_mass_output_correlation: Vec<Option<f64>>,
    pub bias_check: Option<BiasCheck>,
}

pub fn theory_report(net: &Mlp, train: &BinaryData, ood: &Matrix) -> Result<TheoryReport> {
    if ood.rows() == 0 {
        return Err(Error::arg("OOD inputs must be nonempty"));
    }
    if ood.cols() != net.input_dim() || train.dim() != net.input_dim() {
        return Err(Error::arg("data width does not match the network input"));
    }
    let l = net.num_layers();
    let mut stable_ranks = Vec::with_capacity(l);
    let mut off_rank_one = Vec::with_capacity(l);
    let mut mass = Vec::with_capacity(l);
    let mut corr = Vec::with_capacity(l);
    let abs_out: Vec<f64> = outputs(net, ood)?.iter().map(|f| f.abs()).collect();
    let phis = net.layer_inputs(ood)?;
    for (j, w) in net.weights().iter().enumerate() {
        let (s1, v, resid) = rank_one_residual(w)?;
        stable_ranks.push(w.frobenius_norm_sq() / (s1 * s1));
        off_rank_one.push(resid);
        let per: Vec<f64> = phis[j]
            .row_iter()
            .map(|p| {
                let c: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
                let sq: f64 = p.iter().map(|a| a * a).sum::<f64>() - c * c;
                sq.max(0.0).sqrt()
            })
            .collect();
        mass.push(mean(&per));
        corr.push(pearson(&per, &abs_out));
    }
    let bias_check = if net.bias_mode() == BiasMode::FinalOnly {
        let q = margins(net, train)?;
        let points = margin_points_of(&q, DEFAULT_MARGIN_TOL)?;
        let label_sum: f64 = points.iter().map(|&i| train.labels()[i]).sum();
        let update: Vec<f64> = q.iter().zip(train.labels()).map(|(m, y)| y * (-m).exp()).collect();
        let bias = net.bias(l - 1)[0];
        Some(BiasCheck {
            bias,
            update_direction: pairwise_sum(&update).signum(),
            margin_points: points,
            margin_label_sum: label_sum,
            agrees: bias != 0.0 && label_sum != 0.0 && bias.signum() == label_sum.signum(),
        })
    } else {
        None
    };
    Ok(TheoryReport {
        chain_slack_train: chain_slack(net, train.inputs())?,
        chain_slack_ood: chain_slack(net, ood)?,
        stable_ranks,
        off_rank_one,
        ood_off_subspace_mass: mass,
        ood_mass_output_correlation: corr,
        bias_check,
    })
}

fn point_in_ball(rng: &mut Rng, d: usize, radius: f64) -> Vec<f64> {
    let g: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
    let n = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let r = radius * rng.uniform().powf(1.0 / d as f64);
    g.into_iter().map(|v| v * r / n).collect()
}

/// Points in the unit ball labelled by a random hyperplane through the origin,
/// keeping only those with `|⟨w, x⟩| ≥ gap`.
pub fn separable_data(n: usize, d: usize, gap: f64, seed: u64) -> Result<BinaryData> {
    if n == 0 || d == 0 || !(0.0..1.0).contains(&gap) {
        return Err(Error::arg("separable data needs n, d > 0 and gap in [0, 1)"));
    }
    let mut rng = Rng::new(seed);
    let w = point_in_ball(&mut rng, d, 1.0);
    let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let w: Vec<f64> = w.iter().map(|v| v / wn).collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut tries = 0usize;
    while rows.len() < n {
        tries += 1;
        if tries > 1000 * n {
            return Err(Error::IterationLimit { what: "separable sampling", max_iter: 1000 * n });
        }
        let x = point_in_ball(&mut rng, d, 1.0);
        let s: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
        if s.abs() >= gap {
            labels.push(s.signum());
            rows.push(x);
        }
    }
    BinaryData::new(Matrix::from_rows(&rows)?, labels)
}

/// Positives clustered near `0.1·e₁`, negatives near the unit sphere away from
/// `e₁`. A homogeneous network is small on the positives, so the output bias
/// has to carry them and they become the margin points.
pub fn bias_toy_data(per_class: usize, d: usize, seed: u64) -> Result<BinaryData> {
    if per_class == 0 || d < 2 {
        return Err(Error::arg("bias toy data needs per_class > 0 and d >= 2"));
    }
    let mut rng = Rng::new(seed);
    let mut rows = Vec::with_capacity(2 * per_class);
    let mut labels = Vec::with_capacity(2 * per_class);
    for _ in 0..per_class {
        let mut x = point_in_ball(&mut rng, d, 0.02);
        x[0] += 0.1;
        rows.push(x);
        labels.push(1.0);
    }
    for _ in 0..per_class {
        let mut x: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        x[0] = -x[0].abs() - 0.5;
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r = rng.uniform_in(0.8, 1.0);
        rows.push(x.into_iter().map(|v| v * r / n).collect());
        labels.push(-1.0);
    }
    BinaryData::new(Matrix::from_rows(&rows)?, labels)
}
