use super::report::{fmt_f64, fmt_opt, Fields, ReportRow};
use crate::error::{Error, Result};

/// One (seed, shift level, policy) evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub seed: u64,
    pub shift_kind: String,
    pub shift_level: f64,
    /// `model` for reversion sweeps; `classifier`, `reward` or `oracle` for decision sweeps.
    pub policy: String,
    pub ood_score: f64,
    pub dist_to_ocs: f64,
    pub mean_loss: f64,
    pub accuracy: Option<f64>,
    /// Mean predicted standard deviation (Gaussian NLL models).
    pub mean_pred_std: Option<f64>,
    pub mean_reward: Option<f64>,
    pub reward_std_err: Option<f64>,
    pub abstain_rate: Option<f64>,
}

const SWEEP_COLUMNS: [&str; 12] = [
    "seed",
    "shift_kind",
    "shift_level",
    "policy",
    "ood_score",
    "dist_to_ocs",
    "mean_loss",
    "accuracy",
    "mean_pred_std",
    "mean_reward",
    "reward_std_err",
    "abstain_rate",
];

impl ReportRow for SweepRow {
    fn header(_: &[Self]) -> Vec<String> {
        SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect()
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            self.shift_kind.clone(),
            fmt_f64(self.shift_level),
            self.policy.clone(),
            fmt_f64(self.ood_score),
            fmt_f64(self.dist_to_ocs),
            fmt_f64(self.mean_loss),
            fmt_opt(self.accuracy),
            fmt_opt(self.mean_pred_std),
            fmt_opt(self.mean_reward),
            fmt_opt(self.reward_std_err),
            fmt_opt(self.abstain_rate),
        ]
    }

    fn from_record(header: &[String], record: &[String]) -> Result<Self> {
        let f = Fields::new(header, record)?;
        Ok(Self {
            seed: f.parse("seed")?,
            shift_kind: f.str("shift_kind")?.to_string(),
            shift_level: f.parse("shift_level")?,
            policy: f.str("policy")?.to_string(),
            ood_score: f.parse("ood_score")?,
            dist_to_ocs: f.parse("dist_to_ocs")?,
            mean_loss: f.parse("mean_loss")?,
            accuracy: f.opt("accuracy")?,
            mean_pred_std: f.opt("mean_pred_std")?,
            mean_reward: f.opt("mean_reward")?,
            reward_std_err: f.opt("reward_std_err")?,
            abstain_rate: f.opt("abstain_rate")?,
        })
    }

    fn series(&self) -> String {
        if self.policy == "model" {
            format!("seed {}", self.seed)
        } else {
            format!("seed {} {}", self.seed, self.policy)
        }
    }

    fn x(&self) -> f64 {
        self.shift_level
    }

    fn x_label() -> &'static str {
        "shift level"
    }

    fn plot_values(&self) -> Vec<(String, f64)> {
        let mut v = vec![
            ("ood_score".to_string(), self.ood_score),
            ("dist_to_ocs".to_string(), self.dist_to_ocs),
        ];
        for (name, val) in [
            ("accuracy", self.accuracy),
            ("mean_pred_std", self.mean_pred_std),
            ("mean_reward", self.mean_reward),
            ("abstain_rate", self.abstain_rate),
        ] {
            if let Some(x) = val {
                v.push((name.to_string(), x));
            }
        }
        v
    }
}

/// Probe results for one (seed, shift level), one norm-ratio column per linear layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub seed: u64,
    pub shift_kind: String,
    pub shift_level: f64,
    pub ood_score: f64,
    pub projection_layer: usize,
    pub projection_rank: usize,
    pub projection_mean: f64,
    pub projection_std: f64,
    pub projection_excluded: usize,
    pub norm_ratios: Vec<f64>,
}

const PROBE_FIXED: [&str; 9] = [
    "seed",
    "shift_kind",
    "shift_level",
    "ood_score",
    "projection_layer",
    "projection_rank",
    "projection_mean",
    "projection_std",
    "projection_excluded",
];

impl ReportRow for ProbeRow {
    fn header(rows: &[Self]) -> Vec<String> {
        let layers = rows.iter().map(|r| r.norm_ratios.len()).max().unwrap_or(0);
        PROBE_FIXED
            .iter()
            .map(|s| s.to_string())
            .chain((0..layers).map(|i| format!("norm_ratio_l{i}")))
            .collect()
    }

    fn record(&self) -> Vec<String> {
        let mut r = vec![
            self.seed.to_string(),
            self.shift_kind.clone(),
            fmt_f64(self.shift_level),
            fmt_f64(self.ood_score),
            self.projection_layer.to_string(),
            self.projection_rank.to_string(),
            fmt_f64(self.projection_mean),
            fmt_f64(self.projection_std),
            self.projection_excluded.to_string(),
        ];
        r.extend(self.norm_ratios.iter().map(|&v| fmt_f64(v)));
        r
    }

    fn from_record(header: &[String], record: &[String]) -> Result<Self> {
        let f = Fields::new(header, record)?;
        let layers = header.iter().filter(|h| h.starts_with("norm_ratio_l")).count();
        let norm_ratios = (0..layers)
            .map(|i| f.parse(&format!("norm_ratio_l{i}")))
            .collect::<Result<_>>()?;
        Ok(Self {
            seed: f.parse("seed")?,
            shift_kind: f.str("shift_kind")?.to_string(),
            shift_level: f.parse("shift_level")?,
            ood_score: f.parse("ood_score")?,
            projection_layer: f.parse("projection_layer")?,
            projection_rank: f.parse("projection_rank")?,
            projection_mean: f.parse("projection_mean")?,
            projection_std: f.parse("projection_std")?,
            projection_excluded: f.parse("projection_excluded")?,
            norm_ratios,
        })
    }

    fn series(&self) -> String {
        format!("seed {}", self.seed)
    }

    fn x(&self) -> f64 {
        self.shift_level
    }

    fn x_label() -> &'static str {
        "shift level"
    }

    fn plot_values(&self) -> Vec<(String, f64)> {
        let mut v = vec![
            ("ood_score".to_string(), self.ood_score),
            ("projection_mean".to_string(), self.projection_mean),
        ];
        v.extend(self.norm_ratios.iter().enumerate().map(|(i, &r)| (format!("norm_ratio_l{i}"), r)));
        v
    }
}

/// One gradient-descent checkpoint of a homogeneous network.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowRow {
    pub seed: u64,
    pub depth: usize,
    pub final_bias: bool,
    pub step: usize,
    pub loss: f64,
    pub min_margin: f64,
    pub normalized_margin: f64,
    pub mean_stable_rank: f64,
    pub min_chain_slack: f64,
    pub num_margin_points: usize,
    pub bias: Option<f64>,
}

const FLOW_COLUMNS: [&str; 11] = [
    "seed",
    "depth",
    "final_bias",
    "step",
    "loss",
    "min_margin",
    "normalized_margin",
    "mean_stable_rank",
    "min_chain_slack",
    "num_margin_points",
    "bias",
];

impl ReportRow for FlowRow {
    fn header(_: &[Self]) -> Vec<String> {
        FLOW_COLUMNS.iter().map(|s| s.to_string()).collect()
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            self.depth.to_string(),
            self.final_bias.to_string(),
            self.step.to_string(),
            fmt_f64(self.loss),
            fmt_f64(self.min_margin),
            fmt_f64(self.normalized_margin),
            fmt_f64(self.mean_stable_rank),
            fmt_f64(self.min_chain_slack),
            self.num_margin_points.to_string(),
            fmt_opt(self.bias),
        ]
    }

    fn from_record(header: &[String], record: &[String]) -> Result<Self> {
        let f = Fields::new(header, record)?;
        Ok(Self {
            seed: f.parse("seed")?,
            depth: f.parse("depth")?,
            final_bias: f.parse("final_bias")?,
            step: f.parse("step")?,
            loss: f.parse("loss")?,
            min_margin: f.parse("min_margin")?,
            normalized_margin: f.parse("normalized_margin")?,
            mean_stable_rank: f.parse("mean_stable_rank")?,
            min_chain_slack: f.parse("min_chain_slack")?,
            num_margin_points: f.parse("num_margin_points")?,
            bias: f.opt("bias")?,
        })
    }

    fn series(&self) -> String {
        let tag = if self.final_bias { " bias" } else { "" };
        format!("L{} seed {}{tag}", self.depth, self.seed)
    }

    fn x(&self) -> f64 {
        (self.step as f64 + 1.0).log10()
    }

    fn x_label() -> &'static str {
        "log10(step + 1)"
    }

    fn plot_values(&self) -> Vec<(String, f64)> {
        vec![
            ("flow_loss".to_string(), self.loss.max(1e-300).log10()),
            ("flow_normalized_margin".to_string(), self.normalized_margin),
            ("flow_mean_stable_rank".to_string(), self.mean_stable_rank),
        ]
    }
}

/// `(seed, metric, value)`; `value` is empty when undefined (for example a
/// Spearman correlation of a constant series).
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub seed: u64,
    pub metric: String,
    pub value: Option<f64>,
}

impl SummaryRow {
    pub fn new(seed: u64, metric: impl Into<String>, value: Option<f64>) -> Self {
        Self { seed, metric: metric.into(), value }
    }
}

impl ReportRow for SummaryRow {
    fn header(_: &[Self]) -> Vec<String> {
        vec!["seed".into(), "metric".into(), "value".into()]
    }

    fn record(&self) -> Vec<String> {
        vec![self.seed.to_string(), self.metric.clone(), fmt_opt(self.value)]
    }

    fn from_record(header: &[String], record: &[String]) -> Result<Self> {
        let f = Fields::new(header, record)?;
        Ok(Self { seed: f.parse("seed")?, metric: f.str("metric")?.to_string(), value: f.opt("value")? })
    }

    fn series(&self) -> String {
        self.metric.clone()
    }

    fn x(&self) -> f64 {
        self.seed as f64
    }

    fn x_label() -> &'static str {
        "seed"
    }

    fn plot_values(&self) -> Vec<(String, f64)> {
        Vec::new()
    }
}

/// Looks up a per-seed metric.
pub fn summary_value(summary: &[SummaryRow], seed: u64, metric: &str) -> Result<Option<f64>> {
    summary
        .iter()
        .find(|r| r.seed == seed && r.metric == metric)
        .map(|r| r.value)
        .ok_or_else(|| Error::EmptyResult(format!("no summary metric {metric} for seed {seed}")))
}
