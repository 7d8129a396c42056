//! End-to-end sweeps: dataset construction, training, shifted evaluation,
//! probes, decisions and the gradient-flow suite, plus CSV/SVG output.
//!
//! Work items run on a rayon pool capped by `OCSLAB_THREADS`. Results are
//! collected in item order, so the thread count never changes output bytes.

mod config;
mod report;
mod rows;

use std::path::Path;

use rayon::prelude::*;

pub use config::{
    DatasetConfig, DatasetKind, ExperimentConfig, FlowSweepConfig, LossKind, OodSettings, PolicyConfig, ProbeConfig,
    ShiftSweep, TrainSettings,
};
pub use report::{emit_charts, emit_report, read_csv, read_header, svg_chart, write_csv, ReportRow};
pub use rows::{summary_value, FlowRow, ProbeRow, SummaryRow, SweepRow};

use crate::datagen::{
    apply_shift, fgsm, load_idx, make_blobs, make_glyphs, Dataset, GlyphConfig, ShiftFamily, ShiftSpec, Targets,
};
use crate::decide::{classifier_policy, evaluate_policy, oracle_policy, reward_policy, Policy, PolicyOutcome};
use crate::error::{Error, Result};
use crate::flowlab::{self, FlowConfig};
use crate::netcore::{save_checkpoint, train, BiasMode, CheckpointMeta, Mlp, TrainConfig};
use crate::numcore::{mean, pairwise_sum, spearman, Rng};
use crate::objectives::{compute_ocs, distance_to_ocs, loss_eval, LossSpec, Ocs};
use crate::probe::{final_probe_layer, probe_report};
use crate::shiftmeter::{ood_score, OodConfig};

pub const THREADS_ENV: &str = "OCSLAB_THREADS";

/// Worker count: `OCSLAB_THREADS` if set, otherwise the available cores.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn run_parallel<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

/// A trained model together with the split it was trained on.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub loss: LossSpec,
    pub train: Dataset,
    pub holdout: Dataset,
    pub model: Mlp,
    pub ocs: Ocs,
    pub final_train_loss: f64,
}

impl SeedRun {
    pub fn checkpoint_meta(&self, steps: usize) -> CheckpointMeta {
        CheckpointMeta { loss: self.loss.clone(), seed: self.seed, steps: steps as u64 }
    }
}

/// Output of a sweep: table rows, per-seed summary metrics and trained models.
#[derive(Clone, Debug)]
pub struct SweepOutput<R> {
    pub rows: Vec<R>,
    pub summary: Vec<SummaryRow>,
    pub models: Vec<(String, Mlp, CheckpointMeta)>,
}

impl<R: ReportRow> SweepOutput<R> {
    /// Writes `rows.csv`, `summary.csv`, charts and checkpoints under `out_dir`.
    pub fn write(&self, out_dir: impl AsRef<Path>) -> Result<()> {
        let out = out_dir.as_ref();
        emit_report(&self.rows, out)?;
        write_csv(&self.summary, out.join("summary.csv"))?;
        for (name, model, meta) in &self.models {
            save_checkpoint(out.join(format!("{name}.ckpt")), model, meta)?;
        }
        Ok(())
    }
}

fn loaded_base(cfg: &ExperimentConfig) -> Result<Option<Dataset>> {
    if cfg.dataset.kind != DatasetKind::Mnist {
        return Ok(None);
    }
    let (Some(images), Some(labels)) = (&cfg.dataset.mnist_images, &cfg.dataset.mnist_labels) else {
        return Err(Error::Config("mnist paths missing".into()));
    };
    let data = load_idx(images, labels)?;
    Ok(Some(match cfg.dataset.mnist_limit {
        Some(limit) if limit < data.len() => data.subset(&(0..limit).collect::<Vec<_>>())?,
        _ => data,
    }))
}

/// Dataset for one seed, with targets suited to `kind`.
pub fn build_dataset(cfg: &ExperimentConfig, kind: LossKind, seed: u64) -> Result<Dataset> {
    build_dataset_from(cfg, kind, seed, loaded_base(cfg)?.as_ref())
}

fn build_dataset_from(cfg: &ExperimentConfig, kind: LossKind, seed: u64, base: Option<&Dataset>) -> Result<Dataset> {
    let d = &cfg.dataset;
    let regression = kind == LossKind::GaussianNll;
    let data = match d.kind {
        DatasetKind::Glyphs => {
            return make_glyphs(&GlyphConfig {
                num_classes: d.num_classes,
                per_class: d.per_class,
                max_shift: d.max_shift,
                pixel_noise: d.pixel_noise,
                label_noise: d.label_noise,
                regression,
                seed,
                ..GlyphConfig::default()
            })
        }
        DatasetKind::Blobs => make_blobs(d.num_classes, d.blob_dim, d.per_class, d.blob_separation, seed)?,
        DatasetKind::Mnist => base.cloned().ok_or_else(|| Error::Config("mnist dataset not loaded".into()))?,
    };
    if !regression {
        return Ok(data);
    }
    let labels = data.labels().ok_or_else(|| Error::arg("dataset has no class labels"))?;
    let mut rng = Rng::new(seed ^ 0x1abe1);
    let values = labels.iter().map(|&c| c as f64 + d.label_noise * rng.normal()).collect();
    data.with_targets(Targets::Values(values))
}

fn split_seed(seed: u64) -> u64 {
    seed ^ 0x5eed_5eed
}

fn init_seed(seed: u64) -> u64 {
    seed ^ 0x1417_0000
}

fn level_seed(seed: u64, idx: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(idx as u64 + 1)
}

/// Trains a `kind` model on `train` and computes its OCS.
pub fn fit_model(cfg: &ExperimentConfig, kind: LossKind, seed: u64, train_data: &Dataset) -> Result<(Mlp, LossSpec, Ocs, f64)> {
    let k = train_data.num_classes().unwrap_or(cfg.dataset.num_classes);
    let loss = cfg.loss_spec(kind, k)?;
    let mut sizes = vec![train_data.dim()];
    sizes.extend(&cfg.hidden);
    sizes.push(loss.output_width());
    let init = Mlp::glorot(&sizes, BiasMode::All, &mut Rng::new(init_seed(seed)))?;
    let tc = TrainConfig { lr: cfg.train.lr, batch_size: cfg.train.batch_size, steps: cfg.train.steps, seed, weight_decay: cfg.train.weight_decay };
    let out = train(&init, train_data, &loss, &tc)?;
    let ocs = compute_ocs(&loss, train_data.training_targets())?;
    let tail = out.history.len().saturating_sub(50);
    let final_loss = mean(&out.history[tail..].iter().map(|h| h.1).collect::<Vec<_>>());
    Ok((out.model, loss, ocs, final_loss))
}

fn prepare_from(cfg: &ExperimentConfig, kind: LossKind, seed: u64, base: Option<&Dataset>) -> Result<SeedRun> {
    let data = build_dataset_from(cfg, kind, seed, base)?;
    let (train_data, holdout) = data.split(cfg.holdout_frac, split_seed(seed))?;
    let (model, loss, ocs, final_train_loss) = fit_model(cfg, kind, seed, &train_data)?;
    Ok(SeedRun { seed, loss, train: train_data, holdout, model, ocs, final_train_loss })
}

/// Builds the data for `seed`, splits off the holdout and trains a `kind` model.
pub fn prepare_seed(cfg: &ExperimentConfig, kind: LossKind, seed: u64) -> Result<SeedRun> {
    prepare_from(cfg, kind, seed, loaded_base(cfg)?.as_ref()).map_err(|e| e.context(format!("seed {seed}")))
}

/// The holdout set under the `idx`-th shift level.
pub fn shifted_holdout(run: &SeedRun, family: ShiftFamily, level: f64, idx: usize) -> Result<Dataset> {
    match family {
        ShiftFamily::Fgsm => fgsm(&run.model, &run.loss, &run.holdout, level),
        _ => apply_shift(&run.holdout, &ShiftSpec::new(family.at(level), level_seed(run.seed, idx))?),
    }
}

/// Distance to OCS, mean loss, accuracy (classifiers) and mean predicted σ (Gaussian NLL).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelEval {
    pub dist_to_ocs: f64,
    pub mean_loss: f64,
    pub accuracy: Option<f64>,
    pub mean_pred_std: Option<f64>,
}

pub fn evaluate_model(model: &Mlp, loss: &LossSpec, ocs: &Ocs, data: &Dataset) -> Result<ModelEval> {
    let preds = model.predict(data.inputs())?;
    let dist_to_ocs = distance_to_ocs(&preds, ocs, loss)?;
    let losses = preds
        .row_iter()
        .enumerate()
        .map(|(i, p)| loss_eval(loss, p, data.target(i)))
        .collect::<Result<Vec<_>>>()?;
    let n = preds.rows() as f64;
    let accuracy = match (loss, data.labels()) {
        (LossSpec::CrossEntropy { .. }, Some(labels)) => {
            let hits = preds.row_iter().zip(labels).filter(|(p, &y)| argmax(p) == y).count();
            Some(hits as f64 / n)
        }
        _ => None,
    };
    let mean_pred_std = matches!(loss, LossSpec::GaussianNll)
        .then(|| pairwise_sum(&preds.row_iter().map(|p| p[1].exp()).collect::<Vec<_>>()) / n);
    Ok(ModelEval { dist_to_ocs, mean_loss: pairwise_sum(&losses) / n, accuracy, mean_pred_std })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

fn ood_cfg(cfg: &ExperimentConfig, seed: u64, idx: usize) -> OodConfig {
    OodConfig {
        seed: level_seed(seed, idx) ^ 0x00d,
        holdout_frac: cfg.ood.holdout_frac,
        steps: cfg.ood.steps,
        lr: cfg.ood.lr,
    }
}

fn train_seeds(cfg: &ExperimentConfig, kind: LossKind) -> Result<Vec<SeedRun>> {
    cfg.validate()?;
    let base = loaded_base(cfg)?;
    run_parallel(&cfg.seeds, |&seed| {
        prepare_from(cfg, kind, seed, base.as_ref()).map_err(|e| e.context(format!("seed {seed}")))
    })
}

fn work_items(runs: &[SeedRun], levels: &[f64]) -> Vec<(usize, usize)> {
    (0..runs.len()).flat_map(|r| (0..levels.len()).map(move |l| (r, l))).collect()
}

fn model_checkpoints(cfg: &ExperimentConfig, runs: &[SeedRun], prefix: &str) -> Vec<(String, Mlp, CheckpointMeta)> {
    runs.iter()
        .map(|r| (format!("{prefix}_seed{}", r.seed), r.model.clone(), r.checkpoint_meta(cfg.train.steps)))
        .collect()
}

fn level_context(seed: u64, level: f64) -> String {
    format!("seed {seed}, level {level}")
}

/// Trains one model per seed and tracks OOD score against distance to the OCS
/// over the configured shift grid.
pub fn run_reversion_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput<SweepRow>> {
    let runs = train_seeds(cfg, cfg.loss)?;
    let levels = &cfg.shift.levels;
    let family = cfg.shift.family;
    let items = work_items(&runs, levels);
    let rows = run_parallel(&items, |&(r, l)| {
        let run = &runs[r];
        let level = levels[l];
        (|| {
            let eval = shifted_holdout(run, family, level, l)?;
            let ood = ood_score(run.train.inputs(), eval.inputs(), &ood_cfg(cfg, run.seed, l))?;
            let m = evaluate_model(&run.model, &run.loss, &run.ocs, &eval)?;
            Ok(SweepRow {
                seed: run.seed,
                shift_kind: family.name().to_string(),
                shift_level: level,
                policy: "model".into(),
                ood_score: ood.score,
                dist_to_ocs: m.dist_to_ocs,
                mean_loss: m.mean_loss,
                accuracy: m.accuracy,
                mean_pred_std: m.mean_pred_std,
                mean_reward: None,
                reward_std_err: None,
                abstain_rate: None,
            })
        })()
        .map_err(|e: Error| e.context(level_context(run.seed, level)))
    })?;
    let mut summary = Vec::new();
    for run in &runs {
        let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.seed == run.seed).collect();
        let col = |f: fn(&SweepRow) -> f64| mine.iter().map(|r| f(r)).collect::<Vec<f64>>();
        let (lv, ood, dist) = (col(|r| r.shift_level), col(|r| r.ood_score), col(|r| r.dist_to_ocs));
        let clean = evaluate_model(&run.model, &run.loss, &run.ocs, &run.holdout)?;
        summary.push(SummaryRow::new(run.seed, "holdout_dist_to_ocs", Some(clean.dist_to_ocs)));
        summary.push(SummaryRow::new(run.seed, "final_train_loss", Some(run.final_train_loss)));
        summary.push(SummaryRow::new(run.seed, "spearman_ood_vs_dist", spearman(&ood, &dist)));
        summary.push(SummaryRow::new(run.seed, "spearman_level_vs_ood", spearman(&lv, &ood)));
        summary.push(SummaryRow::new(run.seed, "spearman_level_vs_dist", spearman(&lv, &dist)));
        if matches!(run.loss, LossSpec::GaussianNll) {
            let sd: Vec<f64> = mine.iter().filter_map(|r| r.mean_pred_std).collect();
            summary.push(SummaryRow::new(run.seed, "spearman_level_vs_pred_std", spearman(&lv, &sd)));
        }
    }
    Ok(SweepOutput { rows, summary, models: model_checkpoints(cfg, &runs, "model") })
}

/// Norm ratios, subspace projections and accumulated constants over the shift grid.
pub fn run_probe_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput<ProbeRow>> {
    let runs = train_seeds(cfg, cfg.loss)?;
    let levels = &cfg.shift.levels;
    let family = cfg.shift.family;
    let settings = cfg.probe.settings();
    let items = work_items(&runs, levels);
    let reports = run_parallel(&items, |&(r, l)| {
        let run = &runs[r];
        let level = levels[l];
        (|| {
            let eval = shifted_holdout(run, family, level, l)?;
            let ood = ood_score(run.train.inputs(), eval.inputs(), &ood_cfg(cfg, run.seed, l))?;
            let rep = probe_report(&run.model, run.holdout.inputs(), eval.inputs(), &settings, &run.ocs, &run.loss)?;
            Ok((ood.score, rep))
        })()
        .map_err(|e: Error| e.context(level_context(run.seed, level)))
    })?;
    let mut rows = Vec::with_capacity(items.len());
    let mut summary = Vec::new();
    for (&(r, l), (ood, rep)) in items.iter().zip(&reports) {
        rows.push(ProbeRow {
            seed: runs[r].seed,
            shift_kind: family.name().to_string(),
            shift_level: levels[l],
            ood_score: *ood,
            projection_layer: rep.projection.layer,
            projection_rank: rep.projection.k,
            projection_mean: rep.projection.mean,
            projection_std: rep.projection.std,
            projection_excluded: rep.projection.excluded,
            norm_ratios: rep.norm_ratios.clone(),
        });
    }
    for (r, run) in runs.iter().enumerate() {
        let mine: Vec<&ProbeRow> = rows.iter().filter(|row| row.seed == run.seed).collect();
        let layer = final_probe_layer(&run.model);
        let lv: Vec<f64> = mine.iter().map(|x| x.shift_level).collect();
        let ratio: Vec<f64> = mine.iter().map(|x| x.norm_ratios[layer]).collect();
        let proj: Vec<f64> = mine.iter().map(|x| x.projection_mean).collect();
        let first = &reports[r * levels.len()].1;
        summary.push(SummaryRow::new(run.seed, "final_probe_layer", Some(layer as f64)));
        summary.push(SummaryRow::new(run.seed, "spearman_level_vs_final_norm_ratio", spearman(&lv, &ratio)));
        summary.push(SummaryRow::new(run.seed, "spearman_level_vs_projection", spearman(&lv, &proj)));
        summary.push(SummaryRow::new(run.seed, "constants_layer", Some(first.constants_layer as f64)));
        summary.push(SummaryRow::new(run.seed, "constants_dist_to_ocs", Some(first.constants_distance_to_ocs)));
    }
    Ok(SweepOutput { rows, summary, models: model_checkpoints(cfg, &runs, "model") })
}

fn decision_row(
    seed: u64,
    family: ShiftFamily,
    level: f64,
    policy: &str,
    ood: f64,
    m: &ModelEval,
    out: &PolicyOutcome,
) -> SweepRow {
    SweepRow {
        seed,
        shift_kind: family.name().to_string(),
        shift_level: level,
        policy: policy.to_string(),
        ood_score: ood,
        dist_to_ocs: m.dist_to_ocs,
        mean_loss: m.mean_loss,
        accuracy: out.accuracy_when_classifying,
        mean_pred_std: None,
        mean_reward: Some(out.mean_reward),
        reward_std_err: Some(out.reward_std_err),
        abstain_rate: Some(out.abstain_rate),
    }
}

/// Trains a reward model and a classifier per seed and evaluates the reward,
/// classifier and calibrated-oracle policies at every shift level.
pub fn run_decision_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput<SweepRow>> {
    let classifiers = train_seeds(cfg, LossKind::CrossEntropy)?;
    let rewarders = train_seeds(cfg, LossKind::MseReward)?;
    let spec = cfg.reward_spec()?;
    let levels = &cfg.shift.levels;
    let family = cfg.shift.family;
    let items = work_items(&classifiers, levels);
    let groups = run_parallel(&items, |&(r, l)| {
        let (cls, rew) = (&classifiers[r], &rewarders[r]);
        let level = levels[l];
        (|| {
            let eval = shifted_holdout(cls, family, level, l)?;
            let ood = ood_score(cls.train.inputs(), eval.inputs(), &ood_cfg(cfg, cls.seed, l))?.score;
            let cm = evaluate_model(&cls.model, &cls.loss, &cls.ocs, &eval)?;
            let rm = evaluate_model(&rew.model, &rew.loss, &rew.ocs, &eval)?;
            let policies: [(&str, Box<dyn Policy>, &ModelEval); 3] = [
                ("classifier", Box::new(classifier_policy(&cls.model, &spec)?), &cm),
                ("reward", Box::new(reward_policy(&rew.model, &spec)?), &rm),
                ("oracle", Box::new(oracle_policy(&cls.model, &eval, &spec)?), &cm),
            ];
            policies
                .iter()
                .map(|(name, p, m)| {
                    let out = evaluate_policy(p.as_ref(), &eval, &spec)?;
                    Ok(decision_row(cls.seed, family, level, name, ood, m, &out))
                })
                .collect::<Result<Vec<_>>>()
        })()
        .map_err(|e: Error| e.context(level_context(cls.seed, level)))
    })?;
    let rows: Vec<SweepRow> = groups.into_iter().flatten().collect();
    let mut summary = Vec::new();
    for run in &classifiers {
        let of = |policy: &str| -> Vec<&SweepRow> {
            rows.iter().filter(|r| r.seed == run.seed && r.policy == policy).collect()
        };
        let abst: Vec<f64> = of("reward").iter().filter_map(|r| r.abstain_rate).collect();
        let nondecreasing = abst.windows(2).all(|w| w[1] >= w[0]);
        summary.push(SummaryRow::new(run.seed, "reward_abstain_nondecreasing", Some(nondecreasing as u8 as f64)));
        summary.push(SummaryRow::new(run.seed, "reward_abstain_at_max_level", abst.last().copied()));
        let max_cls = of("classifier").iter().filter_map(|r| r.abstain_rate).fold(0.0, f64::max);
        summary.push(SummaryRow::new(run.seed, "classifier_max_abstain_rate", Some(max_cls)));
        for policy in ["classifier", "reward", "oracle"] {
            let r = of(policy);
            summary.push(SummaryRow::new(
                run.seed,
                format!("{policy}_reward_at_max_level"),
                r.last().and_then(|x| x.mean_reward),
            ));
        }
    }
    let mut models = model_checkpoints(cfg, &classifiers, "classifier");
    models.extend(model_checkpoints(cfg, &rewarders, "reward"));
    Ok(SweepOutput { rows, summary, models })
}

/// Gradient descent on homogeneous networks of each configured depth, plus a
/// final-bias run per seed for the bias-sign check.
pub fn run_flow_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput<FlowRow>> {
    cfg.validate()?;
    let f = &cfg.flow;
    let data = flowlab::separable_data(f.num_points, f.dim, f.gap, f.data_seed)?;
    let ood = flowlab::separable_data(f.num_points, f.dim, 0.0, f.data_seed ^ 0x00d)?;
    let mut items: Vec<(usize, u64, bool)> = Vec::new();
    for &depth in &f.depths {
        items.extend(cfg.seeds.iter().map(|&s| (depth, s, false)));
    }
    items.extend(cfg.seeds.iter().map(|&s| (f.bias_depth, s, true)));
    let results = run_parallel(&items, |&(depth, seed, bias)| {
        let fc = FlowConfig {
            depth,
            width: f.width,
            lr: f.lr,
            steps: f.steps,
            seed,
            final_bias: bias,
            init_scale: f.init_scale,
            checkpoints: f.checkpoints,
        };
        let train_data = if bias { flowlab::bias_toy_data(f.bias_per_class, f.dim, f.data_seed ^ seed)? } else { data.clone() };
        (|| {
            let net = flowlab::make_homogeneous_net(&fc, train_data.dim())?;
            let (net, report) = flowlab::gradient_flow(&net, &train_data, &fc)?;
            let ood_inputs = if bias { train_data.inputs().scale(0.5) } else { ood.inputs().clone() };
            let theory = flowlab::theory_report(&net, &train_data, &ood_inputs).ok();
            Ok((net, report, theory))
        })()
        .map_err(|e: Error| e.context(format!("seed {seed}, depth {depth}, final bias {bias}")))
    })?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (&(depth, seed, bias), (_, report, theory)) in items.iter().zip(&results) {
        for c in &report.checkpoints {
            rows.push(FlowRow {
                seed,
                depth,
                final_bias: bias,
                step: c.step,
                loss: c.loss,
                min_margin: c.min_margin,
                normalized_margin: c.normalized_margin,
                mean_stable_rank: mean(&c.stable_ranks),
                min_chain_slack: c.chain_slack.iter().copied().fold(f64::INFINITY, f64::min),
                num_margin_points: c.margin_points.len(),
                bias: c.bias,
            });
        }
        let last = report.last();
        if bias {
            let check = theory.as_ref().and_then(|t| t.bias_check.as_ref());
            summary.push(SummaryRow::new(seed, "bias_final_loss", Some(last.loss)));
            summary.push(SummaryRow::new(seed, "bias_value", last.bias));
            summary.push(SummaryRow::new(seed, "bias_margin_label_sum", check.map(|c| c.margin_label_sum)));
            summary.push(SummaryRow::new(seed, "bias_sign_agrees", check.map(|c| c.agrees as u8 as f64)));
        } else {
            summary.push(SummaryRow::new(seed, format!("final_loss_L{depth}"), Some(last.loss)));
            summary.push(SummaryRow::new(seed, format!("mean_stable_rank_L{depth}"), Some(mean(&last.stable_ranks))));
            if let Some(t) = theory {
                let slack = t.chain_slack_train.iter().chain(&t.chain_slack_ood).copied().fold(f64::INFINITY, f64::min);
                summary.push(SummaryRow::new(seed, format!("min_chain_slack_L{depth}"), Some(slack)));
                let l = t.ood_mass_output_correlation.len();
                summary.push(SummaryRow::new(
                    seed,
                    format!("ood_mass_output_corr_L{depth}"),
                    t.ood_mass_output_correlation.get(l.saturating_sub(2)).copied().flatten(),
                ));
            }
        }
    }
    // Exponential-loss nets have no checkpoint loss tag; the rows carry the trajectory.
    Ok(SweepOutput { rows, summary, models: Vec::new() })
}

/// Trains one model per seed and reports clean-holdout metrics; the rows are
/// the training-loss history.
pub fn run_train(cfg: &ExperimentConfig) -> Result<SweepOutput<SummaryRow>> {
    let runs = train_seeds(cfg, cfg.loss)?;
    let mut summary = Vec::new();
    for run in &runs {
        let m = evaluate_model(&run.model, &run.loss, &run.ocs, &run.holdout)?;
        summary.push(SummaryRow::new(run.seed, "final_train_loss", Some(run.final_train_loss)));
        summary.push(SummaryRow::new(run.seed, "holdout_loss", Some(m.mean_loss)));
        summary.push(SummaryRow::new(run.seed, "holdout_dist_to_ocs", Some(m.dist_to_ocs)));
        summary.push(SummaryRow::new(run.seed, "holdout_accuracy", m.accuracy));
    }
    Ok(SweepOutput { rows: summary.clone(), summary, models: model_checkpoints(cfg, &runs, "model") })
}
