//! Layer norm ratios, subspace projection and accumulated constants on a trained model.
use ocslab::datagen::ShiftFamily;
use ocslab::probe::{probe_report, ProbeSettings};
use ocslab::runner::{prepare_seed, shifted_holdout, ExperimentConfig, LossKind};

fn main() -> ocslab::Result<()> {
    let mut cfg = ExperimentConfig::reversion();
    cfg.train.steps = 1500;
    let run = prepare_seed(&cfg, LossKind::CrossEntropy, 0)?;
    for (i, degrees) in [0.0, 30.0, 60.0, 90.0].into_iter().enumerate() {
        let shifted = shifted_holdout(&run, ShiftFamily::Rotation, degrees, i)?;
        let r = probe_report(&run.model, run.holdout.inputs(), shifted.inputs(), &ProbeSettings::default(), &run.ocs, &run.loss)?;
        let ratios: Vec<String> = r.norm_ratios.iter().map(|v| format!("{v:.3}")).collect();
        println!(
            "{degrees:>4} deg: norm ratios [{}], projection {:.3} +- {:.3} (k = {})",
            ratios.join(", "),
            r.projection.mean,
            r.projection.std,
            r.projection.k
        );
    }
    let r = probe_report(&run.model, run.holdout.inputs(), run.holdout.inputs(), &ProbeSettings::default(), &run.ocs, &run.loss)?;
    println!("constants from layer {}: KL to OCS {:.4}", r.constants_layer, r.constants_distance_to_ocs);
    Ok(())
}
