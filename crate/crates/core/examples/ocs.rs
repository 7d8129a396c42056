//! Optimal constant solutions for the three losses.
use ocslab::datagen::{make_glyphs, GlyphConfig};
use ocslab::objectives::{compute_ocs, LossSpec, RewardSpec, TrainingTargets};

fn main() -> ocslab::Result<()> {
    let labels = [0, 0, 0, 1, 2, 2];
    let ce = compute_ocs(&LossSpec::cross_entropy(3)?, TrainingTargets::Labels(&labels))?;
    println!("cross-entropy on {labels:?}: {ce:?}");

    let spec = RewardSpec::standard(3);
    let reward = compute_ocs(&LossSpec::MseReward(spec), TrainingTargets::Labels(&labels))?;
    println!("reward regression (abstain last): {:?}", reward.output());

    let data = make_glyphs(&GlyphConfig { regression: true, ..GlyphConfig::default() })?;
    let gauss = compute_ocs(&LossSpec::GaussianNll, data.training_targets())?;
    println!("Gaussian NLL on {} glyph targets: {gauss:?}", data.len());
    Ok(())
}
