//! Each corruption family at a few strengths, plus FGSM against a trained model.
use ocslab::datagen::{apply_shift, fgsm, make_glyphs, GlyphConfig, ShiftFamily, ShiftSpec};
use ocslab::netcore::{train, BiasMode, Mlp, TrainConfig};
use ocslab::numcore::{Matrix, Rng};
use ocslab::objectives::LossSpec;

fn mean_abs_change(a: &Matrix, b: &Matrix) -> f64 {
    let n = a.as_slice().len() as f64;
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).sum::<f64>() / n
}

fn main() -> ocslab::Result<()> {
    let data = make_glyphs(&GlyphConfig { per_class: 20, ..GlyphConfig::default() })?;
    let families = [
        (ShiftFamily::Rotation, [15.0, 45.0, 90.0]),
        (ShiftFamily::GaussNoise, [0.1, 0.3, 0.5]),
        (ShiftFamily::GaussBlur, [0.5, 1.0, 2.0]),
        (ShiftFamily::ImpulseNoise, [0.05, 0.1, 0.3]),
    ];
    for (family, levels) in families {
        for level in levels {
            let shifted = apply_shift(&data, &ShiftSpec::new(family.at(level), 3)?)?;
            println!("{family:>13} {level:>5}: mean |dx| {:.4}", mean_abs_change(data.inputs(), shifted.inputs()));
        }
    }

    let loss = LossSpec::cross_entropy(10)?;
    let init = Mlp::glorot(&[data.dim(), 32, 10], BiasMode::All, &mut Rng::new(1))?;
    let cfg = TrainConfig { lr: 0.05, batch_size: 32, steps: 300, seed: 1, weight_decay: 0.0 };
    let model = train(&init, &data, &loss, &cfg)?.model;
    for eps in [0.05, 0.1, 0.3] {
        let adv = fgsm(&model, &loss, &data, eps)?;
        println!("         fgsm {eps:>5}: mean |dx| {:.4}", mean_abs_change(data.inputs(), adv.inputs()));
    }
    Ok(())
}
