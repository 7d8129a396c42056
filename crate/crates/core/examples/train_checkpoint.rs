//! Train a glyph classifier, save it, and reload it bit-exactly.
use ocslab::datagen::{make_glyphs, GlyphConfig};
use ocslab::netcore::{load_checkpoint, save_checkpoint, train, BiasMode, CheckpointMeta, Mlp, TrainConfig};
use ocslab::numcore::Rng;
use ocslab::objectives::LossSpec;

fn main() -> ocslab::Result<()> {
    let data = make_glyphs(&GlyphConfig { per_class: 60, ..GlyphConfig::default() })?;
    let (train_set, holdout) = data.split(0.2, 1)?;
    let loss = LossSpec::cross_entropy(10)?;
    let init = Mlp::glorot(&[train_set.dim(), 64, 64, 10], BiasMode::All, &mut Rng::new(0))?;
    let cfg = TrainConfig { lr: 0.05, batch_size: 64, steps: 800, seed: 0, weight_decay: 0.01 };
    let outcome = train(&init, &train_set, &loss, &cfg)?;
    let first = outcome.history.first().map(|h| h.1).unwrap_or_default();
    let last = outcome.history.last().map(|h| h.1).unwrap_or_default();
    println!("minibatch loss {first:.3} -> {last:.3}");

    let preds = outcome.model.predict(holdout.inputs())?;
    let labels = holdout.labels().expect("glyphs are labelled");
    let correct = preds
        .row_iter()
        .zip(labels)
        .filter(|(z, &y)| z.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|m| m.0) == Some(y))
        .count();
    println!("holdout accuracy {:.3}", correct as f64 / labels.len() as f64);

    let path = std::env::temp_dir().join("ocslab_example.ckpt");
    let meta = CheckpointMeta { loss, seed: 0, steps: cfg.steps as u64 };
    save_checkpoint(&path, &outcome.model, &meta)?;
    let (back, back_meta) = load_checkpoint(&path)?;
    assert_eq!(back.parameters(), outcome.model.parameters());
    assert_eq!(back_meta, meta);
    println!("checkpoint round trip ok: {}", path.display());
    Ok(())
}
