//! Discriminator-based OOD score of rotated glyphs against the clean set.
use ocslab::datagen::{apply_shift, make_glyphs, GlyphConfig, ShiftFamily, ShiftSpec};
use ocslab::shiftmeter::{ood_score, OodConfig};

fn main() -> ocslab::Result<()> {
    let clean = make_glyphs(&GlyphConfig { seed: 1, ..GlyphConfig::default() })?;
    let fresh = make_glyphs(&GlyphConfig { seed: 2, ..GlyphConfig::default() })?;
    let cfg = OodConfig::default();
    println!("fresh sample of the same distribution: {:.3}", ood_score(clean.inputs(), fresh.inputs(), &cfg)?.score);
    for degrees in [15.0, 30.0, 45.0, 60.0, 90.0] {
        let rotated = apply_shift(&fresh, &ShiftSpec::new(ShiftFamily::Rotation.at(degrees), 0)?)?;
        let report = ood_score(clean.inputs(), rotated.inputs(), &cfg)?;
        println!("rotated {degrees:>4} deg: score {:.3} (discriminator accuracy {:.3})", report.score, report.discriminator_accuracy);
    }
    Ok(())
}
