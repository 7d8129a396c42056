//! A reduced rotation sweep: as inputs drift, predictions approach the OCS.
//!
//! Usage: `cargo run --release --example reversion_sweep [out_dir]`
use ocslab::runner::{run_reversion_sweep, ExperimentConfig};

fn main() -> ocslab::Result<()> {
    let mut cfg = ExperimentConfig::reversion();
    cfg.seeds = vec![0, 1];
    cfg.train.steps = 1000;
    let out = run_reversion_sweep(&cfg)?;
    println!("{:>4} {:>6} {:>8} {:>8} {:>8}", "seed", "level", "ood", "dist", "acc");
    for r in &out.rows {
        println!(
            "{:>4} {:>6} {:>8.3} {:>8.3} {:>8.3}",
            r.seed,
            r.shift_level,
            r.ood_score,
            r.dist_to_ocs,
            r.accuracy.unwrap_or(f64::NAN)
        );
    }
    for s in out.summary.iter().filter(|s| s.metric.starts_with("spearman")) {
        println!("seed {} {} = {:?}", s.seed, s.metric, s.value);
    }
    if let Some(dir) = std::env::args().nth(1) {
        out.write(&dir)?;
        println!("wrote {dir}");
    }
    Ok(())
}
