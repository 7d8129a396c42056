//! Classifier, reward-model and oracle policies under growing input noise.
use ocslab::runner::{run_decision_sweep, ExperimentConfig};

fn main() -> ocslab::Result<()> {
    let mut cfg = ExperimentConfig::decision();
    cfg.seeds = vec![0];
    cfg.train.steps = 1500;
    let out = run_decision_sweep(&cfg)?;
    println!("{:>6} {:>10} {:>8} {:>8}", "sigma", "policy", "reward", "abstain");
    for r in &out.rows {
        println!(
            "{:>6} {:>10} {:>8.3} {:>8.3}",
            r.shift_level,
            r.policy,
            r.mean_reward.unwrap_or(f64::NAN),
            r.abstain_rate.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
