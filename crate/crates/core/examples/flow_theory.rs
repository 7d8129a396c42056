//! Gradient descent on bias-free ReLU networks: margins, stable ranks and the
//! norm chain inequality.
use ocslab::flowlab::{bias_toy_data, gradient_flow, make_homogeneous_net, separable_data, theory_report, FlowConfig};
use ocslab::numcore::{Matrix, Rng};

fn main() -> ocslab::Result<()> {
    let data = separable_data(20, 5, 0.3, 7)?;
    let mut rng = Rng::new(3);
    let ood = Matrix::new(50, 5, (0..250).map(|_| 3.0 * rng.normal()).collect())?;
    for depth in [3, 6] {
        let cfg = FlowConfig { depth, width: 16, init_scale: 0.5, steps: 20_000, checkpoints: 6, ..FlowConfig::default() };
        let net = make_homogeneous_net(&cfg, data.dim())?;
        let (trained, report) = gradient_flow(&net, &data, &cfg)?;
        for c in &report.checkpoints {
            let mean_sr = c.stable_ranks.iter().sum::<f64>() / c.stable_ranks.len() as f64;
            println!("L{depth} step {:>6}: loss {:.2e} normalized margin {:.2e} mean stable rank {mean_sr:.3}", c.step, c.loss, c.normalized_margin);
        }
        let t = theory_report(&trained, &data, &ood)?;
        let worst = t.chain_slack_ood.iter().copied().fold(f64::INFINITY, f64::min);
        println!("L{depth} min chain slack on OOD inputs {worst:.3}");
    }

    let toy = bias_toy_data(20, 5, 3)?;
    let cfg = FlowConfig { final_bias: true, width: 16, init_scale: 0.5, steps: 20_000, ..FlowConfig::default() };
    let (trained, _) = gradient_flow(&make_homogeneous_net(&cfg, toy.dim())?, &toy, &cfg)?;
    if let Some(b) = theory_report(&trained, &toy, toy.inputs())?.bias_check {
        println!("bias {:.3}, margin-point label sum {}, agrees {}", b.bias, b.margin_label_sum, b.agrees);
    }
    Ok(())
}
