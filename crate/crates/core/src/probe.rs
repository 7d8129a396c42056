//! Representation probes: how strongly each layer's weights respond to its
//! input representation, how much of that representation lies in the weights'
//! top right-singular subspace, and what the network outputs when a
//! representation is zeroed so that only bias terms propagate.

use crate::error::{Error, Result};
use crate::netcore::Mlp;
use crate::numcore::{mean, pairwise_sum, std_dev, top_right_singular, Matrix, TopSingular};
use crate::objectives::{distance_to_ocs, LossSpec, Ocs};

/// `E‖Wᵢφᵢ(x)‖²` for every linear layer `i` (bias excluded).
pub fn layer_energies(model: &Mlp, inputs: &Matrix) -> Result<Vec<f64>> {
    if inputs.rows() == 0 {
        return Err(Error::arg("no inputs to probe"));
    }
    let reps = model.layer_inputs(inputs)?;
    Ok(reps
        .iter()
        .zip(model.weights())
        .map(|(phi, w)| {
            let wphi = phi.matmul_bt(w);
            let per_sample: Vec<f64> = wphi.row_iter().map(|r| r.iter().map(|v| v * v).sum()).collect();
            pairwise_sum(&per_sample) / per_sample.len() as f64
        })
        .collect())
}

/// `E_ood‖Wᵢφᵢ‖² / E_train‖Wᵢφᵢ‖²` per linear layer.
pub fn norm_ratio(model: &Mlp, train_inputs: &Matrix, ood_inputs: &Matrix) -> Result<Vec<f64>> {
    let train = layer_energies(model, train_inputs)?;
    let ood = layer_energies(model, ood_inputs)?;
    train
        .iter()
        .zip(&ood)
        .enumerate()
        .map(|(layer, (t, o))| {
            if *t > 0.0 {
                Ok(o / t)
            } else {
                Err(Error::DegenerateDenominator { layer })
            }
        })
        .collect()
}

/// Smallest `k` whose leading singular values carry at least `fraction` of `‖W‖_F²`.
pub fn subspace_rank_for_energy(w: &Matrix, fraction: f64) -> Result<usize> {
    let kmax = w.rows().min(w.cols());
    let total = w.frobenius_norm_sq();
    if total == 0.0 {
        return Ok(1);
    }
    let top = top_right_singular(w, kmax)?;
    let mut acc = 0.0;
    for (i, s) in top.sigmas.iter().enumerate() {
        acc += s * s;
        if acc >= fraction * total {
            return Ok(i + 1);
        }
    }
    Ok(kmax)
}

pub const DEFAULT_ENERGY_FRACTION: f64 = 0.9;

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionStats {
    pub layer: usize,
    pub k: usize,
    /// `‖φᵀV_top V_topᵀ‖² / ‖φ‖²` for every sample with a nonzero representation.
    pub ratios: Vec<f64>,
    /// Samples skipped because `φ = 0`.
    pub excluded: usize,
    pub mean: f64,
    pub std: f64,
}

/// Share of each sample's layer-`j` input that lies in the span of the top-`k`
/// right singular vectors of `W_j`. `k = None` picks the 90%-energy rank.
pub fn projection_ratio(model: &Mlp, inputs: &Matrix, layer: usize, k: Option<usize>) -> Result<ProjectionStats> {
    if layer >= model.num_layers() {
        return Err(Error::arg(format!("layer {layer} out of range")));
    }
    let w = model.weight(layer);
    let k = match k {
        Some(k) => k,
        None => subspace_rank_for_energy(w, DEFAULT_ENERGY_FRACTION)?,
    };
    let top = top_right_singular(w, k)?;
    let phi = model.layer_inputs(inputs)?.swap_remove(layer);
    projection_ratios_with_basis(&phi, &top, layer)
}

pub(crate) fn projection_ratios_with_basis(phi: &Matrix, top: &TopSingular, layer: usize) -> Result<ProjectionStats> {
    let coords = phi.matmul(&top.basis);
    let mut ratios = Vec::with_capacity(phi.rows());
    let mut excluded = 0;
    for (row, c) in phi.row_iter().zip(coords.row_iter()) {
        let total: f64 = row.iter().map(|v| v * v).sum();
        if total == 0.0 {
            excluded += 1;
            continue;
        }
        let inside: f64 = c.iter().map(|v| v * v).sum();
        ratios.push((inside / total).clamp(0.0, 1.0));
    }
    if ratios.is_empty() {
        return Err(Error::EmptyResult(format!("every layer-{layer} representation is zero")));
    }
    Ok(ProjectionStats {
        layer,
        k: top.k(),
        mean: mean(&ratios),
        std: std_dev(&ratios),
        ratios,
        excluded,
    })
}

/// Output when the input to linear layer `k` is the zero vector: `g_{k+1}(σ(b_k))`.
pub fn accumulate_constants(model: &Mlp, layer: usize) -> Result<Vec<f64>> {
    if layer >= model.num_layers() {
        return Err(Error::arg(format!(
            "layer {layer} out of range for a {}-layer network",
            model.num_layers()
        )));
    }
    model.forward_from(layer, &vec![0.0; model.layer_sizes()[layer]])
}

/// Default layer choices for a network with `L` linear layers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeSettings {
    /// Layer whose weights define `V_top`; defaults to the penultimate linear layer.
    pub projection_layer: Option<usize>,
    /// Subspace size; defaults to the 90%-energy rank.
    pub subspace_rank: Option<usize>,
    /// Layer whose input is zeroed; defaults to the last hidden layer.
    pub constants_layer: Option<usize>,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            projection_layer: None,
            subspace_rank: None,
            constants_layer: None,
        }
    }
}

impl ProbeSettings {
    pub fn projection_layer_for(&self, model: &Mlp) -> usize {
        self.projection_layer
            .unwrap_or_else(|| model.num_layers().saturating_sub(2))
    }

    pub fn constants_layer_for(&self, model: &Mlp) -> usize {
        self.constants_layer
            .unwrap_or_else(|| model.num_layers().saturating_sub(2))
    }
}

/// The last hidden linear layer, whose ratio the sweep trend checks track.
pub fn final_probe_layer(model: &Mlp) -> usize {
    model.num_layers().saturating_sub(2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    /// One entry per linear layer.
    pub norm_ratios: Vec<f64>,
    pub projection: ProjectionStats,
    pub constants_layer: usize,
    pub constants: Vec<f64>,
    pub constants_distance_to_ocs: f64,
}

pub fn probe_report(
    model: &Mlp,
    train_inputs: &Matrix,
    ood_inputs: &Matrix,
    settings: &ProbeSettings,
    ocs: &Ocs,
    loss: &LossSpec,
) -> Result<ProbeReport> {
    let norm_ratios = norm_ratio(model, train_inputs, ood_inputs)?;
    let projection = projection_ratio(
        model,
        ood_inputs,
        settings.projection_layer_for(model),
        settings.subspace_rank,
    )?;
    let constants_layer = settings.constants_layer_for(model);
    let constants = accumulate_constants(model, constants_layer)?;
    let row = Matrix::new(1, constants.len(), constants.clone())?;
    let constants_distance_to_ocs = distance_to_ocs(&row, ocs, loss)?;
    Ok(ProbeReport {
        norm_ratios,
        projection,
        constants_layer,
        constants,
        constants_distance_to_ocs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::BiasMode;
    use crate::numcore::{jacobi_svd, Rng};

    fn net(seed: u64, bias: bool) -> Mlp {
        let mut rng = Rng::new(seed);
        let m = Mlp::glorot(&[5, 7, 6, 3], BiasMode::All, &mut rng).unwrap();
        let biases = m
            .biases()
            .iter()
            .map(|b| b.iter().map(|_| if bias { rng.normal() * 0.5 } else { 0.0 }).collect())
            .collect();
        Mlp::from_parts(m.weights().to_vec(), biases, BiasMode::All).unwrap()
    }

    fn inputs(n: usize, seed: u64) -> Matrix {
        let mut rng = Rng::new(seed);
        Matrix::from_fn(n, 5, |_, _| rng.normal())
    }

    #[test]
    fn identical_data_gives_unit_ratios() {
        let m = net(1, true);
        let x = inputs(40, 2);
        assert_eq!(norm_ratio(&m, &x, &x).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn zero_inputs_replay() {
        let m = net(3, true);
        let x = inputs(40, 4);
        let zeros = Matrix::zeros(10, 5);
        let r = norm_ratio(&m, &x, &zeros).unwrap();
        assert_eq!(r[0], 0.0);
        // On zero input every sample shares one trace; replay it directly.
        let t = m.forward_trace(&[0.0; 5]).unwrap();
        let train = layer_energies(&m, &x).unwrap();
        for i in 1..3 {
            let wphi = m.weight(i).matvec(&t.representations[i]);
            let e: f64 = wphi.iter().map(|v| v * v).sum();
            assert!((r[i] - e / train[i]).abs() < 1e-12 * (1.0 + r[i]));
        }
    }

    #[test]
    fn degenerate_denominator() {
        let m = net(3, false);
        let z = Matrix::zeros(10, 5);
        assert!(matches!(norm_ratio(&m, &z, &z), Err(Error::DegenerateDenominator { layer: 0 })));
    }

    #[test]
    fn projection_of_in_span_and_orthogonal_vectors() {
        let m = net(5, true);
        let w = m.weight(0);
        let top = top_right_singular(w, 2).unwrap();
        let full = jacobi_svd(w).unwrap();
        let v0 = top.vector(0);
        let v1 = top.vector(1);
        let inside: Vec<f64> = v0.iter().zip(&v1).map(|(a, b)| 0.3 * a - 1.7 * b).collect();
        let outside = full.v.column(4);
        let phi = Matrix::from_rows(&[inside, outside]).unwrap();
        let stats = projection_ratios_with_basis(&phi, &top, 0).unwrap();
        assert!((stats.ratios[0] - 1.0).abs() < 1e-9);
        assert!(stats.ratios[1].abs() < 1e-9);
    }

    #[test]
    fn projection_matches_full_svd_projector() {
        let m = net(6, true);
        let x = inputs(30, 7);
        for layer in 0..3 {
            let k = 2;
            let stats = projection_ratio(&m, &x, layer, Some(k)).unwrap();
            let full = jacobi_svd(m.weight(layer)).unwrap();
            let phi = m.layer_inputs(&x).unwrap().swap_remove(layer);
            let mut oracle = Vec::new();
            for row in phi.row_iter() {
                let total: f64 = row.iter().map(|v| v * v).sum();
                if total == 0.0 {
                    continue;
                }
                let inside: f64 = (0..k)
                    .map(|c| {
                        let v = full.v.column(c);
                        let d: f64 = v.iter().zip(row).map(|(a, b)| a * b).sum();
                        d * d
                    })
                    .sum();
                oracle.push(inside / total);
            }
            assert_eq!(oracle.len(), stats.ratios.len());
            for (a, b) in oracle.iter().zip(&stats.ratios) {
                assert!((a - b).abs() < 1e-8);
            }
            assert_eq!(stats.excluded + stats.ratios.len(), 30);
        }
    }

    #[test]
    fn all_zero_representations_are_an_error() {
        let m = net(8, false);
        assert!(matches!(
            projection_ratio(&m, &Matrix::zeros(4, 5), 1, Some(1)),
            Err(Error::EmptyResult(_))
        ));
    }

    #[test]
    fn constants() {
        let m = net(9, false);
        for k in 0..3 {
            assert_eq!(accumulate_constants(&m, k).unwrap(), vec![0.0; 3]);
        }
        let single = Mlp::from_parts(vec![Matrix::identity(2)], vec![vec![0.5, -2.0]], BiasMode::All).unwrap();
        assert_eq!(accumulate_constants(&single, 0).unwrap(), vec![0.5, -2.0]);
        assert!(accumulate_constants(&single, 1).is_err());
        let m = net(10, true);
        for k in 0..3 {
            let zero = vec![0.0; m.layer_sizes()[k]];
            assert_eq!(accumulate_constants(&m, k).unwrap(), m.forward_from(k, &zero).unwrap());
        }
    }

    #[test]
    fn energy_rank() {
        let w = Matrix::diag(&[3.0, 1.0, 0.1]);
        assert_eq!(subspace_rank_for_energy(&w, 0.85).unwrap(), 1);
        assert_eq!(subspace_rank_for_energy(&w, 0.9).unwrap(), 2);
        assert_eq!(subspace_rank_for_energy(&w, 0.9995).unwrap(), 3);
        assert_eq!(subspace_rank_for_energy(&Matrix::identity(4), 0.9).unwrap(), 4);
    }
}
