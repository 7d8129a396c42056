use crate::error::{Error, Result};
use crate::numcore::{Matrix, Rng};
use crate::objectives::{Target, TrainingTargets};

#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    Classes { labels: Vec<usize>, num_classes: usize },
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes { labels, .. } => labels.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Target {
        match self {
            Targets::Classes { labels, .. } => Target::Class(labels[i]),
            Targets::Values(v) => Target::Value(v[i]),
        }
    }

    fn select(&self, idx: &[usize]) -> Self {
        match self {
            Targets::Classes { labels, num_classes } => Targets::Classes {
                labels: idx.iter().map(|&i| labels[i]).collect(),
                num_classes: *num_classes,
            },
            Targets::Values(v) => Targets::Values(idx.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Inputs (one row per sample) with their targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: Matrix,
    targets: Targets,
    image_shape: Option<(usize, usize)>,
}

impl Dataset {
    pub fn new(inputs: Matrix, targets: Targets, image_shape: Option<(usize, usize)>) -> Result<Self> {
        if inputs.rows() == 0 {
            return Err(Error::arg("dataset must contain at least one sample"));
        }
        if targets.len() != inputs.rows() {
            return Err(Error::arg(format!(
                "{} inputs but {} targets",
                inputs.rows(),
                targets.len()
            )));
        }
        if !inputs.is_finite() {
            return Err(Error::Numeric("dataset inputs must be finite".into()));
        }
        match &targets {
            Targets::Classes { labels, num_classes } => {
                if let Some(&y) = labels.iter().find(|&&y| y >= *num_classes) {
                    return Err(Error::arg(format!("label {y} outside {num_classes} classes")));
                }
            }
            Targets::Values(v) => {
                if v.iter().any(|y| !y.is_finite()) {
                    return Err(Error::Numeric("regression targets must be finite".into()));
                }
            }
        }
        if let Some((h, w)) = image_shape {
            if h * w != inputs.cols() {
                return Err(Error::arg(format!(
                    "image shape {h}x{w} does not match input width {}",
                    inputs.cols()
                )));
            }
        }
        Ok(Self {
            inputs,
            targets,
            image_shape,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn input(&self, i: usize) -> &[f64] {
        self.inputs.row(i)
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn target(&self, i: usize) -> Target {
        self.targets.get(i)
    }

    pub fn target_list(&self) -> Vec<Target> {
        (0..self.len()).map(|i| self.target(i)).collect()
    }

    pub fn image_shape(&self) -> Option<(usize, usize)> {
        self.image_shape
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match &self.targets {
            Targets::Classes { labels, .. } => Some(labels),
            Targets::Values(_) => None,
        }
    }

    pub fn num_classes(&self) -> Option<usize> {
        match &self.targets {
            Targets::Classes { num_classes, .. } => Some(*num_classes),
            Targets::Values(_) => None,
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match &self.targets {
            Targets::Values(v) => Some(v),
            Targets::Classes { .. } => None,
        }
    }

    /// Supervision in the form [`crate::objectives::compute_ocs`] expects.
    pub fn training_targets(&self) -> TrainingTargets<'_> {
        match &self.targets {
            Targets::Classes { labels, .. } => TrainingTargets::Labels(labels),
            Targets::Values(v) => TrainingTargets::Values(v),
        }
    }

    pub fn with_targets(&self, targets: Targets) -> Result<Self> {
        Self::new(self.inputs.clone(), targets, self.image_shape)
    }

    /// Same targets and image shape, new inputs.
    pub fn with_inputs(&self, inputs: Matrix) -> Result<Self> {
        if inputs.shape() != self.inputs.shape() {
            return Err(Error::arg("replacement inputs must keep the dataset shape"));
        }
        Self::new(inputs, self.targets.clone(), self.image_shape)
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.inputs.select_rows(indices),
            self.targets.select(indices),
            self.image_shape,
        )
    }

    /// Seeded shuffle split into `(rest, holdout)` with `round(len·holdout_frac)` held out.
    pub fn split(&self, holdout_frac: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&holdout_frac) {
            return Err(Error::arg("holdout fraction must lie in [0, 1)"));
        }
        let n = self.len();
        let n_hold = ((n as f64) * holdout_frac).round() as usize;
        if n_hold == 0 || n_hold == n {
            return Err(Error::arg(format!("cannot hold out {n_hold} of {n} samples")));
        }
        let perm = Rng::new(seed).permutation(n);
        let (hold, rest) = perm.split_at(n_hold);
        Ok((self.subset(rest)?, self.subset(hold)?))
    }
}
