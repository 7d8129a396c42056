use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::netcore::Mlp;
use crate::numcore::{Matrix, Rng};
use crate::objectives::{loss_grad, LossSpec};

/// A covariate shift at a fixed strength.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShiftKind {
    /// Counter-clockwise rotation about the image centre.
    Rotation { degrees: f64 },
    GaussNoise { sigma: f64 },
    GaussBlur { sigma: f64 },
    /// Each pixel is replaced by 0 or 1 (equiprobably) with probability `p`.
    ImpulseNoise { p: f64 },
    Fgsm { epsilon: f64 },
}

/// A shift family; `at(level)` fixes the strength.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftFamily {
    Rotation,
    GaussNoise,
    GaussBlur,
    ImpulseNoise,
    Fgsm,
}

impl ShiftFamily {
    pub fn at(self, level: f64) -> ShiftKind {
        match self {
            ShiftFamily::Rotation => ShiftKind::Rotation { degrees: level },
            ShiftFamily::GaussNoise => ShiftKind::GaussNoise { sigma: level },
            ShiftFamily::GaussBlur => ShiftKind::GaussBlur { sigma: level },
            ShiftFamily::ImpulseNoise => ShiftKind::ImpulseNoise { p: level },
            ShiftFamily::Fgsm => ShiftKind::Fgsm { epsilon: level },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShiftFamily::Rotation => "rotation",
            ShiftFamily::GaussNoise => "gauss_noise",
            ShiftFamily::GaussBlur => "gauss_blur",
            ShiftFamily::ImpulseNoise => "impulse_noise",
            ShiftFamily::Fgsm => "fgsm",
        }
    }
}

impl fmt::Display for ShiftFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShiftFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ShiftFamily::Rotation,
            ShiftFamily::GaussNoise,
            ShiftFamily::GaussBlur,
            ShiftFamily::ImpulseNoise,
            ShiftFamily::Fgsm,
        ]
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| Error::arg(format!("unknown shift {s:?}")))
    }
}

impl ShiftKind {
    pub fn family(&self) -> ShiftFamily {
        match self {
            ShiftKind::Rotation { .. } => ShiftFamily::Rotation,
            ShiftKind::GaussNoise { .. } => ShiftFamily::GaussNoise,
            ShiftKind::GaussBlur { .. } => ShiftFamily::GaussBlur,
            ShiftKind::ImpulseNoise { .. } => ShiftFamily::ImpulseNoise,
            ShiftKind::Fgsm { .. } => ShiftFamily::Fgsm,
        }
    }

    pub fn level(&self) -> f64 {
        match *self {
            ShiftKind::Rotation { degrees } => degrees,
            ShiftKind::GaussNoise { sigma } | ShiftKind::GaussBlur { sigma } => sigma,
            ShiftKind::ImpulseNoise { p } => p,
            ShiftKind::Fgsm { epsilon } => epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ShiftKind::Rotation { degrees } => (0.0..360.0).contains(&degrees),
            ShiftKind::GaussNoise { sigma } | ShiftKind::GaussBlur { sigma } => sigma >= 0.0 && sigma.is_finite(),
            ShiftKind::ImpulseNoise { p } => (0.0..=1.0).contains(&p),
            ShiftKind::Fgsm { epsilon } => epsilon >= 0.0 && epsilon.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::arg(format!("shift parameter out of range: {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftSpec {
    pub kind: ShiftKind,
    /// Seeds the stochastic kinds; sample `i` uses the stream `seed ⊕ i`.
    pub seed: u64,
}

impl ShiftSpec {
    pub fn new(kind: ShiftKind, seed: u64) -> Result<Self> {
        kind.validate()?;
        Ok(Self { kind, seed })
    }
}

/// Applies an input-only corruption; targets pass through untouched.
///
/// Image datasets are clamped to `[0, 1]` after noise. FGSM needs a model and
/// goes through [`fgsm`] instead.
pub fn apply_shift(data: &Dataset, shift: &ShiftSpec) -> Result<Dataset> {
    shift.kind.validate()?;
    let shape = data.image_shape();
    let need_image = || {
        shape.ok_or_else(|| Error::arg(format!("{} needs an image-shaped dataset", shift.kind.family())))
    };
    let clamp = shape.is_some();
    let mut out = data.inputs().clone();
    match shift.kind {
        ShiftKind::Rotation { degrees } => {
            let (h, w) = need_image()?;
            if degrees == 0.0 {
                return Ok(data.clone());
            }
            for i in 0..out.rows() {
                let rotated = rotate_image(data.input(i), h, w, degrees);
                out.row_mut(i).copy_from_slice(&rotated);
            }
        }
        ShiftKind::GaussBlur { sigma } => {
            let (h, w) = need_image()?;
            if sigma == 0.0 {
                return Ok(data.clone());
            }
            let kernel = gaussian_kernel(sigma);
            for i in 0..out.rows() {
                let blurred = blur_image(data.input(i), h, w, &kernel);
                out.row_mut(i).copy_from_slice(&blurred);
            }
        }
        ShiftKind::GaussNoise { sigma } => {
            if sigma == 0.0 {
                return Ok(data.clone());
            }
            for i in 0..out.rows() {
                let mut rng = Rng::substream(shift.seed, i);
                for v in out.row_mut(i) {
                    *v += sigma * rng.normal();
                    if clamp {
                        *v = v.clamp(0.0, 1.0);
                    }
                }
            }
        }
        ShiftKind::ImpulseNoise { p } => {
            for i in 0..out.rows() {
                let mut rng = Rng::substream(shift.seed, i);
                for v in out.row_mut(i) {
                    let hit = rng.uniform() < p;
                    let salt = rng.bernoulli(0.5);
                    if hit {
                        *v = if salt { 1.0 } else { 0.0 };
                    }
                }
            }
        }
        ShiftKind::Fgsm { .. } => {
            return Err(Error::arg("FGSM requires a model; call datagen::fgsm"));
        }
    }
    data.with_inputs(out)
}

/// Normalized 1-D Gaussian kernel truncated at radius `⌈3σ⌉`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

fn blur_image(img: &[f64], h: usize, w: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as isize;
    let at = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            tmp[r * w + c] = kernel
                .iter()
                .enumerate()
                .map(|(k, kv)| kv * img[r * w + at(c as isize + k as isize - radius, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            out[r * w + c] = kernel
                .iter()
                .enumerate()
                .map(|(k, kv)| kv * tmp[at(r as isize + k as isize - radius, h) * w + c])
                .sum();
        }
    }
    out
}

/// Bilinear rotation about the image centre; samples falling outside read as 0.
fn rotate_image(img: &[f64], h: usize, w: usize, degrees: f64) -> Vec<f64> {
    let theta = degrees.to_radians();
    let (sin, cos) = theta.sin_cos();
    let cy = (h as f64 - 1.0) / 2.0;
    let cx = (w as f64 - 1.0) / 2.0;
    let pixel = |r: isize, c: isize| -> f64 {
        if r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w {
            img[r as usize * w + c as usize]
        } else {
            0.0
        }
    };
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let dx = c as f64 - cx;
            let dy = r as f64 - cy;
            // inverse map: where did this output pixel come from
            let sx = cos * dx - sin * dy + cx;
            let sy = sin * dx + cos * dy + cy;
            let x0 = sx.floor();
            let y0 = sy.floor();
            let fx = sx - x0;
            let fy = sy - y0;
            let (x0, y0) = (x0 as isize, y0 as isize);
            out[r * w + c] = (1.0 - fy) * ((1.0 - fx) * pixel(y0, x0) + fx * pixel(y0, x0 + 1))
                + fy * ((1.0 - fx) * pixel(y0 + 1, x0) + fx * pixel(y0 + 1, x0 + 1));
        }
    }
    out
}

/// One-step FGSM: `x' = x + ε·sign(∇ₓ loss)`, clamped to `[0, 1]` for image data.
pub fn fgsm(model: &Mlp, loss: &LossSpec, data: &Dataset, epsilon: f64) -> Result<Dataset> {
    if !(epsilon >= 0.0) {
        return Err(Error::arg("epsilon must be non-negative"));
    }
    if model.input_dim() != data.dim() {
        return Err(Error::arg("model input width does not match the dataset"));
    }
    if epsilon == 0.0 {
        return Ok(data.clone());
    }
    let clamp = data.image_shape().is_some();
    let targets = data.target_list();
    let mut out = data.inputs().clone();
    const CHUNK: usize = 256;
    for start in (0..data.len()).step_by(CHUNK) {
        let idx: Vec<usize> = (start..(start + CHUNK).min(data.len())).collect();
        let x = data.inputs().select_rows(&idx);
        let bw = model.backward_with(&x, true, |i, o| loss_grad(loss, o, targets[idx[i]]))?;
        let g = bw.input_grads.expect("input gradients requested");
        if !g.is_finite() {
            return Err(Error::Numeric("FGSM input gradient is not finite".into()));
        }
        for (k, &i) in idx.iter().enumerate() {
            for (v, gv) in out.row_mut(i).iter_mut().zip(g.row(k)) {
                let step = if *gv > 0.0 {
                    epsilon
                } else if *gv < 0.0 {
                    -epsilon
                } else {
                    0.0
                };
                *v += step;
                if clamp {
                    *v = v.clamp(0.0, 1.0);
                }
            }
        }
    }
    data.with_inputs(Matrix::new(out.rows(), out.cols(), out.into_vec())?)
}
