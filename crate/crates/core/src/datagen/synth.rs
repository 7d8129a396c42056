use super::dataset::{Dataset, Targets};
use crate::error::{Error, Result};
use crate::numcore::{Matrix, Rng};

/// Gaussian blobs: class `c` is centred at `separation·μ_c` for a random unit
/// vector `μ_c`, with unit isotropic spread. Samples are stored class by class.
pub fn make_blobs(num_classes: usize, d: usize, per_class: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if per_class == 0 {
        return Err(Error::arg("per_class must be positive"));
    }
    if num_classes < 2 || d == 0 {
        return Err(Error::arg("need at least two classes and one dimension"));
    }
    if !(separation >= 0.0) {
        return Err(Error::arg("separation must be non-negative"));
    }
    let mut rng = Rng::new(seed);
    let centers: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| separation * x / n).collect()
        })
        .collect();
    let n = num_classes * per_class;
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            data.extend(center.iter().map(|m| m + rng.normal()));
            labels.push(c);
        }
    }
    Dataset::new(Matrix::new(n, d, data)?, Targets::Classes { labels, num_classes }, None)
}

pub const GLYPH_SIDE: usize = 8;

/// Upright digit shapes, 7 rows by 4 columns, drawn in the top-centre of the canvas.
const GLYPHS: [[&str; 8]; 10] = [
    ["...##...", "..#..#..", "..#..#..", "..#..#..", "..#..#..", "..#..#..", "...##...", "........"],
    ["....#...", "...##...", "....#...", "....#...", "....#...", "....#...", "...###..", "........"],
    ["...##...", "..#..#..", ".....#..", "....#...", "...#....", "..#.....", "..####..", "........"],
    ["..###...", ".....#..", ".....#..", "...##...", ".....#..", ".....#..", "..###...", "........"],
    ["..#..#..", "..#..#..", "..#..#..", "..####..", ".....#..", ".....#..", ".....#..", "........"],
    ["..####..", "..#.....", "..###...", ".....#..", ".....#..", "..#..#..", "...##...", "........"],
    ["...##...", "..#.....", "..#.....", "..###...", "..#..#..", "..#..#..", "...##...", "........"],
    ["..####..", ".....#..", "....#...", "....#...", "...#....", "...#....", "...#....", "........"],
    ["...##...", "..#..#..", "..#..#..", "...##...", "..#..#..", "..#..#..", "...##...", "........"],
    ["...##...", "..#..#..", "..#..#..", "...###..", ".....#..", ".....#..", "...##...", "........"],
];

/// The clean 8×8 digit-like template for class `c` (row-major, values 0 or 1).
pub fn glyph_prototype(c: usize) -> Vec<f64> {
    GLYPHS[c]
        .iter()
        .flat_map(|row| row.bytes().map(|b| if b == b'#' { 1.0 } else { 0.0 }))
        .collect()
}

/// Parameters of the synthetic digit-like image dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlyphConfig {
    /// At most 10.
    pub num_classes: usize,
    pub per_class: usize,
    /// Maximum translation in pixels along each axis.
    pub max_shift: usize,
    /// Stroke intensity is drawn uniformly from `[min_intensity, 1]`.
    pub min_intensity: f64,
    /// Standard deviation of additive noise on stroke pixels (clamped to `[0, 1]`).
    /// The background stays exactly 0.
    pub pixel_noise: f64,
    /// Regression target noise at full stroke intensity; fainter glyphs get
    /// proportionally noisier targets (`label_noise / intensity`).
    pub label_noise: f64,
    pub regression: bool,
    pub seed: u64,
}

impl Default for GlyphConfig {
    fn default() -> Self {
        Self {
            num_classes: 10,
            per_class: 200,
            max_shift: 0,
            min_intensity: 0.7,
            pixel_noise: 0.1,
            label_noise: 0.5,
            regression: false,
            seed: 0,
        }
    }
}

/// Jittered, noisy renderings of [`glyph_prototype`] templates on an 8×8 canvas.
///
/// With `regression` set, the target of a class-`c` image with stroke intensity `a`
/// is `c + N(0, (label_noise / a)²)`.
pub fn make_glyphs(cfg: &GlyphConfig) -> Result<Dataset> {
    if cfg.num_classes < 2 || cfg.num_classes > GLYPHS.len() {
        return Err(Error::arg(format!("glyph datasets support 2..=10 classes, got {}", cfg.num_classes)));
    }
    if cfg.per_class == 0 {
        return Err(Error::arg("per_class must be positive"));
    }
    if !(0.0..=1.0).contains(&cfg.min_intensity) || !(cfg.pixel_noise >= 0.0) || !(cfg.label_noise >= 0.0) {
        return Err(Error::arg("invalid glyph intensity or noise settings"));
    }
    let side = GLYPH_SIDE;
    let mut rng = Rng::new(cfg.seed);
    let n = cfg.num_classes * cfg.per_class;
    let mut data = Vec::with_capacity(n * side * side);
    let mut labels = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let span = 2 * cfg.max_shift + 1;
    for c in 0..cfg.num_classes {
        let proto = glyph_prototype(c);
        for _ in 0..cfg.per_class {
            let dx = rng.below(span) as isize - cfg.max_shift as isize;
            let dy = rng.below(span) as isize - cfg.max_shift as isize;
            let intensity = rng.uniform_in(cfg.min_intensity, 1.0);
            for r in 0..side as isize {
                for col in 0..side as isize {
                    let (sr, sc) = (r - dy, col - dx);
                    let base = if (0..side as isize).contains(&sr) && (0..side as isize).contains(&sc) {
                        proto[sr as usize * side + sc as usize] * intensity
                    } else {
                        0.0
                    };
                    let noise = cfg.pixel_noise * rng.normal();
                    data.push(if base > 0.0 { (base + noise).clamp(0.0, 1.0) } else { 0.0 });
                }
            }
            labels.push(c);
            values.push(c as f64 + cfg.label_noise / intensity * rng.normal());
        }
    }
    let targets = if cfg.regression {
        Targets::Values(values)
    } else {
        Targets::Classes {
            labels,
            num_classes: cfg.num_classes,
        }
    };
    Dataset::new(Matrix::new(n, side * side, data)?, targets, Some((side, side)))
}
