//! Datasets: synthetic blobs and glyph images, IDX ingestion, covariate shifts
//! and FGSM adversarial inputs.

mod dataset;
mod idx;
mod shift;
mod synth;

pub use dataset::{Dataset, Targets};
pub use idx::{images_and_labels, load_idx, parse_idx_images, parse_idx_labels, IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC};
pub use shift::{apply_shift, fgsm, gaussian_kernel, ShiftFamily, ShiftKind, ShiftSpec};
pub use synth::{glyph_prototype, make_blobs, make_glyphs, GlyphConfig, GLYPH_SIDE};
