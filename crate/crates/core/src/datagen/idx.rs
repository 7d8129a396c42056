//! IDX files as used by MNIST: big-endian headers followed by unsigned bytes.

use std::path::Path;

use super::dataset::{Dataset, Targets};
use crate::error::{Error, Result};
use crate::numcore::Matrix;

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

const KIND: &str = "IDX file";

fn be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::format(KIND, format!("offset {offset} ({what})"), "file ends inside the header"))
}

/// Returns `(count, rows, cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, &[u8])> {
    let magic = be_u32(bytes, 0, "magic")?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::format(
            KIND,
            "offset 0 (magic)",
            format!("expected 0x{IDX_IMAGE_MAGIC:08x}, found 0x{magic:08x}"),
        ));
    }
    let n = be_u32(bytes, 4, "count")? as usize;
    let rows = be_u32(bytes, 8, "rows")? as usize;
    let cols = be_u32(bytes, 12, "cols")? as usize;
    let need = n
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::format(KIND, "offset 4 (count)", "image payload size overflows"))?;
    let body = &bytes[16..];
    if body.len() != need {
        return Err(Error::format(
            KIND,
            format!("offset {}", 16 + body.len().min(need)),
            format!("expected {need} pixel bytes, found {}", body.len()),
        ));
    }
    Ok((n, rows, cols, body))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<&[u8]> {
    let magic = be_u32(bytes, 0, "magic")?;
    if magic != IDX_LABEL_MAGIC {
        return Err(Error::format(
            KIND,
            "offset 0 (magic)",
            format!("expected 0x{IDX_LABEL_MAGIC:08x}, found 0x{magic:08x}"),
        ));
    }
    let n = be_u32(bytes, 4, "count")? as usize;
    let body = &bytes[8..];
    if body.len() != n {
        return Err(Error::format(
            KIND,
            format!("offset {}", 8 + body.len().min(n)),
            format!("expected {n} label bytes, found {}", body.len()),
        ));
    }
    Ok(body)
}

/// Images scaled to `[0, 1]` by `/255`; the class count is `max label + 1` (at least 2).
pub fn images_and_labels(images: &[u8], labels: &[u8]) -> Result<Dataset> {
    let (n, rows, cols, pixels) = parse_idx_images(images)?;
    let labels = parse_idx_labels(labels)?;
    if labels.len() != n {
        return Err(Error::format(
            KIND,
            "offset 4 (count)",
            format!("{n} images but {} labels", labels.len()),
        ));
    }
    if n == 0 {
        return Err(Error::format(KIND, "offset 4 (count)", "no images"));
    }
    let data: Vec<f64> = pixels.iter().map(|&p| p as f64 / 255.0).collect();
    let labels: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
    let num_classes = labels.iter().copied().max().unwrap_or(0).max(1) + 1;
    Dataset::new(
        Matrix::new(n, rows * cols, data)?,
        Targets::Classes { labels, num_classes },
        Some((rows, cols)),
    )
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let ip = images_path.as_ref();
    let lp = labels_path.as_ref();
    let images = std::fs::read(ip).map_err(|e| Error::io(ip, e))?;
    let labels = std::fs::read(lp).map_err(|e| Error::io(lp, e))?;
    images_and_labels(&images, &labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn image_file(n: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
        let mut b = Vec::new();
        for v in [IDX_IMAGE_MAGIC, n, rows, cols] {
            b.extend_from_slice(&v.to_be_bytes());
        }
        b.extend_from_slice(pixels);
        b
    }

    pub(crate) fn label_file(labels: &[u8]) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(&IDX_LABEL_MAGIC.to_be_bytes());
        b.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        b.extend_from_slice(labels);
        b
    }

    #[test]
    fn handcrafted_fixture() {
        let d = images_and_labels(&image_file(1, 2, 2, &[0, 255, 128, 64]), &label_file(&[7])).unwrap();
        assert_eq!(d.input(0), &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]);
        assert_eq!(d.image_shape(), Some((2, 2)));
        assert_eq!(d.labels().unwrap(), &[7]);
    }

    #[test]
    fn malformed_inputs() {
        let mut bad = image_file(1, 2, 2, &[0; 4]);
        bad[..4].copy_from_slice(&0u32.to_be_bytes());
        assert!(matches!(parse_idx_images(&bad), Err(Error::Format { ref field, .. }) if field.contains("offset 0")));
        let err = images_and_labels(&image_file(2, 1, 1, &[1, 2]), &label_file(&[0])).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
        let good = image_file(2, 2, 2, &[0; 8]);
        for cut in 0..good.len() {
            assert!(parse_idx_images(&good[..cut]).is_err());
        }
        assert!(parse_idx_labels(&label_file(&[1, 2])[..9]).is_err());
        assert!(parse_idx_labels(&[]).is_err());
    }
}
