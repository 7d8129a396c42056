//! Checkpoint layout (all integers and floats little-endian):
//!
//! ```text
//! "OCSLAB01"            8-byte magic
//! N: u32                metadata length
//! N bytes of UTF-8      key=value lines: layer_sizes, bias_mode, loss, seed, steps
//! per layer:            weights row-major as f64, then bias entries as f64
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use super::mlp::{BiasMode, Mlp};
use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::objectives::LossSpec;

pub const MAGIC: &[u8; 8] = b"OCSLAB01";

const KIND: &str = "checkpoint";

#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointMeta {
    pub loss: LossSpec,
    pub seed: u64,
    pub steps: u64,
}

pub fn encode_checkpoint(model: &Mlp, meta: &CheckpointMeta) -> Vec<u8> {
    let sizes: Vec<String> = model.layer_sizes().iter().map(|s| s.to_string()).collect();
    let text = format!(
        "layer_sizes={}\nbias_mode={}\nloss={}\nseed={}\nsteps={}\n",
        sizes.join(","),
        model.bias_mode(),
        meta.loss,
        meta.seed,
        meta.steps
    );
    let mut out = Vec::with_capacity(12 + text.len() + model.num_parameters() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    for (w, b) in model.weights().iter().zip(model.biases()) {
        for v in w.as_slice().iter().chain(b) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(Mlp, CheckpointMeta)> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(Error::format(KIND, "magic", "expected \"OCSLAB01\""));
    }
    let len_bytes: [u8; 4] = bytes
        .get(8..12)
        .ok_or_else(|| Error::format(KIND, "metadata_length", "file ends before the length field"))?
        .try_into()
        .unwrap();
    let meta_len = u32::from_le_bytes(len_bytes) as usize;
    let meta_bytes = bytes
        .get(12..12 + meta_len)
        .ok_or_else(|| Error::format(KIND, "metadata", format!("file ends inside {meta_len} metadata bytes")))?;
    let text = std::str::from_utf8(meta_bytes).map_err(|_| Error::format(KIND, "metadata", "not valid UTF-8"))?;

    let mut fields = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::format(KIND, "metadata", format!("line {line:?} is not key=value")))?;
        fields.insert(k.trim(), v.trim());
    }
    let get = |key: &'static str| {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| Error::format(KIND, key, "missing"))
    };
    let layer_sizes: Vec<usize> = get("layer_sizes")?
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::format(KIND, "layer_sizes", "not a list of counts"))?;
    if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
        return Err(Error::format(KIND, "layer_sizes", "need at least two positive sizes"));
    }
    let bias_mode: BiasMode = get("bias_mode")?
        .parse()
        .map_err(|_| Error::format(KIND, "bias_mode", "unknown mode"))?;
    let loss: LossSpec = get("loss")?
        .parse()
        .map_err(|e: Error| Error::format(KIND, "loss", e.to_string()))?;
    let seed = get("seed")?
        .parse()
        .map_err(|_| Error::format(KIND, "seed", "not an unsigned integer"))?;
    let steps = get("steps")?
        .parse()
        .map_err(|_| Error::format(KIND, "steps", "not an unsigned integer"))?;
    if loss.output_width() != *layer_sizes.last().unwrap() {
        return Err(Error::format(KIND, "loss", "output width does not match layer_sizes"));
    }

    let mut at = 12 + meta_len;
    let mut read_f64s = |count: usize, field: String| -> Result<Vec<f64>> {
        let end = at + count * 8;
        let chunk = bytes
            .get(at..end)
            .ok_or_else(|| Error::format(KIND, field.clone(), format!("truncated at byte {}", bytes.len())))?;
        at = end;
        Ok(chunk
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for (i, pair) in layer_sizes.windows(2).enumerate() {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let w = read_f64s(fan_in * fan_out, format!("weights[{i}]"))?;
        weights.push(
            Matrix::new(fan_out, fan_in, w).map_err(|e| Error::format(KIND, format!("weights[{i}]"), e.to_string()))?,
        );
        biases.push(read_f64s(fan_out, format!("biases[{i}]"))?);
    }
    if at != bytes.len() {
        return Err(Error::format(KIND, "payload", format!("{} trailing bytes", bytes.len() - at)));
    }
    let model = Mlp::from_parts(weights, biases, bias_mode).map_err(|e| Error::format(KIND, "biases", e.to_string()))?;
    Ok((model, CheckpointMeta { loss, seed, steps }))
}

pub fn save_checkpoint(path: impl AsRef<Path>, model: &Mlp, meta: &CheckpointMeta) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_checkpoint(model, meta)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(Mlp, CheckpointMeta)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
