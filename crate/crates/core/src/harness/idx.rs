//! IDX binary ingestion (the MNIST container format).
//!
//! Big-endian layout: a 4-byte magic (0x00, 0x00, dtype, ndim), one u32 per
//! dimension, then the raw payload. Images use magic 0x00000803 (ubyte,
//! 3 dims), labels 0x00000801 (ubyte, 1 dim).

use std::path::Path;

use crate::error::Error;
use crate::simplex::{ClassLabel, Dataset, Sample};
use crate::Result;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Loads an IDX image/label pair into a dataset; pixel features are scaled
/// to [0, 1] and flattened row-major.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images_raw = std::fs::read(images_path)?;
    let labels_raw = std::fs::read(labels_path)?;

    let (image_dims, image_payload) = parse_header(&images_raw, IMAGES_MAGIC, 3)?;
    let (label_dims, label_payload) = parse_header(&labels_raw, LABELS_MAGIC, 1)?;

    let n = image_dims[0] as usize;
    let rows = image_dims[1] as usize;
    let cols = image_dims[2] as usize;
    if label_dims[0] as usize != n {
        return Err(Error::Format {
            offset: 4,
            message: format!(
                "image count {n} does not match label count {}",
                label_dims[0]
            ),
        });
    }
    let pixels = rows * cols;
    if image_payload.len() != n * pixels {
        return Err(Error::Format {
            offset: 16 + image_payload.len(),
            message: format!(
                "image payload has {} bytes, expected {}",
                image_payload.len(),
                n * pixels
            ),
        });
    }
    if label_payload.len() != n {
        return Err(Error::Format {
            offset: 8 + label_payload.len(),
            message: format!("label payload has {} bytes, expected {n}", label_payload.len()),
        });
    }

    let k = (label_payload.iter().copied().max().unwrap_or(0) as usize + 1).max(2);
    let samples = (0..n)
        .map(|i| {
            let features = image_payload[i * pixels..(i + 1) * pixels]
                .iter()
                .map(|&b| b as f64 / 255.0)
                .collect();
            Ok(Sample::clean(
                features,
                ClassLabel::new(label_payload[i] as usize, k)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples, k, pixels)
}

/// Parses the magic and dimension words; returns (dims, payload).
fn parse_header(raw: &[u8], expected_magic: u32, ndim: usize) -> Result<(Vec<u32>, &[u8])> {
    if raw.len() < 4 {
        return Err(Error::Format {
            offset: raw.len(),
            message: "file truncated before magic number".into(),
        });
    }
    let magic = u32::from_be_bytes([raw[0], raw[1], raw[2], raw[3]]);
    if magic != expected_magic {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}"),
        });
    }
    let header_len = 4 + 4 * ndim;
    if raw.len() < header_len {
        return Err(Error::Format {
            offset: raw.len(),
            message: format!("file truncated inside header (need {header_len} bytes)"),
        });
    }
    let dims: Vec<u32> = (0..ndim)
        .map(|d| {
            let o = 4 + 4 * d;
            u32::from_be_bytes([raw[o], raw[o + 1], raw[o + 2], raw[o + 3]])
        })
        .collect();
    Ok((dims, &raw[header_len..]))
}

/// Writes an IDX image/label pair (test fixtures and round-trip checks).
pub fn write_idx(
    images_path: &Path,
    labels_path: &Path,
    images: &[Vec<u8>],
    labels: &[u8],
    rows: usize,
    cols: usize,
) -> Result<()> {
    if images.len() != labels.len() {
        return Err(Error::InvalidInput(
            "image and label counts must match".into(),
        ));
    }
    let mut img = Vec::with_capacity(16 + images.len() * rows * cols);
    img.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    img.extend_from_slice(&(images.len() as u32).to_be_bytes());
    img.extend_from_slice(&(rows as u32).to_be_bytes());
    img.extend_from_slice(&(cols as u32).to_be_bytes());
    for image in images {
        if image.len() != rows * cols {
            return Err(Error::InvalidInput("image size mismatch".into()));
        }
        img.extend_from_slice(image);
    }
    let mut lbl = Vec::with_capacity(8 + labels.len());
    lbl.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    lbl.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lbl.extend_from_slice(labels);
    std::fs::write(images_path, img)?;
    std::fs::write(labels_path, lbl)?;
    Ok(())
}
