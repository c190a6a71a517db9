use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{io_err, DataError, LabeledDataset, Result};

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;
pub const IDX_CLASS_COUNT: usize = 10;

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().expect("four bytes"))
}

fn check_len(path: &Path, bytes: &[u8], expected: usize) -> Result<()> {
    if bytes.len() < expected {
        return Err(DataError::Truncated {
            path: path.to_path_buf(),
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(DataError::TrailingBytes {
            path: path.to_path_buf(),
            extra: bytes.len() - expected,
        });
    }
    Ok(())
}

fn check_magic(path: &Path, bytes: &[u8], header: usize, expected: u32) -> Result<()> {
    if bytes.len() >= 4 {
        let found = be_u32(bytes, 0);
        if found != expected {
            return Err(DataError::BadMagic {
                path: path.to_path_buf(),
                expected,
                found,
            });
        }
    }
    if bytes.len() < header {
        return Err(DataError::Truncated {
            path: path.to_path_buf(),
            expected: header,
            found: bytes.len(),
        });
    }
    Ok(())
}

/// Loads an IDX image/label pair. Pixels are scaled to `[0, 1]` and images
/// are flattened row-major.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<LabeledDataset> {
    load_idx_limited(images_path, labels_path, None)
}

/// Like [`load_idx`], keeping only the first `limit` samples when given.
/// Both files are still validated in full.
pub fn load_idx_limited(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    limit: Option<usize>,
) -> Result<LabeledDataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let img = fs::read(images_path).map_err(io_err(images_path))?;
    let lab = fs::read(labels_path).map_err(io_err(labels_path))?;

    check_magic(images_path, &img, 16, IDX_IMAGE_MAGIC)?;
    let n_images = be_u32(&img, 4) as usize;
    let rows = be_u32(&img, 8) as usize;
    let cols = be_u32(&img, 12) as usize;
    let dim = rows * cols;
    check_len(images_path, &img, 16 + n_images * dim)?;

    check_magic(labels_path, &lab, 8, IDX_LABEL_MAGIC)?;
    let n_labels = be_u32(&lab, 4) as usize;
    check_len(labels_path, &lab, 8 + n_labels)?;

    if n_images != n_labels {
        return Err(DataError::CountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }
    let labels: Vec<usize> = lab[8..].iter().map(|&b| b as usize).collect();
    if let Some(&label) = labels.iter().find(|&&l| l >= IDX_CLASS_COUNT) {
        return Err(DataError::LabelOutOfRange {
            label,
            classes: IDX_CLASS_COUNT,
        });
    }

    let n = limit.map_or(n_images, |l| l.min(n_images));
    let pixels = &img[16..16 + n * dim];
    let inputs = Array2::from_shape_vec((n, dim), pixels.iter().map(|&p| p as f64 / 255.0).collect())
        .expect("buffer length matches shape");
    let name = images_path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".to_string());
    LabeledDataset::new(name, inputs, labels[..n].to_vec(), IDX_CLASS_COUNT)
}

#[cfg(test)]
pub(crate) fn encode_idx(images: &[Vec<u8>], rows: u32, cols: u32, labels: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let mut img = Vec::new();
    img.extend_from_slice(&IDX_IMAGE_MAGIC.to_be_bytes());
    img.extend_from_slice(&(images.len() as u32).to_be_bytes());
    img.extend_from_slice(&rows.to_be_bytes());
    img.extend_from_slice(&cols.to_be_bytes());
    for im in images {
        img.extend_from_slice(im);
    }
    let mut lab = Vec::new();
    lab.extend_from_slice(&IDX_LABEL_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lab.extend_from_slice(labels);
    (img, lab)
}
