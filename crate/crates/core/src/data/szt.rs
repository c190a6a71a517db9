//! The 12-bit binary SZT task.
//!
//! Text format: one sample per line, twelve `0`/`1` characters, a separator
//! (whitespace or comma) and the label `0` or `1`. Blank lines and lines
//! starting with `#` are skipped.
//!
//! The stand-in generator places the twelve input bits on the vertices of a
//! regular icosahedron (bit-to-vertex assignment shuffled by the seed) and
//! scores a pattern by the squared norm of the sum of its active vertices.
//! That score is invariant under rotations of the sphere mapping the
//! icosahedron onto itself. Label 1 is assigned above the median score.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{io_err, DataError, LabeledDataset, Result};

pub const SZT_WIDTH: usize = 12;
pub const SZT_SAMPLES: usize = 4096;
pub const SZT_CLASSES: usize = 2;

pub fn load_szt(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut seen = HashSet::new();
    let mut values = Vec::with_capacity(SZT_SAMPLES * SZT_WIDTH);
    let mut labels = Vec::with_capacity(SZT_SAMPLES);
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty());
        let bits = fields.next().unwrap_or_default();
        let label = fields.next();
        if label.is_none() || fields.next().is_some() {
            return Err(DataError::Malformed { line: line_no });
        }
        if bits.chars().count() != SZT_WIDTH {
            return Err(DataError::SztDimension {
                line: line_no,
                expected: SZT_WIDTH,
                found: bits.chars().count(),
            });
        }
        let mut key = 0u16;
        for (j, c) in bits.chars().enumerate() {
            let v = match c {
                '0' => 0.0,
                '1' => {
                    key |= 1 << j;
                    1.0
                }
                other => {
                    return Err(DataError::SztDomain {
                        line: line_no,
                        value: other.to_string(),
                    })
                }
            };
            values.push(v);
        }
        let label = match label {
            Some("0") => 0,
            Some("1") => 1,
            Some(other) => {
                return Err(DataError::SztDomain {
                    line: line_no,
                    value: other.to_string(),
                })
            }
            None => unreachable!(),
        };
        if !seen.insert(key) {
            return Err(DataError::DuplicatePattern { line: line_no });
        }
        labels.push(label);
    }
    if labels.len() != SZT_SAMPLES {
        return Err(DataError::SampleCount {
            expected: SZT_SAMPLES,
            found: labels.len(),
        });
    }
    let inputs = Array2::from_shape_vec((labels.len(), SZT_WIDTH), values).expect("row-major buffer");
    LabeledDataset::new("szt", inputs, labels, SZT_CLASSES)
}

pub fn write_szt(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if dataset.input_dim() != SZT_WIDTH {
        return Err(DataError::Inconsistent(format!("SZT rows need {SZT_WIDTH} inputs")));
    }
    let mut out = String::with_capacity(dataset.len() * 15);
    for (row, label) in dataset.inputs.rows().into_iter().zip(&dataset.labels) {
        for &v in row {
            out.push(if v > 0.5 { '1' } else { '0' });
        }
        let _ = writeln!(out, " {label}");
    }
    fs::write(path, out).map_err(io_err(path))
}

fn icosahedron() -> [[f64; 3]; 12] {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let norm = (1.0 + phi * phi).sqrt();
    let mut v = [[0.0; 3]; 12];
    let mut i = 0;
    for a in [1.0, -1.0] {
        for b in [phi, -phi] {
            for p in [[0.0, a, b], [a, b, 0.0], [b, 0.0, a]] {
                v[i] = [p[0] / norm, p[1] / norm, p[2] / norm];
                i += 1;
            }
        }
    }
    v
}

/// Squared norm of the sum of the vertices selected by `bits`, where bit `j`
/// sits on vertex `assignment[j]`.
pub fn szt_score(bits: u16, assignment: &[usize; SZT_WIDTH]) -> f64 {
    let verts = icosahedron();
    let mut sum = [0.0; 3];
    for (j, &vertex) in assignment.iter().enumerate() {
        if bits >> j & 1 == 1 {
            for k in 0..3 {
                sum[k] += verts[vertex][k];
            }
        }
    }
    sum.iter().map(|c| c * c).sum()
}

/// All 4096 12-bit patterns, labelled by thresholding [`szt_score`] at the
/// cut whose positive fraction is closest to one half.
pub fn generate_szt_standin(seed: u64) -> LabeledDataset {
    let mut assignment: [usize; SZT_WIDTH] = std::array::from_fn(|i| i);
    assignment.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    // scores are rounded so equal scores compare equal despite summation order
    let scores: Vec<i64> = (0..SZT_SAMPLES as u16)
        .map(|b| (szt_score(b, &assignment) * 1e9).round() as i64)
        .collect();
    let mut distinct = scores.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let threshold = distinct
        .iter()
        .copied()
        .min_by_key(|&t| {
            let pos = scores.iter().filter(|&&s| s > t).count() as i64;
            (2 * pos - SZT_SAMPLES as i64).abs()
        })
        .expect("non-empty score set");

    let inputs = Array2::from_shape_fn((SZT_SAMPLES, SZT_WIDTH), |(i, j)| ((i >> j) & 1) as f64);
    let labels = scores.iter().map(|&s| usize::from(s > threshold)).collect();
    LabeledDataset::new("szt-standin", inputs, labels, SZT_CLASSES).expect("consistent by construction")
}
