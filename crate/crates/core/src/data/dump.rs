//! Binary activation dumps (`IPBD`).
//!
//! Layout, all little-endian:
//!
//! ```text
//! "IPBD"  version: u16  N: u64  d: u32  C: u32
//! N × ceil(d/64) u64 pattern words (bit 0 of word 0 = neuron 0)
//! N × u16 labels
//! ```

use std::fs;
use std::path::Path;

use super::{io_err, DataError, Result};
use crate::pattern::{words_for, PatternBatch};

pub const DUMP_MAGIC: &[u8; 4] = b"IPBD";
pub const DUMP_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 8 + 4 + 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivationDump {
    pub class_count: u32,
    pub patterns: PatternBatch,
    pub labels: Vec<u32>,
}

impl ActivationDump {
    pub fn new(patterns: PatternBatch, labels: Vec<u32>, class_count: u32) -> Result<Self> {
        if patterns.len() != labels.len() {
            return Err(DataError::CountMismatch {
                images: patterns.len(),
                labels: labels.len(),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= class_count || l > u16::MAX as u32) {
            return Err(DataError::LabelOutOfRange {
                label: l as usize,
                classes: class_count as usize,
            });
        }
        Ok(Self {
            class_count,
            patterns,
            labels,
        })
    }

    pub fn sample_count(&self) -> usize {
        self.labels.len()
    }

    pub fn width(&self) -> usize {
        self.patterns.width()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.sample_count();
        let mut out = Vec::with_capacity(HEADER_LEN + n * (8 * self.patterns.words_per_pattern() + 2));
        out.extend_from_slice(DUMP_MAGIC);
        out.extend_from_slice(&DUMP_VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        out.extend_from_slice(&(self.width() as u32).to_le_bytes());
        out.extend_from_slice(&self.class_count.to_le_bytes());
        for w in self.patterns.as_words() {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for &l in &self.labels {
            out.extend_from_slice(&(l as u16).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(path: &Path, bytes: &[u8]) -> Result<Self> {
        let truncated = |expected: usize| DataError::Truncated {
            path: path.to_path_buf(),
            expected,
            found: bytes.len(),
        };
        if bytes.len() < HEADER_LEN {
            return Err(truncated(HEADER_LEN));
        }
        if &bytes[..4] != DUMP_MAGIC {
            return Err(DataError::BadMagic {
                path: path.to_path_buf(),
                expected: u32::from_be_bytes(*DUMP_MAGIC),
                found: u32::from_be_bytes(bytes[..4].try_into().expect("four bytes")),
            });
        }
        let version = u16::from_le_bytes(bytes[4..6].try_into().expect("two bytes"));
        if version != DUMP_VERSION {
            return Err(DataError::UnsupportedVersion(version));
        }
        let n = u64::from_le_bytes(bytes[6..14].try_into().expect("eight bytes")) as usize;
        let width = u32::from_le_bytes(bytes[14..18].try_into().expect("four bytes")) as usize;
        let class_count = u32::from_le_bytes(bytes[18..22].try_into().expect("four bytes"));
        if width == 0 {
            return Err(DataError::Inconsistent("pattern width is zero".into()));
        }
        let stride = words_for(width);
        let expected = n
            .checked_mul(8 * stride + 2)
            .and_then(|p| p.checked_add(HEADER_LEN))
            .ok_or_else(|| DataError::Inconsistent("sample count overflows".into()))?;
        if bytes.len() < expected {
            return Err(truncated(expected));
        }
        if bytes.len() > expected {
            return Err(DataError::TrailingBytes {
                path: path.to_path_buf(),
                extra: bytes.len() - expected,
            });
        }

        let mut patterns = PatternBatch::with_capacity(width, n);
        let mut words = vec![0u64; stride];
        let payload = &bytes[HEADER_LEN..HEADER_LEN + n * stride * 8];
        for rec in payload.chunks_exact(stride * 8) {
            for (w, b) in words.iter_mut().zip(rec.chunks_exact(8)) {
                *w = u64::from_le_bytes(b.try_into().expect("eight bytes"));
            }
            patterns.push_words(&words);
        }
        let labels = bytes[HEADER_LEN + n * stride * 8..]
            .chunks_exact(2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]) as u32)
            .collect();
        Self::new(patterns, labels, class_count)
    }
}

pub fn write_activation_dump(dump: &ActivationDump, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, dump.to_bytes()).map_err(io_err(path))
}

pub fn read_activation_dump(path: impl AsRef<Path>) -> Result<ActivationDump> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    ActivationDump::from_bytes(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_samples_ten_bits_layout() {
        let dump = ActivationDump::new(PatternBatch::from_u64s(10, &[1, 0x3ff, 0x200]), vec![0, 1, 2], 3).unwrap();
        let bytes = dump.to_bytes();
        assert_eq!(bytes.len(), 22 + 3 * 8 + 3 * 2);
        assert_eq!(&bytes[..4], b"IPBD");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..14], &3u64.to_le_bytes());
        assert_eq!(&bytes[14..18], &10u32.to_le_bytes());
        assert_eq!(&bytes[18..22], &3u32.to_le_bytes());
        assert_eq!(&bytes[30..38], &0x3ffu64.to_le_bytes());
        assert_eq!(&bytes[46..52], &[0, 0, 1, 0, 2, 0]);
    }

    #[test]
    fn truncated_and_corrupt() {
        let p = Path::new("mem");
        let mut batch = PatternBatch::new(70);
        batch.push_words(&[5, 1]);
        batch.push_words(&[6, 0]);
        let dump = ActivationDump::new(batch, vec![0, 1], 2).unwrap();
        let bytes = dump.to_bytes();
        assert!(matches!(
            ActivationDump::from_bytes(p, &bytes[..bytes.len() - 1]),
            Err(DataError::Truncated { .. })
        ));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(
            ActivationDump::from_bytes(p, &extra),
            Err(DataError::TrailingBytes { .. })
        ));
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(
            ActivationDump::from_bytes(p, &magic),
            Err(DataError::BadMagic { .. })
        ));
        let mut version = bytes;
        version[4] = 9;
        assert!(matches!(
            ActivationDump::from_bytes(p, &version),
            Err(DataError::UnsupportedVersion(9))
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("acts.ipbd");
        let dump = ActivationDump::new(PatternBatch::from_u64s(4, &[1, 2, 3]), vec![1, 1, 0], 2).unwrap();
        write_activation_dump(&dump, &path).unwrap();
        assert_eq!(read_activation_dump(&path).unwrap(), dump);
    }

    proptest! {
        #[test]
        fn round_trip(width in 1usize..=192, rows in prop::collection::vec((any::<u64>(), any::<u64>(), any::<u64>(), 0u32..7), 0..20)) {
            let mut batch = PatternBatch::new(width);
            for (a, b, c, _) in &rows {
                batch.push_words(&[*a, *b, *c][..words_for(width)]);
            }
            let labels = rows.iter().map(|r| r.3).collect();
            let dump = ActivationDump::new(batch, labels, 7).unwrap();
            let back = ActivationDump::from_bytes(Path::new("mem"), &dump.to_bytes()).unwrap();
            prop_assert_eq!(back, dump);
        }
    }
}
