//! Bit-packed binary activation vectors.
//!
//! Bit `i` of a pattern lives in word `i / 64` at position `i % 64`
//! (least-significant bit first). Bits at positions `>= width` are always
//! zero, so equality and hashing can work directly on the words.

use std::fmt;

const WORD_BITS: usize = 64;

/// Number of 64-bit words needed to hold `width` bits.
#[inline]
pub fn words_for(width: usize) -> usize {
    width.div_ceil(WORD_BITS)
}

#[inline]
fn tail_mask(width: usize) -> u64 {
    match width % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryPattern {
    width: usize,
    words: Box<[u64]>,
}

impl BinaryPattern {
    /// All-zero pattern of the given width.
    pub fn zeros(width: usize) -> Self {
        assert!(width >= 1, "pattern width must be at least 1");
        Self {
            width,
            words: vec![0; words_for(width)].into_boxed_slice(),
        }
    }

    /// Builds a pattern from packed words, clearing any bits beyond `width`.
    pub fn from_words(width: usize, words: &[u64]) -> Self {
        assert!(width >= 1, "pattern width must be at least 1");
        assert_eq!(words.len(), words_for(width), "word count does not match width");
        let mut words: Box<[u64]> = words.into();
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(width);
        }
        Self { width, words }
    }

    /// Builds a pattern whose low bits are taken from `value`.
    pub fn from_u64(width: usize, value: u64) -> Self {
        let mut words = vec![0u64; words_for(width)];
        words[0] = value;
        Self::from_words(width, &words)
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut p = Self::zeros(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            p.set(i, b);
        }
        p
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, bit: usize) -> bool {
        assert!(bit < self.width);
        (self.words[bit / WORD_BITS] >> (bit % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, bit: usize, value: bool) {
        assert!(bit < self.width);
        let w = &mut self.words[bit / WORD_BITS];
        let m = 1u64 << (bit % WORD_BITS);
        if value {
            *w |= m;
        } else {
            *w &= !m;
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }
}

impl fmt::Debug for BinaryPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // printed most-significant bit first, like a binary literal
        write!(f, "0b")?;
        for i in (0..self.width).rev() {
            write!(f, "{}", self.get(i) as u8)?;
        }
        Ok(())
    }
}

/// `N` patterns of one width, stored contiguously.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternBatch {
    width: usize,
    stride: usize,
    words: Vec<u64>,
}

impl PatternBatch {
    pub fn new(width: usize) -> Self {
        assert!(width >= 1, "pattern width must be at least 1");
        Self {
            width,
            stride: words_for(width),
            words: Vec::new(),
        }
    }

    pub fn with_capacity(width: usize, n: usize) -> Self {
        let mut b = Self::new(width);
        b.words.reserve(n * b.stride);
        b
    }

    /// Patterns given as integers (only meaningful for `width <= 64`).
    pub fn from_u64s(width: usize, values: &[u64]) -> Self {
        assert!(width <= WORD_BITS);
        let mut b = Self::with_capacity(width, values.len());
        for &v in values {
            b.push_words(&[v]);
        }
        b
    }

    pub fn from_patterns(width: usize, patterns: &[BinaryPattern]) -> Self {
        let mut b = Self::with_capacity(width, patterns.len());
        for p in patterns {
            b.push(p);
        }
        b
    }

    /// Packs rows of booleans; every row must have length `width`.
    pub fn from_rows<R: AsRef<[bool]>>(width: usize, rows: &[R]) -> Self {
        let mut b = Self::with_capacity(width, rows.len());
        let mut buf = vec![0u64; b.stride];
        for row in rows {
            let row = row.as_ref();
            assert_eq!(row.len(), width, "row width mismatch");
            buf.iter_mut().for_each(|w| *w = 0);
            for (i, &bit) in row.iter().enumerate() {
                if bit {
                    buf[i / WORD_BITS] |= 1 << (i % WORD_BITS);
                }
            }
            b.push_words(&buf);
        }
        b
    }

    pub fn push(&mut self, pattern: &BinaryPattern) {
        assert_eq!(pattern.width, self.width, "pattern width mismatch");
        self.words.extend_from_slice(&pattern.words);
    }

    /// Appends one packed pattern; stray bits beyond the width are cleared.
    pub fn push_words(&mut self, words: &[u64]) {
        assert_eq!(words.len(), self.stride, "word count does not match width");
        self.words.extend_from_slice(words);
        let last = self.words.len() - 1;
        self.words[last] &= tail_mask(self.width);
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.words.len() / self.stride
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    #[inline]
    pub fn words_per_pattern(&self) -> usize {
        self.stride
    }

    /// Packed words of pattern `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.words[i * self.stride..(i + 1) * self.stride]
    }

    pub fn get(&self, i: usize) -> BinaryPattern {
        BinaryPattern {
            width: self.width,
            words: self.row(i).into(),
        }
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[u64]> + '_ {
        self.words.chunks_exact(self.stride)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = BinaryPattern> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    /// Raw packed storage, pattern after pattern.
    pub fn as_words(&self) -> &[u64] {
        &self.words
    }

    /// Reorders bit positions: bit `j` of every output pattern is bit
    /// `perm[j]` of the input pattern.
    pub fn permute_bits(&self, perm: &[usize]) -> PatternBatch {
        assert_eq!(perm.len(), self.width);
        let mut out = PatternBatch::with_capacity(self.width, self.len());
        let mut buf = vec![0u64; self.stride];
        for row in self.rows() {
            buf.iter_mut().for_each(|w| *w = 0);
            for (j, &src) in perm.iter().enumerate() {
                if (row[src / WORD_BITS] >> (src % WORD_BITS)) & 1 == 1 {
                    buf[j / WORD_BITS] |= 1 << (j % WORD_BITS);
                }
            }
            out.push_words(&buf);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn high_bits_are_cleared() {
        let p = BinaryPattern::from_u64(3, 0xff);
        assert_eq!(p.words(), &[0b111]);
        assert_eq!(p, BinaryPattern::from_u64(3, 0b111));

        let mut b = PatternBatch::new(70);
        b.push_words(&[u64::MAX, u64::MAX]);
        assert_eq!(b.row(0), &[u64::MAX, 0b11_1111]);
    }

    #[test]
    fn multiword_bits() {
        let mut p = BinaryPattern::zeros(130);
        p.set(0, true);
        p.set(64, true);
        p.set(129, true);
        assert_eq!(p.words(), &[1, 1, 2]);
        assert!(p.get(129) && !p.get(128));
        assert_eq!(p.count_ones(), 3);
    }

    #[test]
    fn rows_roundtrip() {
        let rows = vec![vec![true, false, true], vec![false, false, true]];
        let b = PatternBatch::from_rows(3, &rows);
        assert_eq!(b.len(), 2);
        assert_eq!(b.row(0), &[0b101]);
        assert_eq!(b.row(1), &[0b100]);
        assert_eq!(b.get(1), BinaryPattern::from_bits([false, false, true]));
    }

    #[test]
    fn permute_moves_bits() {
        let b = PatternBatch::from_u64s(3, &[0b001, 0b110]);
        let p = b.permute_bits(&[2, 0, 1]);
        assert_eq!(p.row(0), &[0b010]);
        assert_eq!(p.row(1), &[0b101]);
    }

    #[test]
    fn debug_is_msb_first() {
        assert_eq!(format!("{:?}", BinaryPattern::from_u64(4, 0b0011)), "0b0011");
    }
}
