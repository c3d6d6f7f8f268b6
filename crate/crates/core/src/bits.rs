//! Packed bit matrices.
//!
//! Rows are the "major" axis: a row occupies `ceil(cols/64)` consecutive
//! words. Shot batches store measurements as rows and shots as columns so
//! that per-detector XORs run word-parallel across 64 shots at a time.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64);
        BitMatrix { rows, cols, words_per_row, data: vec![0u64; rows * words_per_row] }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        let w = self.data[row * self.words_per_row + col / 64];
        (w >> (col % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        let w = &mut self.data[row * self.words_per_row + col / 64];
        let mask = 1u64 << (col % 64);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, row: usize, col: usize) {
        self.data[row * self.words_per_row + col / 64] ^= 1u64 << (col % 64);
    }

    pub fn row(&self, row: usize) -> &[u64] {
        &self.data[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [u64] {
        &mut self.data[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    /// out = a ^ b (rows of equal width).
    pub fn xor_rows_into(&mut self, out: usize, a: usize, b: usize) {
        let w = self.words_per_row;
        for k in 0..w {
            self.data[out * w + k] = self.data[a * w + k] ^ self.data[b * w + k];
        }
    }

    /// XOR a whole row with a constant bit (i.e. complement when bit set).
    pub fn xor_row_const(&mut self, row: usize, bit: bool) {
        if !bit {
            return;
        }
        let w = self.words_per_row;
        // Complement, masking the tail so padding bits stay zero.
        for k in 0..w {
            self.data[row * w + k] ^= !0u64;
        }
        self.mask_row_tail(row);
    }

    fn mask_row_tail(&mut self, row: usize) {
        let tail = self.cols % 64;
        if tail != 0 {
            let w = self.words_per_row;
            self.data[row * w + w - 1] &= (1u64 << tail) - 1;
        }
    }

    pub fn count_ones_row(&self, row: usize) -> usize {
        self.row(row).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of set bits in a column (linear scan over rows).
    pub fn set_rows_in_col(&self, col: usize) -> Vec<usize> {
        (0..self.rows).filter(|&r| self.get(r, col)).collect()
    }

    /// Row-major packed bytes with each row padded to whole bytes.
    pub fn to_padded_bytes(&self) -> Vec<u8> {
        let bytes_per_row = self.cols.div_ceil(8);
        let mut out = vec![0u8; self.rows * bytes_per_row];
        for r in 0..self.rows {
            let row = self.row(r);
            for (i, chunk) in out[r * bytes_per_row..(r + 1) * bytes_per_row].iter_mut().enumerate() {
                *chunk = (row[i / 8] >> ((i % 8) * 8)) as u8;
            }
        }
        out
    }

    pub fn from_padded_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Option<Self> {
        let bytes_per_row = cols.div_ceil(8);
        if bytes.len() != rows * bytes_per_row {
            return None;
        }
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for (i, &b) in bytes[r * bytes_per_row..(r + 1) * bytes_per_row].iter().enumerate() {
                m.row_mut(r)[i / 8] |= (b as u64) << ((i % 8) * 8);
            }
            m.mask_row_tail(r);
        }
        Some(m)
    }

    pub fn transposed(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            let row = self.row(r);
            for (wi, &word) in row.iter().enumerate() {
                let mut w = word;
                while w != 0 {
                    let b = w.trailing_zeros() as usize;
                    t.set(wi * 64 + b, r, true);
                    w &= w - 1;
                }
            }
        }
        t
    }
}

/// Packed bit vector, thin wrapper used for per-shot flags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitVec {
    len: usize,
    data: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { len, data: vec![0u64; len.div_ceil(64)] }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.data[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i % 64);
        if value {
            self.data[i / 64] |= mask;
        } else {
            self.data[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.data[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn to_padded_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        (0..n).map(|i| (self.data[i / 8] >> ((i % 8) * 8)) as u8).collect()
    }

    pub fn from_padded_bytes(len: usize, bytes: &[u8]) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut v = BitVec::zeros(len);
        for (i, &b) in bytes.iter().enumerate() {
            v.data[i / 8] |= (b as u64) << ((i % 8) * 8);
        }
        let tail = len % 64;
        if tail != 0 {
            let last = v.data.len() - 1;
            v.data[last] &= (1u64 << tail) - 1;
        }
        Some(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_roundtrip() {
        let mut m = BitMatrix::zeros(3, 130);
        m.set(0, 0, true);
        m.set(1, 64, true);
        m.set(2, 129, true);
        assert!(m.get(0, 0) && m.get(1, 64) && m.get(2, 129));
        assert!(!m.get(0, 1));
        m.flip(0, 0);
        assert!(!m.get(0, 0));
    }

    #[test]
    fn bytes_roundtrip_and_transpose() {
        let mut m = BitMatrix::zeros(5, 19);
        for (r, c) in [(0, 0), (1, 18), (2, 7), (4, 13), (3, 8)] {
            m.set(r, c, true);
        }
        let bytes = m.to_padded_bytes();
        let back = BitMatrix::from_padded_bytes(5, 19, &bytes).unwrap();
        assert_eq!(m, back);
        let t = m.transposed();
        for r in 0..5 {
            for c in 0..19 {
                assert_eq!(m.get(r, c), t.get(c, r));
            }
        }
        assert_eq!(t.transposed(), m);
    }

    #[test]
    fn xor_row_const_masks_padding() {
        let mut m = BitMatrix::zeros(2, 70);
        m.xor_row_const(0, true);
        assert_eq!(m.count_ones_row(0), 70);
        m.xor_row_const(0, true);
        assert_eq!(m.count_ones_row(0), 0);
    }
}
