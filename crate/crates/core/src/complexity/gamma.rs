//! Elias gamma codes shifted to cover zero: `γ0(v) = γ(v + 1)`.
//!
//! `γ(x)` for `x >= 1` is `⌊log2 x⌋` zeros followed by the binary form of
//! `x`, most significant bit first, so `|γ0(v)| = 2⌊log2(v + 1)⌋ + 1`.

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum BitReadError {
    #[error("unexpected end of input at bit {0}")]
    Eof(usize),
    #[error("gamma code too long at bit {0}")]
    GammaOverflow(usize),
}

pub fn gamma0_len(v: u64) -> u64 {
    let x = v as u128 + 1;
    let nbits = 127 - x.leading_zeros() as u64;
    2 * nbits + 1
}

pub fn write_gamma0(out: &mut Vec<bool>, v: u64) {
    let x = v as u128 + 1;
    let nbits = 127 - x.leading_zeros();
    out.extend(std::iter::repeat_n(false, nbits as usize));
    for j in (0..=nbits).rev() {
        out.push((x >> j) & 1 == 1);
    }
}

/// Cursor over a bit slice.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a [bool]) -> Self {
        Self { bits, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.pos == self.bits.len()
    }

    pub fn rest(&self) -> &'a [bool] {
        &self.bits[self.pos..]
    }

    pub fn read_bit(&mut self) -> Result<bool, BitReadError> {
        let b = *self.bits.get(self.pos).ok_or(BitReadError::Eof(self.pos))?;
        self.pos += 1;
        Ok(b)
    }

    pub fn read_bits(&mut self, n: usize) -> Result<&'a [bool], BitReadError> {
        if self.remaining() < n {
            return Err(BitReadError::Eof(self.bits.len()));
        }
        let s = &self.bits[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    /// Reads `n <= 64` bits as an unsigned integer, MSB first.
    pub fn read_uint(&mut self, n: u32) -> Result<u64, BitReadError> {
        let mut v = 0u64;
        for _ in 0..n {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Ok(v)
    }

    pub fn read_gamma0(&mut self) -> Result<u64, BitReadError> {
        let start = self.pos;
        let mut zeros = 0u32;
        while !self.read_bit()? {
            zeros += 1;
            if zeros > 63 {
                return Err(BitReadError::GammaOverflow(start));
            }
        }
        let mut x: u64 = 1;
        for _ in 0..zeros {
            x = (x << 1) | self.read_bit()? as u64;
        }
        Ok(x - 1)
    }
}

pub fn write_uint(out: &mut Vec<bool>, v: u64, n: u32) {
    for j in (0..n).rev() {
        out.push((v >> j) & 1 == 1);
    }
}

/// `⌈log2 n⌉` for `n >= 1`; the width of an index into `n` choices.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn small_codes() {
        let cases = [(0, "1"), (1, "010"), (2, "011"), (3, "00100"), (6, "00111"), (7, "0001000")];
        for (v, code) in cases {
            let mut out = Vec::new();
            write_gamma0(&mut out, v);
            assert_eq!(out, bits(code), "γ0({v})");
            assert_eq!(gamma0_len(v), code.len() as u64);
        }
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(1 << 20), 20);
    }

    #[test]
    fn truncated_input_fails() {
        let mut r = BitReader::new(&[false, false, true]);
        assert!(matches!(r.read_gamma0(), Err(BitReadError::Eof(_))));
    }

    proptest! {
        #[test]
        fn gamma_round_trip_and_self_delimiting(vs in proptest::collection::vec(0..u64::MAX, 1..20)) {
            let mut out = Vec::new();
            for &v in &vs {
                write_gamma0(&mut out, v);
            }
            prop_assert_eq!(out.len() as u64, vs.iter().map(|&v| gamma0_len(v)).sum::<u64>());
            let mut r = BitReader::new(&out);
            for &v in &vs {
                prop_assert_eq!(r.read_gamma0().unwrap(), v);
            }
            prop_assert!(r.is_empty());
        }
    }
}
