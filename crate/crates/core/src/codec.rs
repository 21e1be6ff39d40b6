//! Block codec.
//!
//! The source is cut into blocks of length 1, 2, 3, … and block `i` is
//! stored as one self-delimiting record:
//!
//! ```text
//! 0 s_i                    literal: the i block bits
//! 1 γ0(L) d[L]             conditional: an L-bit description of s_i given
//!                          s_1 … s_{i-1}, from a complexity-oracle session
//! ```
//!
//! The encoder takes the shorter record, preferring literal on ties, so a
//! record is never longer than `i + C_HDR`. The decoder reads records
//! strictly left to right and emits block `i` only after reading all of
//! record `i`, so the usage after `n` output bits is the total length of
//! the records up to the block holding position `n - 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complexity::{gamma0_len, literal_program_len, write_gamma0, ComplexityOracle, DescriptionError, Session};
use crate::dimension::{default_tail_start, Profile, RatioProfile, Sample};
use crate::seqcore::{block_bounds, block_containing, triangular, BitSequence, PrefixOracle, SeqError};

/// Record overhead beyond the block length in the worst case: one mode bit.
pub const C_HDR: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("record stream ended inside record {block} at bit {position}")]
    Truncated { block: u64, position: u64 },
    #[error("record {block}: length field overflows")]
    LengthOverflow { block: u64 },
    #[error("record {block}: payload of {len} bits exceeds the {max}-bit limit")]
    PayloadTooLong { block: u64, len: u64, max: u64 },
    #[error("record {block}: {source}")]
    BadDescription { block: u64, source: DescriptionError },
    #[error("context of {0} bits is not a whole number of blocks")]
    RaggedContext(u64),
    #[error("block {block} needs {want} bits, got {got}")]
    BlockLength { block: u64, want: u64, got: u64 },
    #[error(transparent)]
    Seq(#[from] SeqError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Literal,
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodeRecord {
    pub mode: Mode,
    pub payload: Vec<bool>,
}

impl CodeRecord {
    pub fn literal(block: &[bool]) -> Self {
        Self { mode: Mode::Literal, payload: block.to_vec() }
    }

    pub fn conditional(description: Vec<bool>) -> Self {
        Self { mode: Mode::Conditional, payload: description }
    }

    pub fn len(&self) -> u64 {
        let l = self.payload.len() as u64;
        match self.mode {
            Mode::Literal => 1 + l,
            Mode::Conditional => 1 + gamma0_len(l) + l,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn write(&self, out: &mut Vec<bool>) {
        match self.mode {
            Mode::Literal => out.push(false),
            Mode::Conditional => {
                out.push(true);
                write_gamma0(out, self.payload.len() as u64);
            }
        }
        out.extend_from_slice(&self.payload);
    }

    pub fn to_bits(&self) -> Vec<bool> {
        let mut v = Vec::with_capacity(self.len() as usize);
        self.write(&mut v);
        v
    }
}

/// Worst-case record length allowed by the length law.
pub fn record_len_bound(i: u64) -> u64 {
    let log = 64 - i.leading_zeros() as u64; // ⌈log2(i+1)⌉
    i + 2 * log + C_HDR
}

/// Longest conditional payload a decoder accepts for a block of `i` bits:
/// no oracle ever describes a block in more bits than this.
pub fn max_payload_len(i: u64) -> u64 {
    literal_program_len(i)
}

/// Stage-wise encoder. Holds the oracle session primed with every block
/// encoded so far.
#[derive(Debug, Clone)]
pub struct BlockEncoder {
    session: Session,
    blocks_done: u64,
}

impl BlockEncoder {
    pub fn new(oracle: &ComplexityOracle) -> Self {
        Self { session: oracle.session(), blocks_done: 0 }
    }

    /// An encoder positioned after `context`, which must be whole blocks.
    pub fn with_context(oracle: &ComplexityOracle, context: &[bool]) -> Result<Self, CodecError> {
        let mut e = Self::new(oracle);
        e.skip(context)?;
        Ok(e)
    }

    pub fn blocks_done(&self) -> u64 {
        self.blocks_done
    }

    fn next_index(&self) -> u64 {
        self.blocks_done + 1
    }

    fn check_len(&self, block: &[bool]) -> Result<(), CodecError> {
        let i = self.next_index();
        if block.len() as u64 != i {
            return Err(CodecError::BlockLength { block: i, want: i, got: block.len() as u64 });
        }
        Ok(())
    }

    /// Both candidate records for the next block, without advancing.
    pub fn options(&mut self, block: &[bool]) -> Result<[CodeRecord; 2], CodecError> {
        self.check_len(block)?;
        let desc = self.session.describe(block);
        Ok([CodeRecord::literal(block), CodeRecord::conditional(desc)])
    }

    /// Encodes the next block and advances.
    pub fn encode_block(&mut self, block: &[bool]) -> Result<CodeRecord, CodecError> {
        let [lit, cond] = self.options(block)?;
        self.advance(block)?;
        Ok(if cond.len() < lit.len() { cond } else { lit })
    }

    /// Advances past the next block without encoding it.
    pub fn advance(&mut self, block: &[bool]) -> Result<(), CodecError> {
        self.check_len(block)?;
        self.session.advance(block);
        self.blocks_done += 1;
        Ok(())
    }

    /// Advances past a run of whole blocks.
    pub fn skip(&mut self, bits: &[bool]) -> Result<(), CodecError> {
        let mut rest = bits;
        while !rest.is_empty() {
            let i = self.next_index() as usize;
            if rest.len() < i {
                return Err(CodecError::RaggedContext(bits.len() as u64));
            }
            self.advance(&rest[..i])?;
            rest = &rest[i..];
        }
        Ok(())
    }
}

/// Encodes block `|context|`-th successor: `s_next` has length `i + 1`
/// where `context` holds the first `i` blocks.
pub fn encode_block(s_next: &[bool], context: &[bool], oracle: &ComplexityOracle) -> Result<CodeRecord, CodecError> {
    let mut enc = BlockEncoder::with_context(oracle, context)?;
    enc.encode_block(s_next)
}

/// An encoded stream together with its per-record lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub bits: BitSequence,
    pub records: Vec<(Mode, u64)>,
}

impl Encoded {
    pub fn blocks(&self) -> u64 {
        self.records.len() as u64
    }

    /// Source bits covered.
    pub fn covered(&self) -> u64 {
        triangular(self.blocks())
    }
}

fn blocks_covering(n: u64) -> u64 {
    let p = block_containing(n);
    if triangular(p.complete_blocks) == n {
        p.complete_blocks
    } else {
        p.block
    }
}

/// Encodes `S` through the block holding position `n - 1`.
pub fn encode(s: &dyn PrefixOracle, n: u64, oracle: &ComplexityOracle) -> Result<Encoded, CodecError> {
    let k = blocks_covering(n);
    let src = s.prefix(triangular(k))?;
    encode_blocks(&src, k, oracle)
}

/// Encodes a finite string, zero-padding the final partial block. The
/// decoder needs `bits.len()` to drop the padding.
pub fn encode_padded(bits: &[bool], oracle: &ComplexityOracle) -> Result<Encoded, CodecError> {
    let k = blocks_covering(bits.len() as u64);
    let mut src = bits.to_vec();
    src.resize(triangular(k) as usize, false);
    encode_blocks(&src, k, oracle)
}

fn encode_blocks(src: &[bool], k: u64, oracle: &ComplexityOracle) -> Result<Encoded, CodecError> {
    let mut enc = BlockEncoder::new(oracle);
    let mut bits = Vec::new();
    let mut records = Vec::with_capacity(k as usize);
    for i in 1..=k {
        let (a, b) = block_bounds(i)?;
        let r = enc.encode_block(&src[a as usize..b as usize])?;
        records.push((r.mode, r.len()));
        r.write(&mut bits);
    }
    Ok(Encoded { bits: bits.into(), records })
}

/// Sequential reader over an oracle, tracking the rightmost bit read.
pub struct OracleReader<'a> {
    src: &'a dyn PrefixOracle,
    pos: u64,
}

impl<'a> OracleReader<'a> {
    pub fn new(src: &'a dyn PrefixOracle) -> Self {
        Self { src, pos: 0 }
    }

    pub fn at(src: &'a dyn PrefixOracle, pos: u64) -> Self {
        Self { src, pos }
    }

    /// Bits consumed so far, which is also the query usage.
    pub fn position(&self) -> u64 {
        self.pos
    }

    fn read_bit(&mut self, block: u64) -> Result<bool, CodecError> {
        match self.src.bit(self.pos) {
            Ok(b) => {
                self.pos += 1;
                Ok(b)
            }
            Err(SeqError::HorizonExceeded { .. }) => Err(CodecError::Truncated { block, position: self.pos }),
            Err(e) => Err(e.into()),
        }
    }

    fn read_bits(&mut self, n: u64, block: u64) -> Result<Vec<bool>, CodecError> {
        (0..n).map(|_| self.read_bit(block)).collect()
    }

    fn read_gamma0(&mut self, block: u64) -> Result<u64, CodecError> {
        let mut zeros = 0u32;
        while !self.read_bit(block)? {
            zeros += 1;
            if zeros > 63 {
                return Err(CodecError::LengthOverflow { block });
            }
        }
        let mut v: u128 = 1;
        for _ in 0..zeros {
            v = (v << 1) | self.read_bit(block)? as u128;
        }
        u64::try_from(v - 1).map_err(|_| CodecError::LengthOverflow { block })
    }
}

/// Stage-wise decoder holding the already decoded prefix in its session.
#[derive(Debug, Clone)]
pub struct BlockDecoder {
    session: Session,
    blocks_done: u64,
}

impl BlockDecoder {
    pub fn new(oracle: &ComplexityOracle) -> Self {
        Self { session: oracle.session(), blocks_done: 0 }
    }

    /// A decoder that takes `context` (whole blocks) as already decoded,
    /// without reading any records for it.
    pub fn with_context(oracle: &ComplexityOracle, context: &[bool]) -> Result<Self, CodecError> {
        let mut enc = BlockEncoder::with_context(oracle, context)?;
        let blocks_done = enc.blocks_done();
        Ok(Self { session: std::mem::replace(&mut enc.session, oracle.session()), blocks_done })
    }

    pub fn blocks_done(&self) -> u64 {
        self.blocks_done
    }

    /// Reads the record of the next block without advancing.
    pub fn read_record(&self, reader: &mut OracleReader<'_>) -> Result<CodeRecord, CodecError> {
        let i = self.blocks_done + 1;
        if reader.read_bit(i)? {
            let len = reader.read_gamma0(i)?;
            let max = max_payload_len(i);
            if len > max {
                return Err(CodecError::PayloadTooLong { block: i, len, max });
            }
            Ok(CodeRecord::conditional(reader.read_bits(len, i)?))
        } else {
            Ok(CodeRecord::literal(&reader.read_bits(i, i)?))
        }
    }

    /// Recovers the next block from its record without advancing.
    pub fn reconstruct(&mut self, record: &CodeRecord) -> Result<Vec<bool>, CodecError> {
        let i = self.blocks_done + 1;
        match record.mode {
            Mode::Literal => {
                if record.payload.len() as u64 != i {
                    return Err(CodecError::BlockLength { block: i, want: i, got: record.payload.len() as u64 });
                }
                Ok(record.payload.clone())
            }
            Mode::Conditional => self
                .session
                .reconstruct(&record.payload, i)
                .map_err(|source| CodecError::BadDescription { block: i, source }),
        }
    }

    pub fn advance(&mut self, block: &[bool]) {
        debug_assert_eq!(block.len() as u64, self.blocks_done + 1);
        self.session.advance(block);
        self.blocks_done += 1;
    }

    /// Reads, reconstructs and emits the next block.
    pub fn decode_next(&mut self, reader: &mut OracleReader<'_>) -> Result<Vec<bool>, CodecError> {
        let r = self.read_record(reader)?;
        let block = self.reconstruct(&r)?;
        self.advance(&block);
        Ok(block)
    }
}

/// Usage accounting of one decode run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecodeTrace {
    /// Length of record `i` at index `i - 1`.
    pub record_lens: Vec<u64>,
    /// Cumulative record length after block `k` at index `k - 1`.
    pub boundary_usage: Vec<u64>,
}

impl DecodeTrace {
    pub fn blocks(&self) -> u64 {
        self.record_lens.len() as u64
    }

    /// Source bits this trace covers.
    pub fn horizon(&self) -> u64 {
        triangular(self.blocks())
    }

    /// Query usage after `m` output bits, `m <= horizon()`.
    pub fn usage(&self, m: u64) -> u64 {
        if m == 0 {
            return 0;
        }
        let b = block_containing(m - 1).block;
        self.boundary_usage[b as usize - 1]
    }

    /// `usage(m)` for every `m` in `0..=n`.
    pub fn per_position(&self, n: u64) -> Vec<u64> {
        let mut out = Vec::with_capacity(n as usize + 1);
        out.push(0);
        let mut b = 0usize;
        for m in 1..=n {
            if m > triangular(b as u64) {
                b += 1;
            }
            out.push(self.boundary_usage[b - 1]);
        }
        out
    }

    /// Dense `usage(n) / n` profile over `1..=n`.
    pub fn ratio_profile(&self, n: u64, tail_start: Option<u64>) -> RatioProfile {
        let usage = self.per_position(n);
        let samples = (1..=n).map(|m| Sample::new(m, usage[m as usize])).collect();
        Profile { samples, tail_start: tail_start.unwrap_or_else(|| default_tail_start(n)) }
    }
}

/// Decodes `S[0..n]` from the record stream `r`.
pub fn decode(r: &dyn PrefixOracle, n: u64, oracle: &ComplexityOracle) -> Result<(BitSequence, DecodeTrace), CodecError> {
    let mut dec = BlockDecoder::new(oracle);
    let mut reader = OracleReader::new(r);
    let mut out = Vec::with_capacity(n as usize);
    let mut trace = DecodeTrace::default();
    while (out.len() as u64) < n {
        let start = reader.position();
        let block = dec.decode_next(&mut reader)?;
        trace.record_lens.push(reader.position() - start);
        trace.boundary_usage.push(reader.position());
        out.extend(block);
    }
    out.truncate(n as usize);
    Ok((out.into(), trace))
}

/// Encodes `S` through the block covering `n`, decodes it back, and
/// returns the dense usage profile.
pub fn compression_trace(
    s: &dyn PrefixOracle,
    n: u64,
    oracle: &ComplexityOracle,
    tail_start: Option<u64>,
) -> Result<(RatioProfile, Encoded, DecodeTrace), CodecError> {
    let enc = encode(s, n, oracle)?;
    let (out, trace) = decode(&enc.bits, n, oracle)?;
    debug_assert_eq!(out.as_slice(), s.prefix(n)?.as_slice());
    Ok((trace.ratio_profile(n, tail_start), enc, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{prng, zeros, GeneratorSpec};
    use num_rational::Rational64;

    fn proxy() -> ComplexityOracle {
        ComplexityOracle::proxy()
    }

    #[test]
    fn first_block_record() {
        for bit in [false, true] {
            let r = encode_block(&[bit], &[], &proxy()).unwrap();
            assert_eq!(r, CodeRecord::literal(&[bit]));
            assert_eq!(r.to_bits(), vec![false, bit]);
        }
    }

    #[test]
    fn zero_blocks_use_short_conditional_records() {
        let ctx = prng(1, triangular(40)).into_vec();
        let r = encode_block(&[false; 41], &ctx, &proxy()).unwrap();
        assert_eq!(r.mode, Mode::Conditional);
        assert!(r.len() <= 2 * 6 + 7, "{}", r.len());
    }

    #[test]
    fn random_blocks_go_literal() {
        let ctx = prng(1, triangular(40)).into_vec();
        let blk = prng(2, 41).into_vec();
        let r = encode_block(&blk, &ctx, &proxy()).unwrap();
        assert_eq!(r, CodeRecord::literal(&blk));
        assert_eq!(r.len(), 41 + C_HDR);
    }

    #[test]
    fn rejects_ragged_context_and_wrong_block_length() {
        assert_eq!(encode_block(&[false; 3], &[false; 4], &proxy()), Err(CodecError::RaggedContext(4)));
        assert!(matches!(encode_block(&[false; 2], &[false; 3], &proxy()), Err(CodecError::BlockLength { .. })));
    }

    #[test]
    fn roundtrip_zeros_and_dilute() {
        let s = zeros(triangular(100));
        let e = encode(&s, triangular(100), &proxy()).unwrap();
        assert_eq!(decode(&e.bits, triangular(100), &proxy()).unwrap().0, s);

        let d = GeneratorSpec::dilute(Rational64::new(1, 2), 3).generate(triangular(300)).unwrap();
        let e = encode(&d, triangular(300), &proxy()).unwrap();
        let (back, trace) = decode(&e.bits, triangular(300), &proxy()).unwrap();
        assert_eq!(back, d);
        let mut total = 0;
        for k in 1..=300u64 {
            total += e.records[k as usize - 1].1;
            assert_eq!(trace.usage(triangular(k)), total);
            assert_eq!(trace.boundary_usage[k as usize - 1], total);
        }
    }

    #[test]
    fn roundtrip_exact_oracle_and_padding() {
        let o = ComplexityOracle::exact(256, 1 << 28);
        let s: Vec<bool> = (0..600).map(|k| k % 5 == 0 || k > 300).collect();
        let e = encode_padded(&s, &o).unwrap();
        assert_eq!(e.covered(), triangular(35));
        let (back, trace) = decode(&e.bits, 600, &o).unwrap();
        assert_eq!(back.as_slice(), &s[..]);
        assert!(e.records.iter().any(|r| r.0 == Mode::Conditional));
        assert_eq!(trace.usage(600), e.bits.len() as u64);
    }

    #[test]
    fn usage_is_monotone_and_read_before_emit() {
        let d = prng(8, triangular(30));
        let (_, trace) = decode(&encode(&d, triangular(30), &proxy()).unwrap().bits, triangular(30), &proxy()).unwrap();
        let u = trace.per_position(triangular(30));
        assert!(u.windows(2).all(|w| w[0] <= w[1]));
        // the first bit of block i already needs all of record i
        for i in 1..=30u64 {
            assert_eq!(u[triangular(i - 1) as usize + 1], trace.boundary_usage[i as usize - 1]);
            assert_eq!(u[triangular(i - 1) as usize + 1], trace.usage(triangular(i)));
        }
    }

    #[test]
    fn truncated_and_malformed_streams_fail() {
        let d = GeneratorSpec::dilute(Rational64::new(1, 3), 2).generate(triangular(50)).unwrap();
        let e = encode(&d, triangular(50), &proxy()).unwrap();
        let cut = &e.bits[..e.bits.len() - 3];
        assert!(matches!(decode(&cut, triangular(50), &proxy()), Err(CodecError::Truncated { block: 50, .. })));
        let bad = {
            let mut v = vec![false, true];
            v.push(true); // conditional record for block 2 ...
            v.extend(std::iter::repeat_n(false, 70)); // ... with an absurd length field
            v
        };
        assert!(matches!(decode(&bad, 3, &proxy()), Err(CodecError::LengthOverflow { block: 2 })));
    }

    #[test]
    fn locality_with_external_context() {
        let o = proxy();
        let d = GeneratorSpec::dilute(Rational64::new(1, 2), 5).generate(triangular(60)).unwrap();
        let e = encode(&d, triangular(60), &o).unwrap();
        let j = 20u64;
        let offset: u64 = e.records[..j as usize].iter().map(|r| r.1).sum();
        let mut corrupted = e.bits.clone().into_vec();
        let start_j = (offset - e.records[j as usize - 1].1) as usize;
        for b in &mut corrupted[start_j..offset as usize] {
            *b = !*b;
        }
        // the full decode breaks at or before block j
        let full = decode(&corrupted, triangular(60), &o);
        assert!(full.map(|(s, _)| s != d).unwrap_or(true));
        // blocks after j decode from their records plus the true prefix
        let mut dec = BlockDecoder::with_context(&o, &d[..triangular(j) as usize]).unwrap();
        let mut reader = OracleReader::at(&corrupted, offset);
        for i in j + 1..=60 {
            let (a, b) = block_bounds(i).unwrap();
            assert_eq!(dec.decode_next(&mut reader).unwrap(), &d[a as usize..b as usize]);
        }
    }

    #[test]
    fn record_length_law_holds() {
        for spec in [GeneratorSpec::prng(1), GeneratorSpec::zeros(), GeneratorSpec::dilute(Rational64::new(1, 2), 1)] {
            let s = spec.generate(triangular(120)).unwrap();
            let e = encode(&s, triangular(120), &proxy()).unwrap();
            for (i, r) in e.records.iter().enumerate() {
                let i = i as u64 + 1;
                assert!(r.1 <= i + C_HDR && r.1 <= record_len_bound(i));
            }
        }
    }
}
