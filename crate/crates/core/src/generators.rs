//! Deterministic test sequences with designed dimension targets.
//!
//! `prng` is xorshift64* seeded through splitmix64; each 64-bit output word
//! contributes its bits least significant first. Its output stands in for
//! random bits: it is trivially computable, but the complexity proxies
//! cannot exploit that.

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratio::serde_ratio_opt;
use crate::seqcore::{BitSequence, PrefixOracle, SeqError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("rate {0} outside (0, 1]")]
    BadRate(Rational64),
    #[error("rates must satisfy alpha <= beta (got {alpha} > {beta})")]
    RatesOutOfOrder { alpha: Rational64, beta: Rational64 },
    #[error("oscillation base must be at least 2 (got {0})")]
    BadBase(u64),
    #[error("{kind} generator needs {field}")]
    MissingField { kind: &'static str, field: &'static str },
    #[error(transparent)]
    Source(#[from] SeqError),
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// xorshift64* stream.
#[derive(Debug, Clone)]
pub struct Xorshift64Star {
    state: u64,
}

impl Xorshift64Star {
    pub fn new(seed: u64) -> Self {
        let mut s = seed;
        let mut state = splitmix64(&mut s);
        if state == 0 {
            state = 0x9e37_79b9_7f4a_7c15;
        }
        Self { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }
}

pub fn zeros(n: u64) -> BitSequence {
    BitSequence::zeros(n as usize)
}

pub fn prng(seed: u64, n: u64) -> BitSequence {
    let mut rng = Xorshift64Star::new(seed);
    let mut out = BitSequence::with_capacity(n as usize);
    let mut word = 0u64;
    for k in 0..n {
        if k % 64 == 0 {
            word = rng.next_u64();
        }
        out.push((word >> (k % 64)) & 1 == 1);
    }
    out
}

fn check_rate(r: Rational64) -> Result<(), GenError> {
    if r <= Rational64::zero() || r > Rational64::one() {
        return Err(GenError::BadRate(r));
    }
    Ok(())
}

/// `⌊k·r⌋` for non-negative `k`.
fn floor_mul(k: u64, r: Rational64) -> u64 {
    ((k as i128 * *r.numer() as i128) / *r.denom() as i128) as u64
}

/// Whether position `k` carries a source bit at rate `r`.
#[inline]
pub fn is_source_position(k: u64, r: Rational64) -> bool {
    floor_mul(k + 1, r) > floor_mul(k, r)
}

/// Embeds source bits at density `alpha` into a zero background. Position
/// `k` takes the next unused source bit iff `⌊(k+1)α⌋ > ⌊kα⌋`, so a prefix
/// of length `n` holds exactly `⌊nα⌋` source bits.
pub fn dilute(source: &dyn PrefixOracle, alpha: Rational64, n: u64) -> Result<BitSequence, GenError> {
    check_rate(alpha)?;
    let mut out = BitSequence::with_capacity(n as usize);
    for k in 0..n {
        let bit = if is_source_position(k, alpha) { source.bit(floor_mul(k, alpha))? } else { false };
        out.push(bit);
    }
    Ok(out)
}

/// Macro-block lengths for `oscillate`: block `j` (from 0) has length
/// `base^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub base: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { base: 16 }
    }
}

impl Schedule {
    /// End positions of the macro-blocks that end at or before `n`, paired
    /// with whether the block ran at the high rate.
    pub fn boundaries(&self, n: u64) -> Vec<(u64, bool)> {
        let mut out = Vec::new();
        let mut end = 0u64;
        let mut len = 1u64;
        let mut high = true;
        loop {
            end = match end.checked_add(len) {
                Some(e) if e <= n => e,
                _ => break,
            };
            out.push((end, high));
            high = !high;
            len = match len.checked_mul(self.base) {
                Some(l) => l,
                None => break,
            };
        }
        out
    }
}

/// Alternates dilution at rate `beta` and `alpha` over macro-blocks given
/// by `schedule`, starting with `beta`. Inside a block running at rate `r`,
/// position `k` (global) takes the next source bit iff
/// `⌊(k+1)r⌋ > ⌊kr⌋`.
pub fn oscillate(
    source: &dyn PrefixOracle,
    alpha: Rational64,
    beta: Rational64,
    n: u64,
    schedule: Schedule,
) -> Result<BitSequence, GenError> {
    check_rate(alpha)?;
    check_rate(beta)?;
    if alpha > beta {
        return Err(GenError::RatesOutOfOrder { alpha, beta });
    }
    if schedule.base < 2 {
        return Err(GenError::BadBase(schedule.base));
    }
    let mut out = BitSequence::with_capacity(n as usize);
    let mut used = 0u64;
    let mut block_end = 1u64;
    let mut block_len = 1u64;
    let mut rate = beta;
    for k in 0..n {
        if k == block_end {
            block_len = block_len.saturating_mul(schedule.base);
            block_end = block_end.saturating_add(block_len);
            rate = if rate == beta { alpha } else { beta };
        }
        let bit = if is_source_position(k, rate) {
            used += 1;
            source.bit(used - 1)?
        } else {
            false
        };
        out.push(bit);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Zeros,
    Prng,
    Dilute,
    Oscillate,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Zeros => "zeros",
            GeneratorKind::Prng => "prng",
            GeneratorKind::Dilute => "dilute",
            GeneratorKind::Oscillate => "oscillate",
        }
    }
}

/// Full description of a generated sequence. Dilute and oscillate draw
/// their source bits from `prng(seed)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    #[serde(default, with = "serde_ratio_opt", skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Rational64>,
    #[serde(default, with = "serde_ratio_opt", skip_serializing_if = "Option::is_none")]
    pub beta: Option<Rational64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub schedule: Schedule,
}

impl GeneratorSpec {
    pub fn zeros() -> Self {
        Self { kind: GeneratorKind::Zeros, alpha: None, beta: None, seed: 0, schedule: Schedule::default() }
    }

    pub fn prng(seed: u64) -> Self {
        Self { kind: GeneratorKind::Prng, seed, ..Self::zeros() }
    }

    pub fn dilute(alpha: Rational64, seed: u64) -> Self {
        Self { kind: GeneratorKind::Dilute, alpha: Some(alpha), seed, ..Self::zeros() }
    }

    pub fn oscillate(alpha: Rational64, beta: Rational64, seed: u64) -> Self {
        Self { kind: GeneratorKind::Oscillate, alpha: Some(alpha), beta: Some(beta), seed, ..Self::zeros() }
    }

    fn need(&self, v: Option<Rational64>, field: &'static str) -> Result<Rational64, GenError> {
        v.ok_or(GenError::MissingField { kind: self.kind.name(), field })
    }

    pub fn generate(&self, n: u64) -> Result<BitSequence, GenError> {
        let source = || crate::seqcore::SeqOracle::new(prng(self.seed, n));
        match self.kind {
            GeneratorKind::Zeros => Ok(zeros(n)),
            GeneratorKind::Prng => Ok(prng(self.seed, n)),
            GeneratorKind::Dilute => dilute(&source(), self.need(self.alpha, "alpha")?, n),
            GeneratorKind::Oscillate => oscillate(
                &source(),
                self.need(self.alpha, "alpha")?,
                self.need(self.beta, "beta")?,
                n,
                self.schedule,
            ),
        }
    }

    /// Positions where the designed rate changes, for sampling.
    pub fn phase_boundaries(&self, n: u64) -> Vec<u64> {
        match self.kind {
            GeneratorKind::Oscillate => self.schedule.boundaries(n).into_iter().map(|(e, _)| e).collect(),
            _ => Vec::new(),
        }
    }

    /// Designed (low, high) information rates.
    pub fn targets(&self) -> (Rational64, Rational64) {
        let one = Rational64::one();
        match self.kind {
            GeneratorKind::Zeros => (Rational64::zero(), Rational64::zero()),
            GeneratorKind::Prng => (one, one),
            GeneratorKind::Dilute => {
                let a = self.alpha.unwrap_or(one);
                (a, a)
            }
            GeneratorKind::Oscillate => (self.alpha.unwrap_or(one), self.beta.unwrap_or(one)),
        }
    }
}
