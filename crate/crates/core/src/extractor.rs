//! Extension search over codec record streams.
//!
//! Given a source `S`, the extractor emits a record stream `R′` stage by
//! stage. Each stage appends records for one or more further blocks so
//! that, with `N` the new block boundary,
//!
//! * (a) decoding `R′` reproduces `S[0..N]`,
//! * (b) the usage after `N` output bits is at most `d·N`,
//! * (c) the usage after `m` output bits is at most `D·m` for every
//!   `m` in `[n0, N]`.
//!
//! Structured candidates are codec records for the next blocks under every
//! literal/conditional assignment. Record bits for both modes are computed
//! once per block with the true prefix as context and checked by decoding,
//! so (a) holds for every structured candidate and (b), (c) reduce to
//! arithmetic on record lengths. Both (b) and (c) only get harder as
//! records grow, so the assignment taking the shorter record everywhere
//! passes whenever any assignment for the same blocks does.

use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{compression_trace, BlockDecoder, BlockEncoder, CodeRecord, CodecError, Mode, OracleReader};
use crate::complexity::ComplexityOracle;
use crate::dimension::{
    default_grid_ratio, default_tail_start, geometric_grid, profile, rho_hats, DimError, DimensionProfile,
};
use crate::ratio::{serde_ratio, to_decimal};
use crate::seqcore::{block_bounds, block_containing, triangular, BitSequence, PrefixOracle, SeqError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("precondition failed: estimated packing dimension {dim_p} is not above delta = {delta} (dim_P(S) > 0 required)")]
    Precondition { dim_p: String, delta: String },
    #[error("stage {stage} exhausted after {tried} candidates; condition {condition} cannot be met (try raising d by delta/2 to {hint})")]
    Exhausted { stage: u64, tried: u64, condition: Condition, hint: String },
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("codec record for block {0} failed to decode against the true prefix")]
    SelfCheck(u64),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Dim(#[from] DimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
    #[serde(rename = "c")]
    C,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Condition::A => "(a) decode correctness",
            Condition::B => "(b) boundary budget d*N",
            Condition::C => "(c) running budget D*m",
        })
    }
}

/// First violated condition; `position` is an output length `m` for (b)
/// and (c) and the first wrong source position for (a).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    pub position: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    /// All conditions hold up to the block boundary `boundary`.
    Ok { boundary: u64, blocks: u64, usage: u64 },
    Fail(Violation),
}

impl CheckOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, CheckOutcome::Ok { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractorParams {
    #[serde(with = "serde_ratio")]
    pub epsilon: Rational64,
    #[serde(with = "serde_ratio")]
    pub delta: Rational64,
    /// Boundary budget.
    #[serde(with = "serde_ratio")]
    pub d: Rational64,
    /// Running budget.
    #[serde(with = "serde_ratio", rename = "D")]
    pub big_d: Rational64,
    pub n0: u64,
    /// Candidates tried per stage before giving up.
    pub search_budget: u64,
    /// Lookahead depth (in blocks) searched under every mode assignment.
    pub full_lookahead: u64,
    /// Deepest lookahead; beyond `full_lookahead` only the shortest
    /// assignment is tried. `None` searches to the source horizon.
    pub max_lookahead: Option<u64>,
    /// Length limit for the brute-force search; 0 disables it.
    pub exhaustive_cap: u32,
}

impl ExtractorParams {
    pub fn new(epsilon: Rational64, d: Rational64, big_d: Rational64, n0: u64) -> Self {
        Self {
            epsilon,
            delta: epsilon / 4,
            d,
            big_d,
            n0,
            search_budget: 1_000_000,
            full_lookahead: 8,
            max_lookahead: None,
            exhaustive_cap: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ExtractError> {
        let err = |s: &str| Err(ExtractError::Params(s.to_string()));
        if self.epsilon <= Rational64::zero() {
            return err("epsilon must be positive");
        }
        if self.delta <= Rational64::zero() || self.delta > self.epsilon / 4 {
            return err("delta must lie in (0, epsilon/4]");
        }
        if self.d <= Rational64::zero() || self.big_d <= Rational64::zero() {
            return err("d and D must be positive");
        }
        if self.full_lookahead > 20 {
            return err("full_lookahead above 20 enumerates too many assignments");
        }
        Ok(())
    }

    fn within_d(&self, usage: u64, n: u64) -> bool {
        Rational64::from_integer(usage as i64) <= self.d * Rational64::from_integer(n as i64)
    }

    fn within_big_d(&self, usage: u64, m: u64) -> bool {
        Rational64::from_integer(usage as i64) <= self.big_d * Rational64::from_integer(m as i64)
    }

    /// Smallest output length in block `b` subject to (c), if any.
    fn c_point(&self, b: u64) -> Option<u64> {
        let (start, end) = (triangular(b - 1), triangular(b));
        let m = (start + 1).max(self.n0);
        (m <= end).then_some(m)
    }
}

/// Checks a whole candidate stream from the first record.
pub fn check_conditions(
    candidate: &[bool],
    s: &dyn PrefixOracle,
    params: &ExtractorParams,
    oracle: &ComplexityOracle,
) -> Result<CheckOutcome, ExtractError> {
    let mut dec = BlockDecoder::new(oracle);
    scan(&mut dec, candidate, 0, s, params)
}

/// Decodes complete records of `stream` from `start` with `dec` positioned
/// after the records before `start`, checking (a) and (c) per block and (b)
/// at the last complete block. A trailing partial record is ignored.
fn scan(
    dec: &mut BlockDecoder,
    stream: &[bool],
    start: u64,
    s: &dyn PrefixOracle,
    params: &ExtractorParams,
) -> Result<CheckOutcome, ExtractError> {
    let mut reader = OracleReader::at(&stream, start);
    let mut usage = start;
    while usage < stream.len() as u64 {
        let b = dec.blocks_done() + 1;
        let (lo, hi) = block_bounds(b)?;
        if s.horizon().is_some_and(|h| hi > h) {
            break;
        }
        let record = match dec.read_record(&mut reader) {
            Ok(r) => r,
            Err(CodecError::Truncated { .. }) => break,
            Err(e) => {
                return Ok(CheckOutcome::Fail(Violation {
                    condition: Condition::A,
                    position: triangular(b - 1),
                    detail: e.to_string(),
                }))
            }
        };
        let block = match dec.reconstruct(&record) {
            Ok(v) => v,
            Err(e) => {
                return Ok(CheckOutcome::Fail(Violation {
                    condition: Condition::A,
                    position: triangular(b - 1),
                    detail: e.to_string(),
                }))
            }
        };
        for (k, &bit) in block.iter().enumerate() {
            if s.bit(lo + k as u64)? != bit {
                return Ok(CheckOutcome::Fail(Violation {
                    condition: Condition::A,
                    position: lo + k as u64,
                    detail: format!("block {b} decodes to a wrong bit"),
                }));
            }
        }
        dec.advance(&block);
        usage = reader.position();
        if let Some(m) = params.c_point(b) {
            if !params.within_big_d(usage, m) {
                return Ok(CheckOutcome::Fail(Violation {
                    condition: Condition::C,
                    position: m,
                    detail: format!("usage {usage} > D*m = {}", to_decimal(params.big_d * m as i64, 3)),
                }));
            }
        }
    }
    let blocks = dec.blocks_done();
    let n = triangular(blocks);
    if !params.within_d(usage, n) {
        return Ok(CheckOutcome::Fail(Violation {
            condition: Condition::B,
            position: n,
            detail: format!("usage {usage} > d*N = {}", to_decimal(params.d * n as i64, 3)),
        }));
    }
    Ok(CheckOutcome::Ok { boundary: n, blocks, usage })
}

/// How a stage's extension was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Modes per block, `L` literal and `C` conditional.
    Structured { modes: String },
    Exhaustive { bits: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: u64,
    pub first_block: u64,
    pub last_block: u64,
    /// Block boundary `N` reached.
    pub boundary: u64,
    /// `|R′|` after the stage.
    pub usage: u64,
    /// `d·N`, for comparison with `usage`.
    pub b_limit: String,
    /// Smallest `D·m − usage(m)` over the `m` checked in this stage.
    pub c_min_slack: Option<String>,
    pub candidates_tried: u64,
    pub method: Method,
}

/// Per-block records for both modes, computed with the true prefix as
/// context.
#[derive(Debug, Clone)]
struct OptionCache {
    scout: BlockEncoder,
    verifier: BlockDecoder,
    records: Vec<[CodeRecord; 2]>,
}

impl OptionCache {
    fn new(oracle: &ComplexityOracle) -> Self {
        Self { scout: BlockEncoder::new(oracle), verifier: BlockDecoder::new(oracle), records: Vec::new() }
    }

    /// Makes records available through block `b`.
    fn ensure(&mut self, b: u64, s: &dyn PrefixOracle) -> Result<(), ExtractError> {
        while (self.records.len() as u64) < b {
            let i = self.records.len() as u64 + 1;
            let (lo, hi) = block_bounds(i)?;
            let block: Vec<bool> = (lo..hi).map(|p| s.bit(p)).collect::<Result<_, _>>()?;
            let opts = self.scout.options(&block)?;
            if self.verifier.reconstruct(&opts[1]).ok().as_deref() != Some(&block[..]) {
                return Err(ExtractError::SelfCheck(i));
            }
            self.scout.advance(&block)?;
            self.verifier.advance(&block);
            self.records.push(opts);
        }
        Ok(())
    }

    fn len(&self, b: u64, mode: Mode) -> u64 {
        self.records[b as usize - 1][mode as usize].len()
    }

    fn min_mode(&self, b: u64) -> Mode {
        let [l, c] = &self.records[b as usize - 1];
        if c.len() < l.len() {
            Mode::Conditional
        } else {
            Mode::Literal
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExtractorState {
    pub emitted: BitSequence,
    pub blocks_done: u64,
    pub decoded_prefix: BitSequence,
    pub condition_log: Vec<StageRecord>,
    decoder: BlockDecoder,
    cache: OptionCache,
}

/// A found extension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extension {
    pub bits: Vec<bool>,
    pub blocks: u64,
    pub method: Method,
    pub tried: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchResult {
    Found(Extension),
    Exhausted { tried: u64, condition: Condition },
}

impl ExtractorState {
    pub fn new(oracle: &ComplexityOracle) -> Self {
        Self {
            emitted: BitSequence::new(),
            blocks_done: 0,
            decoded_prefix: BitSequence::new(),
            condition_log: Vec::new(),
            decoder: BlockDecoder::new(oracle),
            cache: OptionCache::new(oracle),
        }
    }

    pub fn boundary(&self) -> u64 {
        triangular(self.blocks_done)
    }

    /// Highest block whose bits lie within `horizon` and the lookahead cap.
    fn last_block(&self, params: &ExtractorParams, horizon: u64) -> u64 {
        let mut k = block_containing(horizon).complete_blocks;
        if let Some(cap) = params.max_lookahead {
            k = k.min(self.blocks_done + cap);
        }
        k
    }

    /// Structured search: assignments for the next `j` blocks, `j`
    /// increasing, each `j` in order of total length (then literal-first).
    pub fn structured_search(
        &mut self,
        s: &dyn PrefixOracle,
        params: &ExtractorParams,
        horizon: u64,
    ) -> Result<SearchResult, ExtractError> {
        let i = self.blocks_done;
        let last = self.last_block(params, horizon);
        let base = self.emitted.len() as u64;
        let mut tried = 0u64;
        let mut blocking = Condition::B;
        // running sums along the shortest assignment
        let mut min_cum = base;
        for j in 1..=last.saturating_sub(i) {
            let b = i + j;
            self.cache.ensure(b, s)?;
            min_cum += self.cache.len(b, self.cache.min_mode(b));
            // (c) at block b fails for the shortest assignment, hence for all
            // assignments of every depth >= j
            let c_dead = params.c_point(b).is_some_and(|m| !params.within_big_d(min_cum, m));

            if j <= params.full_lookahead {
                let mut assignments: Vec<(u64, u64)> = (0..1u64 << j)
                    .map(|mask| {
                        let len: u64 = (0..j).map(|t| self.cache.len(i + 1 + t, mode_of(mask, t))).sum();
                        (len, mask)
                    })
                    .collect();
                assignments.sort_unstable_by_key(|&(len, mask)| (len, mask.reverse_bits()));
                for (_, mask) in assignments {
                    tried += 1;
                    if tried > params.search_budget {
                        return Ok(SearchResult::Exhausted { tried: tried - 1, condition: blocking });
                    }
                    let modes: Vec<Mode> = (0..j).map(|t| mode_of(mask, t)).collect();
                    match self.lengths_pass(&modes, params) {
                        Ok(()) => return Ok(SearchResult::Found(self.build(&modes, tried))),
                        Err(c) => blocking = c,
                    }
                }
            } else {
                tried += 1;
                if tried > params.search_budget {
                    return Ok(SearchResult::Exhausted { tried: tried - 1, condition: blocking });
                }
                let modes: Vec<Mode> = (i + 1..=b).map(|x| self.cache.min_mode(x)).collect();
                match self.lengths_pass(&modes, params) {
                    Ok(()) => return Ok(SearchResult::Found(self.build(&modes, tried))),
                    Err(c) => blocking = c,
                }
            }
            if c_dead {
                return Ok(SearchResult::Exhausted { tried, condition: Condition::C });
            }
        }
        Ok(SearchResult::Exhausted { tried, condition: blocking })
    }

    /// (b) and (c) from cached record lengths; (a) holds by construction.
    fn lengths_pass(&self, modes: &[Mode], params: &ExtractorParams) -> Result<(), Condition> {
        let mut cum = self.emitted.len() as u64;
        for (t, &mode) in modes.iter().enumerate() {
            let b = self.blocks_done + 1 + t as u64;
            cum += self.cache.len(b, mode);
            if let Some(m) = params.c_point(b) {
                if !params.within_big_d(cum, m) {
                    return Err(Condition::C);
                }
            }
        }
        let n = triangular(self.blocks_done + modes.len() as u64);
        if params.within_d(cum, n) {
            Ok(())
        } else {
            Err(Condition::B)
        }
    }

    fn build(&self, modes: &[Mode], tried: u64) -> Extension {
        let mut bits = Vec::new();
        for (t, &mode) in modes.iter().enumerate() {
            let b = self.blocks_done + 1 + t as u64;
            self.cache.records[b as usize - 1][mode as usize].write(&mut bits);
        }
        let blocks = modes.len() as u64;
        let modes = modes.iter().map(|m| if *m == Mode::Literal { 'L' } else { 'C' }).collect();
        Extension { bits, blocks, method: Method::Structured { modes }, tried }
    }

    /// Brute force over every bit string of length `1..=cap` in length-lex
    /// order: the first string whose complete records pass all conditions
    /// and reach a new block boundary.
    pub fn exhaustive_search(
        &self,
        s: &dyn PrefixOracle,
        params: &ExtractorParams,
        cap: u32,
    ) -> Result<SearchResult, ExtractError> {
        let base = self.emitted.as_slice();
        let mut tried = 0u64;
        let mut blocking = Condition::B;
        let mut stream = base.to_vec();
        for len in 1..=cap {
            for v in 0u64..(1u64 << len) {
                tried += 1;
                if tried > params.search_budget {
                    return Ok(SearchResult::Exhausted { tried: tried - 1, condition: blocking });
                }
                stream.truncate(base.len());
                stream.extend((0..len).rev().map(|k| (v >> k) & 1 == 1));
                let mut dec = self.decoder.clone();
                match scan(&mut dec, &stream, base.len() as u64, s, params)? {
                    CheckOutcome::Ok { blocks, .. } if blocks > self.blocks_done => {
                        let bits = stream[base.len()..].to_vec();
                        return Ok(SearchResult::Found(Extension {
                            bits,
                            blocks: blocks - self.blocks_done,
                            method: Method::Exhaustive { bits: len as u64 },
                            tried,
                        }));
                    }
                    CheckOutcome::Ok { .. } => {}
                    CheckOutcome::Fail(v) => blocking = v.condition,
                }
            }
        }
        Ok(SearchResult::Exhausted { tried, condition: blocking })
    }

    /// Structured search, then brute force if enabled.
    pub fn next_extension(
        &mut self,
        s: &dyn PrefixOracle,
        params: &ExtractorParams,
        horizon: u64,
    ) -> Result<SearchResult, ExtractError> {
        let r = self.structured_search(s, params, horizon)?;
        if matches!(r, SearchResult::Found(_)) || params.exhaustive_cap == 0 {
            return Ok(r);
        }
        let SearchResult::Exhausted { tried, .. } = r else { unreachable!() };
        Ok(match self.exhaustive_search(s, params, params.exhaustive_cap)? {
            SearchResult::Found(mut e) => {
                e.tried += tried;
                SearchResult::Found(e)
            }
            SearchResult::Exhausted { tried: t2, condition } => SearchResult::Exhausted { tried: tried + t2, condition },
        })
    }

    /// Appends an extension found by a search and logs the stage.
    pub fn accept(&mut self, ext: Extension, s: &dyn PrefixOracle, params: &ExtractorParams) -> Result<(), ExtractError> {
        let first = self.blocks_done + 1;
        let start = self.emitted.len() as u64;
        let mut stream = self.emitted.clone().into_vec();
        stream.extend_from_slice(&ext.bits);
        let mut reader = OracleReader::at(&stream, start);
        let mut slack: Option<Rational64> = None;
        while reader.position() < stream.len() as u64 {
            let block = self.decoder.decode_next(&mut reader)?;
            self.decoded_prefix.extend_from_slice(&block);
            self.blocks_done += 1;
            if let Some(m) = params.c_point(self.blocks_done) {
                let sl = params.big_d * m as i64 - Rational64::from_integer(reader.position() as i64);
                slack = Some(slack.map_or(sl, |x: Rational64| x.min(sl)));
            }
        }
        debug_assert_eq!(self.decoded_prefix.as_slice(), s.prefix(self.boundary())?.as_slice());
        self.emitted = stream.into();
        let n = self.boundary();
        self.condition_log.push(StageRecord {
            stage: self.condition_log.len() as u64 + 1,
            first_block: first,
            last_block: self.blocks_done,
            boundary: n,
            usage: self.emitted.len() as u64,
            b_limit: to_decimal(params.d * n as i64, 3),
            c_min_slack: slack.map(|x| to_decimal(x, 3)),
            candidates_tried: ext.tried,
            method: ext.method,
        });
        Ok(())
    }
}

fn mode_of(mask: u64, t: u64) -> Mode {
    if (mask >> t) & 1 == 1 {
        Mode::Conditional
    } else {
        Mode::Literal
    }
}

/// Result of the independent pass over a finished `R′`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Verification {
    pub blocks_decoded: u64,
    pub decode_ok: bool,
    pub b_checked: u64,
    pub c_checked: u64,
    pub violations: Vec<Violation>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.decode_ok && self.violations.is_empty()
    }
}

/// Decodes all of `r_prime` from scratch and checks (a) everywhere, (b) at
/// every accepted boundary and (c) at every `m` in `[n0, horizon]`.
pub fn verify(
    r_prime: &[bool],
    s: &dyn PrefixOracle,
    params: &ExtractorParams,
    boundaries: &[u64],
    oracle: &ComplexityOracle,
) -> Result<Verification, ExtractError> {
    let mut v = Verification { decode_ok: true, ..Default::default() };
    let mut dec = BlockDecoder::new(oracle);
    let mut reader = OracleReader::new(&r_prime);
    let mut boundary_usage = vec![0u64];
    while reader.position() < r_prime.len() as u64 {
        let b = dec.blocks_done() + 1;
        match dec.decode_next(&mut reader) {
            Ok(block) => {
                let (lo, _) = block_bounds(b)?;
                if let Some(k) = (0..block.len()).find(|&k| s.bit(lo + k as u64).map(|x| x != block[k]).unwrap_or(true)) {
                    v.decode_ok = false;
                    v.violations.push(Violation {
                        condition: Condition::A,
                        position: lo + k as u64,
                        detail: format!("block {b} decodes to a wrong bit"),
                    });
                    break;
                }
                boundary_usage.push(reader.position());
            }
            Err(e) => {
                v.decode_ok = false;
                v.violations.push(Violation { condition: Condition::A, position: triangular(b - 1), detail: e.to_string() });
                break;
            }
        }
    }
    let blocks = boundary_usage.len() as u64 - 1;
    v.blocks_decoded = blocks;
    let horizon = triangular(blocks);
    for &n in boundaries {
        let k = block_containing(n).complete_blocks;
        if triangular(k) != n || k > blocks {
            v.violations.push(Violation { condition: Condition::B, position: n, detail: "not a decoded block boundary".into() });
            continue;
        }
        v.b_checked += 1;
        let u = boundary_usage[k as usize];
        if !params.within_d(u, n) {
            v.violations.push(Violation { condition: Condition::B, position: n, detail: format!("usage {u} > d*N") });
        }
    }
    let mut b = 0u64;
    for m in params.n0.max(1)..=horizon {
        while triangular(b) < m {
            b += 1;
        }
        v.c_checked += 1;
        let u = boundary_usage[b as usize];
        if !params.within_big_d(u, m) {
            v.violations.push(Violation { condition: Condition::C, position: m, detail: format!("usage {u} > D*m") });
            break;
        }
    }
    Ok(v)
}

/// Summary of one extraction run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub params: ExtractorParams,
    pub source_horizon: u64,
    pub target_n: u64,
    #[serde(with = "serde_ratio")]
    pub dim_h_s: Rational64,
    #[serde(with = "serde_ratio")]
    pub dim_p_s: Rational64,
    /// Tail min and max of the codec's usage ratio on `S`, which set `d`
    /// and `D`.
    #[serde(with = "serde_ratio")]
    pub codec_rho_minus: Rational64,
    #[serde(with = "serde_ratio")]
    pub codec_rho_plus: Rational64,
    /// `dim_H(S)/dim_P(S) − ε`.
    #[serde(with = "serde_ratio")]
    pub target_h: Rational64,
    /// `1 − ε`.
    #[serde(with = "serde_ratio")]
    pub target_p: Rational64,
    pub r_prime_len: u64,
    pub covered: u64,
    #[serde(with = "serde_ratio")]
    pub dim_h_r: Rational64,
    #[serde(with = "serde_ratio")]
    pub dim_p_r: Rational64,
    pub stages: Vec<StageRecord>,
    pub verification: Verification,
    #[serde(skip)]
    pub source_profile: Option<DimensionProfile>,
    #[serde(skip)]
    pub r_prime_profile: Option<DimensionProfile>,
}

/// Optional settings for [`extract`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractOverrides {
    #[serde(default, with = "crate::ratio::serde_ratio_opt", skip_serializing_if = "Option::is_none")]
    pub delta: Option<Rational64>,
    #[serde(default, with = "crate::ratio::serde_ratio_opt", skip_serializing_if = "Option::is_none")]
    pub d: Option<Rational64>,
    #[serde(default, with = "crate::ratio::serde_ratio_opt", skip_serializing_if = "Option::is_none", rename = "D")]
    pub big_d: Option<Rational64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_lookahead: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_lookahead: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exhaustive_cap: Option<u32>,
}

/// Measures `S`, derives parameters, and runs stages until `R′` covers
/// `target_n` source bits. The search may look ahead to the source horizon.
pub fn extract(
    s: &dyn PrefixOracle,
    epsilon: Rational64,
    target_n: u64,
    oracle: &ComplexityOracle,
    overrides: &ExtractOverrides,
) -> Result<(BitSequence, ExtractionReport), ExtractError> {
    let horizon = s
        .horizon()
        .ok_or_else(|| ExtractError::Params("source needs a finite horizon".into()))?;
    if target_n == 0 || target_n > horizon {
        return Err(ExtractError::Params(format!("target {target_n} outside (0, {horizon}]")));
    }
    let delta = overrides.delta.unwrap_or(epsilon / 4);
    let n0 = overrides.n0.unwrap_or_else(|| default_tail_start(horizon));
    let proxy = ComplexityOracle::proxy();

    let pts = geometric_grid(64.min(n0), default_grid_ratio(), horizon, &[]);
    let s_prof = profile(s, &pts, &proxy, Some(n0))?;
    let (dim_h_s, dim_p_s) = s_prof.tail_bounds()?;
    if dim_p_s <= delta {
        return Err(ExtractError::Precondition { dim_p: to_decimal(dim_p_s, 6), delta: to_decimal(delta, 6) });
    }

    let k = block_containing(horizon).complete_blocks;
    let (codec_prof, _, _) = compression_trace(s, triangular(k), oracle, Some(n0))?;
    let (rho_lo, rho_hi) = rho_hats(&codec_prof)?;
    let params = ExtractorParams {
        epsilon,
        delta,
        d: overrides.d.unwrap_or(rho_lo + delta / 2),
        big_d: overrides.big_d.unwrap_or(rho_hi + delta * 7 / 2),
        n0,
        search_budget: overrides.search_budget.unwrap_or(1_000_000),
        full_lookahead: overrides.full_lookahead.unwrap_or(8),
        max_lookahead: overrides.max_lookahead,
        exhaustive_cap: overrides.exhaustive_cap.unwrap_or(0),
    };
    params.validate()?;

    let mut st = ExtractorState::new(oracle);
    while st.boundary() < target_n {
        match st.next_extension(s, &params, horizon)? {
            SearchResult::Found(ext) => st.accept(ext, s, &params)?,
            SearchResult::Exhausted { tried, condition } => {
                return Err(ExtractError::Exhausted {
                    stage: st.condition_log.len() as u64 + 1,
                    tried,
                    condition,
                    hint: to_decimal(params.d + params.delta / 2, 6),
                })
            }
        }
    }

    let boundaries: Vec<u64> = st.condition_log.iter().map(|r| r.boundary).collect();
    let verification = verify(&st.emitted, s, &params, &boundaries, oracle)?;

    let r_len = st.emitted.len() as u64;
    let r_pts = geometric_grid(64.min(r_len), default_grid_ratio(), r_len, &[]);
    let r_prof = profile(&st.emitted, &r_pts, &proxy, None)?;
    let (dim_h_r, dim_p_r) = r_prof.tail_bounds()?;

    let report = ExtractionReport {
        params,
        source_horizon: horizon,
        target_n,
        dim_h_s,
        dim_p_s,
        codec_rho_minus: rho_lo,
        codec_rho_plus: rho_hi,
        target_h: dim_h_s / dim_p_s - epsilon,
        target_p: Rational64::from_integer(1) - epsilon,
        r_prime_len: r_len,
        covered: st.boundary(),
        dim_h_r,
        dim_p_r,
        stages: st.condition_log.clone(),
        verification,
        source_profile: Some(s_prof),
        r_prime_profile: Some(r_prof),
    };
    Ok((st.emitted, report))
}
