//! Complexity estimators: an exact search over the toy prefix machine and
//! a compressor proxy. Both give plain and conditional estimates and an
//! incremental session used by the block codec.

pub mod arith;
pub mod ctw;
pub mod exact;
pub mod gamma;
pub mod lz78;
pub mod proxy;
pub mod toy;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exact::{exact_complexity, shortest_program, SearchOutcome};
pub use gamma::{gamma0_len, write_gamma0, BitReadError, BitReader};
pub use proxy::{ProxyConfig, ProxyMeter, ProxyState};
pub use toy::{literal_program_len, Instruction, ProgramError, ToyProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactConfig {
    /// Longest program the search will consider.
    pub max_program_len: u64,
    /// Step budget per search.
    pub budget: u64,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self { max_program_len: 4096, budget: 50_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ComplexityOracle {
    ExactToyMachine(ExactConfig),
    DictionaryProxy(ProxyConfig),
}

impl Default for ComplexityOracle {
    fn default() -> Self {
        ComplexityOracle::DictionaryProxy(ProxyConfig::default())
    }
}

/// A complexity value in bits. `confirmed` is false when the value is only
/// an upper bound (exact search capped or out of budget).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Estimate {
    pub bits: u64,
    pub confirmed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DescriptionError {
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Proxy(#[from] proxy::ProxyError),
    #[error("description yields {got} bits, expected {want}")]
    Length { got: u64, want: u64 },
}

/// Searches for a toy program of at most `max_len` bits printing `w`.
pub fn find_short_program(w: &[bool], max_len: u64, budget: u64) -> SearchOutcome {
    shortest_program(w, &[], max_len, budget)
}

impl ComplexityOracle {
    pub fn proxy() -> Self {
        Self::default()
    }

    pub fn exact(max_program_len: u64, budget: u64) -> Self {
        ComplexityOracle::ExactToyMachine(ExactConfig { max_program_len, budget })
    }

    pub fn complexity(&self, w: &[bool]) -> Estimate {
        self.cond_complexity_inner(w, &[], false)
    }

    pub fn cond_complexity(&self, w: &[bool], x: &[bool]) -> Estimate {
        self.cond_complexity_inner(w, x, true)
    }

    fn cond_complexity_inner(&self, w: &[bool], x: &[bool], conditional: bool) -> Estimate {
        match self {
            ComplexityOracle::ExactToyMachine(c) => {
                let (bits, confirmed) = exact_complexity(w, x, c.max_program_len, c.budget);
                Estimate { bits, confirmed }
            }
            ComplexityOracle::DictionaryProxy(c) => {
                let bits = if conditional {
                    proxy::cond_complexity(w, x, *c)
                } else {
                    proxy::complexity(w, *c)
                };
                Estimate { bits, confirmed: true }
            }
        }
    }

    /// Worst-case excess of `complexity(w)` over `|w|` for strings of
    /// length `n`.
    pub fn literal_overhead(&self, n: u64) -> u64 {
        match self {
            ComplexityOracle::ExactToyMachine(_) => literal_program_len(n) - n,
            ComplexityOracle::DictionaryProxy(_) => proxy::TAG_LEN,
        }
    }

    pub fn session(&self) -> Session {
        match self {
            ComplexityOracle::ExactToyMachine(c) => Session::Exact { config: *c, context: Vec::new() },
            ComplexityOracle::DictionaryProxy(c) => Session::Proxy(ProxyState::new(*c)),
        }
    }
}

/// Incremental conditional describer. The context grows by `advance`;
/// `describe` and `reconstruct` leave it unchanged.
#[derive(Debug, Clone)]
pub enum Session {
    Exact { config: ExactConfig, context: Vec<bool> },
    Proxy(ProxyState),
}

impl Session {
    pub fn context_len(&self) -> u64 {
        match self {
            Session::Exact { context, .. } => context.len() as u64,
            Session::Proxy(s) => s.context_len(),
        }
    }

    /// A description of `w` given the current context, for a reader that
    /// knows `|w|`.
    pub fn describe(&mut self, w: &[bool]) -> Vec<bool> {
        match self {
            Session::Exact { config, context } => {
                match shortest_program(w, context, config.max_program_len, config.budget) {
                    SearchOutcome::Found(p) | SearchOutcome::BudgetExhausted { best: Some(p) } => p.encode(),
                    _ => ToyProgram::literal(w).encode(),
                }
            }
            Session::Proxy(s) => s.describe(w).1,
        }
    }

    pub fn reconstruct(&mut self, desc: &[bool], n: u64) -> Result<Vec<bool>, DescriptionError> {
        let out = match self {
            Session::Exact { context, .. } => {
                let p = ToyProgram::decode(desc)?;
                p.run(context, desc.len() as u64 + n + 1)?
            }
            Session::Proxy(s) => s.reconstruct(desc, n)?,
        };
        if out.len() as u64 != n {
            return Err(DescriptionError::Length { got: out.len() as u64, want: n });
        }
        Ok(out)
    }

    pub fn advance(&mut self, w: &[bool]) {
        match self {
            Session::Exact { context, .. } => context.extend_from_slice(w),
            Session::Proxy(s) => s.advance(w),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::prng;

    #[test]
    fn prng_64_has_no_short_exact_program() {
        let w = prng(0x5eed, 64).into_vec();
        let oracle = ComplexityOracle::exact(32, 1 << 32);
        let e = oracle.complexity(&w);
        assert_eq!(e, Estimate { bits: 64 + literal_program_len(64) - 64, confirmed: false });
        assert_eq!(e.bits, 81);
        assert_eq!(find_short_program(&w, 32, 1 << 32), SearchOutcome::NotFound);
    }

    #[test]
    fn prng_64_nothing_within_ten_bits_by_enumeration() {
        let w = prng(0x5eed, 64).into_vec();
        for len in 1..=10usize {
            for v in 0u64..(1 << len) {
                let s: Vec<bool> = (0..len).map(|j| (v >> j) & 1 == 1).collect();
                if let Ok(p) = ToyProgram::decode(&s) {
                    assert_ne!(p.run(&[], 1 << 16).ok().as_deref(), Some(&w[..]));
                }
            }
        }
        assert_eq!(find_short_program(&w, 10, 1 << 32), SearchOutcome::NotFound);
    }

    #[test]
    fn zeros_64_found_within_32() {
        let SearchOutcome::Found(p) = find_short_program(&[false; 64], 32, 1 << 32) else { panic!() };
        assert!(p.encoded_len() <= 32);
        assert_eq!(p.run(&[], 1000).unwrap(), vec![false; 64]);
    }

    #[test]
    fn exact_conditioning_never_hurts() {
        let oracle = ComplexityOracle::exact(200, 1 << 32);
        let x = prng(1, 40).into_vec();
        for seed in 0..20 {
            let w = prng(seed, 30).into_vec();
            assert!(oracle.cond_complexity(&w, &x).bits <= oracle.complexity(&w).bits);
        }
        let e = oracle.cond_complexity(&x, &x);
        assert_eq!(e.bits, 1 + 2 + gamma0_len(0) + gamma0_len(40) + 1);
    }

    #[test]
    fn exact_never_loses_much_to_proxy() {
        // measured excess on all strings up to 16 bits and a sample up to 24
        let exact = ComplexityOracle::exact(64, 1 << 32);
        let proxy = ComplexityOracle::proxy();
        let mut worst = i64::MIN;
        let mut check = |w: &[bool]| {
            let d = exact.complexity(w).bits as i64 - proxy.complexity(w).bits as i64;
            worst = worst.max(d);
        };
        for len in 0..=16usize {
            for v in 0u64..(1 << len) {
                check(&(0..len).map(|j| (v >> j) & 1 == 1).collect::<Vec<_>>());
            }
        }
        for seed in 0..2000u64 {
            let len = 17 + (seed % 8) as usize;
            check(prng(seed, len as u64).as_slice());
        }
        assert_eq!(worst, EXACT_VS_PROXY_EXCESS);
    }

    /// `max(exact - proxy)` over the strings above. The arithmetic code
    /// drops trailing zeros and its reader knows the length, so a few
    /// strings of every length land on a short dyadic point and get a
    /// near-empty body; 0000100000000100 costs 29 bits exactly but 13 under
    /// the proxy.
    const EXACT_VS_PROXY_EXCESS: i64 = 16;

    #[test]
    fn finite_variation_is_bounded_under_exact_oracle() {
        let oracle = ComplexityOracle::exact(512, 1 << 34);
        let s: Vec<bool> = (0..96).map(|k| k % 3 == 0).collect();
        for k in [1usize, 2, 4, 8] {
            let mut t = s.clone();
            for b in &mut t[..k] {
                *b = !*b;
            }
            for n in [32usize, 64, 96] {
                let a = oracle.complexity(&s[..n]).bits as i64;
                let b = oracle.complexity(&t[..n]).bits as i64;
                let logk = (k as f64).log2().ceil() as i64;
                assert!((a - b).abs() <= k as i64 + 2 * logk + FINITE_VARIATION_C, "k={k} n={n}: {a} vs {b}");
            }
        }
    }

    /// One literal instruction for the flipped head: continuation, opcode
    /// and the γ0 length field beyond `2⌈log k⌉`.
    const FINITE_VARIATION_C: i64 = 4;

    #[test]
    fn estimates_are_deterministic() {
        let w = prng(9, 500).into_vec();
        let x = prng(10, 500).into_vec();
        let o = ComplexityOracle::proxy();
        assert_eq!(o.complexity(&w), o.complexity(&w));
        assert_eq!(o.cond_complexity(&w, &x), o.cond_complexity(&w, &x));
        let e = ComplexityOracle::exact(100, 1 << 20);
        assert_eq!(e.complexity(&w[..40]), e.complexity(&w[..40]));
    }

    #[test]
    fn sessions_roundtrip_both_oracles() {
        let blocks: Vec<Vec<bool>> = (1..12).map(|i| prng(i, i).into_vec()).collect();
        for oracle in [ComplexityOracle::proxy(), ComplexityOracle::exact(256, 1 << 30)] {
            let mut enc = oracle.session();
            let mut dec = oracle.session();
            for b in &blocks {
                let d = enc.describe(b);
                assert_eq!(&dec.reconstruct(&d, b.len() as u64).unwrap(), b);
                enc.advance(b);
                dec.advance(b);
            }
        }
    }
}
