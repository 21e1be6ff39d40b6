//! The compressor proxy.
//!
//! A description of a string whose length is known to the reader is a 2-bit
//! tag followed by a body:
//!
//! ```text
//! 00 w             literal
//! 01 b             run: the whole string is b repeated
//! 10 lz78(w)       incremental-parsing code
//! 11 ctw(w)        arithmetic code under the context-tree model
//! ```
//!
//! The shortest body wins, ties going to the lowest tag. Plain complexity
//! adds the γ0 length field where the body needs it, so
//! `complexity(w) = 2 + min(|w|, 1 + γ0(|w|), γ0(|w|) + lz, γ0(|w|) + ctw)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::arith::{ArithDecoder, ArithEncoder};
use super::ctw::{CtwModel, DEFAULT_DEPTH};
use super::gamma::gamma0_len;
use super::lz78::{Lz78Dict, Lz78Parser, LzError};

pub const TAG_LEN: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxyConfig {
    /// Context depth of the tree model.
    pub ctw_depth: usize,
}

impl Default for ProxyConfig {
    fn default() -> Self {
        Self { ctw_depth: DEFAULT_DEPTH }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Literal,
    Run,
    Lz78,
    Ctw,
}

impl Method {
    fn tag(self) -> [bool; 2] {
        match self {
            Method::Literal => [false, false],
            Method::Run => [false, true],
            Method::Lz78 => [true, false],
            Method::Ctw => [true, true],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProxyError {
    #[error("description shorter than its tag")]
    MissingTag,
    #[error("literal body has {got} bits, expected {want}")]
    LiteralLength { got: usize, want: u64 },
    #[error("run body has {0} bits, expected 1")]
    RunLength(usize),
    #[error("dictionary code: {0}")]
    Lz(#[from] LzError),
}

fn constant_bit(w: &[bool]) -> Option<bool> {
    let first = *w.first()?;
    w.iter().all(|&b| b == first).then_some(first)
}

/// Model state for conditional descriptions: both adaptive coders primed
/// with the context seen so far. Context is fed in chunks and the
/// dictionary parse restarts at each chunk.
#[derive(Debug, Clone)]
pub struct ProxyState {
    lz: Lz78Dict,
    ctw: CtwModel,
    context_len: u64,
}

impl ProxyState {
    pub fn new(config: ProxyConfig) -> Self {
        Self { lz: Lz78Dict::new(), ctw: CtwModel::new(config.ctw_depth), context_len: 0 }
    }

    pub fn context_len(&self) -> u64 {
        self.context_len
    }

    /// Appends `w` to the context.
    pub fn advance(&mut self, w: &[bool]) {
        self.lz.absorb(w);
        for &b in w {
            self.ctw.update(b);
        }
        self.context_len += w.len() as u64;
    }

    fn lz_code(&mut self, w: &[bool]) -> Vec<bool> {
        self.lz.checkpoint();
        let code = self.lz.encode(w);
        self.lz.rollback();
        code
    }

    fn ctw_code(&mut self, w: &[bool]) -> Vec<bool> {
        self.ctw.checkpoint();
        let mut enc = ArithEncoder::new();
        for &b in w {
            enc.encode(b, self.ctw.quantized_zero());
            self.ctw.update(b);
        }
        self.ctw.rollback();
        enc.finish()
    }

    fn body_lengths(&mut self, w: &[bool]) -> (u64, u64) {
        self.lz.checkpoint();
        let mut p = Lz78Parser::new();
        for &b in w {
            p.push(&mut self.lz, b, None);
        }
        let lz = p.prefix_cost(&self.lz);
        self.lz.rollback();

        self.ctw.checkpoint();
        let mut enc = ArithEncoder::counting();
        for &b in w {
            enc.encode(b, self.ctw.quantized_zero());
            self.ctw.update(b);
        }
        self.ctw.rollback();
        (lz, enc.prefix_cost())
    }

    /// Shortest tagged description of `w` for a reader that knows `|w|`.
    pub fn describe(&mut self, w: &[bool]) -> (Method, Vec<bool>) {
        let mut best = (Method::Literal, w.to_vec());
        if let Some(b) = constant_bit(w) {
            if 1 < best.1.len() {
                best = (Method::Run, vec![b]);
            }
        }
        let lz = self.lz_code(w);
        if lz.len() < best.1.len() {
            best = (Method::Lz78, lz);
        }
        let ctw = self.ctw_code(w);
        if ctw.len() < best.1.len() {
            best = (Method::Ctw, ctw);
        }
        let (method, body) = best;
        let mut out = Vec::with_capacity(body.len() + 2);
        out.extend_from_slice(&method.tag());
        out.extend(body);
        (method, out)
    }

    /// Recovers the `n`-bit string described by `desc`. The state is left
    /// unchanged.
    pub fn reconstruct(&mut self, desc: &[bool], n: u64) -> Result<Vec<bool>, ProxyError> {
        if desc.len() < 2 {
            return Err(ProxyError::MissingTag);
        }
        let body = &desc[2..];
        match (desc[0], desc[1]) {
            (false, false) => {
                if body.len() as u64 != n {
                    return Err(ProxyError::LiteralLength { got: body.len(), want: n });
                }
                Ok(body.to_vec())
            }
            (false, true) => {
                if body.len() != 1 {
                    return Err(ProxyError::RunLength(body.len()));
                }
                Ok(vec![body[0]; n as usize])
            }
            (true, false) => {
                self.lz.checkpoint();
                let r = self.lz.decode(body, n);
                self.lz.rollback();
                Ok(r?)
            }
            (true, true) => {
                self.ctw.checkpoint();
                let mut dec = ArithDecoder::new(body);
                let mut out = Vec::with_capacity(n as usize);
                for _ in 0..n {
                    let b = dec.decode(self.ctw.quantized_zero());
                    self.ctw.update(b);
                    out.push(b);
                }
                self.ctw.rollback();
                Ok(out)
            }
        }
    }

    /// Unframed description length of `w` under the current state.
    pub fn complexity(&mut self, w: &[bool]) -> u64 {
        let n = w.len() as u64;
        let (lz, ctw) = self.body_lengths(w);
        combine(n, constant_bit(w).is_some(), lz, ctw)
    }
}

fn combine(n: u64, constant: bool, lz: u64, ctw: u64) -> u64 {
    let g = gamma0_len(n);
    let mut best = n;
    if constant {
        best = best.min(1 + g);
    }
    TAG_LEN + best.min(g + lz).min(g + ctw)
}

/// Plain proxy complexity.
pub fn complexity(w: &[bool], config: ProxyConfig) -> u64 {
    ProxyState::new(config).complexity(w)
}

/// Conditional proxy complexity: one flag bit selects between the primed
/// and the unprimed model, so conditioning costs at most one bit.
pub fn cond_complexity(w: &[bool], x: &[bool], config: ProxyConfig) -> u64 {
    let plain = complexity(w, config);
    let mut primed = ProxyState::new(config);
    primed.advance(x);
    1 + plain.min(primed.complexity(w))
}

/// Streaming meter producing `complexity(S[0..n])` for every `n` in one
/// pass.
#[derive(Debug, Clone)]
pub struct ProxyMeter {
    lz: Lz78Dict,
    parser: Lz78Parser,
    ctw: CtwModel,
    enc: ArithEncoder,
    first: Option<bool>,
    constant: bool,
    n: u64,
}

impl ProxyMeter {
    pub fn new(config: ProxyConfig) -> Self {
        Self {
            lz: Lz78Dict::new(),
            parser: Lz78Parser::new(),
            ctw: CtwModel::new(config.ctw_depth),
            enc: ArithEncoder::counting(),
            first: None,
            constant: true,
            n: 0,
        }
    }

    pub fn push(&mut self, bit: bool) {
        match self.first {
            None => self.first = Some(bit),
            Some(f) => self.constant &= f == bit,
        }
        self.parser.push(&mut self.lz, bit, None);
        self.enc.encode(bit, self.ctw.quantized_zero());
        self.ctw.update(bit);
        self.n += 1;
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Complexity of the prefix pushed so far.
    pub fn current(&self) -> u64 {
        combine(
            self.n,
            self.constant && self.n > 0,
            self.parser.prefix_cost(&self.lz),
            self.enc.prefix_cost(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> ProxyConfig {
        ProxyConfig::default()
    }

    #[test]
    fn empty_string_costs_the_tag() {
        assert_eq!(complexity(&[], cfg()), TAG_LEN);
    }

    #[test]
    fn zeros_use_the_run_description() {
        let w = vec![false; 1024];
        assert_eq!(complexity(&w, cfg()), 2 + 1 + gamma0_len(1024));
        let (m, d) = ProxyState::new(cfg()).describe(&w);
        assert_eq!((m, d), (Method::Run, vec![false, true, false]));
    }

    #[test]
    fn period_eight_context_helps() {
        let pat: Vec<bool> = (0..96).map(|k| [1, 1, 0, 1, 0, 0, 0, 1][k % 8] == 1).collect();
        let (x, w) = pat.split_at(64);
        let plain = complexity(w, cfg());
        let cond = cond_complexity(w, x, cfg());
        assert!(cond < plain, "cond {cond} plain {plain}");
    }

    #[test]
    fn meter_agrees_with_standalone() {
        let s = crate::generators::prng(11, 700).into_vec();
        let d: Vec<bool> = s.iter().enumerate().map(|(k, &b)| k % 3 == 0 && b).collect();
        for seq in [s, d, vec![true; 300]] {
            let mut m = ProxyMeter::new(cfg());
            for n in 0..=seq.len() {
                if n % 37 == 0 || n < 20 {
                    assert_eq!(m.current(), complexity(&seq[..n], cfg()), "n={n}");
                }
                if n < seq.len() {
                    m.push(seq[n]);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn describe_roundtrips(ctx in prop::collection::vec(any::<bool>(), 0..200),
                               w in prop::collection::vec(any::<bool>(), 0..200),
                               sparse in any::<bool>()) {
            let w: Vec<bool> = if sparse { w.iter().enumerate().map(|(k, &b)| k % 4 == 0 && b).collect() } else { w };
            let mut st = ProxyState::new(ProxyConfig { ctw_depth: 6 });
            st.advance(&ctx);
            let (_, desc) = st.describe(&w);
            prop_assert!(desc.len() <= w.len() + 2);
            let mut other = ProxyState::new(ProxyConfig { ctw_depth: 6 });
            other.advance(&ctx);
            prop_assert_eq!(other.reconstruct(&desc, w.len() as u64).unwrap(), w.clone());
            // describing does not disturb the state
            prop_assert_eq!(st.describe(&w).1, desc);
        }

        #[test]
        fn literal_bound_and_conditioning_bound(w in prop::collection::vec(any::<bool>(), 0..300),
                                                x in prop::collection::vec(any::<bool>(), 0..300)) {
            let c = complexity(&w, cfg());
            prop_assert!(c <= w.len() as u64 + TAG_LEN);
            prop_assert!(cond_complexity(&w, &x, cfg()) <= c + 1);
            prop_assert_eq!(cond_complexity(&w, &[], cfg()), c + 1);
        }
    }
}
