use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::{run, Action, CodecDecode, Machine, MachineError, MachineSpec, ReductionError, ReductionTrace};
use crate::codec::{encode, encode_padded, CodecError};
use crate::complexity::ComplexityOracle;
use crate::ratio::serde_ratio;
use crate::seqcore::PrefixOracle;

fn layer(name: &'static str) -> impl Fn(MachineError) -> MachineError {
    move |e| MachineError::Layer { layer: name, source: Box::new(e) }
}

/// Runs `second` on the output of `first`. `first` is advanced lazily, only
/// as far as the rightmost S′ position `second` has asked for, and its
/// output is cached.
pub struct Composite {
    first: Box<dyn Machine>,
    second: Box<dyn Machine>,
    cache: Vec<bool>,
    want: Option<u64>,
}

impl Composite {
    pub fn new(first: Box<dyn Machine>, second: Box<dyn Machine>) -> Self {
        Self { first, second, cache: Vec::new(), want: None }
    }

    /// S′ bits produced so far.
    pub fn intermediate(&self) -> &[bool] {
        &self.cache
    }
}

impl Machine for Composite {
    fn step(&mut self, answer: Option<bool>) -> Result<Action, MachineError> {
        let mut first_answer = answer;
        let mut second_answer = None;
        loop {
            if let Some(p) = self.want {
                if let Some(&x) = self.cache.get(p as usize) {
                    second_answer = Some(x);
                    self.want = None;
                } else {
                    match self.first.step(first_answer.take()).map_err(layer("first"))? {
                        Action::Query(q) => return Ok(Action::Query(q)),
                        Action::Output(x) => self.cache.push(x),
                        Action::Work => return Ok(Action::Work),
                    }
                    continue;
                }
            }
            match self.second.step(second_answer.take()).map_err(layer("second"))? {
                Action::Query(p) => self.want = Some(p),
                other => return Ok(other),
            }
        }
    }
}

/// Result of decoding a twice-encoded sequence through a composite
/// machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubleEncodeReport {
    pub n: u64,
    pub tail_start: u64,
    /// `|R1|` and `|R2|`: the codec output of `S` and of `R1`.
    pub r1_len: u64,
    pub r2_len: u64,
    /// First `n` where composite usage differs from `usage_M1(usage′_M2(n))`.
    pub law_mismatch: Option<u64>,
    /// Tail maximum of usage ratio for the composite on `[tail_start, n]`.
    #[serde(with = "serde_ratio")]
    pub rho_plus_composite: Rational64,
    /// Same for the inner decoder `R1 → S`.
    #[serde(with = "serde_ratio")]
    pub rho_plus_second: Rational64,
    /// Outer decoder `R2 → R1`, over `[usage′_M2(tail_start), usage′_M2(n)]`.
    #[serde(with = "serde_ratio")]
    pub rho_plus_first: Rational64,
    #[serde(skip)]
    pub composite_trace: ReductionTrace,
    #[serde(skip)]
    pub second_usage: Vec<u64>,
    #[serde(skip)]
    pub first_usage: Vec<u64>,
}

impl DoubleEncodeReport {
    /// `ρ̂⁺(composite) − ρ̂⁺(M2)·ρ̂⁺(M1)`.
    pub fn product_gap(&self) -> Rational64 {
        self.rho_plus_composite - self.rho_plus_second * self.rho_plus_first
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,usage_composite,usage_second,usage_first_at_second\n");
        for (k, &u) in self.composite_trace.usage.iter().enumerate() {
            let u2 = self.second_usage[k];
            let u1 = if u2 == 0 { 0 } else { self.first_usage[u2 as usize - 1] };
            s.push_str(&format!("{},{u},{u2},{u1}\n", k + 1));
        }
        s
    }
}

fn tail_max(usage: impl Fn(u64) -> u64, lo: u64, hi: u64) -> Rational64 {
    (lo.max(1)..=hi).map(|k| Rational64::new(usage(k) as i64, k as i64)).max().unwrap_or_default()
}

/// Encodes `S[0..n]` (whole blocks) to `R1`, `R1` to `R2`, then decodes
/// `R2` back to `S` through `compose(decode, decode)` and checks the usage
/// law at every `n`.
pub fn double_encode(
    s: &dyn PrefixOracle,
    n: u64,
    tail_start: u64,
    oracle: &ComplexityOracle,
    step_budget: u64,
) -> Result<DoubleEncodeReport, ReductionError> {
    let codec_err = |e: CodecError| ReductionError::Machine { produced: 0, source: MachineError::Fault(e.to_string()) };
    let r1 = encode(s, n, oracle).map_err(codec_err)?.bits;
    let r2 = encode_padded(&r1, oracle).map_err(codec_err)?.bits;
    let decoder = || -> Box<dyn Machine> { Box::new(CodecDecode::new(oracle)) };

    let mut comp = Composite::new(decoder(), decoder());
    let (out, tc) = run(&mut comp, &r2, n, step_budget).into_complete()?;
    let (out2, t2) = run(&mut *decoder(), &r1, n, step_budget).into_complete()?;
    debug_assert_eq!(out, out2);
    let need = t2.usage_at(n);
    let (_, t1) = run(&mut *decoder(), &r2, need, step_budget).into_complete()?;

    let law_mismatch = (1..=n).find(|&k| tc.usage_at(k) != t1.usage_at(t2.usage_at(k)));
    let tail = tail_start.min(n);
    Ok(DoubleEncodeReport {
        n,
        tail_start: tail,
        r1_len: r1.len() as u64,
        r2_len: r2.len() as u64,
        law_mismatch,
        rho_plus_composite: tail_max(|k| tc.usage_at(k), tail, n),
        rho_plus_second: tail_max(|k| t2.usage_at(k), tail, n),
        rho_plus_first: tail_max(|k| t1.usage_at(k), t2.usage_at(tail), need),
        composite_trace: tc,
        second_usage: t2.usage,
        first_usage: t1.usage,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawReport {
    pub n: u64,
    /// S′ bits the composite had to produce.
    pub intermediate_len: u64,
    /// First `n` where `usage_composite(n) ≠ usage_M1(usage′_M2(n))`.
    pub mismatch: Option<u64>,
}

impl LawReport {
    pub fn holds(&self) -> bool {
        self.mismatch.is_none()
    }
}

/// Runs `compose(first, second)` on `s` for `n` bits, then each layer on its
/// own, and compares the composite trace with the composed usage at every
/// `n`.
pub fn check_composition_law(
    first: &MachineSpec,
    second: &MachineSpec,
    s: &dyn PrefixOracle,
    n: u64,
    step_budget: u64,
) -> Result<LawReport, ReductionError> {
    let mut comp = Composite::new(first.build(), second.build());
    let (out_c, tc) = run(&mut comp, s, n, step_budget).into_complete()?;
    let mid = comp.intermediate().to_vec();
    let (out2, t2) = run(&mut *second.build(), &mid, n, step_budget).into_complete()?;
    let (s1, t1) = run(&mut *first.build(), s, mid.len() as u64, step_budget).into_complete()?;
    let mut mismatch = (1..=n).find(|&k| tc.usage_at(k) != t1.usage_at(t2.usage_at(k)));
    if out_c != out2 || s1 != mid {
        mismatch = mismatch.or(Some(0));
    }
    Ok(LawReport { n, intermediate_len: mid.len() as u64, mismatch })
}
