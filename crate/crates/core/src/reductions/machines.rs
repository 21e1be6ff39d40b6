use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::{Action, Composite, Guard, GuardSchedule, Machine, MachineError, ReductionClass, UsageBound};
use crate::codec::{max_payload_len, BlockDecoder, CodeRecord};
use crate::complexity::ComplexityOracle;
use crate::ratio::serde_ratio;

/// Output bit `k` is the oracle bit at `a·k + b`, optionally negated.
#[derive(Debug, Clone)]
pub struct AffineMap {
    a: u64,
    b: u64,
    negate: bool,
    k: u64,
}

impl AffineMap {
    pub fn new(a: u64, b: u64, negate: bool) -> Self {
        Self { a, b, negate, k: 0 }
    }
}

impl Machine for AffineMap {
    fn step(&mut self, answer: Option<bool>) -> Result<Action, MachineError> {
        Ok(match answer {
            Some(x) => {
                self.k += 1;
                Action::Output(x ^ self.negate)
            }
            None => Action::Query(self.a * self.k + self.b),
        })
    }
}

pub type Identity = AffineMap;

impl Identity {
    pub fn identity() -> Self {
        AffineMap::new(1, 0, false)
    }
}

/// Outputs the oracle's first bit forever, re-querying it each time.
#[derive(Debug, Clone, Default)]
pub struct FirstBit;

impl Machine for FirstBit {
    fn step(&mut self, answer: Option<bool>) -> Result<Action, MachineError> {
        Ok(match answer {
            Some(x) => Action::Output(x),
            None => Action::Query(0),
        })
    }
}

/// Output bit `k` is the xor of oracle bits `2k` and `2k + 1`.
#[derive(Debug, Clone, Default)]
pub struct PairXor {
    k: u64,
    first: Option<bool>,
}

impl Machine for PairXor {
    fn step(&mut self, answer: Option<bool>) -> Result<Action, MachineError> {
        Ok(match (answer, self.first) {
            (None, _) => Action::Query(2 * self.k),
            (Some(x), None) => {
                self.first = Some(x);
                Action::Query(2 * self.k + 1)
            }
            (Some(y), Some(x)) => {
                self.first = None;
                self.k += 1;
                Action::Output(x ^ y)
            }
        })
    }
}

/// Never produces output.
#[derive(Debug, Clone, Default)]
pub struct Stall;

impl Machine for Stall {
    fn step(&mut self, _: Option<bool>) -> Result<Action, MachineError> {
        Ok(Action::Work)
    }
}

#[derive(Debug, Clone)]
enum RecordState {
    Flag,
    Literal(Vec<bool>),
    GammaZeros(u32),
    GammaBits { left: u32, v: u128 },
    Payload { len: u64, bits: Vec<bool> },
}

/// The block codec's decoder, reading records one queried bit at a time
/// and emitting each block after its whole record.
#[derive(Debug, Clone)]
pub struct CodecDecode {
    dec: BlockDecoder,
    pos: u64,
    state: RecordState,
    pending: Vec<bool>,
    next_out: usize,
}

impl CodecDecode {
    pub fn new(oracle: &ComplexityOracle) -> Self {
        Self { dec: BlockDecoder::new(oracle), pos: 0, state: RecordState::Flag, pending: Vec::new(), next_out: 0 }
    }

    fn block(&self) -> u64 {
        self.dec.blocks_done() + 1
    }

    fn finish(&mut self, record: CodeRecord) -> Result<(), MachineError> {
        let block = self
            .dec
            .reconstruct(&record)
            .map_err(|e| MachineError::Fault(format!("block {}: {e}", self.block())))?;
        self.dec.advance(&block);
        self.pending = block;
        self.next_out = 0;
        self.state = RecordState::Flag;
        Ok(())
    }

    fn payload_or_finish(&mut self, len: u64) -> Result<(), MachineError> {
        let i = self.block();
        if len > max_payload_len(i) {
            return Err(MachineError::Fault(format!("block {i}: payload length {len} exceeds limit")));
        }
        if len == 0 {
            self.finish(CodeRecord::conditional(Vec::new()))
        } else {
            self.state = RecordState::Payload { len, bits: Vec::new() };
            Ok(())
        }
    }

    fn feed(&mut self, x: bool) -> Result<(), MachineError> {
        let i = self.block();
        match &mut self.state {
            RecordState::Flag => {
                self.state = if x { RecordState::GammaZeros(0) } else { RecordState::Literal(Vec::new()) };
            }
            RecordState::Literal(bits) => {
                bits.push(x);
                if bits.len() as u64 == i {
                    let bits = std::mem::take(bits);
                    self.finish(CodeRecord::literal(&bits))?;
                }
            }
            RecordState::GammaZeros(z) => {
                if !x {
                    *z += 1;
                    if *z > 63 {
                        return Err(MachineError::Fault(format!("block {i}: length header overflows")));
                    }
                } else if *z == 0 {
                    self.payload_or_finish(0)?;
                } else {
                    self.state = RecordState::GammaBits { left: *z, v: 1 };
                }
            }
            RecordState::GammaBits { left, v } => {
                *v = (*v << 1) | x as u128;
                *left -= 1;
                if *left == 0 {
                    let len = u64::try_from(*v - 1)
                        .map_err(|_| MachineError::Fault(format!("block {i}: length header overflows")))?;
                    self.payload_or_finish(len)?;
                }
            }
            RecordState::Payload { len, bits } => {
                bits.push(x);
                if bits.len() as u64 == *len {
                    let bits = std::mem::take(bits);
                    self.finish(CodeRecord::conditional(bits))?;
                }
            }
        }
        Ok(())
    }
}

impl Machine for CodecDecode {
    fn step(&mut self, answer: Option<bool>) -> Result<Action, MachineError> {
        if let Some(x) = answer {
            self.feed(x)?;
        }
        if self.next_out < self.pending.len() {
            self.next_out += 1;
            return Ok(Action::Output(self.pending[self.next_out - 1]));
        }
        self.pos += 1;
        Ok(Action::Query(self.pos - 1))
    }
}

/// Serializable machine description; the built-in registry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "machine", rename_all = "kebab-case")]
pub enum MachineSpec {
    Identity,
    Negate,
    /// Output bit `k` reads position `a·k + b`.
    PositionMap { a: u64, b: u64 },
    FirstBit,
    PairXor,
    Stall,
    CodecDecode {
        #[serde(default)]
        oracle: ComplexityOracle,
    },
    Guard {
        inner: Box<MachineSpec>,
        #[serde(with = "serde_ratio")]
        alpha_prime: Rational64,
        oracle: ComplexityOracle,
        #[serde(default)]
        schedule: GuardSchedule,
    },
    /// `first` computes S′ from the oracle, `second` computes the output
    /// from S′.
    Compose { first: Box<MachineSpec>, second: Box<MachineSpec> },
}

impl MachineSpec {
    pub const NAMES: [&'static str; 7] =
        ["identity", "negate", "double", "first-bit", "pair-xor", "stall", "codec-decode"];

    /// Simple machines by name; `double` reads the odd positions.
    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name {
            "identity" => MachineSpec::Identity,
            "negate" => MachineSpec::Negate,
            "double" => MachineSpec::PositionMap { a: 2, b: 1 },
            "first-bit" => MachineSpec::FirstBit,
            "pair-xor" => MachineSpec::PairXor,
            "stall" => MachineSpec::Stall,
            "codec-decode" => MachineSpec::CodecDecode { oracle: ComplexityOracle::proxy() },
            _ => return None,
        })
    }

    /// Short name for tables.
    pub fn label(&self) -> String {
        match self {
            MachineSpec::Identity => "identity".into(),
            MachineSpec::Negate => "negate".into(),
            MachineSpec::PositionMap { a, b } => format!("map({a}k+{b})"),
            MachineSpec::FirstBit => "first-bit".into(),
            MachineSpec::PairXor => "pair-xor".into(),
            MachineSpec::Stall => "stall".into(),
            MachineSpec::CodecDecode { .. } => "codec-decode".into(),
            MachineSpec::Guard { inner, alpha_prime, .. } => format!("guard[{alpha_prime}]({})", inner.label()),
            MachineSpec::Compose { first, second } => format!("{}>{}", first.label(), second.label()),
        }
    }

    pub fn build(&self) -> Box<dyn Machine> {
        match self {
            MachineSpec::Identity => Box::new(AffineMap::new(1, 0, false)),
            MachineSpec::Negate => Box::new(AffineMap::new(1, 0, true)),
            MachineSpec::PositionMap { a, b } => Box::new(AffineMap::new(*a, *b, false)),
            MachineSpec::FirstBit => Box::new(FirstBit),
            MachineSpec::PairXor => Box::new(PairXor::default()),
            MachineSpec::Stall => Box::new(Stall),
            MachineSpec::CodecDecode { oracle } => Box::new(CodecDecode::new(oracle)),
            MachineSpec::Guard { inner, alpha_prime, oracle, schedule } => {
                Box::new(Guard::new(inner.build(), *alpha_prime, *oracle, *schedule))
            }
            MachineSpec::Compose { first, second } => Box::new(Composite::new(first.build(), second.build())),
        }
    }

    /// Classes the machine claims; `verify_class` checks them on traces.
    pub fn declared(&self) -> Vec<ReductionClass> {
        use ReductionClass::*;
        match self {
            MachineSpec::Identity | MachineSpec::Negate => {
                vec![Wtt { q: UsageBound::Linear { a: 1, b: 0 } }, BoundedTuring { c: 1 }]
            }
            MachineSpec::PositionMap { a, b } => {
                vec![Wtt { q: UsageBound::Linear { a: *a, b: b + 1 } }, BoundedTuring { c: 1 }]
            }
            MachineSpec::FirstBit => vec![Wtt { q: UsageBound::Linear { a: 0, b: 1 } }, BoundedTuring { c: 1 }],
            MachineSpec::PairXor => vec![Wtt { q: UsageBound::Linear { a: 2, b: 0 } }, BoundedTuring { c: 2 }],
            MachineSpec::Stall => vec![Turing],
            MachineSpec::CodecDecode { .. } => vec![Wtt { q: UsageBound::BlockCodec }],
            MachineSpec::Guard { .. } => vec![TruthTable],
            MachineSpec::Compose { .. } => vec![Turing],
        }
    }
}
