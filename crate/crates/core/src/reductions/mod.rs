//! Oracle machines as step functions, with exact query accounting.
//!
//! A machine streams output bits. Each step it either queries one oracle
//! position, emits the next output bit, or does internal work. The answer
//! to a query is passed into the following step.

mod compose;
mod guard;
mod machines;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seqcore::{PrefixOracle, SeqError};

pub use compose::{check_composition_law, double_encode, Composite, DoubleEncodeReport, LawReport};
pub use guard::{Guard, GuardLog, GuardSchedule, SearchCheck};
pub use machines::{AffineMap, CodecDecode, FirstBit, Identity, MachineSpec, PairXor, Stall};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Query(u64),
    Output(bool),
    Work,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("{0}")]
    Fault(String),
    #[error("{layer} machine failed: {source}")]
    Layer { layer: &'static str, source: Box<MachineError> },
}

pub trait Machine {
    /// `answer` carries the oracle bit for the previous `Query`, else `None`.
    fn step(&mut self, answer: Option<bool>) -> Result<Action, MachineError>;
}

impl<M: Machine + ?Sized> Machine for Box<M> {
    fn step(&mut self, answer: Option<bool>) -> Result<Action, MachineError> {
        (**self).step(answer)
    }
}

/// Per-output accounting. Index `n − 1` holds the values after `n` bits.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionTrace {
    /// Rightmost queried position + 1 after each output bit.
    pub usage: Vec<u64>,
    /// Queries made between the previous output bit and this one.
    pub per_bit_queries: Vec<u64>,
    pub steps: u64,
    /// The run produced every requested bit.
    pub halted: bool,
}

impl ReductionTrace {
    /// Usage after `n` output bits; `usage_at(0) = 0`.
    pub fn usage_at(&self, n: u64) -> u64 {
        if n == 0 {
            0
        } else {
            self.usage[n as usize - 1]
        }
    }

    pub fn len(&self) -> u64 {
        self.usage.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.usage.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,usage,per_bit_queries\n");
        for (k, (u, q)) in self.usage.iter().zip(&self.per_bit_queries).enumerate() {
            s.push_str(&format!("{},{u},{q}\n", k + 1));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    /// Models divergence.
    StepBudget { steps: u64 },
    Horizon { position: u64 },
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("step budget of {steps} exhausted after {produced} output bits")]
    StepBudget { steps: u64, produced: u64 },
    #[error("oracle horizon exceeded at position {position} after {produced} output bits")]
    Horizon { position: u64, produced: u64 },
    #[error("after {produced} output bits: {source}")]
    Machine { produced: u64, source: MachineError },
    #[error(transparent)]
    Seq(#[from] SeqError),
}

/// Output, trace and how the run ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub output: Vec<bool>,
    pub trace: ReductionTrace,
    pub status: RunStatus,
}

impl RunOutcome {
    pub fn into_complete(self) -> Result<(Vec<bool>, ReductionTrace), ReductionError> {
        let produced = self.output.len() as u64;
        match self.status {
            RunStatus::Completed => Ok((self.output, self.trace)),
            RunStatus::StepBudget { steps } => Err(ReductionError::StepBudget { steps, produced }),
            RunStatus::Horizon { position } => Err(ReductionError::Horizon { position, produced }),
            RunStatus::Failed { message } => {
                Err(ReductionError::Machine { produced, source: MachineError::Fault(message) })
            }
        }
    }
}

/// Runs `m` against `r` until it has produced `n` bits.
pub fn run(m: &mut dyn Machine, r: &dyn PrefixOracle, n: u64, step_budget: u64) -> RunOutcome {
    let mut output = Vec::with_capacity(n as usize);
    let mut trace = ReductionTrace::default();
    let mut rightmost = 0u64;
    let mut queries = 0u64;
    let mut answer = None;
    let status = loop {
        if output.len() as u64 == n {
            trace.halted = true;
            break RunStatus::Completed;
        }
        if trace.steps == step_budget {
            break RunStatus::StepBudget { steps: step_budget };
        }
        trace.steps += 1;
        match m.step(answer.take()) {
            Ok(Action::Query(p)) => match r.bit(p) {
                Ok(b) => {
                    answer = Some(b);
                    queries += 1;
                    rightmost = rightmost.max(p + 1);
                }
                Err(SeqError::HorizonExceeded { .. }) => break RunStatus::Horizon { position: p },
                Err(e) => break RunStatus::Failed { message: e.to_string() },
            },
            Ok(Action::Output(b)) => {
                output.push(b);
                trace.usage.push(rightmost);
                trace.per_bit_queries.push(queries);
                queries = 0;
            }
            Ok(Action::Work) => {}
            Err(e) => break RunStatus::Failed { message: e.to_string() },
        }
    };
    RunOutcome { output, trace, status }
}

/// Usage bound `q(n)` for wtt checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "bound", rename_all = "kebab-case")]
pub enum UsageBound {
    /// `a·n + b`.
    Linear { a: u64, b: u64 },
    /// `n + ⌈4·√n·log2(n + 2)⌉`.
    BlockCodec,
}

impl UsageBound {
    pub fn at(&self, n: u64) -> u64 {
        match *self {
            UsageBound::Linear { a, b } => a * n + b,
            UsageBound::BlockCodec => {
                let x = n as f64;
                n + (4.0 * x.sqrt() * (x + 2.0).log2()).ceil() as u64
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum ReductionClass {
    Turing,
    Wtt { q: UsageBound },
    BoundedTuring { c: u64 },
    /// Totality can only be observed within the run's budget.
    TruthTable,
}

impl std::fmt::Display for ReductionClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReductionClass::Turing => write!(f, "T"),
            ReductionClass::Wtt { q } => write!(f, "wtt({q:?})"),
            ReductionClass::BoundedTuring { c } => write!(f, "bT({c})"),
            ReductionClass::TruthTable => write!(f, "tt"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassViolation {
    pub n: u64,
    pub value: u64,
    pub bound: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: ReductionClass,
    pub checked: u64,
    pub violations: Vec<ClassViolation>,
    /// Only the first this many violations are kept.
    pub violation_count: u64,
}

const KEEP_VIOLATIONS: usize = 32;

impl ClassReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    pub fn first_violation(&self) -> Option<&ClassViolation> {
        self.violations.first()
    }
}

/// Checks a trace against a declared class at every recorded `n`.
pub fn verify_class(trace: &ReductionTrace, class: ReductionClass) -> ClassReport {
    let mut rep = ClassReport { class, checked: trace.len(), violations: Vec::new(), violation_count: 0 };
    let mut note = |n: u64, value: u64, bound: u64| {
        rep.violation_count += 1;
        if rep.violations.len() < KEEP_VIOLATIONS {
            rep.violations.push(ClassViolation { n, value, bound });
        }
    };
    match class {
        ReductionClass::Turing => {}
        ReductionClass::TruthTable => {
            if !trace.halted {
                note(trace.len() + 1, trace.steps, trace.steps);
            }
        }
        ReductionClass::Wtt { q } => {
            for (k, &u) in trace.usage.iter().enumerate() {
                let n = k as u64 + 1;
                if u > q.at(n) {
                    note(n, u, q.at(n));
                }
            }
        }
        ReductionClass::BoundedTuring { c } => {
            for (k, &x) in trace.per_bit_queries.iter().enumerate() {
                if x > c {
                    note(k as u64 + 1, x, c);
                }
            }
        }
    }
    rep
}
