//! The reference toy prefix machine.
//!
//! ```text
//! program := ( 1 instr )* 0
//! instr   := 00 γ0(len) payload[len]      literal
//!          | 01 bit γ0(len)               run of `len` copies of `bit`
//!          | 10 γ0(offset) γ0(len)        copy context[offset .. offset+len]
//!          | 11 γ0(dist-1) γ0(len)        repeat: out[p] = out[p - dist]
//! ```
//!
//! Every field is self-delimiting and the program ends at the first `0`
//! continuation bit, so no valid program is a proper prefix of another.

use std::fmt;

use thiserror::Error;

use super::gamma::{gamma0_len, write_gamma0, BitReadError, BitReader};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    Literal(Vec<bool>),
    Run { bit: bool, len: u64 },
    Copy { offset: u64, len: u64 },
    Repeat { dist: u64, len: u64 },
}

impl Instruction {
    /// Encoded length including the leading continuation bit.
    pub fn encoded_len(&self) -> u64 {
        1 + 2 + match self {
            Instruction::Literal(p) => gamma0_len(p.len() as u64) + p.len() as u64,
            Instruction::Run { len, .. } => 1 + gamma0_len(*len),
            Instruction::Copy { offset, len } => gamma0_len(*offset) + gamma0_len(*len),
            Instruction::Repeat { dist, len } => gamma0_len(dist - 1) + gamma0_len(*len),
        }
    }

    pub fn output_len(&self) -> u64 {
        match self {
            Instruction::Literal(p) => p.len() as u64,
            Instruction::Run { len, .. }
            | Instruction::Copy { len, .. }
            | Instruction::Repeat { len, .. } => *len,
        }
    }

    fn write(&self, out: &mut Vec<bool>) {
        out.push(true);
        match self {
            Instruction::Literal(p) => {
                out.extend_from_slice(&[false, false]);
                write_gamma0(out, p.len() as u64);
                out.extend_from_slice(p);
            }
            Instruction::Run { bit, len } => {
                out.extend_from_slice(&[false, true, *bit]);
                write_gamma0(out, *len);
            }
            Instruction::Copy { offset, len } => {
                out.extend_from_slice(&[true, false]);
                write_gamma0(out, *offset);
                write_gamma0(out, *len);
            }
            Instruction::Repeat { dist, len } => {
                out.extend_from_slice(&[true, true]);
                write_gamma0(out, dist - 1);
                write_gamma0(out, *len);
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ToyProgram {
    pub instructions: Vec<Instruction>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProgramError {
    #[error("malformed program: {0}")]
    Syntax(#[from] BitReadError),
    #[error("{0} trailing bits after program end")]
    Trailing(usize),
    #[error("literal length {0} exceeds input")]
    LiteralTooLong(u64),
    #[error("copy [{offset}, {offset}+{len}) outside context of {context_len} bits")]
    CopyOutOfRange { offset: u64, len: u64, context_len: u64 },
    #[error("repeat distance {dist} exceeds output length {produced}")]
    RepeatOutOfRange { dist: u64, produced: u64 },
    #[error("step budget of {0} exhausted")]
    Budget(u64),
}

impl ToyProgram {
    pub fn new(instructions: Vec<Instruction>) -> Self {
        Self { instructions }
    }

    /// The single-literal program for `w`.
    pub fn literal(w: &[bool]) -> Self {
        Self::new(vec![Instruction::Literal(w.to_vec())])
    }

    pub fn encoded_len(&self) -> u64 {
        1 + self.instructions.iter().map(Instruction::encoded_len).sum::<u64>()
    }

    pub fn encode(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.encoded_len() as usize);
        for ins in &self.instructions {
            ins.write(&mut out);
        }
        out.push(false);
        out
    }

    /// Parses one program from the front of `reader`.
    pub fn read(reader: &mut BitReader<'_>) -> Result<Self, ProgramError> {
        let mut instructions = Vec::new();
        while reader.read_bit()? {
            let op = (reader.read_bit()?, reader.read_bit()?);
            let ins = match op {
                (false, false) => {
                    let len = reader.read_gamma0()?;
                    if len > reader.remaining() as u64 {
                        return Err(ProgramError::LiteralTooLong(len));
                    }
                    Instruction::Literal(reader.read_bits(len as usize)?.to_vec())
                }
                (false, true) => {
                    let bit = reader.read_bit()?;
                    Instruction::Run { bit, len: reader.read_gamma0()? }
                }
                (true, false) => {
                    let offset = reader.read_gamma0()?;
                    Instruction::Copy { offset, len: reader.read_gamma0()? }
                }
                (true, true) => {
                    let dist = reader.read_gamma0()?.saturating_add(1);
                    Instruction::Repeat { dist, len: reader.read_gamma0()? }
                }
            };
            instructions.push(ins);
        }
        Ok(Self { instructions })
    }

    /// Parses `bits` as exactly one program.
    pub fn decode(bits: &[bool]) -> Result<Self, ProgramError> {
        let mut r = BitReader::new(bits);
        let p = Self::read(&mut r)?;
        if !r.is_empty() {
            return Err(ProgramError::Trailing(r.remaining()));
        }
        Ok(p)
    }

    /// Runs the program against `context`. Each instruction and each output
    /// bit costs one step.
    pub fn run(&self, context: &[bool], budget: u64) -> Result<Vec<bool>, ProgramError> {
        let mut out: Vec<bool> = Vec::new();
        let mut steps = 0u64;
        let mut charge = |n: u64| -> Result<(), ProgramError> {
            steps = steps.saturating_add(n);
            if steps > budget {
                Err(ProgramError::Budget(budget))
            } else {
                Ok(())
            }
        };
        for ins in &self.instructions {
            charge(1 + ins.output_len())?;
            match ins {
                Instruction::Literal(p) => out.extend_from_slice(p),
                Instruction::Run { bit, len } => out.extend(std::iter::repeat_n(*bit, *len as usize)),
                Instruction::Copy { offset, len } => {
                    let end = offset.checked_add(*len).filter(|&e| e <= context.len() as u64);
                    let Some(end) = end else {
                        return Err(ProgramError::CopyOutOfRange {
                            offset: *offset,
                            len: *len,
                            context_len: context.len() as u64,
                        });
                    };
                    out.extend_from_slice(&context[*offset as usize..end as usize]);
                }
                Instruction::Repeat { dist, len } => {
                    let produced = out.len() as u64;
                    if *dist > produced {
                        return Err(ProgramError::RepeatOutOfRange { dist: *dist, produced });
                    }
                    for _ in 0..*len {
                        let b = out[out.len() - *dist as usize];
                        out.push(b);
                    }
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for ToyProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .instructions
            .iter()
            .map(|i| match i {
                Instruction::Literal(p) => {
                    format!("lit({})", p.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>())
                }
                Instruction::Run { bit, len } => format!("run({}x{len})", *bit as u8),
                Instruction::Copy { offset, len } => format!("copy({offset},{len})"),
                Instruction::Repeat { dist, len } => format!("rep({dist},{len})"),
            })
            .collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Length of the single-literal program for a string of `n` bits.
pub fn literal_program_len(n: u64) -> u64 {
    1 + 1 + 2 + gamma0_len(n) + n
}
