//! Bit sequences, prefix oracles, the triangular block layout and the `.seq`
//! file format.

mod bits;
mod layout;
mod oracle;
mod seqfile;

pub use bits::BitSequence;
pub use layout::{block_bounds, block_containing, block_of_position, triangular, BlockPosition};
pub use oracle::{FnOracle, PrefixOracle, SeqOracle};
pub(crate) use seqfile::write_atomic;
pub use seqfile::{pack, read_seq_file, unpack, write_seq_file, SeqFileError, SEQ_MAGIC};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeqError {
    #[error("read at position {position} beyond oracle horizon {horizon}")]
    HorizonExceeded { position: u64, horizon: u64 },
    #[error("blocks are 1-indexed; block index 0 is invalid")]
    ZeroBlockIndex,
    #[error("bad magic: expected \"CDS1\"")]
    BadMagic,
    #[error("truncated .seq header ({0} bytes)")]
    TruncatedHeader(usize),
    #[error("declared length {declared} bits exceeds payload of {available} bits")]
    LengthExceedsPayload { declared: u64, available: u64 },
    #[error("trailing payload: {extra} unexpected bytes after {declared} bits")]
    TrailingPayload { declared: u64, extra: usize },
    #[error("invalid bit character {0:?}")]
    BadBitChar(char),
}
