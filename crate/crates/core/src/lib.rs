//! Finite-scale laboratory for constructive dimension: complexity proxies,
//! dimension estimators, a block codec with exact query-usage accounting,
//! a dimension extractor, and a small oracle-machine harness.

pub mod cli;
pub mod codec;
pub mod complexity;
pub mod dimension;
pub mod extractor;
pub mod generators;
pub mod ratio;
pub mod reductions;
pub mod seqcore;
