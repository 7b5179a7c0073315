//! Word-embedding training, benchmarking and semantic-dimension analysis.

pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod dimension;
pub mod report;
pub mod vecmath;

pub use error::{Error, Result};
