//! Differential, taxonomy-driven bug detection for WebAssembly runtimes.

pub mod adapters;
pub mod category;
pub mod cli;
pub mod corpus;
pub mod eval;
pub mod oracle;
pub mod pipeline;
pub mod report;
pub mod wat;
