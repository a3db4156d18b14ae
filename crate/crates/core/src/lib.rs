pub mod bench;
pub mod catalog;
pub mod cli;
pub mod engine;
pub mod frontend;
pub mod ir;
pub mod pipeline;
pub mod report;

pub use pipeline::{analyze, AnalysisError, Options};
