//! Batch no-reference video quality measurement built on `nrvq-core`:
//! stream ingestion, model files, reports, codec-comparison analytics and
//! the `nrvq` command line.

pub mod analysis;
pub mod cli;
pub mod manifest;
pub mod measure;
pub mod model_file;
pub mod report;
pub mod video;
