//! Library half of the `pprl` command-line tool: the shared parameter file,
//! the database-owner and linkage-unit pipelines, and the synthetic dataset
//! generator the demo uses.

pub mod config;
pub mod pipeline;
pub mod synth;

pub use config::{EncoderKind, PipelineConfig};
pub use pipeline::{run_demo, run_do_pipeline, run_lu_pipeline, TruthSpec};
