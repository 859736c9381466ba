//! File formats, configuration and pipeline orchestration around
//! `retail-rules-core`.

pub mod config;
pub mod formats;
pub mod kb;
pub mod pipeline;
pub mod report;
pub mod schema_file;

pub use config::{Overrides, PipelineConfig, Settings, Threshold};
pub use kb::RuleKnowledgeBase;
pub use pipeline::{run_ingested, run_pipeline, PipelineError};
pub use schema_file::{SchemaDocument, WeightSource};
