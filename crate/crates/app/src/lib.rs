//! Sensor-to-scene pipeline for room-scale scalar fields: configuration,
//! file formats, the one-shot pipeline and the concentrator service behind
//! the `voxfield` command.

pub mod config;
pub mod csvio;
pub mod error;
pub mod persist;
pub mod pipeline;
pub mod service;
pub mod sim;

pub use config::PipelineConfig;
pub use error::{AppError, AppResult, Stage};
pub use pipeline::{run_pipeline_once, SnapshotArtifacts};
pub use service::{run_service, ServiceConfig, ServiceHandle, ServiceStatus};
