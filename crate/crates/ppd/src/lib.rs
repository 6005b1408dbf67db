//! Std side of the screening pipeline: table ingestion, checkpoints, report
//! files, the remote chat backend, the session service with its HTTP API,
//! and the command-line front end.

pub mod checkpoint;
pub mod cli;
pub mod clock;
pub mod dataset;
pub mod http;
pub mod remote;
pub mod report;
pub mod service;
pub mod synthetic;

pub use checkpoint::{Checkpoint, CheckpointError};
pub use clock::SystemClock;
pub use dataset::{load_dataset, parse_dataset, write_dataset, ParsedDataset, SchemaMapping};
pub use service::{ApiMessage, ScreeningService, ServiceConfig, ServiceError};
