pub mod cli;
pub mod config;
pub mod executor;
pub mod ingest;
pub mod report;
pub mod synthetic;
