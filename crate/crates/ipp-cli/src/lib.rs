//! IO, file formats, experiment harness, and acceptance checks for the
//! informative-path-planning laboratory. The algorithms live in
//! `ipp-core`; this crate adds everything that touches the filesystem or
//! a thread pool.

pub mod acceptance;
pub mod checkpoint;
pub mod config;
pub mod experiment;
pub mod fmt;
pub mod ingest;
pub mod instance_io;
pub mod report;
pub mod svg;
pub mod trace_io;
pub mod train;
