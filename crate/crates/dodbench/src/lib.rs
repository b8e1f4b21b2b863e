//! Benchmark toolkit for document-oriented databases over bibliographic
//! corpora.
//!
//! The pipeline: [`ingest`] streams publication XML into the canonical
//! record form ([`model`], [`canonical`]); [`datagen`] cuts nested
//! scale-factor subsets and emits XML/JSON document collections; [`query`]
//! models the nine-query workload; [`oracle`] evaluates it exactly
//! in-process; [`translate`] compiles each query into five backend
//! dialects; [`bench`] times translated queries against live backends (or
//! the bundled [`mock_backend`]); [`report`] turns run records into CSVs
//! and plots.

pub mod bench;
pub mod canonical;
pub mod datagen;
pub mod ingest;
pub mod mock_backend;
pub mod model;
pub mod oracle;
pub mod query;
pub mod report;
pub mod translate;
