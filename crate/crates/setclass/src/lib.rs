//! File formats, model persistence, benchmark reports and the CLI for the
//! set classification toolkit.
//!
//! The numerical pipeline lives in [`setclass_core`], re-exported here as
//! [`core`]; this crate adds everything that touches the filesystem:
//!
//! - [`io`]: the `csv-dir` and `json` data formats plus model save/load;
//! - [`report`]: CSV and plain-table rendering of benchmark reports and
//!   prediction outputs;
//! - [`bench`]: a replication-parallel driver for the benchmark harness.

pub use setclass_core as core;

pub mod bench;
pub mod io;
pub mod report;

mod error;
pub use error::{Error, Result};
