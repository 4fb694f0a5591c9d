//! File formats, benchmarks and the command-line front end for `cwboost-core`.

pub mod alloc_counter;
pub mod bench;
pub mod cli;
pub mod csv_io;
pub mod error;
pub mod model_file;
pub mod report;
pub mod truth_file;

pub use error::IoError;
