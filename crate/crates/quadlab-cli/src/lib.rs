//! Command-line runner for the quadlab experiments: typed parameters,
//! one function per subcommand, and reproducible run directories.

pub mod commands;
pub mod manifest;
pub mod params;

pub use commands::{run, Outcome};
pub use manifest::{execute, read_manifest, replay, run_with_threads, RunArtifacts};
pub use params::Params;

/// Environment variable naming the output directory when `--out` is absent.
pub const OUT_DIR_ENV: &str = "QUADLAB_OUT_DIR";

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
