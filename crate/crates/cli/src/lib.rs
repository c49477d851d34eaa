//! Command-line front end for varifold curvature estimation: file formats,
//! color mapping and the commands behind the `varicurv` binary.

pub mod io;
pub mod run;

pub use varifold_curvature::colormap;

pub use run::{run, CliError, RunConfig, RunSummary};
