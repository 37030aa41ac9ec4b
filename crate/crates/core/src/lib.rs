//! Perfect n/2 inverted limited weight coding (ILWC) for byte streams, plus an
//! analytical NAND flash model for judging what the coding does to program
//! energy, retention field, coupling noise, cell errors and ISPP timing.
//!
//! - [`codec`]: segment and stream encoder/decoder and the container format.
//! - [`metrics`]: ones-probability statistics, coding gain and energy gain.
//! - [`flash_model`]: cell states, threshold voltages and device formulas.
//! - [`corpus`]: per-file and aggregate corpus analysis with JSON/CSV reports.
//! - [`cli`]: the `ilwc` command-line front end.

pub mod cli;
pub mod codec;
pub mod corpus;
pub mod flash_model;
pub mod metrics;
