//! Experiment drivers: configuration, the verify / calibrate / simulate runs
//! and their file outputs.

pub mod beam;
pub mod calibrate;
pub mod config;
pub mod manufactured;
pub mod output;
pub mod simulate;
pub mod verify;
