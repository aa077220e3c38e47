//! Command-line harness for Bezier simplex fitting: data generation, model
//! fitting, evaluation, repeated-trial experiments and SVG plots.

pub mod commands;
pub mod experiment;
pub mod plot;
pub mod stats;

pub use commands::run;
