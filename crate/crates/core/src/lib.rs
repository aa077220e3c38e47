//! Bezier simplex fitting for Pareto fronts of multi-objective problems.
//!
//! The Pareto front of a simplicial problem with `M` objectives is a curved
//! `(M-1)`-simplex whose faces are the fronts of its subproblems. This crate
//! models such fronts as Bezier simplices and fits them to samples:
//!
//! * [`bezier`]: multi-indices, Bernstein weights, evaluation, derivatives
//!   and face restriction;
//! * [`pareto`]: dominance, non-dominated filtering and per-face subsamples;
//! * [`fitting`]: all-at-once and inductive skeleton fitting;
//! * [`metrics`]: GD / IGD against a validation sample;
//! * [`problems`]: benchmark problems and training/validation splits;
//! * [`response_surface`]: the reduced-cubic regression baseline.
//!
//! Data-parallel loops run on rayon with the default `parallel` feature and
//! fall back to sequential iteration without it; see [`exec`].

pub mod bezier;
pub mod error;
pub mod exec;
pub mod face;
pub mod fitting;
pub mod metrics;
pub mod pareto;
pub mod problems;
pub mod response_surface;

pub use bezier::{Barycentric, BezierSimplex, MultiIndex};
pub use error::{Error, Result};
pub use exec::Execution;
pub use face::Face;
pub use fitting::{fit_all_at_once, fit_inductive_skeleton, FitConfig, FitResult};
pub use pareto::{SamplePoint, SampleSet, Target};
pub use problems::{FrontSampleSpec, Problem, TrainingSet};
