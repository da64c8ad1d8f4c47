//! Exact simulation of a single-server queue whose arrival intensity and
//! service hazard depend on the queue length `n` and the elapsed service time
//! `x`, possibly discontinuously, together with Monte-Carlo verifiers for the
//! extended generator (Dynkin's identity, martingales, small-interval jump
//! probabilities) and for Lyapunov-based ergodicity conditions.
//!
//! Module map:
//!
//! * [`model`]: state space, jump maps, intensity fields, cumulative hazards;
//! * [`sampler`]: race and thinning samplers, cadlag paths;
//! * [`ensemble`]: deterministic parallel replica ensembles;
//! * [`dynkin`]: generator, pathwise integrals, Dynkin/martingale checks;
//! * [`ergodicity`]: drift conditions, moment bounds, TV convergence;
//! * [`cli`]: experiment configs, dispatch and reports.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynkin;
pub mod ensemble;
pub mod ergodicity;
pub mod error;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod scenarios;

pub use ensemble::MCEstimate;
pub use error::{Error, Result};
pub use model::{Direction, IntensitySpec, ModelSpec, State};
pub use sampler::{Path, Sampler};
