//! Sparse deconvolution of electrodermal activity (EDA).
//!
//! A skin-conductance recording `y` is modeled as the sum of three parts:
//! a train of phasic skin-conductance responses obtained by convolving a
//! fixed impulse response `h` with a sparse driver `x`, a tonic baseline
//! `b` that is piecewise constant up to a few jumps, and bounded noise:
//!
//! ```text
//! y = h ∗ x + b + n
//! ```
//!
//! Applying the pairwise difference operator `D` removes the constant
//! segments of the baseline and turns the model into
//!
//! ```text
//! Dy = [D T_h  I] [x; Db] + Dn
//! ```
//!
//! where `T_h` is the Toeplitz matrix of `h` and `Db` is itself sparse.
//! Both unknowns are then recovered jointly by minimizing their combined
//! l1 norm subject to an l2 residual budget. The crate provides:
//!
//! * [`signal`]: the core value types (signals, impulse responses, sparse
//!   event and baseline-difference vectors) and their validation rules.
//! * [`operators`]: matrix-free convolution and differencing primitives,
//!   their adjoints, dense materializations for desk-scale checks, block
//!   downsampling, and hard thresholding.
//! * [`solver`]: an operator-splitting solver for the recovery program,
//!   with an optional nonnegativity constraint on the driver.
//! * [`coherence`]: mutual-coherence measurements of the combined
//!   dictionary and the sparsity threshold they certify.
//! * [`synth`]: seeded generators for benchmark instances.
//! * [`experiments`]: phase-diagram sweeps and window-based event
//!   detection scored by ROC/AUC.
//! * [`io`]: plain-text CSV readers and writers for the above.

pub mod book;
pub mod coherence;
pub mod error;
pub mod experiments;
pub mod io;
pub mod operators;
pub mod signal;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use signal::{BaselineDiff, ImpulseResponse, ScrEvents, Signal};
pub use solver::{DecompositionResult, KktReport, SolverConfig};
