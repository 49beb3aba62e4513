//! Sparse recovery with the nonconvex `L1 - alpha*L2` penalty.
//!
//! The crate is built around the closed-form proximal operator of
//! `r(x) = ||x||_1 - alpha*||x||_2` (see [`prox`]) and the solvers that use it
//! to minimize
//!
//! ```text
//! E(x) = gamma * (||x||_1 - alpha*||x||_2) + 0.5 * ||A x - b||_2^2
//! ```
//!
//! * [`solvers`]: forward-backward splitting (plain and monitored-accelerated),
//!   ADMM, and the difference-of-convex baseline, plus stationarity checks.
//! * [`problems`]: sensing-matrix ensembles (Gaussian, partial DCT,
//!   over-sampled DCT), spectral normalization and problem assembly.
//! * [`construct`]: measurement vectors that make a prescribed sparse vector a
//!   stationary point, found by alternating projections.
//!
//! Everything here is `no_std` + `alloc`; file formats, experiment campaigns
//! and the command line live in the companion `l1l2` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod construct;
mod error;
pub mod linalg;
pub(crate) mod math;
pub mod problems;
pub mod prox;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use problems::{ProblemInstance, SupportSet};
pub use prox::{PenaltySpec, ProxCase, ProxResult, TieRule};
pub use solvers::{Method, ScheduleSpec, SolverConfig, SolverTrace};
