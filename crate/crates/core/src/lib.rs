//! Perpetual optimal stopping games on one-dimensional diffusions.
//!
//! A buyer and a seller watch `dX = μ(X) dt + σ(X) dW` on `(0, ∞)`. The buyer
//! may stop and collect `g1(X)`, the seller may stop and pay `g2(X) ≥ g1(X)`,
//! both discounted at rate `β`. [`pipeline::solve`] returns the value `V`,
//! the stopping regions and a set of diagnostics; [`simulate`] replays the
//! resulting strategies on sampled paths.
//!
//! ```no_run
//! use dynkin::{catalog, pipeline};
//!
//! let entry = catalog::preset("game_call")?;
//! let s = pipeline::solve(&pipeline::Problem::from_catalog(&entry, 2001))?;
//! assert!((s.value_at(50.0).unwrap() - 2.5).abs() < 1e-6);
//! # Ok::<(), dynkin::error::Error>(())
//! ```

// `!(a < b)` is used deliberately so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod app;
pub mod catalog;
pub mod config;
pub mod diffusion;
pub mod envelope;
pub mod error;
pub mod grid;
pub mod growth;
mod ode;
pub mod pipeline;
pub mod poly;
mod quad;
pub mod report;
pub mod simulate;
pub mod transform;
