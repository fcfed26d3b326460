//! Simulation and numerical verification toolkit for multiple-stable
//! stable-regenerative processes.
//!
//! The process is sampled exactly through its finite-`n` series
//! representation
//!
//! ```text
//! X_{n,k} = w_n^{p/α} Σ_{i_1<…<i_p} [ε_i] / [Γ_i]^{1/α} · 1{k ∈ R_{n,i_1} ∩ … ∩ R_{n,i_p}}
//! ```
//!
//! where `R_{n,i}` are i.i.d. stationary renewal sets conditioned to hit
//! `{1,…,n}`. Around it sit the closed-form constants and normalizations of
//! the extreme-value limit theorem (super-critical, critical and
//! sub-critical regimes, according to the sign of `β_p = pβ − p + 1`) and the
//! statistics used to check them empirically.
//!
//! Module map:
//!
//! * [`renewal`]: heavy-tailed renewal laws, renewal mass tables, conditioned
//!   renewal samplers.
//! * [`intersection`]: regime classification, `p′`, the shape constant, the
//!   terminating probability of intersected renewals, the spectral tail
//!   process.
//! * [`model`]: environments and path evaluation of the series
//!   representation, including the `ℋ(n,K)`-truncated variant.
//! * [`limit`]: normalizations `c_n`, limit constants, Fréchet marginals and
//!   the super-critical limit variable `Z_{α,β,p}`.
//! * [`combinatorics`]: product-constrained tuple enumeration and counts.
//! * [`empirics`]: sup-measures, block maxima, extremal index, KS distances,
//!   scaling sweeps, block-hit probabilities and tail-process checks.
//! * [`experiments`]: configuration, seed streams and reproducible output for
//!   the command-line driver.

pub mod combinatorics;
pub mod empirics;
mod error;
pub mod experiments;
pub mod intersection;
pub mod limit;
pub mod model;
pub mod renewal;
pub mod special;

pub use error::{Error, Result};
pub use intersection::{Regime, TailIndex};
pub use model::ModelParams;
pub use renewal::{RenewalLaw, RenewalPath, RenewalTables};
