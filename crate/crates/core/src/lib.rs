//! Exact symbolic engine for differential realizations of the `d = 2`
//! conformal Galilei algebras with the extra (exotic) central charge.
//!
//! The layers, bottom up:
//!
//! - [`scalar`]: rationals and rational functions in the parameters γ, ξ.
//! - [`weyl`]: normal-ordered differential operators.
//! - [`realizations`]: the generator families and invariant operators.
//! - [`verify`]: structure constants, on-shell factorization, calibration.
//! - [`spectrum`]: lowest-weight states and eigenvalue tables.
//! - [`report`]: serializable records shared by the checks and the CLI.

pub mod scalar;
pub mod weyl;
pub mod realizations;
pub mod verify;
pub mod spectrum;
pub mod report;
