//! Fractional Sobolev energies on bounded domains.
//!
//! The crate estimates the classical Gagliardo energy, the truncated energy
//! whose inner integral is restricted to the cone `|x - y| < tau * d(x)`, and
//! the geodesic variant, all by variance-reduced Monte Carlo. The `limits`
//! module sweeps `s -> 1` and compares `(1 - s) * energy` against
//! `K_{n,p} * ||grad f||_p^p`.
//!
//! Every estimator is a pure function of its inputs and a [`RandomStream`];
//! results are bit-identical for a fixed seed regardless of worker count.

pub mod cli;
pub mod error;
pub mod functions;
pub mod geometry;
pub mod limits;
pub mod maximal;
pub mod point;
pub mod rng;
pub mod seminorm;

pub use error::{Error, Result};
pub use functions::{ExtendedReal, GradientPNorm, TestFunction};
pub use geometry::{Domain, DomainSpec, Exhaustion, ExhaustionLevel, Region};
pub use point::Point;
pub use rng::RandomStream;
pub use seminorm::{Budgets, EnergyEstimate, EnergyKind, SeminormParams, SharpConstant};
