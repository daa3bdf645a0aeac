//! Monotone-transport machinery for weighted Poincaré inequalities on product
//! measures, with Monte Carlo estimators that check superconcentration rates
//! (variance of maxima, medians, ℓᵖ norms and Coulomb gas moduli) against
//! closed-form oracles.
//!
//! Module map:
//!
//! | module | contents |
//! |---|---|
//! | [`dist`] | one-dimensional laws: pdf, cdf, quantile, hazard, sampling |
//! | [`transport`] | monotone rearrangement `t = H⁻¹∘G`, its derivative and the weight ψ |
//! | [`functional`] | max, order statistics, median, ℓᵖ norm and their a.e. gradients |
//! | [`bounds`] | Monte Carlo right-hand sides of the variance and deviation inequalities |
//! | [`stats`] | moments with standard errors, tails, KS, Gumbel constants, rate fits |
//! | [`coulomb`] | β = 2 Coulomb gas moduli through independent radii |
//! | [`experiment`] | declarative scenarios and CSV / JSON-lines reports |
//!
//! Monte Carlo work is sharded through [`exec::Exec`]. With the `parallel`
//! feature (default) shards run on rayon; without it they run in order on the
//! calling thread. Results never depend on the shard count.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod coulomb;
pub mod dist;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod functional;
pub mod quad;
pub mod rng;
pub mod special;
pub mod stats;
pub mod transport;

pub use bounds::BoundReport;
pub use coulomb::CoulombSpec;
pub use dist::{DistributionSpec, Family};
pub use error::{Error, Result};
pub use exec::Exec;
pub use functional::{Functional, FunctionalKind};
pub use rng::RngStream;
pub use transport::TransportMap;
