//! Synchronous pull voting on graphs.
//!
//! The crate is organised around four layers:
//!
//! * [`graph`] builds, validates and stores the substrate graphs (including
//!   random regular graphs from a constrained configuration model).
//! * [`spectral`] computes the stationary distribution, the absolute second
//!   eigenvalue of the walk matrix, and the drift functionals `Q`, `Q2`, `R`
//!   and `S_C`, and checks the mixing inequalities that relate them.
//! * [`voting`] is the round-synchronous state machine for the one-, two- and
//!   three-sample protocols, with optional random-walk sampling.
//! * [`experiment`] runs seeded Monte Carlo campaigns and emits reports.
//!
//! Randomness is counter based: every (vertex, round) pair of every run owns
//! its own generator derived from the run seed, so results do not depend on
//! whether the `parallel` feature is enabled or how many workers run.

pub mod error;
pub mod exec;
pub mod experiment;
pub mod graph;
pub mod rng;
pub mod spectral;
pub mod voting;

pub use error::{Error, Result};
pub use exec::Execution;
pub use graph::{Graph, GraphDescriptor, GraphFamily, ValidationReport};
pub use spectral::{Partition, SpectralProfile, VertexSet};
pub use voting::{OpinionConfig, Outcome, Placement, ProtocolSpec, Rule, RunTrace, TieBreak};
