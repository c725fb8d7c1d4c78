//! Discrete-time mean field games on multi-layer hypergraphons.
//!
//! The crate is organised bottom-up:
//!
//! - [`kernels`]: hypergraphon layers, the built-in kernels, grid
//!   discretisation and step-hypergraphons of finite hypergraphs.
//! - [`hypergraphs`]: finite multi-layer uniform hypergraphs sampled from
//!   hypergraphons, with incidence queries.
//! - [`game`]: the problem abstraction (states, actions, transitions and
//!   rewards coupled through neighbourhood mean fields), the state-action
//!   extension and the Rumor and SIS instances.
//! - [`meanfield`]: neighbourhood mean fields, forward propagation, exact
//!   best responses by backwards induction, fixed-point iteration, online
//!   mirror descent and exploitability.
//! - [`simulate`]: finite N-agent games on sampled hypergraphs and the
//!   empirical distance to the limiting mean field.

pub mod error;
pub mod game;
pub mod hypergraphs;
pub mod kernels;
pub mod meanfield;
mod seeding;
pub mod simulate;

pub use error::{Error, Result};
pub use game::{MfgProblem, NeighborhoodMeanField};
pub use hypergraphs::{AlphaMode, MultiLayerHypergraph};
pub use kernels::{HypergraphonLayer, KernelSpec, MultiLayerHypergraphon, VertexKernelGrid};
pub use meanfield::{MeanFieldEnsemble, PolicyEnsemble, ValueTable};
