//! Projection uniform stoquastic local Hamiltonians and the random-walk
//! verifier on their configuration graph.

pub mod bits;
pub mod bundled;
pub mod compile;
pub mod error;
pub mod expansion;
pub mod generators;
pub mod graph;
pub mod instance;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod suite;
pub mod walk;

pub use bits::Bitstring;
pub use error::{Error, Result};
pub use instance::{Caps, Hamiltonian, LocalTerm};
