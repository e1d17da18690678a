//! Statevector simulation of REW hypergraph states, exact projective
//! entanglement witnesses, and variational circuits trained to imitate them.

pub mod entanglement;
pub mod error;
pub mod exec;
pub mod learn;
pub mod linalg;
pub mod qstate;
pub mod rewstates;
pub mod vqc;
pub mod witness;

pub use error::{Error, Result};
pub use exec::Exec;
