pub mod bv;
pub mod cli;
pub mod error;
pub mod generate;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod marginal;
pub mod oracle;
pub mod pauli;
pub mod reduction;
pub mod state;
pub mod verifier;

pub use error::{Error, Result};
