pub mod cli;
pub mod coupling;
pub mod datum;
pub mod dual;
pub mod error;
pub mod frbl;
pub mod inequalities;
pub mod options;
pub mod oracles;
pub mod pd;
pub mod profiles;
pub mod report;
pub mod sample;

pub use error::{Error, Result};
pub use options::{Method, SolverOptions};
