//! Exact enumeration machinery for independent sets in the hypercube `Q_d`:
//! polymer and cluster enumeration, the asymptotic series coefficients, a
//! brute-force oracle for small `d`, and a Glauber-dynamics sampler.

pub mod asymptotics;
pub mod clusters;
pub mod error;
pub mod graph;
pub mod hypercube;
pub mod numeric;
pub mod oracle;
pub mod polymers;
pub mod sampler;
mod serde_dec;
pub mod symbolic;
pub mod validate;

pub use error::{Error, Result};
