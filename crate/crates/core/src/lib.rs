pub mod bgk;
pub mod error;
pub mod harness;
pub mod integrator;
pub mod linalg;
pub mod linsolve;
pub mod oracle;
pub mod par;
pub mod random;
pub mod tt;

pub use error::{AptError, Result};
