pub mod bogolyubov;
pub mod combinatorics;
pub mod error;
pub mod exact;
pub mod gaussian;
pub mod greenfn;
pub mod linalg;
pub mod oracle;
pub mod sampling;
pub mod tau;

pub use error::{Error, Result};
