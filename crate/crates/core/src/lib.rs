pub mod abel;
pub mod error;
pub mod hyper;
pub mod identities;
pub mod limits;
pub mod mpreal;
pub mod poly;
pub mod proofs;
pub mod qcore;

pub use error::{Error, Result};
pub use mpreal::{PrecisionPolicy, Scalar};
