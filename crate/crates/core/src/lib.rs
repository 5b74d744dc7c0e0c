pub mod conjugate;
pub mod discrete;
pub mod dist;
pub mod error;
pub mod laplace;
pub mod mcmc;
pub mod models;
pub mod mvn;
pub mod optim;
pub mod rng;
pub mod special;
pub mod summaries;

pub use dist::{DistKind, DistSpec};
pub use error::{Error, Result};
pub use rng::RngStream;
