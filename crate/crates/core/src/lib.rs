//! Coverage study of bootstrap confidence intervals: data generators,
//! functionals, bootstrap and classical interval methods, scoring and the
//! simulation harness.

pub mod baselines;
pub mod bootstrap;
pub mod dgp;
pub mod error;
pub mod evaluation;
pub mod functionals;
pub mod harness;
pub mod method;
pub mod rng;
pub mod special;

pub use baselines::{BaselineKind, BaselineMethod};
pub use bootstrap::{BootstrapDistribution, BootstrapMethod, TieRule};
pub use dgp::{DgpSpec, Sample};
pub use error::{Error, Failure, Result};
pub use functionals::Functional;
pub use method::{MethodId, ReplicationContext, ResampleSettings};
pub use rng::RngStream;
