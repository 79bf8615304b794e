//! Numerical building blocks shared by every sampler: random streams,
//! scalar distributions and small dense linear algebra.

pub mod dist;
pub mod linalg;
pub mod rng;

pub use dist::{
    dirichlet_sample, dist_quantile, dist_sample, logit_inv, mvn_sample, normal_cdf,
    normal_quantile, softplus, DistSpec,
};
pub use linalg::{det2, Cholesky, Mat};
pub use rng::RngStream;
