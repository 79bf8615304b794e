//! Prior-robustness laboratory.
//!
//! Four Bayesian case studies on how noninformative and weakly informative
//! priors propagate into posteriors and into derived quantities:
//!
//! * [`logistic`]: logistic regression under iid-normal, g-, flat and
//!   Jeffreys priors, with random-walk and Fisher-proposal Metropolis–Hastings.
//! * [`hier`]: hierarchical normal regressions with a separation-strategy
//!   covariance prior, sampled by Gibbs with Metropolis steps for the
//!   standard deviations and the correlation.
//! * [`evenness`]: Dirichlet–multinomial posteriors of the normalized
//!   Shannon evenness index.
//! * [`induced`]: priors induced on logistic cdf curves and on ratios of
//!   normal coefficients.
//!
//! [`summarize`] turns draws into tables and density grids, and [`io`] holds
//! the file formats and the command-line driver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evenness;
pub mod hier;
pub mod induced;
pub mod io;
pub mod logistic;
pub mod num;
pub mod summarize;

pub use error::{Error, Result};
