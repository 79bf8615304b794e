//! Logistic regression with an intercept and one covariate.
//!
//! The model is `P(y = 1 | x) = logit⁻¹(α + βx)`. This module holds the
//! data type, the log-likelihood and the Newton/IRLS maximum-likelihood fit;
//! [`prior`] has the four prior log-densities and [`mh`] the two
//! Metropolis–Hastings samplers.

pub mod mh;
pub mod prior;

pub use mh::{fisher_proposal_mh, rw_metropolis, Chain, MHConfig, ProposalScale};
pub use prior::{jeffreys_det, log_prior, LogPosterior, LogisticPrior};

use crate::error::{Error, Result};
use crate::num::{logit_inv, softplus, Mat};

const MAX_IRLS_ITERATIONS: usize = 100;
/// Convergence threshold on `gᵀ I⁻¹ g`, in log-likelihood units.
const DECREMENT_TOL: f64 = 1e-16;
const LL_SLACK: f64 = 1e-12;
const SEPARATION_LIMIT: f64 = 1e6;

/// Parameter pair `(α, β)`.
pub type Theta = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryDataset {
    y: Vec<u8>,
    x: Vec<f64>,
}

impl BinaryDataset {
    pub fn new(y: Vec<u8>, x: Vec<f64>) -> Result<Self> {
        if y.len() != x.len() {
            return Err(Error::LengthMismatch {
                expected: y.len(),
                got: x.len(),
            });
        }
        if y.is_empty() {
            return Err(Error::DegenerateData("dataset is empty".into()));
        }
        if let Some(bad) = y.iter().find(|&&v| v > 1) {
            return Err(Error::domain(format!("response {bad} is not 0 or 1")));
        }
        if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("covariate {bad} is not finite")));
        }
        Ok(Self { y, x })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Design matrix `[1, x]`.
    pub fn design(&self) -> Mat {
        Mat::intercept_design(&self.x)
    }

    /// Same data with the response coded the other way round.
    pub fn flipped(&self) -> Self {
        Self {
            y: self.y.iter().map(|v| 1 - v).collect(),
            x: self.x.clone(),
        }
    }

    fn check_fittable(&self) -> Result<()> {
        let ones = self.y.iter().filter(|&&v| v == 1).count();
        if ones == 0 || ones == self.n() {
            return Err(Error::DegenerateData(
                "both response classes must be present".into(),
            ));
        }
        let x0 = self.x[0];
        if self.x.iter().all(|&v| v == x0) {
            return Err(Error::DegenerateData("covariate is constant".into()));
        }
        let range = |class: u8| {
            self.y
                .iter()
                .zip(&self.x)
                .filter(|(y, _)| **y == class)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &x)| {
                    (lo.min(x), hi.max(x))
                })
        };
        let (lo0, hi0) = range(0);
        let (lo1, hi1) = range(1);
        // a threshold on x classifies every point: the likelihood has no maximum
        if hi0 <= lo1 || hi1 <= lo0 {
            return Err(Error::Separation {
                iteration: 0,
                limit: SEPARATION_LIMIT,
            });
        }
        Ok(())
    }
}

/// `Σ yᵢ ηᵢ − log(1 + exp ηᵢ)` with `ηᵢ = α + β xᵢ`.
pub fn loglik(theta: Theta, data: &BinaryDataset) -> f64 {
    let [a, b] = theta;
    data.y
        .iter()
        .zip(&data.x)
        .map(|(&y, &x)| {
            let eta = a + b * x;
            f64::from(y) * eta - softplus(eta)
        })
        .sum()
}

/// `ρ(1 − ρ)` at linear predictor `eta`, without cancellation in the tails.
pub fn logistic_weight(eta: f64) -> f64 {
    let e = (-eta.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// Fisher information `XᵀWX`, `W = diag(ρᵢ(1 − ρᵢ))`.
pub fn fisher_info(theta: Theta, x: &[f64]) -> Mat {
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for &xi in x {
        let w = logistic_weight(theta[0] + theta[1] * xi);
        s0 += w;
        s1 += w * xi;
        s2 += w * xi * xi;
    }
    Mat::from_rows(&[vec![s0, s1], vec![s1, s2]])
}

#[derive(Debug, Clone)]
pub struct GlmFit {
    pub theta_hat: Theta,
    /// `XᵀWX` at the estimate.
    pub fisher_info: Mat,
    pub iterations: usize,
    pub converged: bool,
}

fn score(theta: Theta, data: &BinaryDataset) -> [f64; 2] {
    let mut g = [0.0; 2];
    for (&y, &x) in data.y.iter().zip(&data.x) {
        let r = f64::from(y) - logit_inv(theta[0] + theta[1] * x);
        g[0] += r;
        g[1] += r * x;
    }
    g
}

/// Maximum-likelihood fit by Newton–Raphson (equivalently IRLS) with step
/// halving.
///
/// Iterations run on the centered covariate, which keeps the 2×2 Newton
/// system well conditioned for covariates far from zero; the estimate and
/// its information matrix are reported on the original scale.
pub fn fit_mle(data: &BinaryDataset) -> Result<GlmFit> {
    data.check_fittable()?;
    let center = data.x.iter().sum::<f64>() / data.n() as f64;
    let centered = BinaryDataset {
        y: data.y.clone(),
        x: data.x.iter().map(|x| x - center).collect(),
    };
    let to_original = |t: Theta| [t[0] - t[1] * center, t[1]];

    let mut theta: Theta = [0.0, 0.0];
    let mut ll = loglik(theta, &centered);
    let mut grad_norm = f64::INFINITY;
    for iteration in 1..=MAX_IRLS_ITERATIONS {
        let g = score(theta, &centered);
        grad_norm = g[0].abs().max(g[1].abs());
        let info = fisher_info(theta, &centered.x);
        let step = info
            .cholesky()
            .and_then(|c| c.solve(&g))
            .map_err(|_| Error::Separation {
                iteration,
                limit: SEPARATION_LIMIT,
            })?;
        // The Newton decrement is invariant to the centering and, unlike
        // the raw score on the original scale, does not hit a rounding
        // floor when α and βx nearly cancel.
        if g[0] * step[0] + g[1] * step[1] < DECREMENT_TOL {
            let orig = to_original(theta);
            return Ok(GlmFit {
                theta_hat: orig,
                fisher_info: fisher_info(orig, &data.x),
                iterations: iteration - 1,
                converged: true,
            });
        }
        let mut t = 1.0;
        let mut next = [theta[0] + step[0], theta[1] + step[1]];
        let mut next_ll = loglik(next, &centered);
        // Near the optimum the log-likelihood changes by less than its own
        // rounding error, so a full step is kept unless it clearly loses.
        let slack = LL_SLACK * ll.abs().max(1.0);
        while next_ll < ll - slack && t > 1e-10 {
            t *= 0.5;
            next = [theta[0] + t * step[0], theta[1] + t * step[1]];
            next_ll = loglik(next, &centered);
        }
        theta = next;
        ll = next_ll.max(ll);
        let orig = to_original(theta);
        if orig.iter().any(|v| v.abs() > SEPARATION_LIMIT || !v.is_finite()) {
            return Err(Error::Separation {
                iteration,
                limit: SEPARATION_LIMIT,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: MAX_IRLS_ITERATIONS,
        grad_norm,
    })
}
