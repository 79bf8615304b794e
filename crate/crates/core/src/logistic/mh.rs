//! Metropolis–Hastings samplers for the logistic posterior.

use super::prior::{LogPosterior, LogisticPrior};
use super::{fit_mle, BinaryDataset, GlmFit, Theta};
use crate::error::{Error, Result};
use crate::num::{Cholesky, Mat, RngStream};
use crate::summarize::{summary_stats, SummaryRow};

/// Optimal-scaling constant `2.38 / sqrt(d)` for `d = 2`.
pub const DEFAULT_RW_SCALE: f64 = 1.682_914_137_483_155_5;
const ADAPT_BATCH: usize = 50;
const ADAPT_STEP: f64 = 0.25;
const TARGET_ACCEPT: (f64, f64) = (0.2, 0.5);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProposalScale {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MHConfig {
    /// Total iterations including burn-in.
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
    pub proposal_scale: ProposalScale,
    /// Tune the random-walk scale during burn-in.
    pub adapt: bool,
    /// Sample the prior alone (likelihood replaced by zero).
    pub prior_only: bool,
}

impl Default for MHConfig {
    fn default() -> Self {
        Self {
            iterations: 11_000,
            burnin: 1_000,
            seed: 1,
            proposal_scale: ProposalScale::Auto,
            adapt: true,
            prior_only: false,
        }
    }
}

impl MHConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn kept(&self) -> usize {
        self.iterations - self.burnin
    }

    pub fn validate(&self) -> Result<()> {
        if self.burnin >= self.iterations {
            return Err(Error::domain(format!(
                "burnin {} must be below iterations {}",
                self.burnin, self.iterations
            )));
        }
        if let ProposalScale::Fixed(c) = self.proposal_scale {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::domain(format!("proposal scale {c} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    /// Kept draws of `(α, β)`, burn-in removed.
    pub draws: Vec<Theta>,
    /// Log target at each kept draw.
    pub log_target: Vec<f64>,
    /// Acceptance rate over the kept iterations.
    pub accept_rate: f64,
    pub prior: LogisticPrior,
    pub config: MHConfig,
    /// Proposal scale in force after burn-in.
    pub final_scale: f64,
    pub fit: GlmFit,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.iter().map(|t| t[j]).collect()
    }

    pub fn alpha(&self) -> Vec<f64> {
        self.column(0)
    }

    pub fn beta(&self) -> Vec<f64> {
        self.column(1)
    }

    pub fn summaries(&self) -> Result<[SummaryRow; 2]> {
        Ok([
            summary_stats(&self.alpha())?.with_label("alpha"),
            summary_stats(&self.beta())?.with_label("beta"),
        ])
    }

    /// Kept draw with the highest log target.
    pub fn map_draw(&self) -> Option<Theta> {
        self.log_target
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| self.draws[i])
    }
}

struct Setup<'a> {
    target: LogPosterior<'a>,
    fit: GlmFit,
    /// Cholesky factor of the inverse Fisher information.
    chol_cov: Cholesky,
}

fn setup<'a>(data: &'a BinaryDataset, prior: LogisticPrior, config: &MHConfig) -> Result<Setup<'a>> {
    config.validate()?;
    prior.validate()?;
    let fit = fit_mle(data)?;
    let chol_cov = fit
        .fisher_info
        .spd_inverse()
        .and_then(|cov| cov.cholesky())
        .map_err(|e| Error::DegenerateProposal(format!("inverse Fisher information: {e}")))?;
    let mut target = LogPosterior::new(data, prior)?;
    if config.prior_only {
        target = target.prior_only();
    }
    Ok(Setup {
        target,
        fit,
        chol_cov,
    })
}

fn step(chol: &Cholesky, scale: f64, rng: &mut RngStream) -> Theta {
    let z = [rng.standard_normal(), rng.standard_normal()];
    let d = chol.lower_mul(&z);
    [scale * d[0], scale * d[1]]
}

/// Random-walk Metropolis with proposal covariance `c² I(θ̂)⁻¹`, started at
/// the maximum-likelihood estimate.
///
/// With `adapt` set, `log c` moves by ±0.25 after every 50 burn-in
/// iterations whose acceptance falls outside [0.2, 0.5]; the scale is frozen
/// once burn-in ends.
pub fn rw_metropolis(data: &BinaryDataset, prior: LogisticPrior, config: &MHConfig) -> Result<Chain> {
    let Setup {
        target,
        fit,
        chol_cov,
    } = setup(data, prior, config)?;
    let mut rng = RngStream::new(config.seed);
    let mut scale = match config.proposal_scale {
        ProposalScale::Auto => DEFAULT_RW_SCALE,
        ProposalScale::Fixed(c) => c,
    };

    let mut theta = fit.theta_hat;
    let mut lp = target.eval(theta);
    if !lp.is_finite() {
        return Err(Error::domain(format!(
            "log target is not finite at the starting point {theta:?}"
        )));
    }
    let kept = config.kept();
    let mut draws = Vec::with_capacity(kept);
    let mut log_target = Vec::with_capacity(kept);
    let mut accepted = 0usize;
    let mut batch_accepted = 0usize;

    for it in 0..config.iterations {
        let d = step(&chol_cov, scale, &mut rng);
        let prop = [theta[0] + d[0], theta[1] + d[1]];
        let lp_prop = target.eval(prop);
        let log_u = rng.uniform_open().ln();
        let accept = lp_prop.is_finite() && log_u < lp_prop - lp;
        if accept {
            theta = prop;
            lp = lp_prop;
        }
        if it < config.burnin {
            batch_accepted += usize::from(accept);
            if config.adapt && (it + 1) % ADAPT_BATCH == 0 {
                let rate = batch_accepted as f64 / ADAPT_BATCH as f64;
                if rate < TARGET_ACCEPT.0 {
                    scale *= (-ADAPT_STEP).exp();
                } else if rate > TARGET_ACCEPT.1 {
                    scale *= ADAPT_STEP.exp();
                }
                batch_accepted = 0;
            }
        } else {
            accepted += usize::from(accept);
            draws.push(theta);
            log_target.push(lp);
        }
    }

    Ok(Chain {
        draws,
        log_target,
        accept_rate: accepted as f64 / kept as f64,
        prior,
        config: config.clone(),
        final_scale: scale,
        fit,
    })
}

/// Independence Metropolis–Hastings with the fixed proposal
/// `N(θ̂, c² I(θ̂)⁻¹)`, `c = 1` unless a scale is fixed in the config.
/// Adaptation is not applied.
pub fn fisher_proposal_mh(
    data: &BinaryDataset,
    prior: LogisticPrior,
    config: &MHConfig,
) -> Result<Chain> {
    let Setup {
        target,
        fit,
        chol_cov,
    } = setup(data, prior, config)?;
    let mut rng = RngStream::new(config.seed);
    let scale = match config.proposal_scale {
        ProposalScale::Auto => 1.0,
        ProposalScale::Fixed(c) => c,
    };
    let center = fit.theta_hat;
    // log q(θ) up to a constant: −½ |L⁻¹(θ − θ̂)|² / c².
    let log_q = |t: Theta| -> f64 {
        let w = chol_cov.solve_lower(&[t[0] - center[0], t[1] - center[1]]);
        -0.5 * (w[0] * w[0] + w[1] * w[1]) / (scale * scale)
    };

    let mut theta = center;
    let mut lp = target.eval(theta);
    if !lp.is_finite() {
        return Err(Error::domain(format!(
            "log target is not finite at the starting point {theta:?}"
        )));
    }
    let mut lq = log_q(theta);
    let kept = config.kept();
    let mut draws = Vec::with_capacity(kept);
    let mut log_target = Vec::with_capacity(kept);
    let mut accepted = 0usize;

    for it in 0..config.iterations {
        let d = step(&chol_cov, scale, &mut rng);
        let prop = [center[0] + d[0], center[1] + d[1]];
        let lp_prop = target.eval(prop);
        let lq_prop = log_q(prop);
        let log_u = rng.uniform_open().ln();
        let accept = lp_prop.is_finite() && log_u < (lp_prop - lp) - (lq_prop - lq);
        if accept {
            theta = prop;
            lp = lp_prop;
            lq = lq_prop;
        }
        if it >= config.burnin {
            accepted += usize::from(accept);
            draws.push(theta);
            log_target.push(lp);
        }
    }

    Ok(Chain {
        draws,
        log_target,
        accept_rate: accepted as f64 / kept as f64,
        prior,
        config: config.clone(),
        final_scale: scale,
        fit,
    })
}

/// Posterior covariance proxy `I(θ̂)⁻¹`, useful for scaling comparisons.
pub fn inverse_fisher(fit: &GlmFit) -> Result<Mat> {
    fit.fisher_info.spd_inverse()
}
