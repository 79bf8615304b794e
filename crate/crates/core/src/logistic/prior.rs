//! Prior log-densities for `(α, β)` and the resulting unnormalized posterior.

use std::fmt;

use super::{loglik, logistic_weight, BinaryDataset, Theta};
use crate::error::{Error, Result};
use crate::num::Mat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogisticPrior {
    /// `α, β` iid `N(0, σ²)`; `sigma` is the standard deviation.
    IidNormal { sigma: f64 },
    /// Zellner's `N₂(0, g (XᵀX)⁻¹)`.
    GPrior { g: f64 },
    Flat,
    /// `det(XᵀWX)^½`, unnormalized.
    Jeffreys,
}

impl LogisticPrior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LogisticPrior::IidNormal { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::domain(format!("normal prior sigma {sigma} must be positive")))
            }
            LogisticPrior::GPrior { g } if !(g > 0.0 && g.is_finite()) => {
                Err(Error::domain(format!("g-prior g {g} must be positive")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_proper(&self) -> bool {
        matches!(self, LogisticPrior::IidNormal { .. } | LogisticPrior::GPrior { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LogisticPrior::IidNormal { .. } => "normal",
            LogisticPrior::GPrior { .. } => "g",
            LogisticPrior::Flat => "flat",
            LogisticPrior::Jeffreys => "jeffreys",
        }
    }
}

impl fmt::Display for LogisticPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogisticPrior::IidNormal { sigma } => write!(f, "normal(sigma={sigma})"),
            LogisticPrior::GPrior { g } => write!(f, "g-prior(g={g})"),
            LogisticPrior::Flat => write!(f, "flat"),
            LogisticPrior::Jeffreys => write!(f, "jeffreys"),
        }
    }
}

/// `det(XᵀWX)` for the design `[1, x]`.
///
/// Uses `(Σw)·Σw(x − x̄_w)²` with the weighted mean `x̄_w`, which equals
/// `Σw·Σwx² − (Σwx)²` but does not cancel catastrophically when the
/// covariate sits far from zero. Exactly zero for a constant covariate.
pub fn jeffreys_det(theta: Theta, x: &[f64]) -> f64 {
    if x.is_empty() || x.iter().all(|&v| v == x[0]) {
        return 0.0;
    }
    let w: Vec<f64> = x
        .iter()
        .map(|&xi| logistic_weight(theta[0] + theta[1] * xi))
        .collect();
    let sw: f64 = w.iter().sum();
    if !(sw > 0.0) {
        return 0.0;
    }
    let xbar = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let spread: f64 = w
        .iter()
        .zip(x)
        .map(|(w, x)| w * (x - xbar) * (x - xbar))
        .sum();
    sw * spread
}

fn covariate_of(design: Option<&Mat>, prior: &LogisticPrior) -> Result<Vec<f64>> {
    let design = design.ok_or_else(|| {
        Error::domain(format!("{prior} needs the design matrix"))
    })?;
    if design.cols() != 2 || (0..design.rows()).any(|i| design[(i, 0)] != 1.0) {
        return Err(Error::domain(
            "design must be n×2 with an intercept column of ones",
        ));
    }
    Ok(design.col(1))
}

/// Prior log-density up to an additive constant per prior.
///
/// `design` is the n×2 matrix `[1, x]`; it is required by the g-prior and by
/// Jeffreys' prior. Jeffreys returns `-inf` for a rank-deficient design and
/// a domain error if the determinant vanishes numerically otherwise.
pub fn log_prior(prior: &LogisticPrior, theta: Theta, design: Option<&Mat>) -> Result<f64> {
    prior.validate()?;
    let [a, b] = theta;
    match *prior {
        LogisticPrior::IidNormal { sigma } => Ok(-(a * a + b * b) / (2.0 * sigma * sigma)),
        LogisticPrior::Flat => Ok(0.0),
        LogisticPrior::GPrior { g } => {
            let x = covariate_of(design, prior)?;
            Ok(-gram_quad(&Mat::intercept_design(&x).gram(), theta) / (2.0 * g))
        }
        LogisticPrior::Jeffreys => {
            let x = covariate_of(design, prior)?;
            jeffreys_log_density(theta, &x)
        }
    }
}

fn jeffreys_log_density(theta: Theta, x: &[f64]) -> Result<f64> {
    if x.iter().all(|&v| v == x[0]) {
        return Ok(f64::NEG_INFINITY);
    }
    let det = jeffreys_det(theta, x);
    if det > 0.0 && det.is_finite() {
        Ok(0.5 * det.ln())
    } else {
        Err(Error::domain(format!(
            "Jeffreys determinant {det:e} is not positive at {theta:?}"
        )))
    }
}

fn gram_quad(gram: &Mat, t: Theta) -> f64 {
    gram[(0, 0)] * t[0] * t[0] + 2.0 * gram[(0, 1)] * t[0] * t[1] + gram[(1, 1)] * t[1] * t[1]
}

/// Unnormalized log posterior `loglik + log_prior` with the design-dependent
/// pieces precomputed.
#[derive(Debug, Clone)]
pub struct LogPosterior<'a> {
    data: &'a BinaryDataset,
    prior: LogisticPrior,
    gram: Mat,
    with_likelihood: bool,
}

impl<'a> LogPosterior<'a> {
    pub fn new(data: &'a BinaryDataset, prior: LogisticPrior) -> Result<Self> {
        prior.validate()?;
        Ok(Self {
            data,
            prior,
            gram: data.design().gram(),
            with_likelihood: true,
        })
    }

    /// Drops the likelihood so that the target is the prior alone.
    pub fn prior_only(mut self) -> Self {
        self.with_likelihood = false;
        self
    }

    pub fn prior(&self) -> LogisticPrior {
        self.prior
    }

    pub fn log_prior(&self, theta: Theta) -> Result<f64> {
        match self.prior {
            LogisticPrior::GPrior { g } => Ok(-gram_quad(&self.gram, theta) / (2.0 * g)),
            LogisticPrior::Jeffreys => jeffreys_log_density(theta, self.data.x()),
            other => log_prior(&other, theta, None),
        }
    }

    /// Log target; `-inf` wherever the prior is degenerate.
    pub fn eval(&self, theta: Theta) -> f64 {
        let lp = self.log_prior(theta).unwrap_or(f64::NEG_INFINITY);
        if !lp.is_finite() {
            return f64::NEG_INFINITY;
        }
        if self.with_likelihood {
            lp + loglik(theta, self.data)
        } else {
            lp
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logistic::fisher_info;
    use crate::logistic::test_data::banknote_like;
    use crate::num::{det2, RngStream};

    #[test]
    fn flat_is_zero() {
        assert_eq!(log_prior(&LogisticPrior::Flat, [3.0, -7.0], None).unwrap(), 0.0);
    }

    #[test]
    fn normal_prior_quadratic() {
        let lp = log_prior(&LogisticPrior::IidNormal { sigma: 2.0 }, [1.0, 3.0], None).unwrap();
        assert!((lp + 10.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn g_prior_matches_explicit_quadratic_form() {
        let x = [0.3, -1.2, 2.0, 0.7];
        let design = Mat::intercept_design(&x);
        let theta = [0.4, -0.9];
        let xtx = design.transpose().matmul(&design).unwrap();
        let v = xtx.matvec(&theta).unwrap();
        let q = theta[0] * v[0] + theta[1] * v[1];
        let lp = log_prior(&LogisticPrior::GPrior { g: 5.0 }, theta, Some(&design)).unwrap();
        assert!((lp + q / 10.0).abs() < 1e-13);
    }

    #[test]
    fn jeffreys_single_observation_is_neg_infinity() {
        let design = Mat::intercept_design(&[1.7]);
        let lp = log_prior(&LogisticPrior::Jeffreys, [0.2, 0.3], Some(&design)).unwrap();
        assert_eq!(lp, f64::NEG_INFINITY);
    }

    #[test]
    fn jeffreys_needs_design() {
        assert!(log_prior(&LogisticPrior::Jeffreys, [0.0, 0.0], None).is_err());
        assert!(log_prior(&LogisticPrior::GPrior { g: 1.0 }, [0.0, 0.0], None).is_err());
        let no_intercept = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        assert!(log_prior(&LogisticPrior::Jeffreys, [0.0, 0.0], Some(&no_intercept)).is_err());
    }

    #[test]
    fn jeffreys_degenerate_weights_are_domain_error() {
        let design = Mat::intercept_design(&[0.0, 1.0]);
        let r = log_prior(&LogisticPrior::Jeffreys, [2000.0, 0.0], Some(&design));
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn jeffreys_matches_direct_determinant() {
        let mut rng = RngStream::new(21);
        for _ in 0..20 {
            let x: Vec<f64> = (0..25).map(|_| 2.0 * rng.standard_normal()).collect();
            let theta = [rng.standard_normal(), rng.standard_normal()];
            // Direct 2×2 determinant of Σ wᵢ [1 xᵢ; xᵢ xᵢ²] with
            // wᵢ = e^η / (1 + e^η)².
            let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
            for &xi in &x {
                let e = (theta[0] + theta[1] * xi).exp();
                let w = e / ((1.0 + e) * (1.0 + e));
                s0 += w;
                s1 += w * xi;
                s2 += w * xi * xi;
            }
            let direct = (s0 * s2 - s1 * s1).sqrt();
            let design = Mat::intercept_design(&x);
            let lp = log_prior(&LogisticPrior::Jeffreys, theta, Some(&design)).unwrap();
            assert!(((lp.exp() - direct) / direct).abs() < 1e-8);
            let f = fisher_info(theta, &x);
            assert!(((det2(&f) - direct * direct) / (direct * direct)).abs() < 1e-8);
        }
    }

    #[test]
    fn jeffreys_invariant_under_recentering() {
        let mut rng = RngStream::new(22);
        let x: Vec<f64> = (0..40).map(|_| 214.9 + 0.4 * rng.standard_normal()).collect();
        for c in [214.9, -3.0, 100.0] {
            let shifted: Vec<f64> = x.iter().map(|v| v - c).collect();
            let theta = [230.0, -1.07];
            let moved = [theta[0] + theta[1] * c, theta[1]];
            let d0 = jeffreys_det(theta, &x);
            let d1 = jeffreys_det(moved, &shifted);
            assert!(((d0 - d1) / d0).abs() < 1e-8, "c={c}: {d0} vs {d1}");
        }
    }

    #[test]
    fn posterior_eval_consistent_with_parts() {
        let d = banknote_like(60, 23);
        let design = d.design();
        for prior in [
            LogisticPrior::IidNormal { sigma: 25.0 },
            LogisticPrior::GPrior { g: 60.0 },
            LogisticPrior::Flat,
            LogisticPrior::Jeffreys,
        ] {
            let post = LogPosterior::new(&d, prior).unwrap();
            let theta = [200.0, -0.93];
            let want = loglik(theta, &d) + log_prior(&prior, theta, Some(&design)).unwrap();
            assert!((post.eval(theta) - want).abs() < 1e-9 * want.abs().max(1.0), "{prior}");
        }
    }

    #[test]
    fn invalid_hyperparameters() {
        assert!(LogisticPrior::IidNormal { sigma: 0.0 }.validate().is_err());
        assert!(LogisticPrior::GPrior { g: -1.0 }.validate().is_err());
    }
}
