//! Scalar distributions: sampling, cdf, quantile and log-density.
//!
//! Gamma is parameterized by shape and rate (`G(4, 1)` has mean 4).
//! `InverseGamma(a, b)` has density proportional to `x^(-a-1) exp(-b/x)`.
//! `LogNormal(mu, sigma)` is the law of `exp(mu + sigma * Z)`.

use std::f64::consts::{PI, SQRT_2};

use rand_distr::{Distribution, Gamma};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use super::linalg::Mat;
use super::rng::RngStream;
use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistSpec {
    Normal { mu: f64, sigma: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Gamma { shape: f64, rate: f64 },
    InverseGamma { shape: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    Cauchy { loc: f64, scale: f64 },
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DistSpec::Normal { mu, sigma } | DistSpec::LogNormal { mu, sigma } => {
                mu.is_finite() && sigma > 0.0 && sigma.is_finite()
            }
            DistSpec::Gamma { shape, rate } => shape > 0.0 && rate > 0.0,
            DistSpec::InverseGamma { shape, scale } => shape > 0.0 && scale > 0.0,
            DistSpec::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            DistSpec::Cauchy { loc, scale } => loc.is_finite() && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid distribution parameters: {self:?}")))
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DistSpec::Normal { mu, sigma } => normal_cdf((x - mu) / sigma),
            DistSpec::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    normal_cdf((x.ln() - mu) / sigma)
                }
            }
            DistSpec::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, rate * x)
                }
            }
            DistSpec::InverseGamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_ur(shape, scale / x)
                }
            }
            DistSpec::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            DistSpec::Cauchy { loc, scale } => 0.5 + ((x - loc) / scale).atan() / PI,
        }
    }

    /// Log-density; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            DistSpec::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                -0.5 * z * z - sigma.ln() - LN_SQRT_2PI
            }
            DistSpec::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (x.ln() - mu) / sigma;
                -0.5 * z * z - sigma.ln() - LN_SQRT_2PI - x.ln()
            }
            DistSpec::Gamma { shape, rate } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
            DistSpec::InverseGamma { shape, scale } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
            }
            DistSpec::Uniform { lo, hi } => {
                if x > lo && x < hi {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            DistSpec::Cauchy { loc, scale } => {
                let z = (x - loc) / scale;
                -(PI * scale).ln() - (z * z).ln_1p()
            }
        }
    }

    /// Quantile function. Normal, LogNormal, Uniform and Cauchy use closed
    /// forms; Gamma and InverseGamma bisect the cdf on a bracket.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("quantile level {p} outside (0, 1)")));
        }
        self.validate()?;
        Ok(match *self {
            DistSpec::Normal { mu, sigma } => mu + sigma * normal_quantile(p),
            DistSpec::LogNormal { mu, sigma } => (mu + sigma * normal_quantile(p)).exp(),
            DistSpec::Uniform { lo, hi } => lo + p * (hi - lo),
            DistSpec::Cauchy { loc, scale } => loc + scale * (PI * (p - 0.5)).tan(),
            DistSpec::Gamma { .. } | DistSpec::InverseGamma { .. } => self.bisect_quantile(p),
        })
    }

    fn bisect_quantile(&self, p: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.cdf(hi) < p {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= BISECTION_TOL * hi.max(1e-300) * 1e-2 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            DistSpec::Normal { mu, sigma } => mu + sigma * rng.standard_normal(),
            DistSpec::LogNormal { mu, sigma } => (mu + sigma * rng.standard_normal()).exp(),
            DistSpec::Gamma { shape, rate } => sample_gamma(shape, rng) / rate,
            DistSpec::InverseGamma { shape, scale } => scale / sample_gamma(shape, rng),
            DistSpec::Uniform { lo, hi } => loop {
                let x = lo + rng.uniform_open() * (hi - lo);
                if x > lo && x < hi {
                    break x;
                }
            },
            DistSpec::Cauchy { loc, scale } => {
                loc + scale * (PI * (rng.uniform_open() - 0.5)).tan()
            }
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match *self {
            DistSpec::Normal { mu, .. } => Some(mu),
            DistSpec::LogNormal { mu, sigma } => Some((mu + 0.5 * sigma * sigma).exp()),
            DistSpec::Gamma { shape, rate } => Some(shape / rate),
            DistSpec::InverseGamma { shape, scale } => (shape > 1.0).then(|| scale / (shape - 1.0)),
            DistSpec::Uniform { lo, hi } => Some(0.5 * (lo + hi)),
            DistSpec::Cauchy { .. } => None,
        }
    }
}

/// Validating wrapper around [`DistSpec::quantile`].
pub fn dist_quantile(d: &DistSpec, p: f64) -> Result<f64> {
    d.quantile(p)
}

/// Validating wrapper around [`DistSpec::sample`].
pub fn dist_sample(d: &DistSpec, rng: &mut RngStream) -> Result<f64> {
    d.validate()?;
    Ok(d.sample(rng))
}

/// Draw from Gamma(shape, 1).
pub fn sample_gamma(shape: f64, rng: &mut RngStream) -> f64 {
    Gamma::new(shape, 1.0)
        .expect("gamma shape must be positive")
        .sample(rng)
}

/// Logarithm of a Gamma(shape, 1) draw, accurate for very small shapes
/// where the draw itself underflows.
pub fn sample_ln_gamma(shape: f64, rng: &mut RngStream) -> f64 {
    if shape >= 1.0 {
        sample_gamma(shape, rng).ln()
    } else {
        // G(a) = G(a + 1) * U^(1/a)
        sample_gamma(shape + 1.0, rng).ln() + rng.uniform_open().ln() / shape
    }
}

/// Standard normal cdf.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal quantile.
///
/// Acklam's rational approximation (relative error below 1.2e-9) followed by
/// one Halley correction step against the erfc-based cdf.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Inverse logit, never NaN: saturates to exactly 0 or 1 only when the
/// result is not representable otherwise.
pub fn logit_inv(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(u))` without overflow.
pub fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// Draw on the probability simplex from `Dirichlet(gamma)`.
///
/// Components are normalized in log space so that very small concentration
/// parameters do not underflow every component to zero.
pub fn dirichlet_sample(gamma: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
    if gamma.is_empty() {
        return Err(Error::domain("dirichlet needs at least one component"));
    }
    if let Some(g) = gamma.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::domain(format!("dirichlet parameter {g} is not positive")));
    }
    let logs: Vec<f64> = gamma.iter().map(|&g| sample_ln_gamma(g, rng)).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut theta: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = theta.iter().sum();
    for t in &mut theta {
        *t /= total;
    }
    Ok(theta)
}

/// Draw `mean + L z` with `L` the Cholesky factor of `cov`.
pub fn mvn_sample(mean: &[f64], cov: &Mat, rng: &mut RngStream) -> Result<Vec<f64>> {
    if cov.rows() != mean.len() {
        return Err(Error::LengthMismatch {
            expected: mean.len(),
            got: cov.rows(),
        });
    }
    let chol = cov.cholesky()?;
    let z: Vec<f64> = (0..mean.len()).map(|_| rng.standard_normal()).collect();
    Ok(chol
        .lower_mul(&z)
        .iter()
        .zip(mean)
        .map(|(lz, m)| m + lz)
        .collect())
}
