//! Distributions induced by a prior on derived quantities: logistic
//! response curves over a covariate grid and the ratio `1 − b₁/b₂`.

use crate::error::{Error, Result};
use crate::logistic::{LogisticPrior, Theta};
use crate::num::{logit_inv, DistSpec, Mat, RngStream};

pub const DEFAULT_EPS: f64 = 0.01;
/// Redraw threshold for the ratio denominator.
const MIN_DENOMINATOR: f64 = 1e-300;

/// Integer grid `lo, lo + 1, …, hi`.
pub fn age_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(f64::from).collect()
}

/// Prior response curves `x ↦ logit⁻¹(α + βx)`, one row per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    pub xgrid: Vec<f64>,
    pub thetas: Vec<Theta>,
    /// Row-major `thetas.len() × xgrid.len()` probabilities.
    curves: Vec<f64>,
    pub prior: LogisticPrior,
}

impl CurveSet {
    pub fn from_thetas(prior: LogisticPrior, xgrid: Vec<f64>, thetas: Vec<Theta>) -> Result<Self> {
        if xgrid.is_empty() || xgrid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::EmptyGrid);
        }
        let curves = thetas
            .iter()
            .flat_map(|t| xgrid.iter().map(move |&x| logit_inv(t[0] + t[1] * x)))
            .collect();
        Ok(Self {
            xgrid,
            thetas,
            curves,
            prior,
        })
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn curve(&self, i: usize) -> &[f64] {
        let g = self.xgrid.len();
        &self.curves[i * g..(i + 1) * g]
    }
}

/// `g` for which the g-prior sd of `α + βx` equals `target_sd` at both
/// ends of `xgrid`, on the design `[1, x]` over the grid.
///
/// On a grid symmetric about its center the two end leverages coincide;
/// otherwise their average is matched.
pub fn calibrated_g(xgrid: &[f64], target_sd: f64) -> Result<f64> {
    if xgrid.len() < 2 {
        return Err(Error::EmptyGrid);
    }
    let chol = Mat::intercept_design(xgrid).gram().cholesky()?;
    let lev = |x: f64| chol.inv_quad(&[1.0, x]);
    let h = 0.5 * (lev(xgrid[0]) + lev(xgrid[xgrid.len() - 1]));
    Ok(target_sd * target_sd / h)
}

/// Curves for `ndraws` draws of `(α, β)` from a proper prior. `design`
/// defaults to `[1, x]` over `xgrid` and only matters for the g-prior.
pub fn prior_cdf_curves(
    prior: LogisticPrior,
    design: Option<&Mat>,
    xgrid: &[f64],
    ndraws: usize,
    rng: &mut RngStream,
) -> Result<CurveSet> {
    prior.validate()?;
    let cov = match prior {
        LogisticPrior::IidNormal { sigma } => Mat::diag(&[sigma * sigma; 2]),
        LogisticPrior::GPrior { g } => {
            let own;
            let x = match design {
                Some(d) => d,
                None => {
                    own = Mat::intercept_design(xgrid);
                    &own
                }
            };
            x.gram().spd_inverse()?.scale(g)
        }
        LogisticPrior::Flat => return Err(Error::UnsimulablePrior("flat")),
        LogisticPrior::Jeffreys => return Err(Error::UnsimulablePrior("jeffreys")),
    };
    let chol = cov.cholesky()?;
    let thetas = (0..ndraws)
        .map(|_| {
            let z = [rng.standard_normal(), rng.standard_normal()];
            let d = chol.lower_mul(&z);
            [d[0], d[1]]
        })
        .collect();
    CurveSet::from_thetas(prior, xgrid.to_vec(), thetas)
}

/// Fraction of curves that never enter `(eps, 1 − eps)` on the grid.
pub fn saturation_fraction(curves: &CurveSet, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::domain(format!("eps {eps} must lie in (0, 0.5)")));
    }
    if curves.is_empty() {
        return Err(Error::TooFewDraws { needed: 1, got: 0 });
    }
    let saturated = (0..curves.len())
        .filter(|&i| curves.curve(i).iter().all(|&p| p <= eps || p >= 1.0 - eps))
        .count();
    Ok(saturated as f64 / curves.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PteDraws {
    pub values: Vec<f64>,
    pub prior1: DistSpec,
    pub prior2: DistSpec,
}

/// Draws of `1 − b₁/b₂` with `b₁ ~ N(μ₁, σ₁²)` and `b₂ ~ N(μ₂, σ₂²)`
/// independent.
pub fn pte_induced(
    (mu1, sigma1): (f64, f64),
    (mu2, sigma2): (f64, f64),
    ndraws: usize,
    rng: &mut RngStream,
) -> Result<PteDraws> {
    let prior1 = DistSpec::Normal { mu: mu1, sigma: sigma1 };
    let prior2 = DistSpec::Normal { mu: mu2, sigma: sigma2 };
    prior1.validate()?;
    prior2.validate()?;
    let values = (0..ndraws)
        .map(|_| {
            let b1 = prior1.sample(rng);
            let b2 = loop {
                let b = prior2.sample(rng);
                if b.abs() >= MIN_DENOMINATOR {
                    break b;
                }
            };
            1.0 - b1 / b2
        })
        .collect();
    Ok(PteDraws {
        values,
        prior1,
        prior2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summarize::{ks_distance, quantile};
    use proptest::prelude::*;

    fn cauchy_cdf(x: f64) -> f64 {
        0.5 + x.atan() / std::f64::consts::PI
    }

    #[test]
    fn default_grid() {
        let g = age_grid(20, 100);
        assert_eq!(g.len(), 81);
        assert_eq!((g[0], g[80]), (20.0, 100.0));
    }

    #[test]
    fn calibration_constant() {
        // 25 over the end leverage 0.04847937 of the 20..100 grid.
        let g = calibrated_g(&age_grid(20, 100), 5.0).unwrap();
        assert!((g - 515.683_229_813_664_5).abs() < 1e-6);
        let chol = Mat::intercept_design(&age_grid(20, 100)).gram().cholesky().unwrap();
        for x in [20.0, 100.0] {
            assert!((g * chol.inv_quad(&[1.0, x]) - 25.0).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_prior_gives_flat_half() {
        let mut rng = RngStream::new(1);
        let c = prior_cdf_curves(
            LogisticPrior::IidNormal { sigma: 1e-12 },
            None,
            &age_grid(20, 100),
            200,
            &mut rng,
        )
        .unwrap();
        for i in 0..c.len() {
            assert!(c.curve(i).iter().all(|p| (p - 0.5).abs() < 1e-6));
        }
        assert_eq!(saturation_fraction(&c, DEFAULT_EPS).unwrap(), 0.0);
    }

    #[test]
    fn improper_priors_cannot_be_simulated() {
        let mut rng = RngStream::new(2);
        for p in [LogisticPrior::Flat, LogisticPrior::Jeffreys] {
            let r = prior_cdf_curves(p, None, &age_grid(20, 100), 10, &mut rng);
            assert!(matches!(r, Err(Error::UnsimulablePrior(_))));
        }
    }

    #[test]
    fn saturation_fixtures() {
        let grid = age_grid(20, 100);
        let p = LogisticPrior::Flat;
        let all_sat = CurveSet::from_thetas(p, grid.clone(), vec![[1e3, 0.0], [-1e3, 0.0]]).unwrap();
        assert_eq!(saturation_fraction(&all_sat, DEFAULT_EPS).unwrap(), 1.0);
        let mut mixed = vec![[0.0, 0.0]; 7];
        mixed.extend([[1e3, 0.0], [-1e3, 0.0], [-500.0, 0.0]]);
        let c = CurveSet::from_thetas(p, grid, mixed).unwrap();
        assert_eq!(saturation_fraction(&c, DEFAULT_EPS).unwrap(), 0.3);
        for eps in [0.0, 0.5, -0.1] {
            assert!(saturation_fraction(&c, eps).is_err());
        }
    }

    #[test]
    fn wide_normal_saturates_and_g_prior_does_not() {
        let grid = age_grid(20, 100);
        let mut rng = RngStream::new(3);
        let iid = prior_cdf_curves(LogisticPrior::IidNormal { sigma: 25.0 }, None, &grid, 10_000, &mut rng).unwrap();
        let g = calibrated_g(&grid, 5.0).unwrap();
        let gp = prior_cdf_curves(LogisticPrior::GPrior { g }, None, &grid, 10_000, &mut rng).unwrap();
        let (fi, fg) = (
            saturation_fraction(&iid, DEFAULT_EPS).unwrap(),
            saturation_fraction(&gp, DEFAULT_EPS).unwrap(),
        );
        // Reference fractions 0.982713 and 0.012261 from 10⁶ independent draws;
        // the binomial sd at 10⁴ draws is at most 0.0014.
        assert!((fi - 0.982_713).abs() < 0.006, "{fi}");
        assert!((fg - 0.012_261).abs() < 0.006, "{fg}");
        assert!(fi >= 0.5 && fi - fg >= 0.2);
    }

    #[test]
    fn curves_follow_slope_sign() {
        let mut rng = RngStream::new(4);
        let c = prior_cdf_curves(LogisticPrior::IidNormal { sigma: 0.05 }, None, &age_grid(20, 100), 500, &mut rng).unwrap();
        for i in 0..c.len() {
            let beta = c.thetas[i][1];
            let row = c.curve(i);
            let ok = row.windows(2).all(|w| if beta > 0.0 { w[1] >= w[0] } else { w[1] <= w[0] });
            assert!(ok);
            assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn pte_has_cauchy_shape() {
        let mut rng = RngStream::new(5);
        let d = pte_induced((0.0, 1.0), (0.0, 1.0), 1_000_000, &mut rng).unwrap();
        let v = &d.values;
        assert!((quantile(v, 0.5) - 1.0).abs() < 0.005);
        assert!(quantile(v, 0.25).abs() < 0.01);
        assert!((quantile(v, 0.75) - 2.0).abs() < 0.01);
        let inside = v.iter().filter(|&&p| p > 0.0 && p < 1.0).count() as f64 / v.len() as f64;
        assert!((inside - 0.25).abs() < 0.005);
        assert!((1.0 - inside - 0.75).abs() < 0.005);
        let ratios: Vec<f64> = v.iter().map(|p| 1.0 - p).collect();
        assert!(ks_distance(&ratios, cauchy_cdf) < 0.005);
        assert!(v.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn pte_rejects_bad_scales() {
        let mut rng = RngStream::new(6);
        assert!(pte_induced((0.0, 0.0), (0.0, 1.0), 10, &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn saturation_invariant_under_row_permutation(seed in any::<u64>(), shift in 1usize..50) {
            let mut rng = RngStream::new(seed);
            let c = prior_cdf_curves(LogisticPrior::IidNormal { sigma: 3.0 }, None, &age_grid(20, 100), 50, &mut rng).unwrap();
            let mut thetas = c.thetas.clone();
            thetas.rotate_left(shift);
            let p = CurveSet::from_thetas(c.prior, c.xgrid.clone(), thetas).unwrap();
            prop_assert_eq!(saturation_fraction(&c, 0.05).unwrap(), saturation_fraction(&p, 0.05).unwrap());
        }
    }
}
