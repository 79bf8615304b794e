//! Posterior summaries, kernel density grids and effective sample sizes.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

const KDE_MIN_DRAWS: usize = 10;
const ESS_MIN_DRAWS: usize = 100;
const MODE_GRID_POINTS: usize = 512;
/// Kernel contributions beyond this many bandwidths are below 1e-14.
const KERNEL_CUTOFF: f64 = 8.0;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub mean: f64,
    pub sd: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
    pub mode: f64,
    pub n_draws: usize,
    /// Effective sample size; equals `n_draws` for chains shorter than 100.
    pub ess: f64,
}

impl SummaryRow {
    /// Monte Carlo standard error of the mean, `sd / sqrt(ess)`.
    pub fn mcse(&self) -> f64 {
        self.sd / self.ess.sqrt()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Silverman's rule of thumb, `1.06 · sd · n^(-1/5)`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityGrid {
    /// Trapezoid integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    pub fn argmax(&self) -> f64 {
        let mut best = 0;
        for (i, d) in self.density.iter().enumerate() {
            if *d > self.density[best] {
                best = i;
            }
        }
        self.grid[best]
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

pub fn mean(draws: &[f64]) -> f64 {
    draws.iter().sum::<f64>() / draws.len() as f64
}

/// Unbiased (n − 1) standard deviation.
pub fn sd(draws: &[f64]) -> f64 {
    let m = mean(draws);
    let ss: f64 = draws.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (draws.len() as f64 - 1.0)).sqrt()
}

/// Quantile of already sorted data by linear interpolation between order
/// statistics.
pub fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(draws: &[f64], p: f64) -> f64 {
    let mut s = draws.to_vec();
    s.sort_by(f64::total_cmp);
    sorted_quantile(&s, p)
}

/// Kolmogorov–Smirnov distance between the empirical cdf of `draws` and
/// `cdf`.
pub fn ks_distance(draws: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = draws.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

pub fn silverman_bandwidth(draws: &[f64]) -> f64 {
    1.06 * sd(draws) * (draws.len() as f64).powf(-0.2)
}

pub fn summary_stats(draws: &[f64]) -> Result<SummaryRow> {
    let n = draws.len();
    if n < 2 {
        return Err(Error::TooFewDraws { needed: 2, got: n });
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sd = sd(draws);
    let ess = if n >= ESS_MIN_DRAWS {
        effective_sample_size(draws)?
    } else {
        n as f64
    };
    Ok(SummaryRow {
        label: String::new(),
        mean: mean(draws),
        sd,
        q10: sorted_quantile(&sorted, 0.1),
        q50: sorted_quantile(&sorted, 0.5),
        q90: sorted_quantile(&sorted, 0.9),
        mode: kde_mode(&sorted, sd),
        n_draws: n,
        ess,
    })
}

/// Argmax of the Silverman-bandwidth KDE on an even grid over the data range.
fn kde_mode(sorted: &[f64], sd: f64) -> f64 {
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if !(sd > 0.0) || hi <= lo {
        return sorted[sorted.len() / 2];
    }
    let h = 1.06 * sd * (sorted.len() as f64).powf(-0.2);
    let grid = even_grid(lo, hi, MODE_GRID_POINTS);
    let dens = kde_sorted(sorted, &grid, h);
    let mut best = 0;
    for (i, d) in dens.iter().enumerate() {
        if *d > dens[best] {
            best = i;
        }
    }
    grid[best]
}

pub fn even_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

/// Gaussian kernel density estimate evaluated on `grid`.
pub fn kde_density(draws: &[f64], grid: &[f64], bandwidth: Bandwidth) -> Result<DensityGrid> {
    if draws.len() < KDE_MIN_DRAWS {
        return Err(Error::TooFewDraws {
            needed: KDE_MIN_DRAWS,
            got: draws.len(),
        });
    }
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::EmptyGrid);
    }
    let h = match bandwidth {
        Bandwidth::Auto => silverman_bandwidth(draws),
        Bandwidth::Fixed(h) => h,
    };
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("bandwidth {h} must be positive")));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(DensityGrid {
        grid: grid.to_vec(),
        density: kde_sorted(&sorted, grid, h),
        bandwidth: h,
    })
}

fn kde_sorted(sorted: &[f64], grid: &[f64], h: f64) -> Vec<f64> {
    let norm = INV_SQRT_2PI / (h * sorted.len() as f64);
    let reach = KERNEL_CUTOFF * h;
    grid.iter()
        .map(|&g| {
            let start = sorted.partition_point(|&x| x < g - reach);
            let end = sorted.partition_point(|&x| x <= g + reach);
            let s: f64 = sorted[start..end]
                .iter()
                .map(|&x| {
                    let u = (g - x) / h;
                    (-0.5 * u * u).exp()
                })
                .sum();
            s * norm
        })
        .collect()
}

/// Normalized autocorrelations for lags `0..n` via zero-padded FFT.
pub fn autocorrelation(draws: &[f64]) -> Vec<f64> {
    let n = draws.len();
    let m = mean(draws);
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = draws
        .iter()
        .map(|x| Complex::new(x - m, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in &mut buf {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    if !(c0 > 0.0) {
        return vec![0.0; n];
    }
    buf[..n].iter().map(|c| c.re / c0).collect()
}

/// Effective sample size `n / (1 + 2 Σ ρ_k)`, truncating the sum by Geyer's
/// initial positive sequence rule. Constant chains return `n`.
pub fn effective_sample_size(draws: &[f64]) -> Result<f64> {
    let n = draws.len();
    if n < ESS_MIN_DRAWS {
        return Err(Error::TooFewDraws {
            needed: ESS_MIN_DRAWS,
            got: n,
        });
    }
    let first = draws[0];
    if draws.iter().all(|&x| x == first) {
        return Ok(n as f64);
    }
    let rho = autocorrelation(draws);
    let mut tau = -1.0;
    let mut k = 0;
    while k + 1 < n {
        let pair = rho[k] + rho[k + 1];
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    let ess = n as f64 / tau;
    Ok(ess.clamp(f64::MIN_POSITIVE, n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::RngStream;

    #[test]
    fn ks_distance_of_exact_grid() {
        // Midpoints of n equal cells: the distance is exactly 1 / (2n).
        let draws: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert!((ks_distance(&draws, |x| x.clamp(0.0, 1.0)) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn constant_draws() {
        let s = summary_stats(&[1.0; 4]).unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.sd, 0.0);
        assert_eq!(s.mode, 1.0);
    }

    #[test]
    fn symmetric_integer_grid() {
        let draws: Vec<f64> = (0..=100).map(f64::from).collect();
        let s = summary_stats(&draws).unwrap();
        assert_eq!(s.mean, 50.0);
        assert_eq!(s.q50, 50.0);
        assert_eq!(s.q10, 10.0);
        assert_eq!(s.q90, 90.0);
    }

    #[test]
    fn too_few_draws() {
        assert!(matches!(summary_stats(&[1.0]), Err(Error::TooFewDraws { .. })));
        assert!(matches!(
            kde_density(&[1.0; 9], &[0.0, 1.0], Bandwidth::Auto),
            Err(Error::TooFewDraws { .. })
        ));
        assert!(matches!(
            effective_sample_size(&[1.0; 99]),
            Err(Error::TooFewDraws { .. })
        ));
    }

    #[test]
    fn empty_grid_rejected() {
        let d: Vec<f64> = (0..20).map(f64::from).collect();
        assert!(matches!(kde_density(&d, &[], Bandwidth::Auto), Err(Error::EmptyGrid)));
        assert!(matches!(
            kde_density(&d, &[1.0, 0.0], Bandwidth::Auto),
            Err(Error::EmptyGrid)
        ));
    }

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = RngStream::new(seed);
        (0..n).map(|_| rng.standard_normal()).collect()
    }

    #[test]
    fn standard_normal_summary() {
        let draws = normals(1, 1_000_000);
        let s = summary_stats(&draws).unwrap();
        assert!(s.mean.abs() < 0.005);
        assert!((s.sd - 1.0).abs() < 0.005);
        assert!(s.mode.abs() < 0.05, "mode {}", s.mode);
    }

    #[test]
    fn kde_single_atom() {
        let draws = vec![2.5; 50];
        let grid = even_grid(2.0, 3.0, 1001);
        let k = kde_density(&draws, &grid, Bandwidth::Fixed(0.01)).unwrap();
        assert!((k.argmax() - 2.5).abs() < 1e-9);
        assert!((k.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn kde_matches_true_normal_density() {
        let draws = normals(2, 1_000_000);
        let grid = even_grid(-4.0, 4.0, 401);
        let k = kde_density(&draws, &grid, Bandwidth::Auto).unwrap();
        let worst = grid
            .iter()
            .zip(&k.density)
            .map(|(x, d)| (d - INV_SQRT_2PI * (-0.5 * x * x).exp()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.02, "{worst}");
        assert!((k.integral() - 1.0).abs() < 0.01);
    }

    #[test]
    fn wider_bandwidth_lowers_peak() {
        let draws = normals(3, 10_000);
        let grid = even_grid(-5.0, 5.0, 501);
        let h = silverman_bandwidth(&draws);
        let a = kde_density(&draws, &grid, Bandwidth::Fixed(h)).unwrap();
        let b = kde_density(&draws, &grid, Bandwidth::Fixed(2.0 * h)).unwrap();
        let peak = |k: &DensityGrid| k.density.iter().cloned().fold(0.0, f64::max);
        assert!(peak(&b) < peak(&a));
    }

    #[test]
    fn ess_iid_close_to_n() {
        let draws = normals(4, 10_000);
        let ess = effective_sample_size(&draws).unwrap();
        assert!((ess - 10_000.0).abs() < 1_000.0, "{ess}");
    }

    #[test]
    fn ess_ar1_closed_form() {
        let mut rng = RngStream::new(5);
        let phi = 0.9;
        let n = 100_000;
        let mut x = 0.0;
        let draws: Vec<f64> = (0..n)
            .map(|_| {
                x = phi * x + rng.standard_normal();
                x
            })
            .collect();
        let want = n as f64 * (1.0 - phi) / (1.0 + phi);
        let ess = effective_sample_size(&draws).unwrap();
        assert!((ess - want).abs() < 0.2 * want, "{ess} vs {want}");
    }

    #[test]
    fn ess_constant_is_n() {
        assert_eq!(effective_sample_size(&[3.0; 500]).unwrap(), 500.0);
    }

    #[test]
    fn autocorrelation_matches_direct_sum() {
        let draws = normals(6, 300);
        let rho = autocorrelation(&draws);
        let m = mean(&draws);
        let c0: f64 = draws.iter().map(|x| (x - m).powi(2)).sum();
        for k in [0, 1, 5, 17] {
            let ck: f64 = (0..draws.len() - k).map(|t| (draws[t] - m) * (draws[t + k] - m)).sum();
            assert!((rho[k] - ck / c0).abs() < 1e-12);
        }
    }

    #[test]
    fn mode_within_range() {
        let mut rng = RngStream::new(7);
        let draws: Vec<f64> = (0..1000).map(|_| rng.uniform01().powi(3)).collect();
        let s = summary_stats(&draws).unwrap();
        let (lo, hi) = draws.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(s.mode >= lo && s.mode <= hi);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn affine_equivariance(
                xs in proptest::collection::vec(-100.0f64..100.0, 2..200),
                a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
                b in -50.0f64..50.0,
            ) {
                let s = summary_stats(&xs).unwrap();
                let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
                let t = summary_stats(&ys).unwrap();
                let tol = |v: f64| 1e-9 * (1.0 + v.abs());
                prop_assert!((t.mean - (a * s.mean + b)).abs() < tol(t.mean));
                prop_assert!((t.sd - a.abs() * s.sd).abs() < tol(t.sd));
                prop_assert!((t.q50 - (a * s.q50 + b)).abs() < tol(t.q50));
                let (lo, hi) = if a > 0.0 { (s.q10, s.q90) } else { (s.q90, s.q10) };
                prop_assert!((t.q10 - (a * lo + b)).abs() < tol(t.q10));
                prop_assert!((t.q90 - (a * hi + b)).abs() < tol(t.q90));
                prop_assert!(t.q10 <= t.q50 && t.q50 <= t.q90);
            }
        }
    }
}
