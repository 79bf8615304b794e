//! Hierarchical normal regression with a separation-strategy covariance.
//!
//! Regression `j` has `y_j = X_j β_j + ε_j`, `ε_j ~ N(0, τ²_j I)`, and the
//! coefficients share `β_j ~ N(β̄, Σ)` with `Σ = diag(S)·R·diag(S)`. The
//! hyperpriors are `τ²_j ~ IG(a₀, b₀)`, `β̄ ~ N(0, v₀ I)`, independent priors
//! on each `Sᵢ`, and a uniform prior on the correlation `r` (for `k = 2`).
//!
//! `β_j`, `β̄` and `τ²_j` are drawn from their conjugate full conditionals;
//! `S` and `r` are updated by random-walk Metropolis on `log S` and
//! `atanh r`. Both `k = 1` and `k = 2` are supported; with `k = 1` there is
//! no correlation and `r` stays at zero.

use crate::error::{Error, Result};
use crate::num::{Cholesky, DistSpec, Mat, RngStream};

const ADAPT_BATCH: usize = 50;
const ADAPT_STEP: f64 = 0.25;
const TARGET_ACCEPT: (f64, f64) = (0.2, 0.5);
/// `|r|` beyond this is treated as the boundary of the support.
const R_BOUND: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HierData {
    k: usize,
    x: Vec<Mat>,
    y: Vec<Vec<f64>>,
}

impl HierData {
    /// Each design must have `k` columns, the first all ones.
    pub fn new(k: usize, x: Vec<Mat>, y: Vec<Vec<f64>>) -> Result<Self> {
        if !(1..=2).contains(&k) {
            return Err(Error::domain(format!("k = {k} is not supported (1 or 2)")));
        }
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        for (xj, yj) in x.iter().zip(&y) {
            if xj.cols() != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    got: xj.cols(),
                });
            }
            if xj.rows() != yj.len() {
                return Err(Error::LengthMismatch {
                    expected: xj.rows(),
                    got: yj.len(),
                });
            }
            if (0..xj.rows()).any(|i| xj[(i, 0)] != 1.0) {
                return Err(Error::domain("first design column must be all ones"));
            }
        }
        Ok(Self { k, x, y })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.x.len()
    }

    pub fn n(&self, j: usize) -> usize {
        self.y[j].len()
    }

    pub fn design(&self, j: usize) -> &Mat {
        &self.x[j]
    }

    pub fn response(&self, j: usize) -> &[f64] {
        &self.y[j]
    }

    /// Requires `n_j ≥ k` and a full-rank design for every regression.
    pub fn check_identifiable(&self) -> Result<()> {
        for (j, xj) in self.x.iter().enumerate() {
            if xj.rows() < self.k {
                return Err(Error::DegenerateData(format!(
                    "regression {j} has {} rows for {} coefficients",
                    xj.rows(),
                    self.k
                )));
            }
            xj.gram().cholesky().map_err(|_| {
                Error::DegenerateData(format!("design of regression {j} is rank deficient"))
            })?;
        }
        Ok(())
    }

    /// Least-squares coefficients of each regression.
    pub fn ols(&self) -> Result<Vec<Vec<f64>>> {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(xj, yj)| xj.gram().cholesky()?.solve(&xj.t_matvec(yj)?))
            .collect()
    }
}

/// Independent priors on the scales `S₁, …, S_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SPriorSpec {
    coords: Vec<DistSpec>,
}

impl SPriorSpec {
    /// Each entry must be `LogNormal` or `Gamma`.
    pub fn new(coords: Vec<DistSpec>) -> Result<Self> {
        for d in &coords {
            d.validate()?;
            if !matches!(d, DistSpec::LogNormal { .. } | DistSpec::Gamma { .. }) {
                return Err(Error::domain(format!(
                    "scale prior must be lognormal or gamma, got {d:?}"
                )));
            }
        }
        Ok(Self { coords })
    }

    pub fn lognormal(mu: f64, sigma: f64, k: usize) -> Result<Self> {
        Self::new(vec![DistSpec::LogNormal { mu, sigma }; k])
    }

    pub fn gamma(shape: f64, rate: f64, k: usize) -> Result<Self> {
        Self::new(vec![DistSpec::Gamma { shape, rate }; k])
    }

    pub fn coord(&self, i: usize) -> &DistSpec {
        &self.coords[i]
    }

    pub fn k(&self) -> usize {
        self.coords.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierHyper {
    /// Inverse-gamma shape for each `τ²_j`.
    pub tau2_shape: f64,
    /// Inverse-gamma scale for each `τ²_j`.
    pub tau2_scale: f64,
    /// Prior variance of each coordinate of `β̄`.
    pub betabar_var: f64,
    pub s_prior: SPriorSpec,
}

impl HierHyper {
    /// `τ²_j ~ IG(3, 1)` and `β̄ ~ N(0, 1000 I)`.
    pub fn new(s_prior: SPriorSpec) -> Self {
        Self {
            tau2_shape: 3.0,
            tau2_scale: 1.0,
            betabar_var: 1000.0,
            s_prior,
        }
    }

    pub fn k(&self) -> usize {
        self.s_prior.k()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau2_shape > 0.0 && self.tau2_scale > 0.0 && self.betabar_var > 0.0) {
            return Err(Error::domain("hyperparameters must be positive"));
        }
        Ok(())
    }

    fn tau2_prior(&self) -> DistSpec {
        DistSpec::InverseGamma {
            shape: self.tau2_shape,
            scale: self.tau2_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierState {
    pub beta: Vec<Vec<f64>>,
    pub betabar: Vec<f64>,
    pub tau2: Vec<f64>,
    pub s: Vec<f64>,
    pub r: f64,
}

impl HierState {
    pub fn k(&self) -> usize {
        self.s.len()
    }

    pub fn m(&self) -> usize {
        self.beta.len()
    }

    /// `Σ = diag(S)·R·diag(S)`.
    pub fn sigma(&self) -> Mat {
        sigma_from(&self.s, self.r)
    }

    fn check(&self) -> Result<()> {
        if self.s.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::domain(format!("scales {:?} must be positive", self.s)));
        }
        if !(self.r.abs() < 1.0) {
            return Err(Error::domain(format!("correlation {} outside (-1, 1)", self.r)));
        }
        Ok(())
    }

    /// A draw of every parameter from the prior.
    pub fn from_prior(m: usize, hyper: &HierHyper, rng: &mut RngStream) -> Result<Self> {
        hyper.validate()?;
        let k = hyper.k();
        let sd0 = hyper.betabar_var.sqrt();
        let betabar: Vec<f64> = (0..k).map(|_| sd0 * rng.standard_normal()).collect();
        let s: Vec<f64> = (0..k).map(|i| hyper.s_prior.coord(i).sample(rng)).collect();
        let r = if k == 2 { 2.0 * rng.uniform_open() - 1.0 } else { 0.0 };
        let sigma = sigma_from(&s, r);
        let beta = (0..m)
            .map(|_| crate::num::mvn_sample(&betabar, &sigma, rng))
            .collect::<Result<Vec<_>>>()?;
        let tau2 = (0..m).map(|_| hyper.tau2_prior().sample(rng)).collect();
        Ok(Self {
            beta,
            betabar,
            tau2,
            s,
            r,
        })
    }
}

fn sigma_from(s: &[f64], r: f64) -> Mat {
    let k = s.len();
    let mut m = Mat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let rho = if i == j { 1.0 } else { r };
            m[(i, j)] = s[i] * rho * s[j];
        }
    }
    m
}

/// `Σ⁻¹` in closed form for `k ≤ 2`.
fn sigma_inv(s: &[f64], r: f64) -> Mat {
    if s.len() == 1 {
        return Mat::diag(&[1.0 / (s[0] * s[0])]);
    }
    let d = 1.0 - r * r;
    let off = -r / (s[0] * s[1] * d);
    Mat::from_rows(&[
        vec![1.0 / (s[0] * s[0] * d), off],
        vec![off, 1.0 / (s[1] * s[1] * d)],
    ])
}

/// `Σ_j log N(β_j; β̄, Σ)` up to the `2π` constant.
fn beta_loglik(beta: &[Vec<f64>], betabar: &[f64], s: &[f64], r: f64) -> f64 {
    let m = beta.len() as f64;
    if s.len() == 1 {
        let q: f64 = beta.iter().map(|b| ((b[0] - betabar[0]) / s[0]).powi(2)).sum();
        return -m * s[0].ln() - 0.5 * q;
    }
    let d = 1.0 - r * r;
    let q: f64 = beta
        .iter()
        .map(|b| {
            let u0 = (b[0] - betabar[0]) / s[0];
            let u1 = (b[1] - betabar[1]) / s[1];
            (u0 * u0 - 2.0 * r * u0 * u1 + u1 * u1) / d
        })
        .sum();
    -m * (s[0].ln() + s[1].ln() + 0.5 * d.ln()) - 0.5 * q
}

/// Draws `mean + P^{-1/2} z` for a precision `P = L·Lᵀ` and its mean.
fn draw_from_precision(chol: &Cholesky, mean: &[f64], rng: &mut RngStream) -> Vec<f64> {
    let z: Vec<f64> = (0..mean.len()).map(|_| rng.standard_normal()).collect();
    let w = chol.solve_upper(&z);
    mean.iter().zip(w).map(|(m, w)| m + w).collect()
}

/// Gaussian full conditional as a mean and a factored precision.
#[derive(Debug, Clone)]
pub struct Conditional {
    pub mean: Vec<f64>,
    pub precision: Cholesky,
}

impl Conditional {
    pub fn covariance(&self) -> Result<Mat> {
        self.precision.inverse()
    }

    pub fn draw(&self, rng: &mut RngStream) -> Vec<f64> {
        draw_from_precision(&self.precision, &self.mean, rng)
    }
}

/// Full conditional of `β_j`:
/// `N(V(X_jᵀy_j/τ²_j + Σ⁻¹β̄), V)`, `V = (X_jᵀX_j/τ²_j + Σ⁻¹)⁻¹`.
pub fn cond_beta_j_params(j: usize, state: &HierState, data: &HierData) -> Result<Conditional> {
    state.check()?;
    let xj = data.design(j);
    let t = state.tau2[j];
    let sinv = sigma_inv(&state.s, state.r);
    let precision = xj.gram().scale(1.0 / t).add(&sinv)?.cholesky()?;
    let xty = xj.t_matvec(data.response(j))?;
    let prior_term = sinv.matvec(&state.betabar)?;
    let rhs: Vec<f64> = xty.iter().zip(&prior_term).map(|(a, b)| a / t + b).collect();
    let mean = precision.solve(&rhs)?;
    Ok(Conditional { mean, precision })
}

pub fn cond_beta_j(
    j: usize,
    state: &HierState,
    data: &HierData,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    Ok(cond_beta_j_params(j, state, data)?.draw(rng))
}

/// Full conditional of `β̄`:
/// `N(V Σ⁻¹ Σ_j β_j, V)`, `V = (m Σ⁻¹ + I/v₀)⁻¹`.
pub fn cond_betabar_params(state: &HierState, hyper: &HierHyper) -> Result<Conditional> {
    state.check()?;
    let k = state.k();
    let m = state.m() as f64;
    let sinv = sigma_inv(&state.s, state.r);
    let precision = sinv
        .scale(m)
        .add(&Mat::diag(&vec![1.0 / hyper.betabar_var; k]))?
        .cholesky()?;
    let mut total = vec![0.0; k];
    for b in &state.beta {
        for (t, v) in total.iter_mut().zip(b) {
            *t += v;
        }
    }
    let mean = precision.solve(&sinv.matvec(&total)?)?;
    Ok(Conditional { mean, precision })
}

pub fn cond_betabar(state: &HierState, hyper: &HierHyper, rng: &mut RngStream) -> Result<Vec<f64>> {
    Ok(cond_betabar_params(state, hyper)?.draw(rng))
}

/// Residual sum of squares of regression `j` at `β`.
pub fn rss(data: &HierData, j: usize, beta: &[f64]) -> Result<f64> {
    let fit = data.design(j).matvec(beta)?;
    Ok(data
        .response(j)
        .iter()
        .zip(fit)
        .map(|(y, f)| (y - f) * (y - f))
        .sum())
}

/// Full conditional of `τ²_j`: `IG(a₀ + n_j/2, b₀ + RSS_j/2)`.
pub fn cond_tau2_params(
    j: usize,
    state: &HierState,
    data: &HierData,
    hyper: &HierHyper,
) -> Result<DistSpec> {
    let rss = rss(data, j, &state.beta[j])?;
    Ok(DistSpec::InverseGamma {
        shape: hyper.tau2_shape + 0.5 * data.n(j) as f64,
        scale: hyper.tau2_scale + 0.5 * rss,
    })
}

pub fn cond_tau2(
    j: usize,
    state: &HierState,
    data: &HierData,
    hyper: &HierHyper,
    rng: &mut RngStream,
) -> Result<f64> {
    Ok(cond_tau2_params(j, state, data, hyper)?.sample(rng))
}

/// One random-walk Metropolis step on `log Sᵢ` for each coordinate in turn,
/// with step sd `scale`. Returns the acceptance flag of each coordinate.
pub fn mwg_update_s(
    state: &mut HierState,
    hyper: &HierHyper,
    rng: &mut RngStream,
    scale: f64,
) -> Vec<bool> {
    let k = state.k();
    let mut flags = Vec::with_capacity(k);
    let mut current = beta_loglik(&state.beta, &state.betabar, &state.s, state.r);
    for i in 0..k {
        let prior = hyper.s_prior.coord(i);
        let old = state.s[i];
        let new = old * (scale * rng.standard_normal()).exp();
        let mut s_new = state.s.clone();
        s_new[i] = new;
        let proposed = beta_loglik(&state.beta, &state.betabar, &s_new, state.r);
        let log_ratio = (proposed - current)
            + (prior.ln_pdf(new) - prior.ln_pdf(old))
            + (new.ln() - old.ln());
        let accept = new > 0.0 && new.is_finite() && rng.uniform_open().ln() < log_ratio;
        if accept {
            state.s = s_new;
            current = proposed;
        }
        flags.push(accept);
    }
    flags
}

/// One random-walk Metropolis step on `atanh r` with step sd `scale`.
/// Always accepts (and leaves `r` at zero) when `k = 1`.
pub fn mwg_update_r(state: &mut HierState, rng: &mut RngStream, scale: f64) -> bool {
    if state.k() < 2 {
        return true;
    }
    let old = state.r;
    let step = scale * rng.standard_normal();
    // tanh(atanh r) is not exactly r in floating point.
    let new = if step == 0.0 { old } else { (old.atanh() + step).tanh() };
    if !(new.abs() < R_BOUND) {
        // Consume the uniform anyway so that streams stay aligned.
        rng.uniform_open();
        return false;
    }
    let log_ratio = beta_loglik(&state.beta, &state.betabar, &state.s, new)
        - beta_loglik(&state.beta, &state.betabar, &state.s, old)
        + ((1.0 - new * new).ln() - (1.0 - old * old).ln());
    let accept = rng.uniform_open().ln() < log_ratio;
    if accept {
        state.r = new;
    }
    accept
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsConfig {
    /// Total sweeps including burn-in.
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
    /// Step sd of the `log S` random walk.
    pub s_scale: f64,
    /// Step sd of the `atanh r` random walk.
    pub r_scale: f64,
    /// Tune both step sizes during burn-in.
    pub adapt: bool,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            iterations: 100_000,
            burnin: 10_000,
            seed: 1,
            s_scale: 0.5,
            r_scale: 0.5,
            adapt: true,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burnin >= self.iterations {
            return Err(Error::domain(format!(
                "burnin {} must be below iterations {}",
                self.burnin, self.iterations
            )));
        }
        if !(self.s_scale >= 0.0 && self.r_scale >= 0.0) {
            return Err(Error::domain("random-walk scales must be non-negative"));
        }
        Ok(())
    }

    pub fn kept(&self) -> usize {
        self.iterations - self.burnin
    }
}

/// Kept draws of every parameter, stored iteration-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HierChains {
    pub m: usize,
    pub k: usize,
    beta: Vec<f64>,
    betabar: Vec<f64>,
    tau2: Vec<f64>,
    s: Vec<f64>,
    r: Vec<f64>,
    /// Post-burn-in acceptance rate of each `log Sᵢ` update.
    pub accept_s: Vec<f64>,
    /// Post-burn-in acceptance rate of the `atanh r` update.
    pub accept_r: f64,
    pub final_s_scale: f64,
    pub final_r_scale: f64,
}

impl HierChains {
    fn with_capacity(m: usize, k: usize, n: usize) -> Self {
        Self {
            m,
            k,
            beta: Vec::with_capacity(n * m * k),
            betabar: Vec::with_capacity(n * k),
            tau2: Vec::with_capacity(n * m),
            s: Vec::with_capacity(n * k),
            r: Vec::with_capacity(n),
            accept_s: vec![0.0; k],
            accept_r: 0.0,
            final_s_scale: 0.0,
            final_r_scale: 0.0,
        }
    }

    fn push(&mut self, st: &HierState) {
        for b in &st.beta {
            self.beta.extend_from_slice(b);
        }
        self.betabar.extend_from_slice(&st.betabar);
        self.tau2.extend_from_slice(&st.tau2);
        self.s.extend_from_slice(&st.s);
        self.r.push(st.r);
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn beta(&self, j: usize, c: usize) -> Vec<f64> {
        let stride = self.m * self.k;
        self.beta.iter().skip(j * self.k + c).step_by(stride).copied().collect()
    }

    pub fn betabar(&self, c: usize) -> Vec<f64> {
        self.betabar.iter().skip(c).step_by(self.k).copied().collect()
    }

    pub fn tau2(&self, j: usize) -> Vec<f64> {
        self.tau2.iter().skip(j).step_by(self.m).copied().collect()
    }

    pub fn s(&self, i: usize) -> Vec<f64> {
        self.s.iter().skip(i).step_by(self.k).copied().collect()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// Every scalar chain with its label, in a fixed order.
    pub fn labelled(&self) -> Vec<(String, Vec<f64>)> {
        let mut out = Vec::new();
        for j in 0..self.m {
            for c in 0..self.k {
                out.push((format!("beta_{}_{}", j + 1, c), self.beta(j, c)));
            }
        }
        for c in 0..self.k {
            out.push((format!("betabar_{c}"), self.betabar(c)));
        }
        for j in 0..self.m {
            out.push((format!("tau2_{}", j + 1), self.tau2(j)));
        }
        for i in 0..self.k {
            out.push((format!("S_{}", i + 1), self.s(i)));
        }
        if self.k == 2 {
            out.push(("r".to_string(), self.r.clone()));
        }
        out
    }
}

/// Starting point: least-squares coefficients, their average, residual
/// variances, prior medians for `S`, and `r = 0`.
pub fn initial_state(data: &HierData, hyper: &HierHyper) -> Result<HierState> {
    let k = data.k();
    let beta = data.ols()?;
    let m = beta.len();
    let mut betabar = vec![0.0; k];
    if m > 0 {
        for b in &beta {
            for (t, v) in betabar.iter_mut().zip(b) {
                *t += v / m as f64;
            }
        }
    }
    let tau2 = (0..m)
        .map(|j| {
            let dof = data.n(j).saturating_sub(k).max(1) as f64;
            Ok((rss(data, j, &beta[j])? / dof).max(1e-8))
        })
        .collect::<Result<Vec<_>>>()?;
    let s = (0..k)
        .map(|i| hyper.s_prior.coord(i).quantile(0.5))
        .collect::<Result<Vec<_>>>()?;
    Ok(HierState {
        beta,
        betabar,
        tau2,
        s,
        r: 0.0,
    })
}

/// Running acceptance bookkeeping and burn-in tuning of the two step sizes.
struct Tuner {
    s_scale: f64,
    r_scale: f64,
    batch_s: usize,
    batch_s_trials: usize,
    batch_r: usize,
    kept_s: Vec<usize>,
    kept_r: usize,
}

impl Tuner {
    fn new(config: &GibbsConfig, k: usize) -> Self {
        Self {
            s_scale: config.s_scale,
            r_scale: config.r_scale,
            batch_s: 0,
            batch_s_trials: 0,
            batch_r: 0,
            kept_s: vec![0; k],
            kept_r: 0,
        }
    }

    fn record(&mut self, it: usize, config: &GibbsConfig, s_flags: &[bool], r_flag: bool, k: usize) {
        if it >= config.burnin {
            for (c, &f) in self.kept_s.iter_mut().zip(s_flags) {
                *c += usize::from(f);
            }
            self.kept_r += usize::from(r_flag);
            return;
        }
        self.batch_s += s_flags.iter().filter(|&&f| f).count();
        self.batch_s_trials += s_flags.len();
        self.batch_r += usize::from(r_flag);
        if (it + 1).is_multiple_of(ADAPT_BATCH) {
            if config.adapt {
                self.s_scale = tune(self.s_scale, self.batch_s as f64 / self.batch_s_trials as f64);
                if k == 2 {
                    self.r_scale = tune(self.r_scale, self.batch_r as f64 / ADAPT_BATCH as f64);
                }
            }
            self.batch_s = 0;
            self.batch_s_trials = 0;
            self.batch_r = 0;
        }
    }
}

fn tune(scale: f64, rate: f64) -> f64 {
    if rate < TARGET_ACCEPT.0 {
        scale * (-ADAPT_STEP).exp()
    } else if rate > TARGET_ACCEPT.1 {
        scale * ADAPT_STEP.exp()
    } else {
        scale
    }
}

/// One systematic-scan sweep: every `β_j`, then `β̄`, every `τ²_j`, `S`, `r`.
fn sweep(
    state: &mut HierState,
    data: &HierData,
    hyper: &HierHyper,
    tuner: &Tuner,
    rng: &mut RngStream,
) -> Result<(Vec<bool>, bool)> {
    for j in 0..data.m() {
        state.beta[j] = cond_beta_j(j, state, data, rng)?;
    }
    state.betabar = cond_betabar(state, hyper, rng)?;
    for j in 0..data.m() {
        state.tau2[j] = cond_tau2(j, state, data, hyper, rng)?;
    }
    let s_flags = mwg_update_s(state, hyper, rng, tuner.s_scale);
    let r_flag = mwg_update_r(state, rng, tuner.r_scale);
    Ok((s_flags, r_flag))
}

fn check_dims(data: &HierData, hyper: &HierHyper, config: &GibbsConfig) -> Result<()> {
    config.validate()?;
    hyper.validate()?;
    if hyper.k() != data.k() {
        return Err(Error::LengthMismatch {
            expected: data.k(),
            got: hyper.k(),
        });
    }
    Ok(())
}

fn finish(mut chains: HierChains, tuner: &Tuner, config: &GibbsConfig) -> HierChains {
    let kept = config.kept() as f64;
    chains.accept_s = tuner.kept_s.iter().map(|&c| c as f64 / kept).collect();
    chains.accept_r = tuner.kept_r as f64 / kept;
    chains.final_s_scale = tuner.s_scale;
    chains.final_r_scale = tuner.r_scale;
    chains
}

/// Systematic-scan Metropolis-within-Gibbs sampler started at
/// [`initial_state`].
pub fn run_gibbs(data: &HierData, hyper: &HierHyper, config: &GibbsConfig) -> Result<HierChains> {
    check_dims(data, hyper, config)?;
    data.check_identifiable()?;
    let mut state = initial_state(data, hyper)?;
    let mut rng = RngStream::new(config.seed);
    let mut tuner = Tuner::new(config, data.k());
    let mut chains = HierChains::with_capacity(data.m(), data.k(), config.kept());
    for it in 0..config.iterations {
        let (s_flags, r_flag) = sweep(&mut state, data, hyper, &tuner, &mut rng)?;
        tuner.record(it, config, &s_flags, r_flag, data.k());
        if it >= config.burnin {
            chains.push(&state);
        }
    }
    Ok(finish(chains, &tuner, config))
}

/// Joint-distribution chain: each sweep is followed by fresh responses
/// `y_j ~ N(X_j β_j, τ²_j I)` given the current parameters, on the designs
/// of `designs`. The parameter marginals of the resulting chain are the
/// priors, whatever the data.
pub fn geweke_chain(
    designs: &HierData,
    hyper: &HierHyper,
    config: &GibbsConfig,
) -> Result<HierChains> {
    check_dims(designs, hyper, config)?;
    let mut rng = RngStream::new(config.seed);
    let mut state = HierState::from_prior(designs.m(), hyper, &mut rng)?;
    let mut data = designs.clone();
    resimulate(&mut data, &state, &mut rng)?;
    let mut tuner = Tuner::new(config, designs.k());
    let mut chains = HierChains::with_capacity(designs.m(), designs.k(), config.kept());
    for it in 0..config.iterations {
        let (s_flags, r_flag) = sweep(&mut state, &data, hyper, &tuner, &mut rng)?;
        resimulate(&mut data, &state, &mut rng)?;
        tuner.record(it, config, &s_flags, r_flag, designs.k());
        if it >= config.burnin {
            chains.push(&state);
        }
    }
    Ok(finish(chains, &tuner, config))
}

fn resimulate(data: &mut HierData, state: &HierState, rng: &mut RngStream) -> Result<()> {
    for j in 0..data.m() {
        let mean = data.x[j].matvec(&state.beta[j])?;
        let sd = state.tau2[j].sqrt();
        data.y[j] = mean.into_iter().map(|mu| mu + sd * rng.standard_normal()).collect();
    }
    Ok(())
}

/// Synthetic data with iid standard-normal covariates; `m` is the length of
/// `true_tau2`. Also returns the drawn coefficients.
pub fn simulate_hier_data(
    rng: &mut RngStream,
    true_betabar: &[f64],
    true_sigma: &Mat,
    true_tau2: &[f64],
    n_j: usize,
) -> Result<(HierData, Vec<Vec<f64>>)> {
    let k = true_betabar.len();
    if true_sigma.rows() != k || true_sigma.cols() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            got: true_sigma.rows(),
        });
    }
    if true_tau2.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::domain("noise variances must be positive"));
    }
    let chol = true_sigma.cholesky()?;
    let mut x = Vec::with_capacity(true_tau2.len());
    let mut y = Vec::with_capacity(true_tau2.len());
    let mut betas = Vec::with_capacity(true_tau2.len());
    for &t in true_tau2 {
        let z: Vec<f64> = (0..k).map(|_| rng.standard_normal()).collect();
        let beta: Vec<f64> = true_betabar
            .iter()
            .zip(chol.lower_mul(&z))
            .map(|(m, d)| m + d)
            .collect();
        let mut design = Mat::zeros(n_j, k);
        for i in 0..n_j {
            design[(i, 0)] = 1.0;
            for c in 1..k {
                design[(i, c)] = rng.standard_normal();
            }
        }
        let sd = t.sqrt();
        let yj = design
            .matvec(&beta)?
            .into_iter()
            .map(|mu| mu + sd * rng.standard_normal())
            .collect();
        x.push(design);
        y.push(yj);
        betas.push(beta);
    }
    Ok((HierData::new(k, x, y)?, betas))
}

/// One prior-percentile comparison from a joint-distribution chain.
#[derive(Debug, Clone, PartialEq)]
pub struct GewekeRow {
    pub label: String,
    pub level: f64,
    /// Fraction of kept draws below the prior `level` quantile.
    pub empirical: f64,
    /// Monte Carlo standard error of `empirical` from the indicator chain.
    pub mcse: f64,
}

impl GewekeRow {
    pub fn z(&self) -> f64 {
        (self.empirical - self.level) / self.mcse
    }
}

/// Compares the 10/50/90 prior percentiles of `S`, `β̄`, `τ²` and `r` with
/// the empirical cdf of a [`geweke_chain`] run.
pub fn geweke_rows(chains: &HierChains, hyper: &HierHyper) -> Result<Vec<GewekeRow>> {
    let mut targets: Vec<(String, Vec<f64>, DistSpec)> = Vec::new();
    for i in 0..chains.k {
        targets.push((format!("S_{}", i + 1), chains.s(i), *hyper.s_prior.coord(i)));
    }
    let sd0 = hyper.betabar_var.sqrt();
    for c in 0..chains.k {
        targets.push((format!("betabar_{c}"), chains.betabar(c), DistSpec::Normal { mu: 0.0, sigma: sd0 }));
    }
    for j in 0..chains.m {
        targets.push((format!("tau2_{}", j + 1), chains.tau2(j), hyper.tau2_prior()));
    }
    if chains.k == 2 {
        targets.push(("r".into(), chains.r.clone(), DistSpec::Uniform { lo: -1.0, hi: 1.0 }));
    }
    let mut rows = Vec::new();
    for (label, draws, prior) in targets {
        for level in [0.1, 0.5, 0.9] {
            let q = prior.quantile(level)?;
            let ind: Vec<f64> = draws.iter().map(|&v| f64::from(u8::from(v <= q))).collect();
            let empirical = crate::summarize::mean(&ind);
            let ess = crate::summarize::effective_sample_size(&ind)?;
            let mcse = (level * (1.0 - level) / ess).sqrt();
            rows.push(GewekeRow {
                label: label.clone(),
                level,
                empirical,
                mcse,
            });
        }
    }
    Ok(rows)
}

/// Generating parameters of the default synthetic study.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTruth {
    pub betabar: Vec<f64>,
    pub sigma: Mat,
    pub tau2: Vec<f64>,
    pub n_j: usize,
}

impl Default for SyntheticTruth {
    fn default() -> Self {
        Self {
            betabar: vec![17.0, -9.5],
            sigma: Mat::diag(&[0.25, 0.25]),
            tau2: vec![1.0; 4],
            n_j: 36,
        }
    }
}

impl SyntheticTruth {
    pub fn simulate(&self, seed: u64) -> Result<(HierData, Vec<Vec<f64>>)> {
        let mut rng = RngStream::new(seed);
        simulate_hier_data(&mut rng, &self.betabar, &self.sigma, &self.tau2, self.n_j)
    }
}
