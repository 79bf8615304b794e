//! Dirichlet–multinomial study of the evenness index
//! `H(θ) = −Σ θᵢ log θᵢ / log K`.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::num::{dirichlet_sample, RngStream};

/// Tolerance on `Σθ = 1` accepted by [`evenness`].
pub const SIMPLEX_TOL: f64 = 1e-9;
pub const DEFAULT_K: usize = 8;

/// Default generating proportions; `H ≈ 0.394`.
pub const DEFAULT_THETA_TRUE: [f64; 8] = [0.8, 0.08, 0.05, 0.03, 0.01, 0.01, 0.01, 0.01];

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    gamma: Vec<f64>,
}

impl DirichletParams {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if gamma.len() < 2 {
            return Err(Error::domain("a Dirichlet needs at least two cells"));
        }
        if gamma.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(Error::domain(format!("concentrations {gamma:?} must be positive")));
        }
        Ok(Self { gamma })
    }

    /// `Dir(γ, …, γ)` on `k` cells.
    pub fn symmetric(gamma: f64, k: usize) -> Result<Self> {
        Self::new(vec![gamma; k])
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn k(&self) -> usize {
        self.gamma.len()
    }

    pub fn mean(&self) -> Vec<f64> {
        let total: f64 = self.gamma.iter().sum();
        self.gamma.iter().map(|g| g / total).collect()
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<Vec<f64>> {
        dirichlet_sample(&self.gamma, rng)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountData {
    counts: Vec<u64>,
}

impl CountData {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawSource {
    Prior,
    Posterior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvennessDraws {
    pub values: Vec<f64>,
    pub source: DrawSource,
    pub params: DirichletParams,
    /// Sample size behind a posterior; zero for the prior.
    pub n: u64,
}

fn check_simplex(theta: &[f64]) -> Result<()> {
    if theta.len() < 2 {
        return Err(Error::domain("need at least two cells"));
    }
    let total: f64 = theta.iter().sum();
    if theta.iter().any(|&t| !(t >= 0.0)) || (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::domain(format!("{theta:?} is not on the simplex")));
    }
    Ok(())
}

/// Normalized Shannon entropy, with `0 · log 0 = 0`.
pub fn evenness(theta: &[f64]) -> Result<f64> {
    check_simplex(theta)?;
    let entropy: f64 = theta
        .iter()
        .filter(|&&t| t > 0.0)
        .map(|&t| -t * t.ln())
        .sum();
    Ok((entropy / (theta.len() as f64).ln()).clamp(0.0, 1.0))
}

/// Conjugate update `γ′ᵢ = γᵢ + nᵢ`.
pub fn posterior_params(prior: &DirichletParams, counts: &CountData) -> Result<DirichletParams> {
    if prior.k() != counts.k() {
        return Err(Error::LengthMismatch {
            expected: prior.k(),
            got: counts.k(),
        });
    }
    let gamma = prior
        .gamma
        .iter()
        .zip(&counts.counts)
        .map(|(g, &n)| g + n as f64)
        .collect();
    Ok(DirichletParams { gamma })
}

/// Multinomial draw of `n` trials, by sequential conditional binomials.
pub fn sample_counts(rng: &mut RngStream, theta_true: &[f64], n: u64) -> Result<CountData> {
    check_simplex(theta_true)?;
    let mut counts = vec![0u64; theta_true.len()];
    let mut remaining = n;
    let mut mass = 1.0;
    for (i, &t) in theta_true.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == theta_true.len() {
            counts[i] = remaining;
            break;
        }
        let p = if mass > 0.0 { (t / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(remaining, p)
            .map_err(|e| Error::domain(format!("binomial({remaining}, {p}): {e}")))?
            .sample(rng);
        counts[i] = c;
        remaining -= c;
        mass -= t;
    }
    Ok(CountData { counts })
}

/// `ndraws` values of `H(θ)` for `θ ~ Dir(params)`.
pub fn evenness_draws(
    params: &DirichletParams,
    ndraws: usize,
    rng: &mut RngStream,
    source: DrawSource,
    n: u64,
) -> Result<EvennessDraws> {
    if ndraws == 0 {
        return Err(Error::TooFewDraws { needed: 1, got: 0 });
    }
    let values = (0..ndraws)
        .map(|_| {
            let theta = params.sample(rng)?;
            // Renormalize away the last-bit drift of the sampler.
            let total: f64 = theta.iter().sum();
            let theta: Vec<f64> = theta.iter().map(|t| t / total).collect();
            evenness(&theta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvennessDraws {
        values,
        source,
        params: params.clone(),
        n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub n: u64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub gammas: Vec<f64>,
    pub ns: Vec<u64>,
    pub theta_true: Vec<f64>,
    pub ndraws: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gammas: vec![0.1, 0.125, 0.25, 0.5, 1.0],
            ns: vec![50, 100, 250, 1_000, 10_000],
            theta_true: DEFAULT_THETA_TRUE.to_vec(),
            ndraws: 10_000,
            seed: 1,
        }
    }
}

/// Draws of `H` for one `(γ, N)` pair of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub gamma: f64,
    pub n: u64,
    pub draws: EvennessDraws,
}

/// Draws of `H` for every `(γ, N)` pair, ordered by `γ` then `N`. `N = 0`
/// gives draws from the prior itself.
///
/// One dataset is drawn per sample size and shared by all `γ`, so cells
/// with the same `N` differ only through the prior. Cells are computed in
/// parallel on independent derived streams; the output does not depend on
/// the thread count.
pub fn sweep_draws(config: &SweepConfig) -> Result<Vec<SweepCell>> {
    let root = RngStream::new(config.seed);
    let data: Vec<CountData> = config
        .ns
        .iter()
        .enumerate()
        .map(|(i, &n)| sample_counts(&mut root.derive(i as u64), &config.theta_true, n))
        .collect::<Result<_>>()?;
    let k = config.theta_true.len();
    let cells: Vec<(usize, usize)> = (0..config.gammas.len())
        .flat_map(|g| (0..config.ns.len()).map(move |n| (g, n)))
        .collect();
    let offset = config.ns.len() as u64;
    cells
        .par_iter()
        .enumerate()
        .map(|(c, &(g, n))| {
            let prior = DirichletParams::symmetric(config.gammas[g], k)?;
            let post = posterior_params(&prior, &data[n])?;
            let source = if config.ns[n] == 0 {
                DrawSource::Prior
            } else {
                DrawSource::Posterior
            };
            let mut rng = root.derive(offset + c as u64);
            Ok(SweepCell {
                gamma: config.gammas[g],
                n: config.ns[n],
                draws: evenness_draws(&post, config.ndraws, &mut rng, source, config.ns[n])?,
            })
        })
        .collect()
}

/// Posterior mean and sd of `H` for every cell of [`sweep_draws`].
pub fn sweep_table(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    Ok(sweep_draws(config)?
        .into_iter()
        .map(|c| SweepRow {
            gamma: c.gamma,
            n: c.n,
            mean: crate::summarize::mean(&c.draws.values),
            sd: crate::summarize::sd(&c.draws.values),
        })
        .collect())
}
