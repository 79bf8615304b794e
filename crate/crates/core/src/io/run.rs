//! Study dispatch and output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{
    EvennessStudy, HierStudy, InducedStudy, Layout, LogisticStudy, PriorKind, PteStudy,
    RunConfig, SPriorKind, Sampler, StudyConfig,
};
use super::data::load_binary_csv;
use super::format::{density_csv, g6, summary_csv, text_table};
use crate::error::Result;
use crate::evenness::{sweep_draws, SweepConfig};
use crate::hier::{run_gibbs, GibbsConfig, HierHyper, SPriorSpec, SyntheticTruth};
use crate::induced::{age_grid, calibrated_g, prior_cdf_curves, pte_induced, saturation_fraction, CurveSet};
use crate::logistic::{fisher_proposal_mh, fit_mle, rw_metropolis, LogisticPrior, MHConfig};
use crate::num::rng::child_seed;
use crate::num::RngStream;
use crate::summarize::{
    even_grid, kde_density, quantile, sd, silverman_bandwidth, summary_stats, Bandwidth,
    DensityGrid, SummaryRow,
};

pub const DENSITY_POINTS: usize = 512;
pub const DENSITY_HALF_WIDTH_SD: f64 = 4.0;
/// Tail mass left outside each side of the window for heavy-tailed draws.
const HEAVY_TAIL_CUT: f64 = 0.0025;
const INDUCED_GRID: (i32, i32) = (20, 100);
const INDUCED_TARGET_SD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Window {
    MeanSd,
    /// Central quantile window with a robust bandwidth, for draws without
    /// finite moments.
    Quantile,
}

/// Everything a study produces before it is written to disk.
#[derive(Debug, Clone, Default)]
pub struct StudyOutput {
    pub summary: Vec<SummaryRow>,
    pub densities: Vec<(String, DensityGrid)>,
    pub acceptance: Vec<(String, f64)>,
    /// Additional `name → contents` files.
    pub extra: Vec<(String, String)>,
    /// Grouped table for `--layout paper`.
    pub table: String,
    /// Derived scalars reported in the manifest.
    pub notes: Vec<(String, String)>,
}

impl StudyOutput {
    fn track(&mut self, label: String, draws: &[f64], window: Window) -> Result<()> {
        self.summary.push(summary_stats(draws)?.with_label(label.clone()));
        if let Some(d) = density_of(draws, window)? {
            self.densities.push((label, d));
        }
        Ok(())
    }
}

/// Paths written by [`run_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputBundle {
    pub dir: PathBuf,
    pub summary: PathBuf,
    pub densities: Vec<PathBuf>,
    pub extra: Vec<PathBuf>,
    pub manifest: PathBuf,
}

fn density_of(draws: &[f64], window: Window) -> Result<Option<DensityGrid>> {
    let s = sd(draws);
    if !(s > 0.0) || draws.len() < 10 {
        return Ok(None);
    }
    let (lo, hi, bw) = match window {
        Window::MeanSd => {
            let m = crate::summarize::mean(draws);
            let half = DENSITY_HALF_WIDTH_SD * s;
            (m - half, m + half, Bandwidth::Fixed(silverman_bandwidth(draws)))
        }
        Window::Quantile => {
            let iqr = quantile(draws, 0.75) - quantile(draws, 0.25);
            let spread = if s.is_finite() { s.min(iqr / 1.34) } else { iqr / 1.34 };
            let h = 0.9 * spread * (draws.len() as f64).powf(-0.2);
            (
                quantile(draws, HEAVY_TAIL_CUT),
                quantile(draws, 1.0 - HEAVY_TAIL_CUT),
                Bandwidth::Fixed(h),
            )
        }
    };
    if !(hi > lo) {
        return Ok(None);
    }
    kde_density(draws, &even_grid(lo, hi, DENSITY_POINTS), bw).map(Some)
}

/// Runs the configured study without writing anything.
pub fn compute_study(config: &RunConfig) -> Result<StudyOutput> {
    match &config.params {
        StudyConfig::Logistic(s) => logistic(s, config.seed),
        StudyConfig::Hier(s) => hier(s, config.seed),
        StudyConfig::Evenness(s) => evenness(s, config.seed),
        StudyConfig::Induced(s) => induced(s, config.seed),
        StudyConfig::Pte(s) => pte(s, config.seed),
    }
}

/// Runs the study and writes `summary.csv`, one `density_<label>.csv` per
/// tracked quantity, study-specific extras, `table.txt` under the grouped
/// layout, and `manifest.txt`.
pub fn run_study(config: &RunConfig) -> Result<OutputBundle> {
    let start = Instant::now();
    let out = compute_study(config)?;
    let elapsed = start.elapsed().as_secs_f64();
    write_bundle(config, &out, elapsed).map_err(|e| e.during("writing outputs"))
}

fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn write_bundle(config: &RunConfig, out: &StudyOutput, elapsed: f64) -> Result<OutputBundle> {
    let dir = &config.out;
    fs::create_dir_all(dir)?;
    let write = |name: &str, body: &str| -> Result<PathBuf> {
        let p = dir.join(name);
        fs::write(&p, body)?;
        Ok(p)
    };
    let summary = write("summary.csv", &summary_csv(&out.summary))?;
    let densities = out
        .densities
        .iter()
        .map(|(label, d)| write(&format!("density_{}.csv", file_label(label)), &density_csv(d)))
        .collect::<Result<Vec<_>>>()?;
    let mut extra = out
        .extra
        .iter()
        .map(|(name, body)| write(name, body))
        .collect::<Result<Vec<_>>>()?;
    if config.layout == Layout::Paper {
        extra.push(write("table.txt", &out.table)?);
    }
    let manifest = write("manifest.txt", &manifest_text(config, out, elapsed, dir, &summary, &densities, &extra))?;
    Ok(OutputBundle {
        dir: dir.clone(),
        summary,
        densities,
        extra,
        manifest,
    })
}

fn manifest_text(
    config: &RunConfig,
    out: &StudyOutput,
    elapsed: f64,
    dir: &Path,
    summary: &Path,
    densities: &[PathBuf],
    extra: &[PathBuf],
) -> String {
    let hash = config.hash();
    let mut m = String::new();
    let _ = writeln!(m, "priorlab {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "study: {}", config.study.name());
    let _ = writeln!(m, "seed: {}", config.seed);
    let _ = writeln!(m, "config_sha256: {hash}");
    let _ = writeln!(m, "wall_clock_seconds: {elapsed:.3}");
    let _ = writeln!(m, "output_dir: {}", dir.display());
    m.push_str("\n[files]\n");
    for p in std::iter::once(summary).chain(densities.iter().map(PathBuf::as_path)).chain(extra.iter().map(PathBuf::as_path)) {
        let name = p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        let _ = writeln!(m, "{name} seed={} config_sha256={hash}", config.seed);
    }
    if !out.acceptance.is_empty() {
        m.push_str("\n[acceptance]\n");
        for (label, rate) in &out.acceptance {
            let _ = writeln!(m, "{label}: {}", g6(*rate));
        }
    }
    if !out.notes.is_empty() {
        m.push_str("\n[notes]\n");
        for (k, v) in &out.notes {
            let _ = writeln!(m, "{k}: {v}");
        }
    }
    m.push_str("\n[config]\n");
    m.push_str(&config.echo_text());
    m
}

struct LogisticBlock {
    tag: String,
    prior: LogisticPrior,
    sampler: Sampler,
}

fn logistic(s: &LogisticStudy, seed: u64) -> Result<StudyOutput> {
    let data = load_binary_csv(&s.data, s.flip_y)?;
    let fit = fit_mle(&data).map_err(|e| e.during("fit_mle"))?;
    let mut blocks = Vec::new();
    for kind in &s.priors {
        let auto = match kind {
            PriorKind::Normal | PriorKind::Flat => Sampler::RandomWalk,
            PriorKind::G | PriorKind::Jeffreys => Sampler::Fisher,
        };
        let sampler = if s.sampler == Sampler::Auto { auto } else { s.sampler };
        match kind {
            PriorKind::Normal => blocks.extend(s.sigmas.iter().map(|&sigma| LogisticBlock {
                tag: format!("normal_sigma{}", g6(sigma)),
                prior: LogisticPrior::IidNormal { sigma },
                sampler,
            })),
            PriorKind::G => blocks.push(LogisticBlock {
                tag: "g".into(),
                prior: LogisticPrior::GPrior {
                    g: s.g.unwrap_or(data.n() as f64),
                },
                sampler,
            }),
            PriorKind::Flat => blocks.push(LogisticBlock {
                tag: "flat".into(),
                prior: LogisticPrior::Flat,
                sampler,
            }),
            PriorKind::Jeffreys => blocks.push(LogisticBlock {
                tag: "jeffreys".into(),
                prior: LogisticPrior::Jeffreys,
                sampler,
            }),
        }
    }
    let chains = blocks
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            let config = MHConfig {
                iterations: s.iterations,
                burnin: s.burnin,
                seed: child_seed(seed, i as u64),
                proposal_scale: s.scale,
                ..MHConfig::default()
            };
            match b.sampler {
                Sampler::Fisher => fisher_proposal_mh(&data, b.prior, &config),
                _ => rw_metropolis(&data, b.prior, &config),
            }
            .map_err(|e| e.during("logistic sampler"))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = StudyOutput::default();
    let mut rows = Vec::new();
    for (b, chain) in blocks.iter().zip(&chains) {
        let [a, be] = chain.summaries()?;
        out.track(format!("alpha_{}", b.tag), &chain.alpha(), Window::MeanSd)?;
        out.track(format!("beta_{}", b.tag), &chain.beta(), Window::MeanSd)?;
        out.acceptance.push((b.tag.clone(), chain.accept_rate));
        rows.push(vec![
            b.prior.to_string(),
            g6(a.mean),
            g6(a.sd),
            g6(be.mean),
            g6(be.sd),
            g6(chain.accept_rate),
        ]);
    }
    rows.push(vec![
        "MLE".into(),
        g6(fit.theta_hat[0]),
        String::new(),
        g6(fit.theta_hat[1]),
        String::new(),
        String::new(),
    ]);
    let header = ["prior", "alpha mean", "alpha sd", "beta mean", "beta sd", "accept"];
    out.table = text_table(&header.map(String::from), &rows);
    out.notes = vec![
        ("n".into(), data.n().to_string()),
        ("mle_alpha".into(), g6(fit.theta_hat[0])),
        ("mle_beta".into(), g6(fit.theta_hat[1])),
    ];
    Ok(out)
}

fn hier(s: &HierStudy, seed: u64) -> Result<StudyOutput> {
    let (data, _) = SyntheticTruth::default().simulate(s.data_seed)?;
    let k = data.k();
    let runs = s
        .priors
        .par_iter()
        .enumerate()
        .map(|(i, kind)| {
            let (tag, spec) = match kind {
                SPriorKind::LogNormal => ("lognormal", SPriorSpec::lognormal(-1.0, 0.5, k)?),
                SPriorKind::Gamma => ("gamma", SPriorSpec::gamma(4.0, 1.0, k)?),
            };
            let config = GibbsConfig {
                iterations: s.iterations,
                burnin: s.burnin,
                seed: child_seed(seed, i as u64),
                ..GibbsConfig::default()
            };
            let chains = run_gibbs(&data, &HierHyper::new(spec), &config).map_err(|e| e.during("run_gibbs"))?;
            Ok((tag, chains))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = StudyOutput::default();
    let mut table: Vec<Vec<String>> = Vec::new();
    for (col, (tag, chains)) in runs.iter().enumerate() {
        for (i, rate) in chains.accept_s.iter().enumerate() {
            out.acceptance.push((format!("{tag}_S_{}", i + 1), *rate));
        }
        out.acceptance.push((format!("{tag}_r"), chains.accept_r));
        for (row, (label, draws)) in chains.labelled().into_iter().enumerate() {
            let r = summary_stats(&draws)?;
            if col == 0 {
                table.push(vec![label.clone()]);
            }
            table[row].push(format!("{} ({})", g6(r.mean), g6(r.sd)));
            out.track(format!("{label}_{tag}"), &draws, Window::MeanSd)?;
        }
    }
    let header: Vec<String> = std::iter::once("parameter".to_string())
        .chain(runs.iter().map(|(tag, _)| format!("{tag} mean (sd)")))
        .collect();
    out.table = text_table(&header, &table);
    out.notes = vec![
        ("groups".into(), data.m().to_string()),
        ("data_seed".into(), s.data_seed.to_string()),
    ];
    Ok(out)
}

fn evenness(s: &EvennessStudy, seed: u64) -> Result<StudyOutput> {
    let cells = sweep_draws(&SweepConfig {
        gammas: s.gammas.clone(),
        ns: s.ns.clone(),
        theta_true: s.theta_true.clone(),
        ndraws: s.ndraws,
        seed,
    })
    .map_err(|e| e.during("evenness sweep"))?;
    let mut out = StudyOutput::default();
    let mut rows: Vec<Vec<String>> = s.gammas.iter().map(|g| vec![g6(*g)]).collect();
    for (c, cell) in cells.iter().enumerate() {
        let label = format!("H_gamma{}_N{}", g6(cell.gamma), cell.n);
        out.track(label, &cell.draws.values, Window::MeanSd)?;
        let r = out.summary.last().expect("row just pushed");
        rows[c / s.ns.len()].push(format!("{} ({})", g6(r.mean), g6(r.sd)));
    }
    let header: Vec<String> = std::iter::once("gamma".to_string())
        .chain(s.ns.iter().map(|n| format!("N={n}")))
        .collect();
    out.table = text_table(&header, &rows);
    if let Ok(h) = crate::evenness::evenness(&s.theta_true) {
        out.notes.push(("true_evenness".into(), g6(h)));
    }
    Ok(out)
}

fn curve_bands(sets: &[(&str, &CurveSet)]) -> String {
    let mut s = String::from("x");
    for (tag, _) in sets {
        for q in ["q10", "q50", "q90"] {
            let _ = write!(s, ",{tag}_{q}");
        }
    }
    s.push('\n');
    let xgrid = &sets[0].1.xgrid;
    for (ix, x) in xgrid.iter().enumerate() {
        s.push_str(&g6(*x));
        for (_, set) in sets {
            let column: Vec<f64> = (0..set.len()).map(|i| set.curve(i)[ix]).collect();
            for p in [0.1, 0.5, 0.9] {
                let _ = write!(s, ",{}", g6(quantile(&column, p)));
            }
        }
        s.push('\n');
    }
    s
}

fn induced(s: &InducedStudy, seed: u64) -> Result<StudyOutput> {
    let grid = age_grid(INDUCED_GRID.0, INDUCED_GRID.1);
    let g = match s.g {
        Some(g) => g,
        None => calibrated_g(&grid, INDUCED_TARGET_SD)?,
    };
    let root = RngStream::new(seed);
    let priors = [
        ("normal", LogisticPrior::IidNormal { sigma: s.sigma }),
        ("g", LogisticPrior::GPrior { g }),
    ];
    let sets = priors
        .iter()
        .enumerate()
        .map(|(i, (_, p))| prior_cdf_curves(*p, None, &grid, s.ndraws, &mut root.derive(i as u64)))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.during("prior_cdf_curves"))?;

    let mut out = StudyOutput::default();
    let mut rows = Vec::new();
    let mut sat = String::from("prior,eps,fraction\n");
    for ((tag, prior), set) in priors.iter().zip(&sets) {
        let alpha: Vec<f64> = set.thetas.iter().map(|t| t[0]).collect();
        let beta: Vec<f64> = set.thetas.iter().map(|t| t[1]).collect();
        out.track(format!("alpha_{tag}"), &alpha, Window::MeanSd)?;
        out.track(format!("beta_{tag}"), &beta, Window::MeanSd)?;
        let frac = saturation_fraction(set, s.eps)?;
        let _ = writeln!(sat, "{tag},{},{}", g6(s.eps), g6(frac));
        out.notes.push((format!("saturation_{tag}"), g6(frac)));
        rows.push(vec![prior.to_string(), g6(frac)]);
    }
    out.notes.push(("g".into(), g6(g)));
    out.extra.push(("saturation.csv".into(), sat));
    let named: Vec<(&str, &CurveSet)> = priors.iter().map(|(t, _)| *t).zip(&sets).collect();
    out.extra.push(("curves.csv".into(), curve_bands(&named)));
    out.table = text_table(
        &["prior".into(), format!("saturated (eps={})", g6(s.eps))],
        &rows,
    );
    Ok(out)
}

fn pte(s: &PteStudy, seed: u64) -> Result<StudyOutput> {
    let mut rng = RngStream::new(seed);
    let d = pte_induced((s.mu[0], s.sigma[0]), (s.mu[1], s.sigma[1]), s.ndraws, &mut rng)
        .map_err(|e| e.during("pte_induced"))?;
    let inside = d.values.iter().filter(|p| **p > 0.0 && **p < 1.0).count() as f64 / d.values.len() as f64;
    let mut out = StudyOutput::default();
    out.track("pte".into(), &d.values, Window::Quantile)?;
    let q = |p| g6(quantile(&d.values, p));
    out.table = text_table(
        &["quantity".into(), "value".into()],
        &[
            vec!["q25".into(), q(0.25)],
            vec!["median".into(), q(0.5)],
            vec!["q75".into(), q(0.75)],
            vec!["P(0 < PTE < 1)".into(), g6(inside)],
        ],
    );
    out.notes.push(("p_inside_unit_interval".into(), g6(inside)));
    Ok(out)
}
