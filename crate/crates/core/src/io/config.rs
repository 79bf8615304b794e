//! Run configuration: flat `key = value` settings from a file and from
//! command-line flags, validated into a typed [`RunConfig`].
//!
//! A config file holds one or more `key = value` pairs per line, separated
//! by commas; `#` starts a comment. A comma-separated token without `=`
//! continues the previous value, so `sigma = 10, 25, 100` is a list.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evenness::{DEFAULT_K, DEFAULT_THETA_TRUE, SIMPLEX_TOL};
use crate::induced::DEFAULT_EPS;
use crate::logistic::ProposalScale;

/// Raw settings before validation, keyed by setting name.
pub type Settings = BTreeMap<String, String>;

const COMMON_KEYS: &[&str] = &["study", "seed", "out", "layout"];
const LOGISTIC_KEYS: &[&str] = &[
    "prior", "sigma", "g", "iters", "burnin", "data", "scale", "flip_y", "sampler",
];
const HIER_KEYS: &[&str] = &["prior", "iters", "burnin", "data_seed"];
const EVENNESS_KEYS: &[&str] = &["gamma", "K", "N", "iters", "theta"];
const INDUCED_KEYS: &[&str] = &["sigma", "g", "iters", "eps"];
const PTE_KEYS: &[&str] = &["mu", "sigma", "iters"];

const STUDIES: &[&str] = &["logistic", "hier", "evenness", "induced", "pte"];
const LOGISTIC_PRIORS: &[&str] = &["normal", "g", "flat", "jeffreys"];
const HIER_PRIORS: &[&str] = &["lognormal", "gamma"];

pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Logistic,
    Hier,
    Evenness,
    Induced,
    Pte,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Logistic => "logistic",
            Study::Hier => "hier",
            Study::Evenness => "evenness",
            Study::Induced => "induced",
            Study::Pte => "pte",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Study::Logistic => LOGISTIC_KEYS,
            Study::Hier => HIER_KEYS,
            Study::Evenness => EVENNESS_KEYS,
            Study::Induced => INDUCED_KEYS,
            Study::Pte => PTE_KEYS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Plain,
    /// Adds `table.txt` with rows grouped by prior.
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    Normal,
    G,
    Flat,
    Jeffreys,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    /// Random walk for the normal and flat priors, Fisher proposal otherwise.
    Auto,
    RandomWalk,
    Fisher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SPriorKind {
    LogNormal,
    Gamma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticStudy {
    pub priors: Vec<PriorKind>,
    /// Standard deviations, one block each, for the normal prior.
    pub sigmas: Vec<f64>,
    /// `None` means `g = n`.
    pub g: Option<f64>,
    pub data: PathBuf,
    pub flip_y: bool,
    pub iterations: usize,
    pub burnin: usize,
    pub scale: ProposalScale,
    pub sampler: Sampler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierStudy {
    pub priors: Vec<SPriorKind>,
    pub iterations: usize,
    pub burnin: usize,
    /// Seed of the synthetic dataset, separate from the chain seed.
    pub data_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvennessStudy {
    pub gammas: Vec<f64>,
    pub k: usize,
    pub ns: Vec<u64>,
    pub ndraws: usize,
    pub theta_true: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InducedStudy {
    pub sigma: f64,
    /// `None` calibrates `g` to a linear-predictor sd of 5 at the grid ends.
    pub g: Option<f64>,
    pub ndraws: usize,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PteStudy {
    pub mu: [f64; 2],
    pub sigma: [f64; 2],
    pub ndraws: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StudyConfig {
    Logistic(LogisticStudy),
    Hier(HierStudy),
    Evenness(EvennessStudy),
    Induced(InducedStudy),
    Pte(PteStudy),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub study: Study,
    pub seed: u64,
    pub out: PathBuf,
    pub layout: Layout,
    pub params: StudyConfig,
    /// Effective settings with defaults filled, one `key=value` per entry,
    /// sorted by key. Excludes `out`.
    pub echo: Vec<(String, String)>,
}

impl RunConfig {
    /// Validates `settings` without touching the file system.
    pub fn from_settings(settings: &Settings) -> Result<Self> {
        for key in settings.keys() {
            if !COMMON_KEYS.contains(&key.as_str())
                && !STUDIES.iter().any(|s| study_of(s).keys().contains(&key.as_str()))
            {
                return Err(Error::UnknownKey {
                    name: key.clone(),
                    hint: format!("; known keys: {}", all_keys().join(", ")),
                });
            }
        }
        let mut f = Fields {
            raw: settings,
            eff: BTreeMap::new(),
        };
        let study = match f.raw("study") {
            None => return Err(Error::MissingRequired("study".into())),
            Some(s) => choice(s, "study", STUDIES).map(study_of)?,
        };
        f.eff.insert("study", study.name().into());
        for key in settings.keys() {
            if !COMMON_KEYS.contains(&key.as_str()) && !study.keys().contains(&key.as_str()) {
                return Err(Error::UnknownKey {
                    name: key.clone(),
                    hint: format!(
                        "; study `{}` accepts: {}",
                        study.name(),
                        study.keys().join(", ")
                    ),
                });
            }
        }
        let seed = f.u64("seed", None)?;
        let out = PathBuf::from(settings.get("out").map_or(DEFAULT_OUT, |s| s.trim()));
        let layout = match f.choice("layout", &["plain", "paper"], "plain")? {
            "paper" => Layout::Paper,
            _ => Layout::Plain,
        };
        let params = match study {
            Study::Logistic => StudyConfig::Logistic(logistic_study(&mut f)?),
            Study::Hier => StudyConfig::Hier(hier_study(&mut f)?),
            Study::Evenness => StudyConfig::Evenness(evenness_study(&mut f)?),
            Study::Induced => StudyConfig::Induced(induced_study(&mut f)?),
            Study::Pte => StudyConfig::Pte(pte_study(&mut f)?),
        };
        let echo = f.eff.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        Ok(Self {
            study,
            seed,
            out,
            layout,
            params,
            echo,
        })
    }

    pub fn echo_text(&self) -> String {
        self.echo.iter().fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k}={v}");
            s
        })
    }

    /// Hex SHA-256 of [`RunConfig::echo_text`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.echo_text().as_bytes()))
    }
}

fn study_of(name: &str) -> Study {
    match name {
        "logistic" => Study::Logistic,
        "hier" => Study::Hier,
        "evenness" => Study::Evenness,
        "induced" => Study::Induced,
        _ => Study::Pte,
    }
}

fn all_keys() -> Vec<&'static str> {
    let mut keys: Vec<&str> = COMMON_KEYS
        .iter()
        .chain(LOGISTIC_KEYS)
        .chain(HIER_KEYS)
        .chain(EVENNESS_KEYS)
        .chain(INDUCED_KEYS)
        .chain(PTE_KEYS)
        .copied()
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys
}

fn choice<'a>(value: &str, key: &str, allowed: &[&'a str]) -> Result<&'a str> {
    allowed
        .iter()
        .find(|a| **a == value)
        .copied()
        .ok_or_else(|| Error::UnknownKey {
            name: format!("{key}={value}"),
            hint: format!("; allowed values for `{key}`: {}", allowed.join(", ")),
        })
}

fn type_error(name: &str, reason: impl Into<String>) -> Error {
    Error::TypeError {
        name: name.into(),
        reason: reason.into(),
    }
}

/// Typed access to raw settings that records every effective value.
struct Fields<'a> {
    raw: &'a Settings,
    eff: BTreeMap<&'static str, String>,
}

impl Fields<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.raw.get(key).map(|s| s.trim())
    }

    fn list(&self, key: &str) -> Option<Vec<String>> {
        self.raw(key)
            .map(|s| s.split(',').map(|t| t.trim().to_string()).collect())
    }

    fn record(&mut self, key: &'static str, value: String) {
        self.eff.insert(key, value);
    }

    fn u64(&mut self, key: &'static str, default: Option<u64>) -> Result<u64> {
        let v = match (self.raw(key), default) {
            (Some(s), _) => s
                .parse::<u64>()
                .map_err(|_| type_error(key, format!("expected a non-negative integer, found `{s}`")))?,
            (None, Some(d)) => d,
            (None, None) => return Err(Error::MissingRequired(key.into())),
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    fn count(&mut self, key: &'static str, default: usize) -> Result<usize> {
        let v = self.u64(key, Some(default as u64))?;
        if v == 0 {
            return Err(type_error(key, "must be positive"));
        }
        Ok(v as usize)
    }

    fn f64s(&mut self, key: &'static str, default: Option<&[f64]>) -> Result<Vec<f64>> {
        let v = match (self.list(key), default) {
            (Some(tokens), _) => tokens
                .iter()
                .map(|t| {
                    t.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| type_error(key, format!("expected a number, found `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?,
            (None, Some(d)) => d.to_vec(),
            (None, None) => return Err(Error::MissingRequired(key.into())),
        };
        self.record(key, join(&v));
        Ok(v)
    }

    fn positives(&mut self, key: &'static str, default: Option<&[f64]>) -> Result<Vec<f64>> {
        let v = self.f64s(key, default)?;
        if let Some(bad) = v.iter().find(|x| **x <= 0.0) {
            return Err(type_error(key, format!("expected positive values, found {bad}")));
        }
        Ok(v)
    }

    fn positive(&mut self, key: &'static str, default: Option<f64>) -> Result<Option<f64>> {
        if self.raw(key).is_none() && default.is_none() {
            return Ok(None);
        }
        let v = self.positives(key, default.as_ref().map(std::slice::from_ref))?;
        match v.as_slice() {
            [x] => Ok(Some(*x)),
            _ => Err(type_error(key, format!("expected one value, found {}", v.len()))),
        }
    }

    fn choice(
        &mut self,
        key: &'static str,
        allowed: &[&'static str],
        default: &'static str,
    ) -> Result<&'static str> {
        let v = match self.raw(key) {
            Some(s) => choice(s, key, allowed)?,
            None => default,
        };
        self.record(key, v.into());
        Ok(v)
    }

    fn choices(
        &mut self,
        key: &'static str,
        allowed: &[&'static str],
        default: &[&'static str],
    ) -> Result<Vec<&'static str>> {
        let v = match self.list(key) {
            Some(tokens) => tokens
                .iter()
                .map(|t| choice(t, key, allowed))
                .collect::<Result<Vec<_>>>()?,
            None => default.to_vec(),
        };
        self.record(key, v.join(","));
        Ok(v)
    }

    fn flag(&mut self, key: &'static str) -> Result<bool> {
        let v = match self.raw(key) {
            None | Some("false") | Some("0") => false,
            Some("true") | Some("1") => true,
            Some(s) => return Err(type_error(key, format!("expected true or false, found `{s}`"))),
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    fn chain_lengths(&mut self, iters: usize, burnin: usize) -> Result<(usize, usize)> {
        let iterations = self.count("iters", iters)?;
        let burnin = self.u64("burnin", Some(burnin as u64))? as usize;
        if burnin >= iterations {
            return Err(type_error(
                "burnin",
                format!("{burnin} leaves no kept draws out of {iterations} iterations"),
            ));
        }
        Ok((iterations, burnin))
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn logistic_study(f: &mut Fields) -> Result<LogisticStudy> {
    let priors = f
        .choices("prior", LOGISTIC_PRIORS, &["normal"])?
        .into_iter()
        .map(|p| match p {
            "normal" => PriorKind::Normal,
            "g" => PriorKind::G,
            "flat" => PriorKind::Flat,
            _ => PriorKind::Jeffreys,
        })
        .collect::<Vec<_>>();
    let sigmas = if priors.contains(&PriorKind::Normal) {
        f.positives("sigma", Some(&[10.0, 25.0, 100.0, 900.0]))?
    } else if f.raw("sigma").is_some() {
        return Err(type_error("sigma", "only used by the normal prior"));
    } else {
        Vec::new()
    };
    let g = if priors.contains(&PriorKind::G) {
        let g = f.positive("g", None)?;
        if g.is_none() {
            f.record("g", "n".into());
        }
        g
    } else if f.raw("g").is_some() {
        return Err(type_error("g", "only used by the g prior"));
    } else {
        None
    };
    let data = match f.raw("data") {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => return Err(Error::MissingRequired("data".into())),
    };
    f.record("data", data.display().to_string());
    let flip_y = f.flag("flip_y")?;
    let (iterations, burnin) = f.chain_lengths(11_000, 1_000)?;
    let scale = match f.raw("scale") {
        None | Some("auto") => ProposalScale::Auto,
        Some(s) => match s.parse::<f64>() {
            Ok(c) if c > 0.0 && c.is_finite() => ProposalScale::Fixed(c),
            _ => return Err(type_error("scale", format!("expected `auto` or a positive number, found `{s}`"))),
        },
    };
    f.record(
        "scale",
        match scale {
            ProposalScale::Auto => "auto".into(),
            ProposalScale::Fixed(c) => c.to_string(),
        },
    );
    let sampler = match f.choice("sampler", &["auto", "rw", "fisher"], "auto")? {
        "rw" => Sampler::RandomWalk,
        "fisher" => Sampler::Fisher,
        _ => Sampler::Auto,
    };
    Ok(LogisticStudy {
        priors,
        sigmas,
        g,
        data,
        flip_y,
        iterations,
        burnin,
        scale,
        sampler,
    })
}

fn hier_study(f: &mut Fields) -> Result<HierStudy> {
    let priors = f
        .choices("prior", HIER_PRIORS, HIER_PRIORS)?
        .into_iter()
        .map(|p| if p == "gamma" { SPriorKind::Gamma } else { SPriorKind::LogNormal })
        .collect();
    let (iterations, burnin) = f.chain_lengths(100_000, 10_000)?;
    let data_seed = f.u64("data_seed", Some(1))?;
    Ok(HierStudy {
        priors,
        iterations,
        burnin,
        data_seed,
    })
}

fn evenness_study(f: &mut Fields) -> Result<EvennessStudy> {
    let gammas = f.positives("gamma", Some(&[0.1, 0.125, 0.25, 0.5, 1.0]))?;
    let k = f.u64("K", Some(DEFAULT_K as u64))? as usize;
    if k < 2 {
        return Err(type_error("K", format!("need at least 2 categories, found {k}")));
    }
    let ns = match f.list("N") {
        Some(tokens) => tokens
            .iter()
            .map(|t| {
                t.parse::<u64>()
                    .map_err(|_| type_error("N", format!("expected a non-negative integer, found `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?,
        None => vec![50, 100, 250, 1_000, 10_000],
    };
    f.record("N", ns.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
    let ndraws = f.count("iters", 10_000)?;
    let theta_true = if f.raw("theta").is_some() || k == DEFAULT_K {
        f.f64s("theta", Some(&DEFAULT_THETA_TRUE))?
    } else if ns.iter().all(|&n| n == 0) {
        vec![1.0 / k as f64; k]
    } else {
        return Err(Error::MissingRequired("theta".into()));
    };
    if theta_true.len() != k {
        return Err(type_error("theta", format!("expected {k} proportions, found {}", theta_true.len())));
    }
    let total: f64 = theta_true.iter().sum();
    if theta_true.iter().any(|t| *t < 0.0) || (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(type_error("theta", "proportions must be non-negative and sum to 1"));
    }
    Ok(EvennessStudy {
        gammas,
        k,
        ns,
        ndraws,
        theta_true,
    })
}

fn induced_study(f: &mut Fields) -> Result<InducedStudy> {
    let sigma = f.positive("sigma", Some(25.0))?.unwrap_or(25.0);
    let g = f.positive("g", None)?;
    if g.is_none() {
        f.record("g", "calibrated".into());
    }
    let ndraws = f.count("iters", 10_000)?;
    let eps = f.positive("eps", Some(DEFAULT_EPS))?.unwrap_or(DEFAULT_EPS);
    if eps >= 0.5 {
        return Err(type_error("eps", format!("must lie in (0, 0.5), found {eps}")));
    }
    Ok(InducedStudy {
        sigma,
        g,
        ndraws,
        eps,
    })
}

fn pte_study(f: &mut Fields) -> Result<PteStudy> {
    let mu = f.f64s("mu", Some(&[0.0, 0.0]))?;
    let sigma = f.positives("sigma", Some(&[1.0, 1.0]))?;
    for (key, v) in [("mu", &mu), ("sigma", &sigma)] {
        if v.len() != 2 {
            return Err(type_error(key, format!("expected 2 values, found {}", v.len())));
        }
    }
    let ndraws = f.count("iters", 100_000)?;
    Ok(PteStudy {
        mu: [mu[0], mu[1]],
        sigma: [sigma[0], sigma[1]],
        ndraws,
    })
}

/// Parses config-file text into raw settings. `path` only labels errors.
pub fn parse_settings(text: &str, path: &Path) -> Result<Settings> {
    let mut settings = Settings::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let mut current: Option<String> = None;
        for (col, token) in line.split(',').enumerate() {
            let token = token.trim();
            match token.split_once('=') {
                Some((key, value)) => {
                    let key = key.trim();
                    if key.is_empty() {
                        return Err(Error::Parse {
                            path: path.to_path_buf(),
                            line: i + 1,
                            column: col + 1,
                            reason: "empty key".into(),
                        });
                    }
                    if settings.insert(key.to_string(), value.trim().to_string()).is_some() {
                        return Err(type_error(key, "set more than once"));
                    }
                    current = Some(key.to_string());
                }
                None if token.is_empty() && line.trim().is_empty() => {}
                None => match &current {
                    Some(key) => {
                        let v = settings.get_mut(key).expect("current key present");
                        v.push(',');
                        v.push_str(token);
                    }
                    None => {
                        return Err(Error::Parse {
                            path: path.to_path_buf(),
                            line: i + 1,
                            column: col + 1,
                            reason: format!("expected `key = value`, found `{token}`"),
                        });
                    }
                },
            }
        }
    }
    Ok(settings)
}

/// Reads and validates a config file.
pub fn parse_config_file(path: &Path) -> Result<RunConfig> {
    RunConfig::from_settings(&read_settings(path)?)
}

pub fn read_settings(path: &Path) -> Result<Settings> {
    parse_settings(&std::fs::read_to_string(path)?, path)
}

/// Overlays `flags` on `file`; flag values win.
pub fn merge(mut file: Settings, flags: Settings) -> Settings {
    file.extend(flags);
    file
}
