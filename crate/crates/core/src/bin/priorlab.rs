//! Command-line driver: `priorlab <study> [flags]`.
//!
//! Exit status is 0 on success, 1 for configuration and input errors and 2
//! for numerical failures. Errors are reported as one line on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use priorlab::io::config::{merge, read_settings, Settings};
use priorlab::io::{run_study, RunConfig};
use priorlab::Error;

#[derive(Debug, Parser)]
#[command(name = "priorlab", version, about = "Prior-robustness case studies")]
struct Cli {
    /// logistic, hier, evenness, induced or pte.
    #[arg(value_name = "STUDY")]
    study_pos: Option<String>,
    #[arg(long)]
    study: Option<String>,
    /// `key = value` settings file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated list, e.g. `normal` or `g,flat,jeffreys`.
    #[arg(long)]
    prior: Option<String>,
    /// Normal-prior sd (list allowed), or the two sds for `pte`.
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long = "K")]
    k: Option<String>,
    #[arg(long = "N")]
    n: Option<String>,
    /// Total iterations for samplers, number of draws otherwise.
    #[arg(long)]
    iters: Option<String>,
    #[arg(long)]
    burnin: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// `plain` or `paper`.
    #[arg(long)]
    layout: Option<String>,
    /// Proposal scale: `auto` or a positive number.
    #[arg(long)]
    scale: Option<String>,
    /// Replace the response by `1 − y`.
    #[arg(long)]
    flip_y: bool,
    /// `auto`, `rw` or `fisher`.
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    data_seed: Option<String>,
    /// True category proportions for the evenness study.
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    /// Prior means for `pte`.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
}

impl Cli {
    fn settings(self) -> Result<Settings, Error> {
        if let (Some(a), Some(b)) = (&self.study_pos, &self.study) {
            if a != b {
                return Err(Error::TypeError {
                    name: "study".into(),
                    reason: format!("positional `{a}` disagrees with --study `{b}`"),
                });
            }
        }
        let file = match &self.config {
            Some(p) => read_settings(p)?,
            None => Settings::new(),
        };
        let pairs = [
            ("study", self.study.or(self.study_pos)),
            ("prior", self.prior),
            ("sigma", self.sigma),
            ("g", self.g),
            ("gamma", self.gamma),
            ("K", self.k),
            ("N", self.n),
            ("iters", self.iters),
            ("burnin", self.burnin),
            ("seed", self.seed),
            ("data", self.data),
            ("out", self.out),
            ("layout", self.layout),
            ("scale", self.scale),
            ("flip_y", self.flip_y.then(|| "true".to_string())),
            ("sampler", self.sampler),
            ("data_seed", self.data_seed),
            ("theta", self.theta),
            ("eps", self.eps),
            ("mu", self.mu),
        ];
        let flags = pairs
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect();
        Ok(merge(file, flags))
    }
}

fn report(e: &Error) -> ExitCode {
    let operation = match e {
        Error::Operation { operation, .. } => operation,
        _ if e.is_config_error() => "config",
        _ => "run",
    };
    let message = e.to_string().replace('\n', " ");
    eprintln!("error kind={} operation=\"{operation}\" message=\"{message}\"", e.kind());
    ExitCode::from(if e.is_config_error() { 1 } else { 2 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("invalid arguments");
            eprintln!("error kind=usage operation=\"config\" message=\"{first}\"");
            return ExitCode::from(1);
        }
    };
    let result = cli
        .settings()
        .and_then(|s| RunConfig::from_settings(&s))
        .and_then(|c| run_study(&c));
    match result {
        Ok(bundle) => {
            println!("{}", bundle.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}
