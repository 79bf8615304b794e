//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Criteria 1 to 3 need the 200-row Swiss banknote export (header `y,x`,
//! `y` the counterfeit indicator, `x` the bill length). It is read from
//! `$BANKNOTE_CSV` or `crates/core/data/banknote.csv`; without it those
//! criteria fail.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use priorlab::evenness::{
    evenness, posterior_params, sweep_table, CountData, DirichletParams, SweepConfig,
};
use priorlab::hier::{
    cond_beta_j_params, cond_betabar_params, cond_tau2_params, geweke_chain, geweke_rows,
    run_gibbs, simulate_hier_data, GibbsConfig, HierChains, HierData, HierHyper, HierState,
    SPriorSpec, SyntheticTruth,
};
use priorlab::induced::{age_grid, calibrated_g, prior_cdf_curves, pte_induced, saturation_fraction};
use priorlab::io::load_binary_csv;
use priorlab::logistic::{
    fisher_proposal_mh, fit_mle, rw_metropolis, BinaryDataset, Chain, LogisticPrior, MHConfig,
};
use priorlab::num::{dist_quantile, DistSpec, Mat, RngStream};
use priorlab::summarize::{ks_distance, quantile, summary_stats, SummaryRow};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn banknote() -> Result<BinaryDataset, String> {
    let path = std::env::var_os("BANKNOTE_CSV")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data/banknote.csv"));
    if !path.exists() {
        return Err(format!(
            "banknote data not found at {} (set BANKNOTE_CSV)",
            path.display()
        ));
    }
    let data = load_binary_csv(&path, false).map_err(|e| e.to_string())?;
    if data.n() != 200 {
        return Err(format!("expected 200 rows, found {}", data.n()));
    }
    Ok(data)
}

fn within_mcse(row: &SummaryRow, target: f64, k: f64) -> bool {
    (row.mean - target).abs() <= k * row.mcse()
}

fn pooled_sd(a: &SummaryRow, b: &SummaryRow) -> f64 {
    ((a.sd * a.sd + b.sd * b.sd) / 2.0).sqrt()
}

fn c1_mle() -> Outcome {
    let data = banknote()?;
    let fit = fit_mle(&data).map_err(|e| e.to_string())?;
    let [a, b] = fit.theta_hat;
    check(
        (a - 233.26).abs() <= 0.5 && (b + 1.09).abs() <= 0.005,
        format!("alpha={a:.4} beta={b:.5}"),
    )
}

fn c2_normal_means() -> Outcome {
    let data = banknote()?;
    let targets = [
        (10.0, 3.482, -0.0161),
        (25.0, 18.969, -0.0882),
        (100.0, 137.63, -0.6404),
        (900.0, 237.2, -1.106),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    let mut means = Vec::new();
    for (i, (sigma, ta, tb)) in targets.into_iter().enumerate() {
        let config = MHConfig::default().with_seed(100 + i as u64);
        let chain = rw_metropolis(&data, LogisticPrior::IidNormal { sigma }, &config)
            .map_err(|e| e.to_string())?;
        let [a, b] = chain.summaries().map_err(|e| e.to_string())?;
        let hit = within_mcse(&a, ta, 3.0) && within_mcse(&b, tb, 3.0);
        ok &= hit && chain.len() == 10_000;
        detail.push(format!(
            "sigma={sigma}: ({:.3}±{:.3}, {:.4}±{:.4})",
            a.mean,
            3.0 * a.mcse(),
            b.mean,
            3.0 * b.mcse()
        ));
        means.push((a.mean, b.mean));
    }
    let monotone = means.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1);
    detail.push(format!("monotone={monotone}"));
    check(ok && monotone, detail.join("; "))
}

fn c3_cross_prior_means() -> Outcome {
    let data = banknote()?;
    let config = MHConfig {
        iterations: 101_000,
        burnin: 1_000,
        ..MHConfig::default()
    };
    let runs: [(&str, LogisticPrior, f64, f64); 3] = [
        ("g(200)", LogisticPrior::GPrior { g: 200.0 }, 237.63, -1.1058),
        ("flat", LogisticPrior::Flat, 236.44, -1.1003),
        ("jeffreys", LogisticPrior::Jeffreys, 237.24, -1.1040),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    let mut rows = Vec::new();
    for (i, (name, prior, ta, tb)) in runs.into_iter().enumerate() {
        let config = config.clone().with_seed(200 + i as u64);
        let chain: Chain = match prior {
            LogisticPrior::Flat => rw_metropolis(&data, prior, &config),
            _ => fisher_proposal_mh(&data, prior, &config),
        }
        .map_err(|e| e.to_string())?;
        let [a, b] = chain.summaries().map_err(|e| e.to_string())?;
        ok &= within_mcse(&a, ta, 3.0) && within_mcse(&b, tb, 3.0) && chain.len() == 100_000;
        detail.push(format!(
            "{name}: ({:.3}±{:.3}, {:.4}±{:.4})",
            a.mean,
            3.0 * a.mcse(),
            b.mean,
            3.0 * b.mcse()
        ));
        rows.push([a, b]);
    }
    let mut worst: f64 = 0.0;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            for (x, y) in rows[i].iter().zip(&rows[j]) {
                worst = worst.max((x.mean - y.mean).abs() / pooled_sd(x, y));
            }
        }
    }
    detail.push(format!("max cross-prior shift {worst:.4} sd"));
    check(ok && worst < 0.1, detail.join("; "))
}

fn c4_quantiles() -> Outcome {
    let ln = DistSpec::LogNormal { mu: -1.0, sigma: 0.5 };
    let ga = DistSpec::Gamma { shape: 4.0, rate: 1.0 };
    let levels = [0.1, 0.5, 0.9];
    let mut ok = true;
    let mut detail = Vec::new();
    for (d, want) in [(ln, [0.19, 0.37, 0.70]), (ga, [1.74, 3.67, 6.68])] {
        for (p, w) in levels.into_iter().zip(want) {
            let q = dist_quantile(&d, p).map_err(|e| e.to_string())?;
            let again = dist_quantile(&d, p).map_err(|e| e.to_string())?;
            let rounded = (q * 100.0).round() / 100.0;
            ok &= (rounded - w).abs() < 1e-9 && q.to_bits() == again.to_bits();
            detail.push(format!("{q:.4}"));
        }
    }
    check(ok, detail.join(" "))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

fn scalar_oracles() -> Result<bool, String> {
    let e = |e: priorlab::Error| e.to_string();
    let y = vec![1.3, 0.2, 2.9, 1.1, -0.4];
    let data = HierData::new(1, vec![Mat::from_vec(5, 1, vec![1.0; 5]).map_err(e)?], vec![y.clone()])
        .map_err(e)?;
    let st = HierState {
        beta: vec![vec![0.4]],
        betabar: vec![0.7],
        tau2: vec![0.8],
        s: vec![1.5],
        r: 0.0,
    };
    let c = cond_beta_j_params(0, &st, &data).map_err(e)?;
    let prec = 5.0 / 0.8 + 1.0 / 2.25;
    let beta_ok = close(c.mean[0], (y.iter().sum::<f64>() / 0.8 + 0.7 / 2.25) / prec)
        && close(c.covariance().map_err(e)?[(0, 0)], 1.0 / prec);

    let mut hyper = HierHyper::new(SPriorSpec::lognormal(-1.0, 0.5, 1).map_err(e)?);
    hyper.betabar_var = 4.0;
    let st3 = HierState {
        beta: vec![vec![1.2], vec![0.4], vec![2.0]],
        betabar: vec![0.0],
        tau2: vec![1.0; 3],
        s: vec![0.8],
        r: 0.0,
    };
    let c = cond_betabar_params(&st3, &hyper).map_err(e)?;
    let prec = 3.0 / 0.64 + 1.0 / 4.0;
    let betabar_ok = close(c.mean[0], (3.6 / 0.64) / prec) && close(c.covariance().map_err(e)?[(0, 0)], 1.0 / prec);

    let rss: f64 = y.iter().map(|v| (v - 0.4) * (v - 0.4)).sum();
    let tau_ok = match cond_tau2_params(0, &st, &data, &hyper).map_err(e)? {
        DistSpec::InverseGamma { shape, scale } => {
            close(shape, hyper.tau2_shape + 2.5) && close(scale, hyper.tau2_scale + rss / 2.0)
        }
        _ => false,
    };
    Ok(beta_ok && betabar_ok && tau_ok)
}

fn c5_geweke() -> Outcome {
    let oracles = scalar_oracles()?;
    let mut rng = RngStream::new(5);
    let (designs, _) = simulate_hier_data(&mut rng, &[0.0, 0.0], &Mat::identity(2), &[1.0; 3], 3)
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for s_prior in [
        SPriorSpec::lognormal(-1.0, 0.5, 2).map_err(|e| e.to_string())?,
        SPriorSpec::gamma(4.0, 1.0, 2).map_err(|e| e.to_string())?,
    ] {
        let mut hyper = HierHyper::new(s_prior);
        hyper.betabar_var = 1.0;
        let config = GibbsConfig {
            iterations: 1_010_000,
            burnin: 10_000,
            seed: 4,
            ..GibbsConfig::default()
        };
        let chains = geweke_chain(&designs, &hyper, &config).map_err(|e| e.to_string())?;
        for row in geweke_rows(&chains, &hyper).map_err(|e| e.to_string())? {
            worst = worst.max(row.z().abs());
            rows += 1;
        }
    }
    check(
        oracles && worst < 3.0,
        format!("scalar oracles={oracles}; {rows} percentile checks, max |z|={worst:.2}"),
    )
}

fn summaries(chains: &HierChains) -> Result<Vec<SummaryRow>, String> {
    chains
        .labelled()
        .into_iter()
        .map(|(l, d)| summary_stats(&d).map(|r| r.with_label(l)).map_err(|e| e.to_string()))
        .collect()
}

fn c6_scale_prior_contrast() -> Outcome {
    let (data, _) = SyntheticTruth::default().simulate(1).map_err(|e| e.to_string())?;
    let config = GibbsConfig {
        iterations: 100_000,
        burnin: 10_000,
        seed: 7,
        ..GibbsConfig::default()
    };
    let run = |spec: SPriorSpec| -> Result<Vec<SummaryRow>, String> {
        let chains = run_gibbs(&data, &HierHyper::new(spec), &config).map_err(|e| e.to_string())?;
        summaries(&chains)
    };
    let ln = run(SPriorSpec::lognormal(-1.0, 0.5, 2).map_err(|e| e.to_string())?)?;
    let ga = run(SPriorSpec::gamma(4.0, 1.0, 2).map_err(|e| e.to_string())?)?;
    let s_of = |rows: &[SummaryRow]| -> Vec<f64> {
        rows.iter().filter(|r| r.label.starts_with("S_")).map(|r| r.mean).collect()
    };
    let (s_ln, s_ga) = (s_of(&ln), s_of(&ga));
    let ln_ok = s_ln.iter().all(|s| *s > 0.2 && *s < 1.0);
    let ga_ok = s_ga.iter().all(|s| *s > 1.5 && *s < 3.5);
    let shift = ln
        .iter()
        .zip(&ga)
        .filter(|(a, _)| a.label.starts_with("beta"))
        .map(|(a, b)| (a.mean - b.mean).abs() / pooled_sd(a, b))
        .fold(0.0, f64::max);
    check(
        ln_ok && ga_ok && shift < 0.5,
        format!("S|LN={s_ln:.3?} S|G={s_ga:.3?} max coefficient shift {shift:.3} sd"),
    )
}

fn c7_evenness() -> Outcome {
    let e = |e: priorlab::Error| e.to_string();
    let prior = DirichletParams::new(vec![0.125, 0.5, 1.0, 0.1]).map_err(e)?;
    let counts = CountData::new(vec![3, 0, 17, 1]);
    let post = posterior_params(&prior, &counts).map_err(e)?;
    let conj = post.gamma() == [3.125, 0.5, 18.0, 1.1];

    let mut two = [0.0; 8];
    two[..2].copy_from_slice(&[0.5, 0.5]);
    let mut one = [0.0; 8];
    one[0] = 1.0;
    let analytic = evenness(&[0.125; 8]).map_err(e)? == 1.0
        && evenness(&one).map_err(e)? == 0.0
        && (evenness(&two).map_err(e)? - 1.0 / 3.0).abs() < 1e-15;
    let mut rng = RngStream::new(70);
    let bounds = (0..10_000).all(|_| {
        let theta = DirichletParams::symmetric(0.1, 8).and_then(|p| p.sample(&mut rng));
        theta.and_then(|t| evenness(&t)).is_ok_and(|h| (0.0..=1.0).contains(&h))
    });

    let table = sweep_table(&SweepConfig::default()).map_err(e)?;
    let at = |g: f64, n: u64| table.iter().find(|r| r.gamma == g && r.n == n).expect("cell");
    let big: Vec<f64> = [0.1, 0.25, 0.5, 1.0].iter().map(|&g| at(g, 10_000).mean).collect();
    let spread = big.iter().cloned().fold(f64::MIN, f64::max) - big.iter().cloned().fold(f64::MAX, f64::min);
    let ratio = [0.1, 0.125, 0.25, 0.5, 1.0]
        .iter()
        .map(|&g| at(g, 50).sd / at(g, 10_000).sd)
        .fold(f64::MAX, f64::min);
    check(
        conj && analytic && bounds && spread < 0.02 && ratio >= 5.0,
        format!(
            "conjugacy={conj} analytic={analytic} bounds={bounds} spread@1e4={spread:.4} min sd ratio={ratio:.2} (sd@50={:.3} sd@1e4={:.4} at gamma=0.125)",
            at(0.125, 50).sd,
            at(0.125, 10_000).sd
        ),
    )
}

fn c8_pte() -> Outcome {
    let mut rng = RngStream::new(8);
    let d = pte_induced((0.0, 1.0), (0.0, 1.0), 1_000_000, &mut rng).map_err(|e| e.to_string())?;
    let v = &d.values;
    let (q25, q50, q75) = (quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75));
    let inside = v.iter().filter(|p| **p > 0.0 && **p < 1.0).count() as f64 / v.len() as f64;
    let ratios: Vec<f64> = v.iter().map(|p| 1.0 - p).collect();
    let ks = ks_distance(&ratios, |x| 0.5 + x.atan() / std::f64::consts::PI);
    check(
        (q50 - 1.0).abs() <= 0.005
            && q25.abs() <= 0.01
            && (q75 - 2.0).abs() <= 0.01
            && (inside - 0.25).abs() <= 0.005
            && ks < 0.005,
        format!("median={q50:.4} quartiles=({q25:.4}, {q75:.4}) P(0,1)={inside:.4} KS={ks:.5}"),
    )
}

fn c9_saturation() -> Outcome {
    let grid = age_grid(20, 100);
    let g = calibrated_g(&grid, 5.0).map_err(|e| e.to_string())?;
    let root = RngStream::new(9);
    let frac = |prior: LogisticPrior, i: u64| -> Result<f64, String> {
        let c = prior_cdf_curves(prior, None, &grid, 10_000, &mut root.derive(i)).map_err(|e| e.to_string())?;
        saturation_fraction(&c, 0.01).map_err(|e| e.to_string())
    };
    let fi = frac(LogisticPrior::IidNormal { sigma: 25.0 }, 0)?;
    let fg = frac(LogisticPrior::GPrior { g }, 1)?;
    // Fractions from an independent 10⁶-draw run, fixed before this check.
    let (oi, og) = (0.982_713, 0.012_261);
    let binom = |p: f64| 4.0 * (p * (1.0 - p) / 10_000.0).sqrt();
    let oracle_ok = (fi - oi).abs() <= binom(oi) && (fg - og).abs() <= binom(og);
    check(
        fi - fg >= 0.2 && fi >= 0.5 && oracle_ok,
        format!("iid={fi:.4} (oracle {oi}) g={fg:.4} (oracle {og}, g={g:.2}) contrast={:.4}", fi - fg),
    )
}

fn c10_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/bills20.csv");
    let fixture = fixture.to_str().expect("utf-8 path");
    let studies: [&[&str]; 5] = [
        &["logistic", "--prior", "normal,g,flat,jeffreys", "--iters", "4000", "--burnin", "500", "--seed", "1", "--data", fixture],
        &["hier", "--iters", "4000", "--burnin", "500", "--seed", "1"],
        &["evenness", "--gamma", "0.125,1", "--N", "0,50,1000", "--iters", "4000", "--seed", "1"],
        &["induced", "--iters", "4000", "--seed", "1"],
        &["pte", "--iters", "20000", "--seed", "1"],
    ];
    let mut checked = Vec::new();
    for args in studies {
        let mut bytes = Vec::new();
        for rep in 0..2 {
            let dir = tmp.path().join(format!("{}-{rep}", args[0]));
            let out = Command::new(env!("CARGO_BIN_EXE_priorlab"))
                .args(args)
                .arg("--out")
                .arg(&dir)
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(format!("{}: {}", args[0], String::from_utf8_lossy(&out.stderr).trim()));
            }
            bytes.push(fs::read(dir.join("summary.csv")).map_err(|e| e.to_string())?);
        }
        if bytes[0] != bytes[1] {
            return Err(format!("{} summary differs between runs", args[0]));
        }
        checked.push(args[0]);
    }
    Ok(format!("identical summary.csv for {}", checked.join(", ")))
}

fn main() {
    // Time budgets as stated per criterion; 4 and 10 state none.
    let criteria: [Criterion; 10] = [
        ("1 MLE reproduction", Some(Duration::from_secs(1)), c1_mle),
        ("2 normal-prior posterior means", Some(Duration::from_secs(30)), c2_normal_means),
        ("3 g/flat/Jeffreys posterior means", Some(Duration::from_secs(120)), c3_cross_prior_means),
        ("4 LN and gamma quantiles", None, c4_quantiles),
        ("5 hierarchical sampler validity", Some(Duration::from_secs(300)), c5_geweke),
        ("6 hierarchical scale-prior contrast", Some(Duration::from_secs(600)), c6_scale_prior_contrast),
        ("7 evenness study", Some(Duration::from_secs(60)), c7_evenness),
        ("8 PTE Cauchy shape", Some(Duration::from_secs(30)), c8_pte),
        ("9 saturation contrast", Some(Duration::from_secs(30)), c9_saturation),
        ("10 CLI determinism", None, c10_determinism),
    ];
    let mut failed = 0;
    for (name, budget, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok(d) => match budget {
                Some(b) if secs > b.as_secs_f64() => {
                    (false, format!("{d}; over time budget {}s", b.as_secs()))
                }
                _ => (true, d),
            },
            Err(d) => (false, d),
        };
        failed += usize::from(!ok);
        println!(
            "[{}] criterion {name} ({secs:.2}s): {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
