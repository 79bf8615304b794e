//! Text output: number formatting, summary and density CSVs.

use std::fmt::Write as _;

use crate::summarize::{DensityGrid, SummaryRow};

pub const SUMMARY_HEADER: &str = "label,mean,sd,q10,q50,q90,mode,ess";
pub const DENSITY_HEADER: &str = "grid,density";

/// Formats `v` with `digits` significant digits in the style of C's `%g`:
/// fixed notation for exponents in `[-4, digits)`, scientific otherwise,
/// trailing zeros removed.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Six significant digits.
pub fn g6(v: f64) -> String {
    fmt_sig(v, 6)
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.label,
            g6(r.mean),
            g6(r.sd),
            g6(r.q10),
            g6(r.q50),
            g6(r.q90),
            g6(r.mode),
            g6(r.ess)
        );
    }
    out
}

pub fn density_csv(d: &DensityGrid) -> String {
    let mut out = String::from(DENSITY_HEADER);
    out.push('\n');
    for (x, f) in d.grid.iter().zip(&d.density) {
        let _ = writeln!(out, "{},{}", g6(*x), g6(*f));
    }
    out
}

/// Left-aligned fixed-width text table.
pub fn text_table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width = header.iter().map(|h| h.chars().count()).collect::<Vec<_>>();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate().take(cols) {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = width[i] - c.chars().count();
            s.push_str(c);
            s.extend(std::iter::repeat_n(' ', pad));
        }
        s.trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * cols.saturating_sub(1)));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}
