//! Vaaler's trigonometric approximation of the sawtooth.
//!
//! With `W(t) = πt(1−|t|)cot(πt) + |t|`,
//!
//! ```text
//! ψ*(x) = −Σ_{1≤|h|≤H} (2πih)^{-1} W(h/(H+1)) e(hx) = −Σ_{h=1}^{H} W(h/(H+1)) sin(2πhx)/(πh)
//! δ(x)  = (2H+2)^{-1} Σ_{|h|≤H} (1 − |h|/(H+1)) e(hx)
//! ```
//!
//! and `|ψ*(x) − ψ(x)| ≤ δ(x)` for every real `x`. The leading minus sign is
//! what makes `ψ*` track `ψ(x) = −Σ sin(2πhx)/(πh)`; without it `ψ*`
//! approximates `−ψ` and the inequality fails.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::floor_sums::psi;
use crate::{Error, Result};

const SERIES_CUTOFF: f64 = 1e-4;

/// `W(t)` for `|t| < 1`, with `W(0) = 1`.
pub fn kernel_w(t: f64) -> Result<f64> {
    if !(t.abs() < 1.0) {
        return Err(Error::Domain(format!("W(t) needs |t| < 1, got {t}")));
    }
    let a = t.abs();
    // πt·cot(πt) = 1 − u/3 − u²/45 − 2u³/945 − …, u = (πt)²
    let pt_cot = if a < SERIES_CUTOFF {
        let u = (PI * t).powi(2);
        1.0 - u / 3.0 - u * u / 45.0 - 2.0 * u * u * u / 945.0
    } else {
        PI * a / (PI * a).tan()
    };
    Ok((1.0 - a) * pt_cot + a)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsiApproximation {
    pub h: u32,
    /// `W(h/(H+1))` for `h = 1..=H`.
    pub weights: Vec<f64>,
    /// `1 − h/(H+1)` for `h = 0..=H`.
    pub fejer: Vec<f64>,
}

impl PsiApproximation {
    pub fn new(h: u32) -> Result<Self> {
        if h == 0 {
            return Err(Error::ZeroArgument("H"));
        }
        let denom = (h + 1) as f64;
        let weights = (1..=h)
            .map(|j| kernel_w(j as f64 / denom))
            .collect::<Result<_>>()?;
        let fejer = (0..=h).map(|j| 1.0 - j as f64 / denom).collect();
        Ok(PsiApproximation { h, weights, fejer })
    }

    pub fn psi_star(&self, x: f64) -> f64 {
        let r = x.rem_euclid(1.0);
        let mut acc = 0.0;
        for (j, w) in self.weights.iter().enumerate() {
            let hh = (j + 1) as f64;
            acc += w * (2.0 * PI * hh * r).sin() / (PI * hh);
        }
        -acc
    }

    pub fn delta(&self, x: f64) -> f64 {
        let r = x.rem_euclid(1.0);
        let mut acc = self.fejer[0];
        for (j, f) in self.fejer.iter().enumerate().skip(1) {
            acc += 2.0 * f * (2.0 * PI * j as f64 * r).cos();
        }
        acc / (2.0 * (self.h as f64 + 1.0))
    }
}

pub fn psi_star(x: f64, h: u32) -> Result<f64> {
    Ok(PsiApproximation::new(h)?.psi_star(x))
}

pub fn delta_majorant(x: f64, h: u32) -> Result<f64> {
    Ok(PsiApproximation::new(h)?.delta(x))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VaalerRow {
    pub x: f64,
    pub psi: f64,
    pub psi_star: f64,
    pub delta: f64,
    /// `δ − |ψ* − ψ|`; negative means a violation.
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VaalerReport {
    pub h: u32,
    pub points: usize,
    /// `max(|ψ* − ψ| − δ)` over the grid.
    pub max_violation: f64,
    pub worst_x: f64,
    pub min_delta: f64,
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    #[serde(skip)]
    pub rows: Vec<VaalerRow>,
}

impl VaalerReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation <= tol && self.min_delta >= -tol
    }

    /// CSV with columns `x,psi,psi_star,delta,slack`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,psi,psi_star,delta,slack")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.x, r.psi, r.psi_star, r.delta, r.slack
            )?;
        }
        Ok(())
    }
}

pub fn check_vaaler_inequality(h: u32, grid: &[f64]) -> Result<VaalerReport> {
    let approx = PsiApproximation::new(h)?;
    let rows: Vec<VaalerRow> = grid
        .iter()
        .map(|&x| {
            let p = psi(x);
            let ps = approx.psi_star(x);
            let d = approx.delta(x);
            VaalerRow {
                x,
                psi: p,
                psi_star: ps,
                delta: d,
                slack: d - (ps - p).abs(),
            }
        })
        .collect();
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_x = f64::NAN;
    let mut min_delta = f64::INFINITY;
    let mut max_abs_error: f64 = 0.0;
    let mut total_abs = 0.0;
    for r in &rows {
        if -r.slack > max_violation {
            max_violation = -r.slack;
            worst_x = r.x;
        }
        min_delta = min_delta.min(r.delta);
        let err = (r.psi_star - r.psi).abs();
        max_abs_error = max_abs_error.max(err);
        total_abs += err;
    }
    Ok(VaalerReport {
        h,
        points: rows.len(),
        max_violation,
        worst_x,
        min_delta,
        max_abs_error,
        mean_abs_error: if rows.is_empty() { 0.0 } else { total_abs / rows.len() as f64 },
        rows,
    })
}

/// `n` equally spaced points in `[lo, hi]` together with every `p/q` in
/// that range for `q ≤ max_den`, sorted and deduplicated.
pub fn test_grid(lo: f64, hi: f64, n: usize, max_den: u32) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64)
        .collect();
    for den in 1..=max_den {
        let start = (lo * den as f64).ceil() as i64;
        let end = (hi * den as f64).floor() as i64;
        for num in start..=end {
            pts.push(num as f64 / den as f64);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncationRow {
    pub h: u32,
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    /// `max |ψ* − ψ|` restricted to points at distance ≥ 1/H from the integers.
    pub max_abs_error_away: f64,
}

/// Approximation error as `H` doubles over `h_values`.
pub fn truncation_report(h_values: &[u32], grid: &[f64]) -> Result<Vec<TruncationRow>> {
    h_values
        .iter()
        .map(|&h| {
            let rep = check_vaaler_inequality(h, grid)?;
            let cut = 1.0 / h as f64;
            let away = rep
                .rows
                .iter()
                .filter(|r| {
                    let f = r.x.rem_euclid(1.0);
                    f.min(1.0 - f) >= cut
                })
                .map(|r| (r.psi_star - r.psi).abs())
                .fold(0.0, f64::max);
            Ok(TruncationRow {
                h,
                max_abs_error: rep.max_abs_error,
                mean_abs_error: rep.mean_abs_error,
                max_abs_error_away: away,
            })
        })
        .collect()
}
