//! Besov regularity of sampled paths and fields.
//!
//! Two estimators are provided. The dyadic one sums p-th powers of
//! increments along a coordinate direction at each dyadic level `n`:
//!
//! ```text
//! V_n = sum_{y in U(n,i)} |mu(y + 2^-n e_i) - mu(y)|^p,    W_n = 2^{n(alpha p - d)} V_n
//! ```
//!
//! and judges convergence of `sum_n W_n` from the log2-slope of `W_n`.
//! The direct one discretizes `||f||_{L_p} + (int_0^1 omega_p(f, r)^q r^{-alpha q - 1} dr)^{1/q}`
//! with the L_p-modulus of continuity restricted to grid shifts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmError};
use crate::sample::{FieldSample, PathSample};
use crate::stats::fit_line;

/// Default half-width of the inconclusive band around slope zero.
pub const DEFAULT_SLOPE_MARGIN: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    /// Coordinate direction, 1-based.
    pub direction: usize,
    pub n_min: u32,
    pub n_max: u32,
}

impl BesovParams {
    pub fn new(p: f64, alpha: f64, n_min: u32, n_max: u32) -> Result<Self> {
        let params = Self {
            p,
            q: p,
            alpha,
            direction: 1,
            n_min,
            n_max,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_direction(mut self, direction: usize) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(SmError::Domain(format!("p must be >= 1, got {}", self.p)));
        }
        if !(self.q >= 1.0 && self.q.is_finite()) {
            return Err(SmError::Domain(format!("q must be >= 1, got {}", self.q)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SmError::Domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.n_min > self.n_max {
            return Err(SmError::Domain(format!(
                "empty level range {}..={}",
                self.n_min, self.n_max
            )));
        }
        if self.direction == 0 {
            return Err(SmError::Domain("direction is 1-based".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSum {
    pub n: u32,
    /// Number of points in `U(n, i)`.
    pub terms: usize,
    #[serde(rename = "V")]
    pub raw: f64,
    #[serde(rename = "W")]
    pub weighted: f64,
    pub cumulative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovLevelSums {
    pub params: BesovParams,
    pub dim: usize,
    pub levels: Vec<LevelSum>,
    /// Least-squares slope of `log2 W_n` against `n`; NaN when fewer than two
    /// levels have positive `W_n`.
    pub slope: f64,
    pub slope_stderr: f64,
}

/// `2^{n(alpha p - d)}`.
pub fn level_weight(n: u32, alpha: f64, p: f64, dim: usize) -> f64 {
    (f64::from(n) * (alpha * p - dim as f64)).exp2()
}

fn level_raw_sum(field: &FieldSample, n: u32, p: f64, direction: usize) -> (usize, f64) {
    let stride = 1usize << (field.depth() - n);
    let cells = 1usize << n;
    let pow = |d: f64| if p == 2.0 { d * d } else { d.abs().powf(p) };
    if field.dim() == 1 {
        let mut acc = 0.0;
        for k in 0..cells {
            acc += pow(field.at1((k + 1) * stride) - field.at1(k * stride));
        }
        return (cells, acc);
    }
    let mut acc = 0.0;
    for a in 0..cells {
        for b in 0..=cells {
            let (k1, k2, l1, l2) = if direction == 1 {
                (a * stride, b * stride, (a + 1) * stride, b * stride)
            } else {
                (b * stride, a * stride, b * stride, (a + 1) * stride)
            };
            acc += pow(field.at2(l1, l2) - field.at2(k1, k2));
        }
    }
    (cells * (cells + 1), acc)
}

/// Level sums `V_n`, `W_n` and their running total for `n_min..=n_max`.
pub fn dyadic_level_sums(field: &FieldSample, params: &BesovParams) -> Result<BesovLevelSums> {
    params.validate()?;
    if params.n_max > field.depth() {
        return Err(SmError::Domain(format!(
            "level {} exceeds the field resolution {}",
            params.n_max,
            field.depth()
        )));
    }
    if params.direction > field.dim() {
        return Err(SmError::Domain(format!(
            "direction {} invalid for a {}-d field",
            params.direction,
            field.dim()
        )));
    }
    let raw: Vec<(u32, usize, f64)> = (params.n_min..=params.n_max)
        .into_par_iter()
        .map(|n| {
            let (terms, v) = level_raw_sum(field, n, params.p, params.direction);
            (n, terms, v)
        })
        .collect();
    let mut cumulative = 0.0;
    let levels: Vec<LevelSum> = raw
        .into_iter()
        .map(|(n, terms, v)| {
            let w = level_weight(n, params.alpha, params.p, field.dim()) * v;
            cumulative += w;
            LevelSum {
                n,
                terms,
                raw: v,
                weighted: w,
                cumulative,
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = levels
        .iter()
        .filter(|l| l.weighted > 0.0)
        .map(|l| (f64::from(l.n), l.weighted.log2()))
        .unzip();
    let (slope, slope_stderr) = if xs.len() >= 2 {
        let fit = fit_line(&xs, &ys);
        (fit.slope, fit.slope_stderr)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(BesovLevelSums {
        params: *params,
        dim: field.dim(),
        levels,
        slope,
        slope_stderr,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipDiagnostic {
    pub verdict: Verdict,
    pub slope: f64,
    pub slope_stderr: f64,
    pub slope_margin: f64,
    pub cumulative: Vec<f64>,
}

pub fn membership_diagnostic(sums: &BesovLevelSums) -> Result<MembershipDiagnostic> {
    membership_diagnostic_with_margin(sums, DEFAULT_SLOPE_MARGIN)
}

/// Three-way verdict on convergence of `sum_n W_n` from the fitted slope.
/// An identically zero level sequence converges trivially.
pub fn membership_diagnostic_with_margin(
    sums: &BesovLevelSums,
    slope_margin: f64,
) -> Result<MembershipDiagnostic> {
    if sums.levels.len() < 4 {
        return Err(SmError::Domain(format!(
            "at least 4 levels are needed for a diagnostic, got {}",
            sums.levels.len()
        )));
    }
    let all_zero = sums.levels.iter().all(|l| l.weighted == 0.0);
    // an all-zero sequence has no log-slope but trivially converges
    let verdict = if all_zero || sums.slope <= -slope_margin {
        Verdict::Convergent
    } else if sums.slope >= slope_margin {
        Verdict::Divergent
    } else {
        Verdict::Inconclusive
    };
    Ok(MembershipDiagnostic {
        verdict,
        slope: sums.slope,
        slope_stderr: sums.slope_stderr,
        slope_margin,
        cumulative: sums.levels.iter().map(|l| l.cumulative).collect(),
    })
}

/// JSON report combining level sums and the diagnostic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovReport {
    pub params: BesovParams,
    pub levels: Vec<LevelSum>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub verdict: Verdict,
}

impl BesovReport {
    pub fn new(sums: &BesovLevelSums, diagnostic: &MembershipDiagnostic) -> Self {
        Self {
            params: sums.params,
            levels: sums.levels.clone(),
            slope: sums.slope,
            slope_stderr: sums.slope_stderr,
            verdict: diagnostic.verdict,
        }
    }
}

/// A function sampled on an equispaced grid of the unit interval or square.
#[derive(Clone, Copy, Debug)]
pub enum GridRef<'a> {
    Path(&'a PathSample),
    Field(&'a FieldSample),
}

impl<'a> From<&'a PathSample> for GridRef<'a> {
    fn from(p: &'a PathSample) -> Self {
        GridRef::Path(p)
    }
}

impl<'a> From<&'a FieldSample> for GridRef<'a> {
    fn from(f: &'a FieldSample) -> Self {
        GridRef::Field(f)
    }
}

impl<'a> GridRef<'a> {
    fn dim(&self) -> usize {
        match self {
            GridRef::Path(_) => 1,
            GridRef::Field(f) => f.dim(),
        }
    }

    /// Grid intervals per axis.
    fn cells(&self) -> usize {
        match self {
            GridRef::Path(p) => p.intervals(),
            GridRef::Field(f) => f.side() - 1,
        }
    }

    fn values(&self) -> &'a [f64] {
        match self {
            GridRef::Path(p) => p.values(),
            GridRef::Field(f) => f.values(),
        }
    }
}

#[inline]
fn abs_pow(d: f64, p: f64) -> f64 {
    if p == 2.0 {
        d * d
    } else if p == 1.0 {
        d.abs()
    } else {
        d.abs().powf(p)
    }
}

/// `(sum_{x in I_h} |f(x+h) - f(x)|^p cell)^{1/p}` for the grid shift `shift`
/// (in grid steps per axis).
fn shifted_lp(g: &GridRef<'_>, shift: (usize, usize), p: f64) -> f64 {
    let n = g.cells();
    let delta = 1.0 / n as f64;
    let v = g.values();
    if g.dim() == 1 {
        let j = shift.0;
        let s: f64 = (0..n - j).map(|i| abs_pow(v[i + j] - v[i], p)).sum();
        return (s * delta).powf(1.0 / p);
    }
    let side = n + 1;
    let (j1, j2) = shift;
    let mut s = 0.0;
    for i1 in 0..n - j1 {
        let row = i1 * side;
        let row_shift = (i1 + j1) * side;
        for i2 in 0..n - j2 {
            s += abs_pow(v[row_shift + i2 + j2] - v[row + i2], p);
        }
    }
    (s * delta * delta).powf(1.0 / p)
}

/// For every admissible grid shift length up to `max_r`, the pair
/// `(|h|, ||f(. + h) - f||_{L_p(I_h)})`, maximized over the directions
/// sharing that length.
fn shift_table(g: &GridRef<'_>, p: f64, max_r: f64) -> Vec<(f64, f64)> {
    let n = g.cells();
    let delta = 1.0 / n as f64;
    let tol = 1e-12;
    let max_j = ((max_r / delta) * (1.0 + tol)).floor().min(n as f64) as usize;
    let mut shifts: Vec<(f64, (usize, usize))> = Vec::new();
    for j in 1..=max_j {
        let h = j as f64 * delta;
        shifts.push((h, (j, 0)));
        if g.dim() == 2 {
            shifts.push((h, (0, j)));
            let diag = h * std::f64::consts::SQRT_2;
            if diag <= max_r * (1.0 + tol) {
                shifts.push((diag, (j, j)));
            }
        }
    }
    shifts
        .par_iter()
        .map(|&(h, s)| (h, shifted_lp(g, s, p)))
        .collect()
}

/// `omega_p(f, r)` for each `r`, the supremum taken over grid shifts `|h| <= r`
/// (axis-aligned, plus diagonal in 2-D). Coordinates are scaled to the unit
/// interval or square.
pub fn lp_modulus<'a>(sample: impl Into<GridRef<'a>>, p: f64, r_values: &[f64]) -> Result<Vec<f64>> {
    let g = sample.into();
    if !(p >= 1.0) {
        return Err(SmError::Domain(format!("p must be >= 1, got {p}")));
    }
    if let Some(r) = r_values.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
        return Err(SmError::Domain(format!("r = {r} outside (0, 1]")));
    }
    let max_r = r_values.iter().copied().fold(0.0, f64::max);
    let table = shift_table(&g, p, max_r);
    Ok(r_values
        .iter()
        .map(|&r| {
            table
                .iter()
                .filter(|(h, _)| *h <= r * (1.0 + 1e-12))
                .map(|(_, w)| *w)
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Trapezoid-rule `||f||_{L_p}` on the unit interval or square.
pub fn lp_norm<'a>(sample: impl Into<GridRef<'a>>, p: f64) -> f64 {
    let g = sample.into();
    let n = g.cells();
    let delta = 1.0 / n as f64;
    let w = |i: usize| if i == 0 || i == n { 0.5 } else { 1.0 };
    let v = g.values();
    let s: f64 = if g.dim() == 1 {
        (0..=n).map(|i| w(i) * abs_pow(v[i], p)).sum::<f64>() * delta
    } else {
        let side = n + 1;
        let mut acc = 0.0;
        for i1 in 0..side {
            for i2 in 0..side {
                acc += w(i1) * w(i2) * abs_pow(v[i1 * side + i2], p);
            }
        }
        acc * delta * delta
    };
    s.powf(1.0 / p)
}

/// Geometric r-grid `delta 2^m`, closed with `r = 1`.
pub fn besov_r_grid(cells: usize) -> Vec<f64> {
    let delta = 1.0 / cells as f64;
    let mut rs = Vec::new();
    let mut r = delta;
    while r < 1.0 * (1.0 - 1e-12) {
        rs.push(r);
        r *= 2.0;
    }
    rs.push(1.0);
    rs
}

/// Discretized `||f||_{B^alpha_{p,q}}`.
///
/// The r-integral is written as `int omega_p(f,r)^q r^{-alpha q} d(ln r)` and
/// integrated with the trapezoid rule in `ln r` on the ratio-2 grid from one
/// grid step to 1. Shifts below one grid step contribute nothing.
pub fn besov_norm_estimate<'a>(sample: impl Into<GridRef<'a>>, p: f64, q: f64, alpha: f64) -> Result<f64> {
    let g = sample.into();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SmError::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(q >= 1.0) {
        return Err(SmError::Domain(format!("q must be >= 1, got {q}")));
    }
    let rs = besov_r_grid(g.cells());
    let omegas = lp_modulus(g, p, &rs)?;
    let integrand: Vec<f64> = rs
        .iter()
        .zip(&omegas)
        .map(|(r, w)| w.powf(q) * r.powf(-alpha * q))
        .collect();
    let mut integral = 0.0;
    for i in 0..rs.len() - 1 {
        integral += 0.5 * (integrand[i] + integrand[i + 1]) * (rs[i + 1] / rs[i]).ln();
    }
    Ok(lp_norm(g, p) + integral.powf(1.0 / q))
}
