//! Integrals of deterministic functions against stochastic measures.
//!
//! Three routes are provided: the exact series formula for power-density
//! measures (each term computed by singularity-free quadrature after the
//! substitution `u = x^c`), left-tagged Riemann-Stieltjes sums over a sampled
//! path, and step functions integrated through interval measures.

pub mod quadrature;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmError};
use crate::rademacher::SeriesMeasure;
use crate::sample::PathSample;

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A deterministic integrand: a pure function plus a label, an optional
/// known bound `sup |f|`, and optional discontinuity locations that
/// quadrature should split at.
#[derive(Clone)]
pub struct Integrand {
    eval: Eval,
    label: String,
    bound: Option<f64>,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Integrand")
            .field("label", &self.label)
            .field("bound", &self.bound)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl Integrand {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            label: label.into(),
            bound: None,
            breakpoints: Vec::new(),
        }
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn with_breakpoints(mut self, mut points: Vec<f64>) -> Self {
        points.sort_by(f64::total_cmp);
        self.breakpoints = points;
        self
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const:{c}"), move |_| c).with_bound(c.abs())
    }

    pub fn zero() -> Self {
        Self::constant(0.0).relabel("zero")
    }

    pub fn identity() -> Self {
        Self::new("x", |x| x)
    }

    /// `sum_i coeffs[i] x^i`, evaluated by Horner's rule.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let label = format!(
            "poly:{}",
            coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        );
        Self::new(label, move |x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c))
    }

    pub fn sin(freq: f64) -> Self {
        Self::new(format!("sin:{freq}"), move |x| (freq * x).sin()).with_bound(1.0)
    }

    pub fn cos(freq: f64) -> Self {
        Self::new(format!("cos:{freq}"), move |x| (freq * x).cos()).with_bound(1.0)
    }

    /// `1_{(a, b]}`.
    pub fn indicator(a: f64, b: f64) -> Self {
        Self::new(format!("indicator:{a},{b}"), move |x| if x > a && x <= b { 1.0 } else { 0.0 })
            .with_bound(1.0)
            .with_breakpoints(vec![a, b])
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `a f + b g`.
    pub fn linear_combination(a: f64, f: &Integrand, b: f64, g: &Integrand) -> Self {
        let (fe, ge) = (f.eval.clone(), g.eval.clone());
        let bound = match (f.bound, g.bound) {
            (Some(x), Some(y)) => Some(a.abs() * x + b.abs() * y),
            _ => None,
        };
        let mut points = f.breakpoints.clone();
        points.extend_from_slice(&g.breakpoints);
        let mut out = Self::new(format!("{a}*({})+{b}*({})", f.label, g.label), move |x| {
            a * fe(x) + b * ge(x)
        })
        .with_breakpoints(points);
        out.bound = bound;
        out
    }

    /// `f 1_{|f| <= level}`.
    pub fn truncated(&self, level: f64) -> Self {
        let fe = self.eval.clone();
        let mut out = Self::new(format!("{}|<= {level}", self.label), move |x| {
            let v = fe(x);
            if v.abs() <= level {
                v
            } else {
                0.0
            }
        });
        out.bound = self.bound.map(|b| b.min(level)).or(Some(level));
        out.breakpoints = self.breakpoints.clone();
        out
    }

    /// `|f|`.
    pub fn abs(&self) -> Self {
        let fe = self.eval.clone();
        let mut out = Self::new(format!("|{}|", self.label), move |x| fe(x).abs());
        out.bound = self.bound;
        out.breakpoints = self.breakpoints.clone();
        out
    }

    /// Parses a catalogue name: `zero`, `one`, `x`, `const:c`, `poly:c0,c1,..`,
    /// `sin[:k]`, `cos[:k]`, `indicator:a,b`.
    pub fn from_name(spec: &str) -> Result<Self> {
        let (name, args) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (spec.trim(), None),
        };
        let nums = |s: Option<&str>| -> Result<Vec<f64>> {
            match s {
                None => Ok(Vec::new()),
                Some(s) => s
                    .split(',')
                    .map(|t| {
                        t.trim().parse::<f64>().map_err(|e| {
                            SmError::InvalidInput(format!("bad integrand parameter `{t}`: {e}"))
                        })
                    })
                    .collect(),
            }
        };
        let args = nums(args)?;
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(SmError::InvalidInput(format!(
                    "integrand `{name}` takes {n} parameter(s), got {}",
                    args.len()
                )))
            }
        };
        let f = match name {
            "zero" => {
                arity(0)?;
                Integrand::zero()
            }
            "one" => {
                arity(0)?;
                Integrand::constant(1.0).relabel("one")
            }
            "x" => {
                arity(0)?;
                Integrand::identity()
            }
            "const" => {
                arity(1)?;
                Integrand::constant(args[0])
            }
            "poly" => {
                if args.is_empty() {
                    return Err(SmError::InvalidInput("poly needs coefficients".into()));
                }
                Integrand::polynomial(args)
            }
            "sin" | "cos" => {
                let k = match args.as_slice() {
                    [] => 1.0,
                    [k] => *k,
                    _ => return Err(SmError::InvalidInput(format!("`{name}` takes one frequency"))),
                };
                if name == "sin" {
                    Integrand::sin(k)
                } else {
                    Integrand::cos(k)
                }
            }
            "indicator" => {
                arity(2)?;
                Integrand::indicator(args[0], args[1])
            }
            other => return Err(SmError::InvalidInput(format!("unknown integrand `{other}`"))),
        };
        Ok(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_subdivisions: 1 << 20,
        }
    }
}

impl QuadratureConfig {
    pub fn new(abs_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return Err(SmError::InvalidInput(format!("abs_tol must be positive, got {abs_tol}")));
        }
        Ok(Self {
            abs_tol,
            max_subdivisions,
        })
    }
}

/// `int_a^b f(x) x^(c-1) dx` for `0 <= a <= b <= 1`, `0 < c <= 1`, computed as
/// `(1/c) int_{a^c}^{b^c} f(u^(1/c)) du`.
pub fn singular_weight_quadrature(
    f: &Integrand,
    c: f64,
    a: f64,
    b: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(SmError::Domain(format!("exponent c = {c} outside (0, 1]")));
    }
    if !(0.0 <= a && a <= b && b <= 1.0) {
        return Err(SmError::Domain(format!("interval [{a}, {b}] not inside [0, 1]")));
    }
    integrate_power_weight(|x| f.eval(x), f.breakpoints(), c, a, b, q)
}

fn integrate_power_weight<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    c: f64,
    a: f64,
    b: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    let inv = 1.0 / c;
    let (ua, ub) = (a.powf(c), b.powf(c));
    let cuts: Vec<f64> = breakpoints.iter().filter(|&&x| x > a && x < b).map(|x| x.powf(c)).collect();
    let transformed = |u: f64| if c == 1.0 { f(u) } else { f(u.powf(inv)) };
    let r = quadrature::adaptive(&transformed, ua, ub, &cuts, q.abs_tol, q.max_subdivisions)?;
    Ok(r.value * inv)
}

/// `int_{(a, b]} f dmu` for a power-density series measure:
/// `sum_k w_k int_{a/T}^{b/T} f(T x) x^(c_k - 1) dx`.
pub fn integrate_series(
    measure: &SeriesMeasure,
    f: &Integrand,
    a: f64,
    b: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    let horizon = measure.horizon();
    if !(0.0 <= a && a <= b && b <= horizon) {
        return Err(SmError::Domain(format!(
            "interval ({a}, {b}] not inside (0, {horizon}]"
        )));
    }
    let (xa, xb) = (a / horizon, (b / horizon).min(1.0));
    let scaled_breaks: Vec<f64> = f.breakpoints().iter().map(|p| p / horizon).collect();
    let terms: Vec<f64> = measure
        .coefficients()
        .par_iter()
        .zip(measure.exponents().par_iter())
        .map(|(&w, &c)| {
            if w == 0.0 {
                return Ok(0.0);
            }
            let v = integrate_power_weight(|x| f.eval(horizon * x), &scaled_breaks, c, xa, xb, q)?;
            Ok(w * v)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum())
}

/// Exact series integral over a Rademacher realization (or any series measure).
pub fn integrate_rademacher<M: AsRef<SeriesMeasure>>(
    r: &M,
    f: &Integrand,
    a: f64,
    b: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    integrate_series(r.as_ref(), f, a, b, q)
}

/// Left-tagged Riemann-Stieltjes sum `sum_j f(t_j) (mu(t_{j+1}) - mu(t_j))`.
pub fn integrate_grid(path: &PathSample, f: &Integrand) -> f64 {
    let (grid, values) = (path.grid(), path.values());
    let mut acc = 0.0;
    for j in 0..grid.len() - 1 {
        acc += f.eval(grid[j]) * (values[j + 1] - values[j]);
    }
    acc
}

/// Measure an integral can be taken against.
#[derive(Clone, Copy, Debug)]
pub enum MeasureRef<'a> {
    Series(&'a SeriesMeasure),
    Path(&'a PathSample),
}

impl<'a> MeasureRef<'a> {
    pub fn horizon(&self) -> f64 {
        match self {
            MeasureRef::Series(s) => s.horizon(),
            MeasureRef::Path(p) => p.horizon(),
        }
    }
}

impl<'a> From<&'a SeriesMeasure> for MeasureRef<'a> {
    fn from(s: &'a SeriesMeasure) -> Self {
        MeasureRef::Series(s)
    }
}

impl<'a> From<&'a crate::rademacher::RademacherRealization> for MeasureRef<'a> {
    fn from(r: &'a crate::rademacher::RademacherRealization) -> Self {
        MeasureRef::Series(r.series())
    }
}

impl<'a> From<&'a PathSample> for MeasureRef<'a> {
    fn from(p: &'a PathSample) -> Self {
        MeasureRef::Path(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepIntegral {
    pub value: f64,
    /// Largest distance a breakpoint was moved to reach a grid point; zero for
    /// exact measures.
    pub max_snap: f64,
}

/// `sum_i level_i mu((b_i, b_{i+1}])`.
pub fn integrate_step_function(
    source: MeasureRef<'_>,
    breakpoints: &[f64],
    levels: &[f64],
) -> Result<StepIntegral> {
    if breakpoints.len() < 2 || levels.len() != breakpoints.len() - 1 {
        return Err(SmError::InvalidInput(format!(
            "{} breakpoints need {} levels, got {}",
            breakpoints.len(),
            breakpoints.len().saturating_sub(1),
            levels.len()
        )));
    }
    if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SmError::InvalidInput("breakpoints must be strictly increasing".into()));
    }
    let horizon = source.horizon();
    if breakpoints[0] < 0.0 || *breakpoints.last().unwrap() > horizon {
        return Err(SmError::Domain(format!("breakpoints must lie in [0, {horizon}]")));
    }
    match source {
        MeasureRef::Series(s) => {
            let mut value = 0.0;
            for (w, level) in breakpoints.windows(2).zip(levels) {
                value += level * s.interval_measure(w[0], w[1])?;
            }
            Ok(StepIntegral { value, max_snap: 0.0 })
        }
        MeasureRef::Path(p) => {
            let step = p.step();
            let n = p.intervals();
            let mut max_snap: f64 = 0.0;
            let idx: Vec<usize> = breakpoints
                .iter()
                .map(|b| {
                    let k = ((b / step).round() as usize).min(n);
                    max_snap = max_snap.max((b - p.grid()[k]).abs());
                    k
                })
                .collect();
            let v = p.values();
            let value = idx
                .windows(2)
                .zip(levels)
                .map(|(w, level)| level * (v[w[1]] - v[w[0]]))
                .sum();
            Ok(StepIntegral { value, max_snap })
        }
    }
}
