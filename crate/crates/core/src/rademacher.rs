//! The Rademacher-series measure and the power-density series it is built from.
//!
//! On the unit scale the measure is
//! `mu(A) = sum_k eps_k k^(-4/3) int_A x^(c_k - 1) dx` with `c_k = k^(-1/3)`,
//! pushed forward to `(0, T]` by `s -> s / T`. Every interval measure has the
//! closed form `(x_b^c - x_a^c) / c` per term, so a finite realization is an
//! exact stochastic measure.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmError};
use crate::model::{ModelKind, ModelSpec};
use crate::rng::RngStream;

/// Finite sum of power densities on `(0, T]`:
/// `mu(A) = sum_k coefficient_k int_{A/T} x^(exponent_k - 1) dx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeasure {
    horizon: f64,
    coefficients: Vec<f64>,
    exponents: Vec<f64>,
}

impl SeriesMeasure {
    pub fn new(horizon: f64, coefficients: Vec<f64>, exponents: Vec<f64>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(SmError::InvalidModel(format!("horizon must be positive, got {horizon}")));
        }
        if coefficients.len() != exponents.len() {
            return Err(SmError::InvalidInput(format!(
                "{} coefficients but {} exponents",
                coefficients.len(),
                exponents.len()
            )));
        }
        if let Some(c) = exponents.iter().find(|c| !(**c > 0.0 && **c <= 1.0)) {
            return Err(SmError::InvalidInput(format!("exponent {c} outside (0, 1]")));
        }
        Ok(Self {
            horizon,
            coefficients,
            exponents,
        })
    }

    /// Lebesgue measure on `(0, T]`: a single term with exponent 1.
    pub fn lebesgue(horizon: f64) -> Result<Self> {
        Self::new(horizon, vec![horizon], vec![1.0])
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    fn check_interval(&self, a: f64, b: f64) -> Result<()> {
        if !(0.0 <= a && a <= b && b <= self.horizon) {
            return Err(SmError::Domain(format!(
                "interval ({a}, {b}] not inside (0, {}]",
                self.horizon
            )));
        }
        Ok(())
    }

    /// `mu((a, b])` in closed form.
    pub fn interval_measure(&self, a: f64, b: f64) -> Result<f64> {
        self.check_interval(a, b)?;
        if a == b {
            return Ok(0.0);
        }
        let xa = a / self.horizon;
        let xb = (b / self.horizon).min(1.0);
        Ok(self
            .coefficients
            .iter()
            .zip(&self.exponents)
            .map(|(&w, &c)| w * (xb.powf(c) - xa.powf(c)) / c)
            .sum())
    }

    /// `mu((0, t])` without domain checks; `t` is clamped to `[0, T]`.
    pub fn cumulative(&self, t: f64) -> f64 {
        let x = (t / self.horizon).clamp(0.0, 1.0);
        if x == 0.0 {
            return 0.0;
        }
        self.coefficients
            .iter()
            .zip(&self.exponents)
            .map(|(&w, &c)| w * x.powf(c) / c)
            .sum()
    }

    /// Term-wise sum of two measures on the same horizon.
    pub fn combine(&self, other: &SeriesMeasure) -> Result<SeriesMeasure> {
        if self.horizon != other.horizon {
            return Err(SmError::InvalidInput(format!(
                "cannot add measures on horizons {} and {}",
                self.horizon, other.horizon
            )));
        }
        let mut coefficients = self.coefficients.clone();
        coefficients.extend_from_slice(&other.coefficients);
        let mut exponents = self.exponents.clone();
        exponents.extend_from_slice(&other.exponents);
        SeriesMeasure::new(self.horizon, coefficients, exponents)
    }

    pub fn scaled(&self, factor: f64) -> SeriesMeasure {
        SeriesMeasure {
            horizon: self.horizon,
            coefficients: self.coefficients.iter().map(|w| w * factor).collect(),
            exponents: self.exponents.clone(),
        }
    }

    /// `mu(A) - m_L(A) mu((0, T]) / T`: the measure with zero total mass.
    pub fn zero_total_mass(&self) -> SeriesMeasure {
        let total = self.cumulative(self.horizon);
        let mut out = self.clone();
        out.coefficients.push(-total);
        out.exponents.push(1.0);
        out
    }
}

/// A frozen realization `eps_1..eps_K` of the Rademacher-series measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RademacherRealization {
    signs: Vec<i8>,
    weights: Vec<f64>,
    series: SeriesMeasure,
}

impl RademacherRealization {
    pub fn from_signs(signs: Vec<i8>, horizon: f64) -> Result<Self> {
        if signs.is_empty() {
            return Err(SmError::InvalidModel("at least one sign is required".into()));
        }
        if let Some(s) = signs.iter().find(|s| s.abs() != 1) {
            return Err(SmError::InvalidInput(format!("sign {s} is not +-1")));
        }
        let weights: Vec<f64> = (1..=signs.len()).map(rademacher_weight).collect();
        let exponents: Vec<f64> = (1..=signs.len()).map(rademacher_exponent).collect();
        let coefficients = signs
            .iter()
            .zip(&weights)
            .map(|(&s, &w)| f64::from(s) * w)
            .collect();
        let series = SeriesMeasure::new(horizon, coefficients, exponents)?;
        Ok(Self {
            signs,
            weights,
            series,
        })
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// `a_k = k^(-4/3)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `c_k = k^(-1/3)`.
    pub fn exponents(&self) -> &[f64] {
        self.series.exponents()
    }

    pub fn horizon(&self) -> f64 {
        self.series.horizon()
    }

    pub fn terms(&self) -> usize {
        self.signs.len()
    }

    pub fn series(&self) -> &SeriesMeasure {
        &self.series
    }

    pub fn interval_measure(&self, a: f64, b: f64) -> Result<f64> {
        self.series.interval_measure(a, b)
    }
}

impl AsRef<SeriesMeasure> for RademacherRealization {
    fn as_ref(&self) -> &SeriesMeasure {
        &self.series
    }
}

impl AsRef<SeriesMeasure> for SeriesMeasure {
    fn as_ref(&self) -> &SeriesMeasure {
        self
    }
}

/// `k^(-4/3)`.
pub fn rademacher_weight(k: usize) -> f64 {
    let k = k as f64;
    1.0 / (k * k.cbrt())
}

/// `k^(-1/3)`.
pub fn rademacher_exponent(k: usize) -> f64 {
    1.0 / (k as f64).cbrt()
}

/// Draws `K` independent fair signs from `stream`.
pub fn realize_rademacher(model: &ModelSpec, stream: RngStream) -> Result<RademacherRealization> {
    if model.kind() != ModelKind::RademacherSeries {
        return Err(SmError::InvalidModel(format!(
            "rademacher realization requested for {} model",
            model.kind()
        )));
    }
    let terms = model.terms().unwrap_or(crate::model::DEFAULT_RADEMACHER_TERMS);
    let mut rng = stream.rng();
    let signs = (0..terms)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    RademacherRealization::from_signs(signs, model.horizon())
}

/// Exact measure behind a model, when one exists: Lebesgue, or a fresh
/// Rademacher realization drawn from `stream`.
pub fn exact_measure(model: &ModelSpec, stream: RngStream) -> Result<SeriesMeasure> {
    match model.kind() {
        ModelKind::DeterministicLebesgue => SeriesMeasure::lebesgue(model.horizon()),
        ModelKind::RademacherSeries => Ok(realize_rademacher(model, stream)?.series),
        other => Err(SmError::InvalidModel(format!(
            "{other} has no closed-form interval measure"
        ))),
    }
}
