//! Declarative description of the implemented stochastic measures.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SmError};

/// Default truncation of the Rademacher series.
pub const DEFAULT_RADEMACHER_TERMS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Lebesgue measure on (0, T]; the path is t itself.
    DeterministicLebesgue,
    /// Finite Rademacher series with power-law densities, rescaled to (0, T].
    RademacherSeries,
    /// Integrals of indicators against Brownian motion.
    Wiener,
    /// Integrals of indicators against fractional Brownian motion, H > 1/2.
    Fbm,
    /// White noise on (0, T]^2; mu(x) is the Brownian sheet.
    BrownianSheet2D,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::DeterministicLebesgue => "lebesgue",
            ModelKind::RademacherSeries => "rademacher",
            ModelKind::Wiener => "wiener",
            ModelKind::Fbm => "fbm",
            ModelKind::BrownianSheet2D => "sheet",
        }
    }

    /// Dimension of the parameter set the model lives on.
    pub fn dimension(self) -> usize {
        match self {
            ModelKind::BrownianSheet2D => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = SmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lebesgue" | "deterministic_lebesgue" | "deterministic" => {
                Ok(ModelKind::DeterministicLebesgue)
            }
            "rademacher" | "rademacher_series" => Ok(ModelKind::RademacherSeries),
            "wiener" | "brownian" => Ok(ModelKind::Wiener),
            "fbm" => Ok(ModelKind::Fbm),
            "sheet" | "brownian_sheet" | "brownian_sheet2d" | "brownian_sheet_2d" => {
                Ok(ModelKind::BrownianSheet2D)
            }
            other => Err(SmError::InvalidModel(format!("unknown model kind `{other}`"))),
        }
    }
}

/// A validated model: kind plus the parameters that kind needs.
///
/// Only the parameters relevant to the kind are present; `terms` is set only
/// for the Rademacher series and `hurst` only for fBm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelSpec", into = "RawModelSpec")]
pub struct ModelSpec {
    kind: ModelKind,
    horizon: f64,
    terms: Option<usize>,
    hurst: Option<f64>,
}

impl ModelSpec {
    pub fn new(
        kind: ModelKind,
        horizon: f64,
        terms: Option<usize>,
        hurst: Option<f64>,
    ) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(SmError::InvalidModel(format!(
                "horizon must be a positive finite real, got {horizon}"
            )));
        }
        let terms = match (kind, terms) {
            (ModelKind::RademacherSeries, None) => Some(DEFAULT_RADEMACHER_TERMS),
            (ModelKind::RademacherSeries, Some(0)) => {
                return Err(SmError::InvalidModel("truncation K must be at least 1".into()))
            }
            (ModelKind::RademacherSeries, Some(k)) => Some(k),
            (_, Some(_)) => {
                return Err(SmError::InvalidModel(format!(
                    "truncation K only applies to the rademacher model, not {kind}"
                )))
            }
            (_, None) => None,
        };
        let hurst = match (kind, hurst) {
            (ModelKind::Fbm, Some(h)) if h > 0.5 && h < 1.0 => Some(h),
            (ModelKind::Fbm, Some(h)) => {
                return Err(SmError::InvalidModel(format!(
                    "Hurst index must lie in (1/2, 1), got {h}"
                )))
            }
            (ModelKind::Fbm, None) => {
                return Err(SmError::InvalidModel("fbm requires a Hurst index".into()))
            }
            (_, Some(_)) => {
                return Err(SmError::InvalidModel(format!(
                    "Hurst index only applies to the fbm model, not {kind}"
                )))
            }
            (_, None) => None,
        };
        Ok(Self {
            kind,
            horizon,
            terms,
            hurst,
        })
    }

    pub fn lebesgue(horizon: f64) -> Result<Self> {
        Self::new(ModelKind::DeterministicLebesgue, horizon, None, None)
    }

    pub fn rademacher(horizon: f64, terms: usize) -> Result<Self> {
        Self::new(ModelKind::RademacherSeries, horizon, Some(terms), None)
    }

    pub fn wiener(horizon: f64) -> Result<Self> {
        Self::new(ModelKind::Wiener, horizon, None, None)
    }

    pub fn fbm(horizon: f64, hurst: f64) -> Result<Self> {
        Self::new(ModelKind::Fbm, horizon, None, Some(hurst))
    }

    pub fn brownian_sheet(horizon: f64) -> Result<Self> {
        Self::new(ModelKind::BrownianSheet2D, horizon, None, None)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn terms(&self) -> Option<usize> {
        self.terms
    }

    pub fn hurst(&self) -> Option<f64> {
        self.hurst
    }
}

/// Unvalidated wire form of [`ModelSpec`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModelSpec {
    pub kind: ModelKind,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<usize>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
}

impl TryFrom<RawModelSpec> for ModelSpec {
    type Error = SmError;

    fn try_from(raw: RawModelSpec) -> Result<Self> {
        ModelSpec::new(raw.kind, raw.horizon, raw.terms, raw.hurst)
    }
}

impl From<ModelSpec> for RawModelSpec {
    fn from(m: ModelSpec) -> Self {
        RawModelSpec {
            kind: m.kind,
            horizon: m.horizon,
            terms: m.terms,
            hurst: m.hurst,
        }
    }
}

/// Resource caps for sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Largest number of grid points (including t = 0) for dense fBm sampling.
    pub fbm_max_points: usize,
    /// Largest dyadic depth for one-dimensional fields.
    pub max_depth_1d: u32,
    /// Largest dyadic depth for two-dimensional fields.
    pub max_depth_2d: u32,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            fbm_max_points: 4097,
            max_depth_1d: 12,
            max_depth_2d: 9,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(ModelSpec::lebesgue(0.0).is_err());
        assert!(ModelSpec::lebesgue(f64::NAN).is_err());
        assert!(ModelSpec::rademacher(1.0, 0).is_err());
        assert!(ModelSpec::fbm(1.0, 0.5).is_err());
        assert!(ModelSpec::fbm(1.0, 1.0).is_err());
        assert!(ModelSpec::new(ModelKind::Fbm, 1.0, None, None).is_err());
        assert!(ModelSpec::new(ModelKind::Wiener, 1.0, Some(3), None).is_err());
        assert!(ModelSpec::new(ModelKind::Wiener, 1.0, None, Some(0.7)).is_err());
    }

    #[test]
    fn rademacher_defaults_to_4096_terms() {
        let m = ModelSpec::new(ModelKind::RademacherSeries, 1.0, None, None).unwrap();
        assert_eq!(m.terms(), Some(DEFAULT_RADEMACHER_TERMS));
    }

    #[test]
    fn json_goes_through_validation() {
        let ok: ModelSpec = serde_json::from_str(r#"{"kind":"fbm","T":1.0,"H":0.7}"#).unwrap();
        assert_eq!(ok.hurst(), Some(0.7));
        assert!(serde_json::from_str::<ModelSpec>(r#"{"kind":"fbm","T":1.0,"H":0.3}"#).is_err());
        assert!(serde_json::from_str::<ModelSpec>(r#"{"kind":"wiener","T":1.0,"x":1}"#).is_err());
        let back = serde_json::to_string(&ok).unwrap();
        assert_eq!(back, r#"{"kind":"fbm","T":1.0,"H":0.7}"#);
    }

    #[test]
    fn kinds_parse_from_cli_names() {
        for k in [
            ModelKind::DeterministicLebesgue,
            ModelKind::RademacherSeries,
            ModelKind::Wiener,
            ModelKind::Fbm,
            ModelKind::BrownianSheet2D,
        ] {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
        }
    }
}
