//! Fourier expansion of `mu(t)` on `[0, 2 pi]`.
//!
//! Coefficients are computed either by parts, as integrals of trigonometric
//! functions against the measure,
//!
//! ```text
//! xi_k  = -1/(k pi) int sin(ks) dmu
//! eta_k =  1/(k pi) int (cos(ks) - 1) dmu
//! xi_0  =  2 mu((0, 2 pi]) - 1/pi int s dmu
//! ```
//!
//! or directly, as trapezoid-rule integrals of the sampled path against
//! `cos(ks)` and `sin(ks)`. On an equispaced grid over exactly `[0, 2 pi]`
//! both reduce to discrete Fourier transforms, which is how they are
//! evaluated for path sources.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmError};
use crate::integrate::{integrate_series, Integrand, MeasureRef, QuadratureConfig};
use crate::io::fmt_f64;
use crate::model::ModelSpec;
use crate::rng::RngStream;
use crate::sample::PathSample;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMethod {
    ByParts,
    Direct,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: Option<ModelSpec>,
    pub stream: Option<RngStream>,
    /// Grid intervals of the path the coefficients came from; `None` for
    /// exact series sources.
    pub grid_intervals: Option<usize>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficients {
    xi: Vec<f64>,
    eta: Vec<f64>,
    method: CoefficientMethod,
    provenance: Provenance,
}

impl FourierCoefficients {
    /// `xi` holds `xi_0..xi_K`, `eta` holds `eta_1..eta_K`.
    pub fn new(xi: Vec<f64>, eta: Vec<f64>, method: CoefficientMethod, provenance: Provenance) -> Result<Self> {
        if xi.is_empty() || xi.len() != eta.len() + 1 {
            return Err(SmError::InvalidInput(format!(
                "{} cosine and {} sine coefficients are inconsistent",
                xi.len(),
                eta.len()
            )));
        }
        Ok(Self {
            xi,
            eta,
            method,
            provenance,
        })
    }

    /// Highest frequency `K`.
    pub fn max_freq(&self) -> usize {
        self.eta.len()
    }

    pub fn xi(&self, k: usize) -> f64 {
        self.xi[k]
    }

    /// `eta_k` for `k >= 1`; `eta_0` is taken as zero.
    pub fn eta(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.eta[k - 1]
        }
    }

    pub fn xis(&self) -> &[f64] {
        &self.xi
    }

    pub fn etas(&self) -> &[f64] {
        &self.eta
    }

    pub fn method(&self) -> CoefficientMethod {
        self.method
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// `sum_{k=1..n} (xi_k^2 + eta_k^2)`.
    pub fn energy(&self, n: usize) -> f64 {
        (1..=n.min(self.max_freq())).map(|k| self.xi[k].powi(2) + self.eta[k - 1].powi(2)).sum()
    }

    /// Coefficient-wise sum, e.g. for the sum of two measures.
    pub fn add(&self, other: &FourierCoefficients) -> Result<FourierCoefficients> {
        if self.max_freq() != other.max_freq() {
            return Err(SmError::InvalidInput("coefficient sets differ in length".into()));
        }
        let xi = self.xi.iter().zip(&other.xi).map(|(a, b)| a + b).collect();
        let eta = self.eta.iter().zip(&other.eta).map(|(a, b)| a + b).collect();
        FourierCoefficients::new(xi, eta, self.method, Provenance::default())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(["k", "xi", "eta"])?;
        for k in 0..=self.max_freq() {
            out.write_record([k.to_string(), fmt_f64(self.xi(k)), fmt_f64(self.eta(k))])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn check_full_period(horizon: f64) -> Result<()> {
    if (horizon - TAU).abs() > 1e-12 * TAU {
        return Err(SmError::Domain(format!(
            "Fourier coefficients need the domain (0, 2 pi], got horizon {horizon}"
        )));
    }
    Ok(())
}

fn forward_dft(values: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn aliasing_warning(k_max: usize, intervals: usize) -> Option<String> {
    (4 * k_max > intervals).then(|| {
        format!("K = {k_max} exceeds a quarter of the {intervals} grid intervals; high frequencies alias")
    })
}

/// `(sum_j cos(k t_j) a_j, sum_j sin(k t_j) a_j)` for `k = 0..=k_max`, where
/// `t_j = 2 pi j / n` and `n = a.len()`.
pub(crate) fn periodic_trig_sums(a: &[f64], k_max: usize) -> Vec<(f64, f64)> {
    let spectrum = forward_dft(a);
    let n = a.len();
    (0..=k_max)
        .map(|k| {
            let z = spectrum[k % n];
            (z.re, -z.im)
        })
        .collect()
}

/// Coefficients via integration by parts against the measure.
pub fn coefficients_by_parts<'a>(
    source: impl Into<MeasureRef<'a>>,
    k_max: usize,
    q: &QuadratureConfig,
) -> Result<FourierCoefficients> {
    let source = source.into();
    check_full_period(source.horizon())?;
    match source {
        MeasureRef::Series(series) => {
            let total = series.interval_measure(0.0, series.horizon())?;
            let first_moment = integrate_series(series, &Integrand::identity(), 0.0, series.horizon(), q)?;
            let pairs: Vec<(f64, f64)> = (1..=k_max)
                .into_par_iter()
                .map(|k| {
                    let kf = k as f64;
                    let s = integrate_series(series, &Integrand::sin(kf), 0.0, series.horizon(), q)?;
                    let c = integrate_series(
                        series,
                        &Integrand::new(format!("cos:{kf}-1"), move |x| (kf * x).cos() - 1.0),
                        0.0,
                        series.horizon(),
                        q,
                    )?;
                    Ok((-s / (kf * PI), c / (kf * PI)))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut xi = vec![2.0 * total - first_moment / PI];
            xi.extend(pairs.iter().map(|p| p.0));
            let eta = pairs.iter().map(|p| p.1).collect();
            FourierCoefficients::new(xi, eta, CoefficientMethod::ByParts, Provenance::default())
        }
        MeasureRef::Path(path) => {
            let increments = path.increments();
            let n = increments.len();
            let total = *path.values().last().unwrap();
            let first_moment: f64 = path.grid().iter().zip(&increments).map(|(t, d)| t * d).sum();
            let sums = periodic_trig_sums(&increments, k_max);
            let mut xi = vec![2.0 * total - first_moment / PI];
            let mut eta = Vec::with_capacity(k_max);
            for (k, &(c, s)) in sums.iter().enumerate().skip(1) {
                let kpi = k as f64 * PI;
                xi.push(-s / kpi);
                eta.push((c - total) / kpi);
            }
            let provenance = Provenance {
                model: path.model().cloned(),
                stream: path.stream(),
                grid_intervals: Some(n),
                warnings: aliasing_warning(k_max, n).into_iter().collect(),
            };
            FourierCoefficients::new(xi, eta, CoefficientMethod::ByParts, provenance)
        }
    }
}

/// Coefficients from the trapezoid rule applied to `mu(s) cos(ks)` and
/// `mu(s) sin(ks)` on the path grid.
pub fn coefficients_direct(path: &PathSample, k_max: usize) -> Result<FourierCoefficients> {
    check_full_period(path.horizon())?;
    let v = path.values();
    let n = path.intervals();
    // periodic trapezoid: the two endpoints share the node t = 0
    let mut folded = v[..n].to_vec();
    folded[0] = 0.5 * (v[0] + v[n]);
    let sums = periodic_trig_sums(&folded, k_max);
    let scale = path.step() / PI;
    let xi = sums.iter().map(|(c, _)| c * scale).collect();
    let eta = sums.iter().skip(1).map(|(_, s)| s * scale).collect();
    let provenance = Provenance {
        model: path.model().cloned(),
        stream: path.stream(),
        grid_intervals: Some(n),
        warnings: aliasing_warning(k_max, n).into_iter().collect(),
    };
    FourierCoefficients::new(xi, eta, CoefficientMethod::Direct, provenance)
}

fn check_order(c: &FourierCoefficients, n: usize) -> Result<()> {
    if n > c.max_freq() {
        return Err(SmError::Domain(format!(
            "partial sum of order {n} needs K >= {n}, have K = {}",
            c.max_freq()
        )));
    }
    Ok(())
}

#[inline]
fn term(c: &FourierCoefficients, k: usize, t: f64) -> f64 {
    let (s, co) = (k as f64 * t).sin_cos();
    c.xi[k] * co + c.eta[k - 1] * s
}

/// `S_n(t) = xi_0/2 + sum_{k<=n} (xi_k cos kt + eta_k sin kt)`; `t` is reduced
/// modulo `2 pi` first, so `S_n(0) = S_n(2 pi)` exactly.
pub fn partial_sum(c: &FourierCoefficients, n: usize, t: f64) -> Result<f64> {
    check_order(c, n)?;
    let t = t.rem_euclid(TAU);
    let mut acc = 0.5 * c.xi[0];
    for k in 1..=n {
        acc += term(c, k, t);
    }
    Ok(acc)
}

/// `S_n*(t) = (S_{n-1}(t) + S_n(t)) / 2`.
pub fn delayed_mean_partial_sum(c: &FourierCoefficients, n: usize, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(SmError::Domain("the delayed mean needs n >= 1".into()));
    }
    check_order(c, n)?;
    let t = t.rem_euclid(TAU);
    let previous = partial_sum(c, n - 1, t)?;
    Ok(previous + 0.5 * term(c, n, t))
}

/// `S_n(t)` for every `n` in `orders` at every `t`; `out[i][j] = S_{orders[i]}(ts[j])`.
/// Each point is one sequential pass over `k`, so results do not depend on
/// how points are scheduled.
pub fn partial_sums_on_grid(c: &FourierCoefficients, orders: &[usize], ts: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n_max = orders.iter().copied().max().unwrap_or(0);
    check_order(c, n_max)?;
    let columns: Vec<Vec<f64>> = ts
        .par_iter()
        .map(|&t| {
            let t = t.rem_euclid(TAU);
            let mut snapshots = vec![0.0; n_max + 1];
            let mut acc = 0.5 * c.xi[0];
            snapshots[0] = acc;
            for k in 1..=n_max {
                acc += term(c, k, t);
                snapshots[k] = acc;
            }
            orders.iter().map(|&n| snapshots[n]).collect()
        })
        .collect();
    Ok((0..orders.len())
        .map(|i| columns.iter().map(|col| col[i]).collect())
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub n: usize,
    pub sup_interior_error: f64,
    pub endpoint_error: f64,
    pub energy: f64,
}

/// Coefficient energy over the frequency block `[k_lo, k_hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockEnergy {
    pub k_lo: usize,
    pub k_hi: usize,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub interior_margin: f64,
    pub entries: Vec<ConvergenceEntry>,
    pub block_energies: Vec<BlockEnergy>,
}

/// Default distance kept from the endpoints in the interior sup error.
pub const DEFAULT_INTERIOR_MARGIN: f64 = 0.5;

/// Energies over `[2^j, 2^{j+1}) ∩ [1, K]`.
pub fn dyadic_block_energies(c: &FourierCoefficients) -> Vec<BlockEnergy> {
    let k_max = c.max_freq();
    let mut blocks = Vec::new();
    let mut lo = 1usize;
    while lo <= k_max {
        let hi = (2 * lo).min(k_max + 1);
        let energy = (lo..hi).map(|k| c.xi(k).powi(2) + c.eta(k).powi(2)).sum();
        blocks.push(BlockEnergy { k_lo: lo, k_hi: hi, energy });
        lo *= 2;
    }
    blocks
}

/// Sup error of `S_n` against the path on `[margin, 2 pi - margin]`, the
/// endpoint error `|S_n(0) - mu(2 pi)/2|`, and coefficient energies.
pub fn convergence_report(
    path: &PathSample,
    c: &FourierCoefficients,
    orders: &[usize],
    interior_margin: f64,
) -> Result<ConvergenceReport> {
    check_full_period(path.horizon())?;
    let prov = c.provenance();
    if let (Some(a), Some(b)) = (prov.stream, path.stream()) {
        if a != b {
            return Err(SmError::InvalidInput(
                "coefficients and path come from different streams".into(),
            ));
        }
    }
    if let (Some(a), Some(b)) = (prov.model.as_ref(), path.model()) {
        if a != b {
            return Err(SmError::InvalidInput("coefficients and path come from different models".into()));
        }
    }
    if !(interior_margin >= 0.0 && 2.0 * interior_margin < TAU) {
        return Err(SmError::Domain(format!("interior margin {interior_margin} leaves no interior")));
    }
    let (ts, mus): (Vec<f64>, Vec<f64>) = path
        .grid()
        .iter()
        .zip(path.values())
        .filter(|(t, _)| **t >= interior_margin && **t <= TAU - interior_margin)
        .map(|(t, v)| (*t, *v))
        .unzip();
    let sums = partial_sums_on_grid(c, orders, &ts)?;
    let half_total = 0.5 * path.values().last().unwrap();
    let mut entries = Vec::with_capacity(orders.len());
    for (i, &n) in orders.iter().enumerate() {
        let sup = sums[i]
            .iter()
            .zip(&mus)
            .map(|(s, m)| (s - m).abs())
            .fold(0.0, f64::max);
        let endpoint = (partial_sum(c, n, 0.0)? - half_total).abs();
        entries.push(ConvergenceEntry {
            n,
            sup_interior_error: sup,
            endpoint_error: endpoint,
            energy: c.energy(n),
        });
    }
    Ok(ConvergenceReport {
        interior_margin,
        entries,
        block_energies: dyadic_block_energies(c),
    })
}
