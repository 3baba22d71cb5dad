//! Monte Carlo checks on sampled paths: stabilization of
//! `T_j = sum_{k<=j} (int f_k dmu)^2` and the cubic increment integral
//! `int_0^{T1} |mu(s+eps) - mu(s)|^3 / eps ds`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde_json::json;

use super::{Check, Relation, ReplicateTable, VerificationReport};
use crate::error::{Result, SmError};
use crate::fourier::{check_full_period, periodic_trig_sums};
use crate::integrate::{integrate_grid, Integrand};
use crate::model::{ModelKind, ModelSpec, SamplingConfig};
use crate::rng::RngStream;
use crate::sample::{PathSample, PathSampler};
use crate::stats::{median, quantile};

pub const DEFAULT_REPLICATES: usize = 256;
/// Additive slack in Monte Carlo thresholds.
pub const MC_SLACK: f64 = 0.01;
pub const DEFAULT_EPSILONS: [f64; 3] = [0.04, 0.02, 0.01];
/// `E|N(0,1)|^3 = 2 sqrt(2/pi)`.
pub const WIENER_CUBIC_CONSTANT: f64 = 1.595_769_121_605_730_7;

fn one_dimensional(model: &ModelSpec) -> Result<()> {
    if model.kind().dimension() != 1 {
        return Err(SmError::InvalidModel(format!(
            "{} has no one-dimensional path",
            model.kind().name()
        )));
    }
    Ok(())
}

/// Functions `f_1, f_2, ...` with a certified `sup_x sum_k f_k(x)^2`.
#[derive(Clone, Debug)]
pub enum FunctionFamily {
    /// `f_k(t) = sin(kt) / (pi k)`, with `sum_k f_k^2 <= 1/6`.
    Sine,
    Zero,
    Custom {
        label: String,
        functions: Vec<Integrand>,
        bound: Option<f64>,
    },
}

impl FunctionFamily {
    pub fn label(&self) -> &str {
        match self {
            FunctionFamily::Sine => "sine",
            FunctionFamily::Zero => "zero",
            FunctionFamily::Custom { label, .. } => label,
        }
    }

    pub fn certified_bound(&self) -> Result<f64> {
        match self {
            FunctionFamily::Sine => Ok(1.0 / 6.0),
            FunctionFamily::Zero => Ok(0.0),
            FunctionFamily::Custom { bound: Some(b), .. } => Ok(*b),
            FunctionFamily::Custom { label, bound: None, .. } => Err(SmError::InvalidInput(format!(
                "family {label} has no certified bound on sup sum f_k^2"
            ))),
        }
    }

    /// `int f_k dmu` for `k = 1..=j_max` as left Riemann-Stieltjes sums.
    fn integrals(&self, path: &PathSample, j_max: usize) -> Vec<f64> {
        match self {
            FunctionFamily::Zero => vec![0.0; j_max],
            FunctionFamily::Sine if check_full_period(path.horizon()).is_ok() => {
                let sums = periodic_trig_sums(&path.increments(), j_max);
                (1..=j_max).map(|k| sums[k].1 / (PI * k as f64)).collect()
            }
            FunctionFamily::Sine => (1..=j_max)
                .map(|k| integrate_grid(path, &Integrand::sin(k as f64)) / (PI * k as f64))
                .collect(),
            FunctionFamily::Custom { functions, .. } => {
                functions[..j_max].iter().map(|f| integrate_grid(path, f)).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SumSquaresParams {
    pub j_levels: Vec<usize>,
    pub replicates: usize,
    pub grid_size: usize,
}

impl SumSquaresParams {
    pub fn new(j_levels: Vec<usize>, replicates: usize, grid_size: usize) -> Result<Self> {
        if j_levels.len() < 2 || j_levels[0] == 0 || j_levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SmError::InvalidInput(format!(
                "j levels must be at least two strictly increasing positive integers, got {j_levels:?}"
            )));
        }
        if replicates == 0 {
            return Err(SmError::InvalidInput("replicates must be positive".into()));
        }
        Ok(Self {
            j_levels,
            replicates,
            grid_size,
        })
    }
}

/// Per replicate, `T_j` at every requested level; reports 0.9-quantiles and
/// checks `Q(j_last) - Q(j_prev) <= 0.1 Q(j_prev) + 0.01`.
pub fn sum_squares_check(
    model: &ModelSpec,
    family: &FunctionFamily,
    params: &SumSquaresParams,
    stream: RngStream,
) -> Result<VerificationReport> {
    one_dimensional(model)?;
    let bound = family.certified_bound()?;
    let levels = &params.j_levels;
    let j_max = *levels.last().unwrap();
    if let FunctionFamily::Custom { functions, .. } = family {
        if functions.len() < j_max {
            return Err(SmError::InvalidInput(format!(
                "family provides {} functions, level {j_max} needs more",
                functions.len()
            )));
        }
    }
    let sampler = PathSampler::new(model, params.grid_size, &SamplingConfig::default())?;
    let rows: Vec<Vec<f64>> = (0..params.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let path = sampler.sample(stream.child(r))?;
            let a = family.integrals(&path, j_max);
            let mut row = Vec::with_capacity(levels.len());
            let mut acc = 0.0;
            let mut next = 0;
            for (k, v) in a.iter().enumerate() {
                acc += v * v;
                if k + 1 == levels[next] {
                    row.push(acc);
                    next += 1;
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let mut report = VerificationReport::new(
        "sum_squares",
        json!({
            "model": model,
            "family": family.label(),
            "certified_bound": bound,
            "j_levels": levels,
            "grid_size": params.grid_size,
        }),
        params.replicates,
        Some(stream.seed),
    );
    let mut q90 = Vec::with_capacity(levels.len());
    for (i, j) in levels.iter().enumerate() {
        let column: Vec<f64> = rows.iter().map(|r| r[i]).collect();
        let q = quantile(&column, 0.9);
        report.stat(format!("q90_j{j}"), q);
        report.stat(format!("median_j{j}"), median(&column));
        q90.push(q);
    }
    let (prev, last) = (q90[q90.len() - 2], q90[q90.len() - 1]);
    report.stat("stabilization_gap", last - prev);
    report.check(Check::new(
        "quantile_gap",
        last - prev,
        Relation::Le,
        0.1 * prev + MC_SLACK,
    ));
    report.per_replicate = Some(ReplicateTable {
        columns: levels.iter().map(|j| format!("T_{j}")).collect(),
        rows,
    });
    Ok(report)
}

/// `int_0^{T1} |mu(s+eps) - mu(s)|^3 / eps ds` by the trapezoid rule on the
/// path grid; `mu(s + eps)` is linearly interpolated when off the grid.
pub fn cubic_increment_integral(path: &PathSample, t1: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && t1 > 0.0) {
        return Err(SmError::Domain(format!("need T1 > 0 and eps > 0, got {t1}, {eps}")));
    }
    let horizon = path.horizon();
    let slack = 1e-12 * horizon;
    if t1 + eps > horizon + slack {
        return Err(SmError::Domain(format!("T1 + eps = {} exceeds the horizon {horizon}", t1 + eps)));
    }
    let h = path.step();
    if h > eps / 16.0 * (1.0 + 1e-12) {
        return Err(SmError::Domain(format!("grid step {h} is coarser than eps/16 = {}", eps / 16.0)));
    }
    let (grid, values) = (path.grid(), path.values());
    let g = |j: usize| (path.value_at(grid[j] + eps) - values[j]).abs().powi(3) / eps;
    let last = grid.iter().rposition(|t| *t <= t1 + slack).unwrap();
    let mut acc = 0.0;
    let mut prev = g(0);
    for j in 1..=last {
        let cur = g(j);
        acc += 0.5 * h * (prev + cur);
        prev = cur;
    }
    let tail = t1 - grid[last];
    if tail > slack {
        let end = (path.value_at(t1 + eps) - path.value_at(t1)).abs().powi(3) / eps;
        acc += 0.5 * tail * (prev + end);
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CubicParams {
    pub t1: f64,
    /// Strictly decreasing schedule.
    pub epsilons: Vec<f64>,
    pub replicates: usize,
    pub grid_size: usize,
}

impl CubicParams {
    pub fn new(t1: f64, epsilons: Vec<f64>, replicates: usize, grid_size: usize) -> Result<Self> {
        if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) || epsilons.windows(2).any(|w| w[0] <= w[1]) {
            return Err(SmError::InvalidInput(format!(
                "eps schedule must be positive and strictly decreasing, got {epsilons:?}"
            )));
        }
        if replicates == 0 {
            return Err(SmError::InvalidInput("replicates must be positive".into()));
        }
        Ok(Self {
            t1,
            epsilons,
            replicates,
            grid_size,
        })
    }
}

/// Medians of the cubic increment integral along the eps schedule. Checks
/// strict decrease, plus the closed-form reference where one exists:
/// `T1 eps^2` for Lebesgue and `E|N(0,1)|^3 sqrt(eps)` (to 25%) for Wiener.
pub fn cubic_increment_check(model: &ModelSpec, params: &CubicParams, stream: RngStream) -> Result<VerificationReport> {
    one_dimensional(model)?;
    let max_eps = params.epsilons[0];
    if params.t1 + max_eps > model.horizon() * (1.0 + 1e-12) {
        return Err(SmError::Domain(format!(
            "T1 + max eps = {} exceeds the horizon {}",
            params.t1 + max_eps,
            model.horizon()
        )));
    }
    let sampler = PathSampler::new(model, params.grid_size, &SamplingConfig::default())?;
    let rows: Vec<Vec<f64>> = (0..params.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let path = sampler.sample(stream.child(r))?;
            params
                .epsilons
                .iter()
                .map(|&e| cubic_increment_integral(&path, params.t1, e))
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut report = VerificationReport::new(
        "cubic_increment",
        json!({
            "model": model,
            "T1": params.t1,
            "epsilons": params.epsilons,
            "grid_size": params.grid_size,
        }),
        params.replicates,
        Some(stream.seed),
    );
    let medians: Vec<f64> = (0..params.epsilons.len())
        .map(|i| median(&rows.iter().map(|r| r[i]).collect::<Vec<_>>()))
        .collect();
    for (e, m) in params.epsilons.iter().zip(&medians) {
        report.stat(format!("median_eps{e}"), *m);
    }
    for (i, w) in medians.windows(2).enumerate() {
        report.check(Check::new(
            format!("decrease_eps{}_to_eps{}", params.epsilons[i], params.epsilons[i + 1]),
            w[1],
            Relation::Lt,
            w[0],
        ));
    }
    for (e, m) in params.epsilons.iter().zip(&medians) {
        match model.kind() {
            ModelKind::DeterministicLebesgue => report.check(Check::new(
                format!("lebesgue_exact_eps{e}"),
                (m - params.t1 * e * e).abs(),
                Relation::Le,
                1e-6,
            )),
            ModelKind::Wiener => report.check(Check::new(
                format!("wiener_relative_error_eps{e}"),
                (m / (WIENER_CUBIC_CONSTANT * e.sqrt()) - 1.0).abs(),
                Relation::Le,
                0.25,
            )),
            _ => {}
        }
    }
    report.per_replicate = Some(ReplicateTable {
        columns: params.epsilons.iter().map(|e| format!("I_eps{e}")).collect(),
        rows,
    });
    Ok(report)
}
