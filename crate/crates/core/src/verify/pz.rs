//! `P[(sum lambda_k eps_k)^2 >= (1/4) sum lambda_k^2] >= 1/8` for independent
//! symmetric signs.

use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use super::{Check, Relation, ReplicateTable, VerificationReport};
use crate::error::{Result, SmError};
use crate::rng::RngStream;
use crate::verify::MC_SLACK;

pub const PZ_BOUND: f64 = 0.125;
/// Largest `m` enumerated exactly.
pub const EXACT_MAX_TERMS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PzMode {
    Exact,
    MonteCarlo { replicates: usize },
}

/// `sum_i s_i lambda_i` over all sign patterns, pattern bit `i` set meaning
/// `s_i = -1`.
fn signed_sums(lambdas: &[f64]) -> Vec<f64> {
    let mut sums = vec![0.0; 1 << lambdas.len()];
    sums[0] = lambdas.iter().sum();
    for mask in 1..sums.len() {
        let low = mask.trailing_zeros() as usize;
        sums[mask] = sums[mask & (mask - 1)] - 2.0 * lambdas[low];
    }
    sums
}

/// Exact probability over all `2^m` equally likely sign patterns.
pub fn pz_exact_probability(lambdas: &[f64]) -> Result<f64> {
    let m = lambdas.len();
    if m == 0 || m > EXACT_MAX_TERMS {
        return Err(SmError::InvalidInput(format!(
            "exact enumeration needs 1 <= m <= {EXACT_MAX_TERMS}, got {m}"
        )));
    }
    let threshold = 0.25 * lambdas.iter().map(|l| l * l).sum::<f64>();
    // meet in the middle: every full sum is one addition of two half sums
    let (lo, hi) = lambdas.split_at(m / 2);
    let (lo, hi) = (signed_sums(lo), signed_sums(hi));
    let hits: u64 = hi
        .par_iter()
        .map(|h| lo.iter().filter(|l| (*l + h).powi(2) >= threshold).count() as u64)
        .sum();
    Ok(hits as f64 / (1u64 << m) as f64)
}

/// `m` coefficients uniform on `[-1, 1]`.
pub fn random_lambdas(m: usize, stream: RngStream) -> Vec<f64> {
    let mut rng = stream.rng();
    (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

pub fn paley_zygmund_check(lambdas: &[f64], mode: PzMode, stream: RngStream) -> Result<VerificationReport> {
    if lambdas.is_empty() {
        return Err(SmError::InvalidInput("at least one coefficient is needed".into()));
    }
    let square_sum: f64 = lambdas.iter().map(|l| l * l).sum();
    let threshold = 0.25 * square_sum;
    let params = |mode: &str| json!({ "lambdas": lambdas, "m": lambdas.len(), "mode": mode });
    match mode {
        PzMode::Exact => {
            let p = pz_exact_probability(lambdas)?;
            let mut report = VerificationReport::new("paley_zygmund", params("exact"), 0, None);
            report.stat("exact_probability", p);
            report.stat("estimate", p);
            report.check(Check::new("probability_at_least_one_eighth", p, Relation::Ge, PZ_BOUND));
            Ok(report)
        }
        PzMode::MonteCarlo { replicates } => {
            if replicates == 0 {
                return Err(SmError::InvalidInput("Monte Carlo mode needs replicates >= 1".into()));
            }
            let rows: Vec<Vec<f64>> = (0..replicates as u64)
                .into_par_iter()
                .map(|r| {
                    let mut rng = stream.child(r).rng();
                    let s: f64 = lambdas
                        .iter()
                        .map(|l| if rng.random::<bool>() { *l } else { -*l })
                        .sum();
                    vec![s, if s * s >= threshold { 1.0 } else { 0.0 }]
                })
                .collect();
            let estimate = rows.iter().map(|r| r[1]).sum::<f64>() / replicates as f64;
            let mut report = VerificationReport::new("paley_zygmund", params("monte_carlo"), replicates, Some(stream.seed));
            report.stat("estimate", estimate);
            report.check(Check::new(
                "probability_at_least_one_eighth",
                estimate,
                Relation::Ge,
                PZ_BOUND - MC_SLACK,
            ));
            report.per_replicate = Some(ReplicateTable {
                columns: vec!["signed_sum".into(), "hit".into()],
                rows,
            });
            Ok(report)
        }
    }
}
