//! Exact and Monte Carlo checks of the inequalities behind the limit
//! theorems. Every check returns a [`VerificationReport`] whose pass flag is
//! a pure function of the recorded statistics and thresholds.

mod moments;
mod pz;
mod sums;

pub use moments::{
    exp_moment_constant, exp_moment_sharpness_check, holder_bound_check, holder_catalogue, ExpMomentConstant,
    DEFAULT_SHARPNESS_GRID,
};
pub use pz::{
    paley_zygmund_check, pz_exact_probability, random_lambdas, PzMode, EXACT_MAX_TERMS, PZ_BOUND,
};
pub use sums::{
    cubic_increment_check, cubic_increment_integral, sum_squares_check, CubicParams, FunctionFamily,
    SumSquaresParams, DEFAULT_EPSILONS, DEFAULT_REPLICATES, MC_SLACK, WIENER_CUBIC_CONSTANT,
};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::fmt_f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Le,
    Lt,
    Ge,
    Gt,
}

impl Relation {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Lt => lhs < rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Gt => lhs > rhs,
        }
    }
}

/// One comparison `statistic <relation> threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, statistic: f64, relation: Relation, threshold: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            relation,
            threshold,
            pass: relation.holds(statistic, threshold),
        }
    }

    pub fn recompute(&self) -> bool {
        self.relation.holds(self.statistic, self.threshold)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub name: String,
    pub value: f64,
}

/// Per-replicate statistics, one row per replicate in index order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReplicateTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub test: String,
    pub parameters: serde_json::Value,
    pub replicates: usize,
    pub master_seed: Option<u64>,
    pub statistics: Vec<Statistic>,
    pub checks: Vec<Check>,
    pub pass: bool,
    #[serde(skip)]
    pub per_replicate: Option<ReplicateTable>,
}

impl VerificationReport {
    pub fn new(test: &str, parameters: serde_json::Value, replicates: usize, master_seed: Option<u64>) -> Self {
        Self {
            test: test.to_string(),
            parameters,
            replicates,
            master_seed,
            statistics: Vec::new(),
            checks: Vec::new(),
            pass: true,
            per_replicate: None,
        }
    }

    pub fn stat(&mut self, name: impl Into<String>, value: f64) {
        self.statistics.push(Statistic {
            name: name.into(),
            value,
        });
    }

    pub fn statistic(&self, name: &str) -> Option<f64> {
        self.statistics.iter().find(|s| s.name == name).map(|s| s.value)
    }

    pub fn check(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// The pass flag as implied by the stored checks.
    pub fn recompute_pass(&self) -> bool {
        self.checks.iter().all(Check::recompute)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Writes the per-replicate table (header `replicate,<columns>`); writes
    /// only the header when the check has no replicates.
    pub fn write_replicates_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let empty = ReplicateTable::default();
        let table = self.per_replicate.as_ref().unwrap_or(&empty);
        let mut header = vec!["replicate".to_string()];
        header.extend(table.columns.iter().cloned());
        out.write_record(&header)?;
        for (i, row) in table.rows.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(row.iter().map(|v| fmt_f64(*v)));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}
