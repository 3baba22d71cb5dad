use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use smpath_core::{ModelKind, ModelSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Besov,
    Fourier,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Besov => "besov",
            Command::Fourier => "fourier",
            Command::Verify => "verify",
        }
    }
}

/// One experiment. Every field is optional in a config file; flags given on
/// the command line override file values, and missing values are filled with
/// per-command defaults by [`ExperimentConfig::resolve`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_min: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<bool>,

    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub max_freq: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_levels: Option<Vec<usize>>,
    #[serde(rename = "T1", skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
}

/// Keys accepted by every command.
const COMMON_KEYS: &[&str] = &["command", "model", "T", "terms", "hurst", "seed", "grid", "out", "threads"];

fn command_keys(command: Command) -> &'static [&'static str] {
    match command {
        Command::Simulate => &[],
        Command::Besov => &["p", "q", "alpha", "n_min", "n_max", "direction", "norm"],
        Command::Fourier => &["K", "n_list", "method", "margin"],
        Command::Verify => &[
            "test", "replicates", "lambdas", "m", "exact", "family", "j_levels", "T1", "epsilons", "k", "lambda",
            "function",
        ],
    }
}

/// Verification tests, with the keys each one reads.
pub const VERIFY_TESTS: &[(&str, &[&str])] = &[
    ("pz", &["seed", "replicates", "lambdas", "m", "exact"]),
    ("sum-squares", &["model", "T", "terms", "hurst", "seed", "grid", "replicates", "family", "j_levels"]),
    ("cubic", &["model", "T", "terms", "hurst", "seed", "grid", "replicates", "T1", "epsilons"]),
    ("exp-moment", &["k", "lambda", "grid"]),
    ("holder", &["k", "lambda", "function"]),
];

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_GRID: usize = 4096;
pub const DEFAULT_DEPTH: u32 = 10;
pub const DEFAULT_DEPTH_2D: u32 = 7;

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `flags` replace those in `self`.
    pub fn overridden_by(self, flags: ExperimentConfig) -> ExperimentConfig {
        macro_rules! pick {
            ($($f:ident),*) => {
                ExperimentConfig { $($f: flags.$f.or(self.$f)),* }
            };
        }
        pick!(
            command, model, horizon, terms, hurst, seed, replicates, grid, out, threads, p, q, alpha, n_min, n_max,
            direction, norm, max_freq, n_list, method, margin, test, lambdas, m, exact, family, j_levels, t1,
            epsilons, k, lambda, function
        )
    }

    fn present_keys(&self) -> Vec<String> {
        match serde_json::to_value(self) {
            Ok(serde_json::Value::Object(map)) => map.keys().cloned().collect(),
            _ => Vec::new(),
        }
    }

    /// Checks that every key belongs to `command` and fills defaults.
    pub fn resolve(mut self, command: Command) -> anyhow::Result<ExperimentConfig> {
        match self.command {
            Some(c) if c != command => bail!(
                "config is for `{}` but the `{}` command was run",
                c.name(),
                command.name()
            ),
            _ => self.command = Some(command),
        }
        let allowed = command_keys(command);
        for key in self.present_keys() {
            if !COMMON_KEYS.contains(&key.as_str()) && !allowed.contains(&key.as_str()) {
                bail!("key `{key}` does not apply to the {} command", command.name());
            }
        }
        if command != Command::Verify {
            self.seed.get_or_insert(DEFAULT_SEED);
        }
        match command {
            Command::Simulate => {
                self.model.get_or_insert_with(|| "wiener".into());
                self.horizon.get_or_insert(1.0);
                self.grid.get_or_insert(DEFAULT_GRID);
            }
            Command::Besov => {
                self.model.get_or_insert_with(|| "wiener".into());
                self.horizon.get_or_insert(1.0);
                let two_d = self.model_kind()?.dimension() == 2;
                if let Some(g) = self.grid {
                    if !g.is_power_of_two() || g < 2 {
                        bail!("besov needs a power-of-two grid, got {g}");
                    }
                    let depth = g.trailing_zeros();
                    if self.n_max.is_some_and(|n| n != depth) {
                        bail!("n_max must equal log2(grid) = {depth}");
                    }
                    self.n_max = Some(depth);
                }
                let depth = *self.n_max.get_or_insert(if two_d { DEFAULT_DEPTH_2D } else { DEFAULT_DEPTH });
                self.grid = Some(1usize << depth);
                self.n_min.get_or_insert(depth.min(2));
                self.p.get_or_insert(2.0);
                let p = self.p.unwrap();
                self.q.get_or_insert(p);
                self.alpha.get_or_insert(0.5);
                self.direction.get_or_insert(1);
                self.norm.get_or_insert(false);
            }
            Command::Fourier => {
                self.model.get_or_insert_with(|| "wiener".into());
                self.horizon.get_or_insert(TAU);
                self.grid.get_or_insert(DEFAULT_GRID);
                let k = *self.max_freq.get_or_insert(64);
                self.n_list.get_or_insert_with(|| {
                    let mut n: Vec<usize> = (0..).map(|j| 1usize << j).take_while(|v| *v < k).collect();
                    n.push(k);
                    n
                });
                self.method.get_or_insert_with(|| "parts".into());
                self.margin.get_or_insert(smpath_core::fourier::DEFAULT_INTERIOR_MARGIN);
            }
            Command::Verify => self.resolve_verify()?,
        }
        Ok(self)
    }

    fn resolve_verify(&mut self) -> anyhow::Result<()> {
        let Some(test) = self.test.clone() else {
            bail!(
                "verify needs a test name: one of {}",
                VERIFY_TESTS.iter().map(|t| t.0).collect::<Vec<_>>().join(", ")
            );
        };
        let Some((_, keys)) = VERIFY_TESTS.iter().find(|t| t.0 == test) else {
            bail!("unknown verification test `{test}`");
        };
        for key in self.present_keys() {
            if !["command", "test", "out", "threads"].contains(&key.as_str()) && !keys.contains(&key.as_str()) {
                bail!("key `{key}` does not apply to verify {test}");
            }
        }
        use smpath_core::verify::*;
        match test.as_str() {
            "pz" => {
                self.seed.get_or_insert(DEFAULT_SEED);
                self.exact.get_or_insert(false);
                if self.exact == Some(false) {
                    self.replicates.get_or_insert(DEFAULT_REPLICATES);
                } else if self.replicates.is_some() {
                    bail!("exact enumeration takes no replicate count");
                }
                match (&self.lambdas, self.m) {
                    (Some(l), Some(m)) if l.len() != m => bail!("--m {m} disagrees with {} lambdas", l.len()),
                    (Some(l), None) => self.m = Some(l.len()),
                    (None, None) => bail!("pz needs --lambdas or --m"),
                    _ => {}
                }
            }
            "sum-squares" => {
                self.seed.get_or_insert(DEFAULT_SEED);
                self.model.get_or_insert_with(|| "wiener".into());
                self.horizon.get_or_insert(TAU);
                self.grid.get_or_insert(1 << 13);
                self.replicates.get_or_insert(DEFAULT_REPLICATES);
                self.family.get_or_insert_with(|| "sine".into());
                self.j_levels.get_or_insert_with(|| vec![64, 1024]);
            }
            "cubic" => {
                self.seed.get_or_insert(DEFAULT_SEED);
                self.model.get_or_insert_with(|| "wiener".into());
                self.t1.get_or_insert(1.0);
                self.epsilons.get_or_insert_with(|| DEFAULT_EPSILONS.to_vec());
                let reach = self.t1.unwrap() + self.epsilons.as_ref().unwrap().iter().copied().fold(0.0, f64::max);
                self.horizon.get_or_insert(reach);
                self.grid.get_or_insert(1 << 14);
                self.replicates.get_or_insert(DEFAULT_REPLICATES);
            }
            "exp-moment" => {
                self.k.get_or_insert(1);
                self.lambda.get_or_insert(1.0);
                self.grid.get_or_insert(DEFAULT_SHARPNESS_GRID);
            }
            "holder" => {
                self.k.get_or_insert(1);
                self.lambda.get_or_insert(1.0);
                self.function.get_or_insert_with(|| "x".into());
            }
            _ => unreachable!(),
        }
        Ok(())
    }

    pub fn model_kind(&self) -> anyhow::Result<ModelKind> {
        let name = self.model.as_deref().context("no model given")?;
        Ok(ModelKind::from_str(name)?)
    }

    pub fn model_spec(&self) -> anyhow::Result<ModelSpec> {
        let kind = self.model_kind()?;
        Ok(ModelSpec::new(kind, self.horizon.context("no horizon T given")?, self.terms, self.hurst)?)
    }

    /// The experiment without the output directory and thread count.
    pub fn portable(&self) -> ExperimentConfig {
        ExperimentConfig {
            out: None,
            threads: None,
            ..self.clone()
        }
    }

    /// SHA-256 of the canonical JSON of the resolved experiment, without the
    /// output directory and thread count (neither affects results).
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.portable()).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
