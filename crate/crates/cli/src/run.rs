use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use smpath_core::besov::{besov_norm_estimate, dyadic_level_sums, membership_diagnostic, BesovParams, BesovReport};
use smpath_core::fourier::{coefficients_by_parts, coefficients_direct, convergence_report, FourierCoefficients};
use smpath_core::integrate::{Integrand, QuadratureConfig};
use smpath_core::io::{fmt_f64, write_field_csv, write_path_csv};
use smpath_core::rademacher::exact_measure;
use smpath_core::verify::{self, FunctionFamily, PzMode, VerificationReport};
use smpath_core::{sample_field, sample_path, ModelKind, RngStream};

use crate::config::{Command, ExperimentConfig};

#[derive(Serialize)]
struct ArtifactEntry {
    name: String,
    sha256: String,
    bytes: usize,
}

/// Output directory plus the checksums of everything written to it.
struct Artifacts {
    dir: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl Artifacts {
    fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.entries.push(ArtifactEntry {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    fn write_with<F>(&mut self, name: &str, fill: F) -> anyhow::Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> smpath_core::Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.write(name, &buf)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// The manifest is the only file carrying a timestamp and is not itself
    /// checksummed.
    fn finish(self, config: &ExperimentConfig, pass: Option<bool>) -> anyhow::Result<PathBuf> {
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let manifest = json!({
            "tool": "smpath",
            "version": env!("CARGO_PKG_VERSION"),
            "command": config.command.map(Command::name),
            "config_hash": config.hash(),
            "seed": config.seed,
            "threads": config.threads,
            "out": self.dir,
            "pass": pass,
            "artifacts": self.entries,
            "created_unix": created,
        });
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub struct RunOutcome {
    /// `Some(false)` when a verification check failed.
    pub pass: Option<bool>,
    pub manifest: PathBuf,
}

pub fn run(config: &ExperimentConfig) -> anyhow::Result<RunOutcome> {
    let command = config.command.context("no command")?;
    let out = config.out.clone().unwrap_or_else(|| PathBuf::from("smpath-out"));
    let mut artifacts = Artifacts::new(&out)?;
    artifacts.write_json("config.json", &config.portable())?;
    let pass = match command {
        Command::Simulate => simulate(config, &mut artifacts).map(|_| None)?,
        Command::Besov => besov(config, &mut artifacts).map(|_| None)?,
        Command::Fourier => fourier(config, &mut artifacts).map(|_| None)?,
        Command::Verify => Some(verify(config, &mut artifacts)?),
    };
    let manifest = artifacts.finish(config, pass)?;
    Ok(RunOutcome { pass, manifest })
}

fn seed(config: &ExperimentConfig) -> u64 {
    config.seed.unwrap_or_default()
}

fn dyadic_depth(grid: usize) -> anyhow::Result<u32> {
    if grid < 2 || !grid.is_power_of_two() {
        bail!("two-dimensional models need a power-of-two grid, got {grid}");
    }
    Ok(grid.trailing_zeros())
}

fn simulate(config: &ExperimentConfig, artifacts: &mut Artifacts) -> anyhow::Result<()> {
    let model = config.model_spec()?;
    let grid = config.grid.context("no grid")?;
    let stream = RngStream::new(seed(config), 0);
    if model.kind().dimension() == 2 {
        let field = sample_field(&model, stream, 2, dyadic_depth(grid)?)?;
        artifacts.write_with("field.csv", |w| write_field_csv(&field, w))
    } else {
        let path = sample_path(&model, stream, grid)?;
        artifacts.write_with("path.csv", |w| write_path_csv(&path, w))
    }
}

fn besov(config: &ExperimentConfig, artifacts: &mut Artifacts) -> anyhow::Result<()> {
    let model = config.model_spec()?;
    let dim = model.kind().dimension();
    let depth = config.n_max.context("no depth")?;
    let field = sample_field(&model, RngStream::new(seed(config), 0), dim, depth)?;
    let (p, alpha) = (config.p.unwrap_or(2.0), config.alpha.unwrap_or(0.5));
    let q = config.q.unwrap_or(p);
    let params = BesovParams::new(p, alpha, config.n_min.unwrap_or(0), depth)?
        .with_q(q)
        .with_direction(config.direction.unwrap_or(1));
    let sums = dyadic_level_sums(&field, &params)?;
    let diagnostic = membership_diagnostic(&sums)?;
    artifacts.write_json("besov.json", &BesovReport::new(&sums, &diagnostic))?;
    let mut csv = String::from("n,terms,V,W,cumulative\n");
    for l in &sums.levels {
        csv += &format!(
            "{},{},{},{},{}\n",
            l.n,
            l.terms,
            fmt_f64(l.raw),
            fmt_f64(l.weighted),
            fmt_f64(l.cumulative)
        );
    }
    artifacts.write("levels.csv", csv.as_bytes())?;
    if config.norm == Some(true) {
        let norm = besov_norm_estimate(&field, p, q, alpha)?;
        artifacts.write_json("norm.json", &json!({ "p": p, "q": q, "alpha": alpha, "norm": norm }))?;
    }
    Ok(())
}

fn fourier(config: &ExperimentConfig, artifacts: &mut Artifacts) -> anyhow::Result<()> {
    let model = config.model_spec()?;
    if model.kind().dimension() != 1 {
        bail!("Fourier expansion needs a one-dimensional model");
    }
    let grid = config.grid.context("no grid")?;
    let k_max = config.max_freq.context("no K")?;
    let stream = RngStream::new(seed(config), 0);
    let path = sample_path(&model, stream, grid)?;
    let q = QuadratureConfig::default();
    let method = config.method.as_deref().unwrap_or("parts");
    let coefficients: FourierCoefficients = match method {
        "parts" | "by-parts" => match model.kind() {
            ModelKind::DeterministicLebesgue | ModelKind::RademacherSeries => {
                coefficients_by_parts(&exact_measure(&model, stream)?, k_max, &q)?
            }
            _ => coefficients_by_parts(&path, k_max, &q)?,
        },
        "direct" => coefficients_direct(&path, k_max)?,
        other => bail!("unknown method `{other}`; use parts or direct"),
    };
    for w in &coefficients.provenance().warnings {
        eprintln!("warning: {w}");
    }
    artifacts.write_with("coefficients.csv", |w| coefficients.write_csv(w))?;
    let n_list = config.n_list.clone().unwrap_or_else(|| vec![k_max]);
    let report = convergence_report(&path, &coefficients, &n_list, config.margin.unwrap_or(0.5))?;
    artifacts.write_json(
        "convergence.json",
        &json!({
            "method": coefficients.method(),
            "warnings": coefficients.provenance().warnings,
            "interior_margin": report.interior_margin,
            "entries": report.entries,
            "block_energies": report.block_energies,
        }),
    )?;
    artifacts.write_with("path.csv", |w| write_path_csv(&path, w))
}

fn holder_function(name: &str) -> anyhow::Result<Integrand> {
    if let Some(f) = verify::holder_catalogue().into_iter().find(|f| f.label() == name) {
        return Ok(f);
    }
    let f = Integrand::from_name(name)?;
    // on [0, 1] the trigonometric catalogue functions are bounded by 1
    Ok(match f.bound() {
        Some(_) => f,
        None => bail!("function `{name}` has no certified bound; use one of zero, one, x, sin:2pi, const:c, sin:k, cos:k"),
    })
}

fn verify(config: &ExperimentConfig, artifacts: &mut Artifacts) -> anyhow::Result<bool> {
    let test = config.test.as_deref().context("no test")?;
    let stream = RngStream::new(seed(config), 0);
    let report: VerificationReport = match test {
        "pz" => {
            let lambdas = match &config.lambdas {
                Some(l) => l.clone(),
                None => verify::random_lambdas(config.m.context("no m")?, RngStream::new(seed(config), 1)),
            };
            let mode = if config.exact == Some(true) {
                PzMode::Exact
            } else {
                PzMode::MonteCarlo {
                    replicates: config.replicates.context("no replicates")?,
                }
            };
            verify::paley_zygmund_check(&lambdas, mode, stream)?
        }
        "sum-squares" => {
            let family = match config.family.as_deref() {
                Some("sine") | None => FunctionFamily::Sine,
                Some("zero") => FunctionFamily::Zero,
                Some(other) => bail!("unknown function family `{other}`; use sine or zero"),
            };
            let params = verify::SumSquaresParams::new(
                config.j_levels.clone().context("no j levels")?,
                config.replicates.context("no replicates")?,
                config.grid.context("no grid")?,
            )?;
            verify::sum_squares_check(&config.model_spec()?, &family, &params, stream)?
        }
        "cubic" => {
            let params = verify::CubicParams::new(
                config.t1.context("no T1")?,
                config.epsilons.clone().context("no eps schedule")?,
                config.replicates.context("no replicates")?,
                config.grid.context("no grid")?,
            )?;
            verify::cubic_increment_check(&config.model_spec()?, &params, stream)?
        }
        "exp-moment" => verify::exp_moment_sharpness_check(
            config.k.context("no k")?,
            config.lambda.context("no lambda")?,
            config.grid.context("no grid")?,
        )?,
        "holder" => verify::holder_bound_check(
            &holder_function(config.function.as_deref().context("no function")?)?,
            config.k.context("no k")?,
            config.lambda.context("no lambda")?,
            &QuadratureConfig::default(),
        )?,
        other => bail!("unknown verification test `{other}`"),
    };
    let json = report.to_json()?;
    artifacts.write("report.json", json.as_bytes())?;
    artifacts.write_with("replicates.csv", |w| report.write_replicates_csv(w))?;
    Ok(report.pass)
}
