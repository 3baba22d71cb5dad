//! Acceptance suite: runs the twelve end-to-end criteria at their pinned
//! tolerances and seeds, printing one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p smpath-core --test acceptance`.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;
use std::time::Instant;

use rayon::prelude::*;

use smpath_core::besov::{
    besov_norm_estimate, dyadic_level_sums, lp_modulus, membership_diagnostic, BesovParams, BesovReport, Verdict,
};
use smpath_core::fourier::{
    coefficients_by_parts, coefficients_direct, convergence_report, dyadic_block_energies, partial_sum,
    ConvergenceReport, FourierCoefficients,
};
use smpath_core::integrate::{integrate_grid, integrate_rademacher, Integrand, QuadratureConfig};
use smpath_core::io::{write_field_csv, write_path_csv};
use smpath_core::stats::{fit_line, median};
use smpath_core::verify::{
    cubic_increment_check, exp_moment_constant, exp_moment_sharpness_check, holder_bound_check, holder_catalogue,
    paley_zygmund_check, pz_exact_probability, random_lambdas, sum_squares_check, CubicParams, FunctionFamily,
    PzMode, SumSquaresParams, DEFAULT_EPSILONS, DEFAULT_SHARPNESS_GRID, WIENER_CUBIC_CONSTANT,
};
use smpath_core::{realize_rademacher, sample_field, sample_path, FieldSample, ModelSpec, Result, RngStream};

const MASTER_SEED: u64 = 20_240_917;
const WIENER_SEEDS: u64 = 32;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn stream(criterion: u64, index: u64) -> RngStream {
    RngStream::new(MASTER_SEED + criterion, index)
}

fn lebesgue_coefficients(k: usize) -> Result<FourierCoefficients> {
    let leb = smpath_core::SeriesMeasure::lebesgue(TAU)?;
    coefficients_by_parts(&leb, k, &QuadratureConfig::default())
}

/// Wiener paths on `[0, 2 pi]` at `2^14` intervals, by-parts coefficients up
/// to `K = 512` and the convergence report at `n = 64, 512`; shared by
/// criteria 2-4.
struct WienerRun {
    coefficients: FourierCoefficients,
    report: ConvergenceReport,
}

fn wiener_runs() -> &'static [WienerRun] {
    static RUNS: OnceLock<Vec<WienerRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let model = ModelSpec::wiener(TAU).unwrap();
        (0..WIENER_SEEDS)
            .into_par_iter()
            .map(|s| {
                let path = sample_path(&model, stream(2, s), 1 << 14).unwrap();
                let coefficients = coefficients_by_parts(&path, 512, &QuadratureConfig::default()).unwrap();
                let report = convergence_report(&path, &coefficients, &[64, 512], 0.5).unwrap();
                WienerRun { coefficients, report }
            })
            .collect()
    })
}

fn c1_sawtooth_oracle() -> Result<Outcome> {
    let c = lebesgue_coefficients(64)?;
    let mut err: f64 = (c.xi(0) - TAU).abs();
    for k in 1..=64 {
        err = err.max(c.xi(k).abs()).max((c.eta(k) + 2.0 / k as f64).abs());
    }
    let path = sample_path(&ModelSpec::lebesgue(TAU)?, stream(1, 0), 1 << 14)?;
    let d = coefficients_direct(&path, 64)?;
    let mut direct_err: f64 = 0.0;
    for k in 0..=64 {
        direct_err = direct_err.max((d.xi(k) - c.xi(k)).abs()).max((d.eta(k) - c.eta(k)).abs());
    }
    outcome(
        err <= 1e-9 && direct_err <= 1e-3,
        format!("by-parts max error {err:.2e} (<= 1e-9), direct vs by-parts {direct_err:.2e} (<= 1e-3)"),
    )
}

fn c2_endpoint() -> Result<Outcome> {
    let c = lebesgue_coefficients(512)?;
    let mut saw_err: f64 = 0.0;
    for n in [0, 1, 16, 64, 512] {
        saw_err = saw_err.max((partial_sum(&c, n, 0.0)? - PI).abs());
    }
    let runs = wiener_runs();
    let e64: Vec<f64> = runs.iter().map(|r| r.report.entries[0].endpoint_error).collect();
    let e512: Vec<f64> = runs.iter().map(|r| r.report.entries[1].endpoint_error).collect();
    let (m64, m512) = (median(&e64), median(&e512));
    outcome(
        saw_err <= 1e-12 && m512 < m64,
        format!("sawtooth |S_n(0) - pi| max {saw_err:.2e} (<= 1e-12); Wiener median endpoint error n=512 {m512:.4e} < n=64 {m64:.4e}"),
    )
}

fn c3_interior() -> Result<Outcome> {
    let runs = wiener_runs();
    let improved = runs
        .iter()
        .filter(|r| r.report.entries[1].sup_interior_error < r.report.entries[0].sup_interior_error)
        .count();
    let frac = improved as f64 / runs.len() as f64;
    outcome(
        frac >= 0.9,
        format!("sup interior error smaller at n=512 than n=64 in {improved}/{} seeds ({:.0}%, need >= 90%)", runs.len(), 100.0 * frac),
    )
}

fn c4_energy() -> Result<Outcome> {
    let runs = wiener_runs();
    // full dyadic blocks only
    let blocks: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| {
            dyadic_block_energies(&r.coefficients)
                .iter()
                .filter(|b| b.k_hi - b.k_lo == b.k_lo)
                .map(|b| b.energy)
                .collect()
        })
        .collect();
    let strict = blocks.iter().filter(|b| b.windows(2).all(|w| w[1] < w[0])).count();
    let slopes: Vec<f64> = blocks
        .iter()
        .map(|b| {
            let xs: Vec<f64> = (0..b.len()).map(|j| j as f64).collect();
            let ys: Vec<f64> = b.iter().map(|e| e.log2()).collect();
            fit_line(&xs, &ys).slope
        })
        .collect();
    let decreasing = slopes.iter().filter(|s| **s < 0.0).count();
    let block_medians: Vec<f64> = (0..blocks[0].len())
        .map(|j| median(&blocks.iter().map(|b| b[j]).collect::<Vec<_>>()))
        .collect();
    let medians_decrease = block_medians.windows(2).all(|w| w[1] < w[0]);
    let frac = decreasing as f64 / runs.len() as f64;
    let saw = lebesgue_coefficients(1000)?.energy(1000);
    outcome(
        frac >= 0.9 && medians_decrease && (saw - 6.5757).abs() <= 1e-3,
        format!(
            "block energies trend down (negative log2 slope) in {decreasing}/{} seeds, strictly monotone in {strict}/{}; block medians decreasing: {medians_decrease}; sawtooth energy K=1000 {saw:.6} (6.5757 +- 1e-3)",
            runs.len(),
            runs.len()
        ),
    )
}

fn c5_dyadic_sums() -> Result<Outcome> {
    let start = Instant::now();
    let line = FieldSample::from_path(&sample_path(&ModelSpec::lebesgue(1.0)?, stream(5, 0), 1 << 10)?)?;
    let mut worst: f64 = 0.0;
    for p in [1.0, 2.0, 3.0] {
        for alpha in [0.25, 0.5, 0.75] {
            let sums = dyadic_level_sums(&line, &BesovParams::new(p, alpha, 0, 10)?)?;
            for l in &sums.levels {
                let exact = (l.n as f64 * p * (alpha - 1.0)).exp2();
                worst = worst.max((l.weighted - exact).abs() / exact);
            }
        }
    }
    let model = ModelSpec::wiener(1.0)?;
    let per_seed: Vec<(f64, Verdict, f64, Verdict)> = (0..64u64)
        .into_par_iter()
        .map(|s| {
            let field = sample_field(&model, stream(5, s + 1), 1, 12)?;
            let lo = dyadic_level_sums(&field, &BesovParams::new(2.0, 0.3, 4, 12)?)?;
            let hi = dyadic_level_sums(&field, &BesovParams::new(2.0, 0.7, 4, 12)?)?;
            Ok((
                lo.slope,
                membership_diagnostic(&lo)?.verdict,
                hi.slope,
                membership_diagnostic(&hi)?.verdict,
            ))
        })
        .collect::<Result<_>>()?;
    let slopes_ok = per_seed
        .iter()
        .filter(|(a, _, b, _)| (a + 0.4).abs() <= 0.15 && (b - 0.4).abs() <= 0.15)
        .count();
    let conv = per_seed.iter().filter(|r| r.1 == Verdict::Convergent).count();
    let div = per_seed.iter().filter(|r| r.3 == Verdict::Divergent).count();
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-12 && slopes_ok == 64 && conv >= 58 && div >= 58 && elapsed < 60.0,
        format!(
            "linear field max relative error {worst:.2e} (<= 1e-12); Wiener slopes within 2a-1 +- 0.15 in {slopes_ok}/64; CONVERGENT(a=0.3) {conv}/64, DIVERGENT(a=0.7) {div}/64 (need >= 58); {elapsed:.1}s"
        ),
    )
}

fn c6_direct_norm() -> Result<Outcome> {
    let path = sample_path(&ModelSpec::lebesgue(1.0)?, stream(6, 0), 1 << 12)?;
    let norm = besov_norm_estimate(&path, 2.0, 2.0, 0.5)?;
    let omega = lp_modulus(&path, 2.0, &[0.5])?[0];
    outcome(
        (norm - 1.28446).abs() <= 0.02 && (omega - 0.353553).abs() <= 1e-3,
        format!("norm {norm:.6} (1.28446 +- 0.02), omega_2(f, 0.5) {omega:.6} (0.353553 +- 1e-3)"),
    )
}

fn c7_paley_zygmund() -> Result<Outcome> {
    let exact = [
        pz_exact_probability(&[1.0])?,
        pz_exact_probability(&[1.0, 1.0])?,
        pz_exact_probability(&[1.0, 1.0, 1.0])?,
    ];
    let small_ok = exact == [1.0, 0.5, 1.0];
    let probs: Vec<f64> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let m = 1 + (stream(7, i).substream_seed() % 20) as usize;
            let lambdas = random_lambdas(m, stream(7, 1000 + i));
            paley_zygmund_check(&lambdas, PzMode::Exact, stream(7, i)).map(|r| r.statistic("exact_probability").unwrap())
        })
        .collect::<Result<_>>()?;
    let min = probs.iter().copied().fold(f64::INFINITY, f64::min);
    let all = probs.iter().filter(|p| **p >= 0.125).count();
    outcome(
        small_ok && all == 200,
        format!("m=1,2,3 probabilities {exact:?} (expect [1, 0.5, 1]); random vectors with P >= 1/8: {all}/200, min {min:.4}"),
    )
}

fn c8_sum_squares() -> Result<Outcome> {
    let params = SumSquaresParams::new(vec![64, 1024], 256, 1 << 13)?;
    let r = sum_squares_check(&ModelSpec::wiener(TAU)?, &FunctionFamily::Sine, &params, stream(8, 0))?;
    let (q64, q1024) = (r.statistic("q90_j64").unwrap(), r.statistic("q90_j1024").unwrap());
    outcome(
        r.pass && q1024 - q64 <= 0.1 * q64 + 0.01,
        format!("Q(64) {q64:.5}, Q(1024) {q1024:.5}, gap {:.5} <= {:.5}", q1024 - q64, 0.1 * q64 + 0.01),
    )
}

fn c9_cubic() -> Result<Outcome> {
    let mut eps = vec![0.1];
    eps.extend(DEFAULT_EPSILONS);
    let leb = cubic_increment_check(
        &ModelSpec::lebesgue(2.0)?,
        &CubicParams::new(1.0, eps.clone(), 1, 1 << 14)?,
        stream(9, 0),
    )?;
    let leb_err = eps
        .iter()
        .map(|e| (leb.statistic(&format!("median_eps{e}")).unwrap() - e * e).abs())
        .fold(0.0, f64::max);
    let wiener = cubic_increment_check(
        &ModelSpec::wiener(1.25)?,
        &CubicParams::new(1.0, DEFAULT_EPSILONS.to_vec(), 256, 1 << 14)?,
        stream(9, 1),
    )?;
    let medians: Vec<f64> = DEFAULT_EPSILONS
        .iter()
        .map(|e| wiener.statistic(&format!("median_eps{e}")).unwrap())
        .collect();
    let rel = |i: usize| medians[i] / (WIENER_CUBIC_CONSTANT * DEFAULT_EPSILONS[i].sqrt()) - 1.0;
    let strictly = medians.windows(2).all(|w| w[1] < w[0]);
    outcome(
        leb_err <= 1e-6 && rel(0).abs() <= 0.25 && rel(2).abs() <= 0.25 && strictly && wiener.pass,
        format!(
            "Lebesgue max |I - T1 eps^2| {leb_err:.2e} (<= 1e-6); Wiener medians {medians:.5?}, relative to 1.5958 sqrt(eps): {:+.3} (eps 0.04), {:+.3} (eps 0.01); strictly decreasing: {strictly}",
            rel(0),
            rel(2)
        ),
    )
}

fn c10_exp_moment_holder() -> Result<Outcome> {
    let c = exp_moment_constant(1, 1.0)?.c;
    let sharp = exp_moment_sharpness_check(1, 1.0, DEFAULT_SHARPNESS_GRID)?;
    let q = QuadratureConfig::default();
    let mut failed = Vec::new();
    for f in holder_catalogue() {
        for k in [1, 8, 27] {
            if !holder_bound_check(&f, k, 1.0, &q)?.pass {
                failed.push(format!("{}:k={k}", f.label()));
            }
        }
    }
    outcome(
        (c - 0.530738).abs() <= 1e-6 && sharp.pass && failed.is_empty(),
        format!(
            "C_(1,1) = {c:.7} (0.530738 +- 1e-6); sharpness relative gap {:.2e} (<= 1e-9); Hölder failures: {failed:?}",
            sharp.checks[0].statistic
        ),
    )
}

fn c11_integration_cross_check() -> Result<Outcome> {
    let model = ModelSpec::rademacher(1.0, 256)?;
    let s = stream(11, 0);
    let exact = integrate_rademacher(&realize_rademacher(&model, s)?, &Integrand::identity(), 0.0, 1.0, &QuadratureConfig::default())?;
    let err = |n: usize| -> Result<f64> {
        let path = sample_path(&model, s, n)?;
        Ok((integrate_grid(&path, &Integrand::identity()) - exact).abs())
    };
    let (e16, e17) = (err(1 << 16)?, err(1 << 17)?);
    outcome(
        e16 <= 1e-3 && e17 < e16,
        format!("exact {exact:.8}; grid 2^16 error {e16:.3e} (<= 1e-3), grid 2^17 error {e17:.3e} (shrinks)"),
    )
}

/// A cross-section of every module's artifacts at reduced sizes.
fn artifacts() -> Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    let mut push = |name: &str, bytes: Vec<u8>| out.push((name.to_string(), bytes));
    let models = [
        ModelSpec::wiener(TAU)?,
        ModelSpec::fbm(1.0, 0.7)?,
        ModelSpec::rademacher(1.0, 256)?,
        ModelSpec::lebesgue(TAU)?,
    ];
    for (i, m) in models.iter().enumerate() {
        let path = sample_path(m, stream(12, i as u64), 1024)?;
        let mut buf = Vec::new();
        write_path_csv(&path, &mut buf)?;
        push(&format!("path_{i}.csv"), buf);
    }
    let sheet = sample_field(&ModelSpec::brownian_sheet(1.0)?, stream(12, 10), 2, 6)?;
    let mut buf = Vec::new();
    write_field_csv(&sheet, &mut buf)?;
    push("sheet.csv", buf);
    let sums = dyadic_level_sums(&sheet, &BesovParams::new(2.0, 0.4, 1, 6)?)?;
    let report = BesovReport::new(&sums, &membership_diagnostic(&sums)?);
    push("besov.json", serde_json::to_vec_pretty(&report)?);

    let wiener = sample_path(&models[0], stream(12, 20), 1 << 12)?;
    let c = coefficients_by_parts(&wiener, 128, &QuadratureConfig::default())?;
    let mut buf = Vec::new();
    c.write_csv(&mut buf)?;
    push("coefficients.csv", buf);
    push(
        "convergence.json",
        serde_json::to_vec_pretty(&convergence_report(&wiener, &c, &[16, 128], 0.5)?)?,
    );
    let rad = realize_rademacher(&ModelSpec::rademacher(TAU, 64)?, stream(12, 2))?;
    let mut buf = Vec::new();
    coefficients_by_parts(&rad, 8, &QuadratureConfig::default())?.write_csv(&mut buf)?;
    push("rademacher_coefficients.csv", buf);

    let reports = [
        paley_zygmund_check(&[0.5, 1.0, -2.0], PzMode::MonteCarlo { replicates: 512 }, stream(12, 30))?,
        sum_squares_check(
            &models[0],
            &FunctionFamily::Sine,
            &SumSquaresParams::new(vec![8, 64], 32, 1 << 10)?,
            stream(12, 31),
        )?,
        cubic_increment_check(
            &ModelSpec::fbm(1.25, 0.7)?,
            &CubicParams::new(1.0, DEFAULT_EPSILONS.to_vec(), 16, 2048)?,
            stream(12, 32),
        )?,
    ];
    for (i, r) in reports.iter().enumerate() {
        push(&format!("report_{i}.json"), r.to_json()?.into_bytes());
        let mut buf = Vec::new();
        r.write_replicates_csv(&mut buf)?;
        push(&format!("report_{i}.csv"), buf);
    }
    Ok(out)
}

fn c12_determinism() -> Result<Outcome> {
    let runs: Vec<Vec<(String, Vec<u8>)>> = [1usize, 2, 8, 1]
        .iter()
        .map(|&t| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .expect("thread pool")
                .install(artifacts)
        })
        .collect::<Result<_>>()?;
    let identical = runs.windows(2).all(|w| w[0] == w[1]);
    let bytes: usize = runs[0].iter().map(|(_, b)| b.len()).sum();
    outcome(
        identical,
        format!("{} artifacts ({bytes} bytes) byte-identical across thread counts 1, 2, 8 and a rerun: {identical}", runs[0].len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 12] = [
        ("sawtooth Fourier oracle", c1_sawtooth_oracle),
        ("endpoint convergence to mu(2 pi)/2", c2_endpoint),
        ("interior convergence", c3_interior),
        ("coefficient energy", c4_energy),
        ("dyadic increment sums", c5_dyadic_sums),
        ("direct Besov norm", c6_direct_norm),
        ("Paley-Zygmund enumeration", c7_paley_zygmund),
        ("sum-of-squares stabilization", c8_sum_squares),
        ("cubic increment integral", c9_cubic),
        ("exponential moment constant and Hölder bound", c10_exp_moment_holder),
        ("series vs grid integration", c11_integration_cross_check),
        ("determinism across thread counts", c12_determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        println!(
            "{} criterion {:>2} {name} ({:.1}s): {detail}",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
