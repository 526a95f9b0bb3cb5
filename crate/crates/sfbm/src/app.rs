//! The four commands behind the `sfbm` binary and their exit-code contract.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sfbm_core::asymptotics::{consistency_n1, ConstantInput};
use sfbm_core::constants::{ConstantEstimate, LimitStatus};
use sfbm_core::excursion::{path_maxima, ExcursionCurve};
use sfbm_core::grid::design_grid;
use sfbm_core::sampler::build_sfbm_sampler;

use crate::config::{
    grid_point_cap, ConfigError, ConstantSource, ConstantsConfig, SimulateConfig, ValidateConfig, SCHEMA_VERSION,
};
use crate::experiments::{estimate_constant, formula_for, model_for, run_validation, sub_seed, ValidationRun};
use crate::output::{self, OutputSet, Provenance, Versions};
use crate::runner::ParallelRunner;

/// Largest N = 1 discrepancy accepted by `consistency`.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resource error: {0}")]
    Resource(String),
    #[error("numerical diagnostic failed: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    /// 2 configuration, 3 resource, 4 numerical diagnostic, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<sfbm_core::Error> for CliError {
    fn from(e: sfbm_core::Error) -> Self {
        use sfbm_core::Error as E;
        match e {
            E::Resource { .. } => CliError::Resource(e.to_string()),
            E::SingularCovariance { .. } | E::UnstableLimit(_) | E::DivergentConstant(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Flags shared by the commands. `seed` overrides the configuration's seed.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub workers: usize,
    pub out: PathBuf,
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn runner(workers: usize) -> Result<ParallelRunner, CliError> {
    ParallelRunner::new(workers).map_err(|e| CliError::Config(format!("--workers: {e}")))
}

fn finish<C: Serialize>(
    mut files: OutputSet,
    command: &str,
    config: &C,
    seed: u64,
    cap: usize,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let mut outputs = files.names();
    outputs.push("provenance.json".into());
    let provenance = Provenance {
        command: command.into(),
        schema_version: SCHEMA_VERSION,
        config_sha256: output::config_hash(config)?,
        seed,
        grid_point_cap: cap,
        versions: Versions::current(),
        outputs,
    };
    files.add("provenance.json", output::json_bytes(&provenance)?);
    Ok(files.write_to(out)?)
}

pub fn simulate(mut cfg: SimulateConfig, opts: &RunOptions, log: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let cap = grid_point_cap()?;
    let runner = runner(opts.workers)?;
    let model = model_for(&cfg.model.domain, cfg.model.beta)?;
    let grid = design_grid(&cfg.model.domain, cfg.resolution, cap)?;
    let points = grid.sphere_points().expect("spherical domain");
    let sampler = build_sfbm_sampler(&model, points, cfg.seed)?;
    let maxima = path_maxima(&runner, &sampler, cfg.replications, &[]).swap_remove(0);

    let n = maxima.len() as f64;
    let mean = maxima.iter().sum::<f64>() / n;
    let var = maxima.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    let stats = [
        ("replications", n),
        ("grid_points", grid.len() as f64),
        ("mesh", grid.mesh),
        ("cholesky_jitter", sampler.jitter_used()),
        ("max_mean", mean),
        ("max_sd", var.sqrt()),
        ("max_min", maxima.iter().copied().fold(f64::INFINITY, f64::min)),
        ("max_max", maxima.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
    ];
    writeln!(log, "grid {} ({} points, mesh {:.6})", grid.id(), grid.len(), grid.mesh)?;
    writeln!(log, "mean path maximum {mean:.6} (sd {:.6}) over {} replications", var.sqrt(), maxima.len())?;

    let mut files = OutputSet::new();
    files.add("summary.csv", output::summary_csv(&stats)?);
    if !cfg.u_values.is_empty() {
        let curve = ExcursionCurve::from_maxima(&maxima, &cfg.u_values, grid.id(), cfg.seed)?;
        if let Some(w) = &curve.warning {
            writeln!(log, "warning: {w}")?;
        }
        files.add("excursion.csv", output::curve_csv(&curve)?);
    }
    if cfg.write_maxima {
        files.add("maxima.csv", output::maxima_csv(&maxima)?);
    }
    finish(files, "simulate", &cfg, cfg.seed, cap, &opts.out)
}

/// Human-readable ladder of an estimate.
pub fn ladder_table(e: &ConstantEstimate) -> String {
    let mut s = format!(
        "{:?} constant, H = {}, N = {}, {} replications per rung\n",
        e.kind, e.hurst, e.dim, e.replications
    );
    s.push_str(&format!(
        "{:>10} {:>10} {:>8} {:>12} {:>10} {:>12} {:>12} {:>12}\n",
        "S", "S1", "points", "value", "se", "step h", "step h/2", "step h/4"
    ));
    for r in &e.ladder {
        s.push_str(&format!(
            "{:>10.4} {:>10.4} {:>8} {:>12.6} {:>10.6} {:>12.6} {:>12.6} {:>12.6}\n",
            r.s, r.s1, r.points, r.raw_value, r.standard_error, r.level_values[0], r.level_values[1], r.level_values[2]
        ));
    }
    s.push_str(&format!(
        "estimate {:.6} (se {:.6}, extrapolation residual {:.6}), status {:?}\n",
        e.value, e.standard_error, e.extrapolation_residual, e.status
    ));
    if let Some(f) = &e.finiteness {
        s.push_str(&format!(
            "finiteness bound {:.6} at S = {} ({})\n",
            f.bound,
            f.at_s,
            if f.holds { "holds" } else { "violated" }
        ));
    }
    s
}

fn status_failure(e: &ConstantEstimate) -> Option<CliError> {
    match &e.status {
        LimitStatus::Stable => None,
        LimitStatus::Unstable(m) => Some(CliError::Numerical(format!("unstable limit: {m}"))),
        LimitStatus::Divergent(m) => Some(CliError::Numerical(format!("divergent constant: {m}"))),
    }
}

pub fn constants(mut cfg: ConstantsConfig, opts: &RunOptions, log: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let cap = grid_point_cap()?;
    let runner = runner(opts.workers)?;
    let estimate = estimate_constant(&runner, &cfg.constant, cfg.seed, cap)?;
    log.write_all(ladder_table(&estimate).as_bytes())?;
    let mut files = OutputSet::new();
    files.add("constants.json", output::json_bytes(&estimate)?);
    let written = finish(files, "constants", &cfg, cfg.seed, cap, &opts.out)?;
    match status_failure(&estimate) {
        Some(e) => Err(e),
        None => Ok(written),
    }
}

/// JSON envelope of a validation run.
#[derive(Debug, Serialize)]
struct ValidationEnvelope<'a> {
    seed: u64,
    constant: ConstantInput,
    constant_estimate: Option<&'a ConstantEstimate>,
    largest_usable_u: Option<f64>,
    #[serde(flatten)]
    run: &'a ValidationRun,
}

pub fn validate(mut cfg: ValidateConfig, opts: &RunOptions, log: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let cap = grid_point_cap()?;
    let (domain, beta) = (&cfg.model.domain, cfg.model.beta);
    let mut files = OutputSet::new();

    let (constant, estimate) = match &cfg.constant {
        ConstantSource::Inline { value, kind } => (ConstantInput::of_kind(*value, *kind), None),
        ConstantSource::File { path } => {
            let e: ConstantEstimate = load_config(path)?;
            (ConstantInput::from(&e), Some(e))
        }
        ConstantSource::Estimate { job } => {
            formula_for(domain, beta, ConstantInput::of_kind(1.0, job.kind))?;
            model_for(domain, beta)?;
            design_grid(domain, cfg.resolution, cap)?;
            let e = estimate_constant(&runner(opts.workers)?, job, sub_seed(cfg.seed, 1), cap)?;
            log.write_all(ladder_table(&e).as_bytes())?;
            files.add("constants.json", output::json_bytes(&e)?);
            if let Some(err) = status_failure(&e) {
                finish(files, "validate", &cfg, cfg.seed, cap, &opts.out)?;
                return Err(err);
            }
            (ConstantInput::from(&e), Some(e))
        }
    };
    let formula = formula_for(domain, beta, constant)?;

    if cfg.asymptotics_only {
        for &u in &cfg.u_values {
            writeln!(log, "u = {u:>8.4}  asymptotic = {:.6e}", formula.value_at(u))?;
        }
        files.add("asymptotics.csv", output::asymptotics_csv(&formula, &cfg.u_values)?);
        return finish(files, "validate", &cfg, cfg.seed, cap, &opts.out);
    }

    let run = run_validation(
        &runner(opts.workers)?,
        domain,
        beta,
        cfg.resolution,
        &cfg.u_values,
        cfg.replications,
        cfg.seed,
        constant,
        cfg.min_exceedances,
        cap,
    )?;
    if let Some(w) = &run.curve.warning {
        writeln!(log, "warning: {w}")?;
    }
    let largest = run.largest_usable();
    match largest {
        Some(i) => {
            let r = &run.report;
            writeln!(
                log,
                "ratio at largest usable u = {}: {:.4} (95% CI {:.4} to {:.4})",
                r.u_values[i], r.ratios[i], r.ci_lo[i], r.ci_hi[i]
            )?;
        }
        None => writeln!(log, "no level lies in the usable window")?,
    }
    if let Some(t) = &run.window_trend {
        writeln!(
            log,
            "|ratio - 1| grew on {} of {} steps (sign test p = {:.3}); slope in u {:.4} +/- {:.4}",
            t.increasing_steps, t.steps, t.sign_test_p, t.deviation_slope, t.deviation_slope_se
        )?;
    }
    files.add("ratio.csv", output::ratio_csv(&run.report)?);
    let envelope = ValidationEnvelope {
        seed: cfg.seed,
        constant,
        constant_estimate: estimate.as_ref(),
        largest_usable_u: largest.map(|i| run.report.u_values[i]),
        run: &run,
    };
    files.add("ratio.json", output::json_bytes(&envelope)?);
    finish(files, "validate", &cfg, cfg.seed, cap, &opts.out)
}

#[derive(Debug, Serialize)]
struct ConsistencyRow {
    beta: f64,
    a: f64,
    constant: f64,
    discrepancy: f64,
}

/// N = 1 disc formula against the arc formula over `pairs` random (β, a) plus two fixed
/// cases. Fails with exit code 4 above [`CONSISTENCY_TOLERANCE`].
pub fn consistency(pairs: usize, opts: &RunOptions, log: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    let seed = opts.seed.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = vec![(0.25, 1.0), (0.5, std::f64::consts::FRAC_PI_2)];
    for _ in 0..pairs {
        let beta = 0.5 - rng.random_range(0.0..0.499);
        let a = rng.random_range(1e-3..std::f64::consts::PI - 1e-3);
        cases.push((beta, a));
    }
    let mut rows = Vec::with_capacity(cases.len());
    for (beta, a) in cases {
        let constant = rng.random_range(0.5..5.0);
        let discrepancy = consistency_n1(beta, a, constant)?;
        rows.push(ConsistencyRow {
            beta,
            a,
            constant,
            discrepancy,
        });
    }
    let worst = rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
    writeln!(log, "max relative discrepancy over {} cases: {worst:.3e}", rows.len())?;
    let mut files = OutputSet::new();
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(io::Error::other)?;
    }
    files.add("consistency.csv", w.into_inner().map_err(|e| io::Error::other(e.to_string()))?);
    let cfg = serde_json::json!({ "pairs": pairs, "seed": seed });
    let written = finish(files, "consistency", &cfg, seed, grid_point_cap()?, &opts.out)?;
    if worst > CONSISTENCY_TOLERANCE {
        return Err(CliError::Numerical(format!("discrepancy {worst:e} exceeds {CONSISTENCY_TOLERANCE:e}")));
    }
    Ok(written)
}
