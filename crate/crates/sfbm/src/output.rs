//! CSV and JSON artifacts, and the provenance record written next to them.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use sfbm_core::asymptotics::AsymptoticValue;
use sfbm_core::excursion::{ExcursionCurve, RatioReport};

/// Header of the ratio table. Downstream scripts depend on this order.
pub const RATIO_HEADER: [&str; 7] = ["u", "p_hat", "se", "asym", "ratio", "ci_lo", "ci_hi"];

#[derive(Debug, Serialize)]
struct RatioRow {
    u: f64,
    p_hat: f64,
    se: f64,
    asym: f64,
    ratio: f64,
    ci_lo: f64,
    ci_hi: f64,
}

#[derive(Debug, Serialize)]
struct CurveRow {
    u: f64,
    p_hat: f64,
    se: f64,
    exceedances: usize,
}

#[derive(Debug, Serialize)]
struct MaximumRow {
    replication: usize,
    max: f64,
}

#[derive(Debug, Serialize)]
struct AsymptoticRow {
    u: f64,
    asym: f64,
    ln_asym: f64,
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(io::Error::other)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

pub fn ratio_csv(report: &RatioReport) -> io::Result<Vec<u8>> {
    csv_bytes((0..report.u_values.len()).map(|i| RatioRow {
        u: report.u_values[i],
        p_hat: report.empirical[i].mean,
        se: report.empirical[i].standard_error,
        asym: report.asymptotic[i],
        ratio: report.ratios[i],
        ci_lo: report.ci_lo[i],
        ci_hi: report.ci_hi[i],
    }))
}

pub fn curve_csv(curve: &ExcursionCurve) -> io::Result<Vec<u8>> {
    csv_bytes(curve.u_values.iter().zip(&curve.probabilities).map(|(&u, p)| CurveRow {
        u,
        p_hat: p.mean,
        se: p.standard_error,
        exceedances: p.exceedances,
    }))
}

pub fn maxima_csv(maxima: &[f64]) -> io::Result<Vec<u8>> {
    csv_bytes(maxima.iter().enumerate().map(|(replication, &max)| MaximumRow { replication, max }))
}

pub fn asymptotics_csv(formula: &AsymptoticValue, u_values: &[f64]) -> io::Result<Vec<u8>> {
    csv_bytes(u_values.iter().map(|&u| AsymptoticRow {
        u,
        asym: formula.value_at(u),
        ln_asym: formula.ln_value_at(u),
    }))
}

/// `statistic,value` pairs.
pub fn summary_csv(stats: &[(&str, f64)]) -> io::Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Row<'a> {
        statistic: &'a str,
        value: f64,
    }
    csv_bytes(stats.iter().map(|&(statistic, value)| Row { statistic, value }))
}

pub fn json_bytes<T: Serialize>(value: &T) -> io::Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
    v.push(b'\n');
    Ok(v)
}

/// Hex SHA-256 of the canonical JSON form of a configuration.
pub fn config_hash<T: Serialize>(config: &T) -> io::Result<String> {
    let bytes = serde_json::to_vec(config).map_err(io::Error::other)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// What produced a set of outputs. Contains nothing that varies between identical reruns.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub command: String,
    pub schema_version: u32,
    pub config_sha256: String,
    pub seed: u64,
    pub grid_point_cap: usize,
    pub versions: Versions,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub sfbm: &'static str,
    pub sfbm_core: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Self {
            sfbm: env!("CARGO_PKG_VERSION"),
            sfbm_core: sfbm_core::VERSION,
        }
    }
}

/// Files staged in memory and written together, so a failed run leaves nothing behind.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Writes every file into `dir` through a temporary name and a rename.
    pub fn write_to(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            let tmp = dir.join(format!(".{name}.partial"));
            fs::write(&tmp, bytes)?;
            fs::rename(&tmp, &path)?;
            written.push(path);
        }
        Ok(written)
    }
}
