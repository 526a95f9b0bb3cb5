//! Monte Carlo excursion probabilities of grid maxima and their comparison with
//! closed-form asymptotics.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

// Redundant whenever std is linked into the build.
#[allow(unused_imports)]
use num_traits::Float;

use crate::asymptotics::AsymptoticValue;
use crate::error::{domain, Error, Result};
use crate::geometry::SpherePoint;
use crate::model::CovarianceModel;
use crate::sampler::{build_sfbm_sampler, GaussianSampler, ReplicationRunner};

/// Exceedances below this count at the largest level attach a warning.
pub const MIN_TAIL_EXCEEDANCES: usize = 10;

/// Binomial estimate of P{max > u}.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub replications: usize,
    pub exceedances: usize,
}

impl McEstimate {
    pub fn from_count(exceedances: usize, replications: usize) -> Self {
        let n = replications as f64;
        let p = exceedances as f64 / n;
        McEstimate {
            mean: p,
            standard_error: (p * (1.0 - p) / n).sqrt(),
            replications,
            exceedances,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExcursionCurve {
    pub u_values: Vec<f64>,
    pub probabilities: Vec<McEstimate>,
    pub grid_id: String,
    pub seed: u64,
    pub warning: Option<String>,
}

impl ExcursionCurve {
    /// Tail fractions of `maxima` at each level. All levels share the same paths, so the
    /// curve is non-increasing by construction.
    pub fn from_maxima(maxima: &[f64], u_values: &[f64], grid_id: impl Into<String>, seed: u64) -> Result<Self> {
        if maxima.is_empty() {
            return Err(domain("replications", 0.0));
        }
        if u_values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Configuration("u values must be strictly increasing".into()));
        }
        let mut sorted = maxima.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let probabilities: Vec<McEstimate> = u_values
            .iter()
            .map(|&u| McEstimate::from_count(n - sorted.partition_point(|&m| m <= u), n))
            .collect();
        let warning = probabilities.last().and_then(|p| {
            (p.exceedances < MIN_TAIL_EXCEEDANCES).then(|| {
                format!(
                    "insufficient tail data: {} exceedances at u = {}",
                    p.exceedances,
                    u_values[u_values.len() - 1]
                )
            })
        });
        Ok(Self {
            u_values: u_values.to_vec(),
            probabilities,
            grid_id: grid_id.into(),
            seed,
            warning,
        })
    }
}

/// Per-replication maxima over the whole grid (first entry) and over each index subset.
pub fn path_maxima<R: ReplicationRunner>(
    runner: &R,
    sampler: &GaussianSampler,
    replications: usize,
    subsets: &[Vec<usize>],
) -> Vec<Vec<f64>> {
    let rows = runner.map_rows(sampler, replications, |row| {
        let mut out = Vec::with_capacity(subsets.len() + 1);
        out.push(row.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        for s in subsets {
            out.push(s.iter().map(|&i| row[i]).fold(f64::NEG_INFINITY, f64::max));
        }
        out
    });
    (0..=subsets.len())
        .map(|k| rows.iter().map(|r| r[k]).collect())
        .collect()
}

/// P{max over `grid` of B_β > u} for each u, from one batch of sample paths.
pub fn estimate_excursion<R: ReplicationRunner>(
    runner: &R,
    model: &CovarianceModel,
    grid: &[SpherePoint],
    grid_id: &str,
    u_values: &[f64],
    replications: usize,
    seed: u64,
) -> Result<ExcursionCurve> {
    if replications == 0 {
        return Err(domain("replications", 0.0));
    }
    let sampler = build_sfbm_sampler(model, grid, seed)?;
    let maxima = path_maxima(runner, &sampler, replications, &[]);
    ExcursionCurve::from_maxima(&maxima[0], u_values, grid_id, seed)
}

/// Levels u on `candidates` where the grid resolves the field at the Pickands scale
/// (u·mesh^β ≤ 0.2·√2) and the curve still has at least `min_exceedances` exceedances.
pub fn usable_window(curve: &ExcursionCurve, mesh: f64, beta: f64, min_exceedances: usize) -> Vec<usize> {
    let u_max = 0.2 * 2f64.sqrt() / mesh.powf(beta);
    curve
        .u_values
        .iter()
        .zip(&curve.probabilities)
        .enumerate()
        .filter(|(_, (&u, p))| u <= u_max && p.exceedances >= min_exceedances)
        .map(|(i, _)| i)
        .collect()
}

/// Weighted least-squares slope of y on x with weights w, and its standard error.
pub fn weighted_slope(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64) {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((a, c), b)| b * (a - mx) * (c - my)).sum();
    if sxx == 0.0 {
        return (0.0, f64::INFINITY);
    }
    (sxy / sxx, (1.0 / sxx).sqrt())
}

/// P{Bin(m, 1/2) ≥ k}.
pub fn binomial_upper_tail(k: usize, m: usize) -> f64 {
    let mut total = 0.0;
    let mut c = 1.0f64;
    for j in 0..=m {
        if j > 0 {
            c *= (m - j + 1) as f64 / j as f64;
        }
        if j >= k {
            total += c;
        }
    }
    total / 2f64.powi(m as i32)
}

/// Diagnostics of how |ratio − 1| moves with u.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrendStatistic {
    /// WLS slope of the ratio against 1/u.
    pub slope_vs_inverse_u: f64,
    pub slope_vs_inverse_u_se: f64,
    /// WLS slope of |ratio − 1| against u.
    pub deviation_slope: f64,
    pub deviation_slope_se: f64,
    /// Successive steps where |ratio − 1| grew.
    pub increasing_steps: usize,
    pub steps: usize,
    /// One-sided binomial p-value of that many increases under no trend.
    pub sign_test_p: f64,
}

impl TrendStatistic {
    /// |ratio − 1| is not shown to increase at the 95% level by the sign test.
    pub fn non_increasing(&self) -> bool {
        self.sign_test_p >= 0.05
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatioReport {
    pub u_values: Vec<f64>,
    pub empirical: Vec<McEstimate>,
    pub asymptotic: Vec<f64>,
    pub ratios: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub trend: Option<TrendStatistic>,
    /// Ratio on this grid minus the ratio on the coarser nested grid, per u.
    pub discretization_diagnostic: Option<Vec<f64>>,
}

/// Empirical / asymptotic ratios with 95% intervals propagated from the binomial error.
pub fn validate_ratio(curve: &ExcursionCurve, formula: &AsymptoticValue) -> RatioReport {
    let z = 1.959_963_984_540_054;
    let asymptotic: Vec<f64> = curve.u_values.iter().map(|&u| formula.value_at(u)).collect();
    let ratios: Vec<f64> = curve.probabilities.iter().zip(&asymptotic).map(|(p, a)| p.mean / a).collect();
    let half: Vec<f64> = curve
        .probabilities
        .iter()
        .zip(&asymptotic)
        .map(|(p, a)| z * p.standard_error / a)
        .collect();
    let report = RatioReport {
        u_values: curve.u_values.clone(),
        empirical: curve.probabilities.clone(),
        ci_lo: ratios.iter().zip(&half).map(|(r, h)| r - h).collect(),
        ci_hi: ratios.iter().zip(&half).map(|(r, h)| r + h).collect(),
        asymptotic,
        ratios,
        trend: None,
        discretization_diagnostic: None,
    };
    let all: Vec<usize> = (0..report.u_values.len()).collect();
    let trend = trend_statistic(&report, &all);
    RatioReport { trend, ..report }
}

/// Trend of the ratios restricted to the rows `idx` (needs at least three usable rows).
pub fn trend_statistic(report: &RatioReport, idx: &[usize]) -> Option<TrendStatistic> {
    let rows: Vec<usize> = idx
        .iter()
        .copied()
        .filter(|&i| report.empirical[i].standard_error > 0.0 && report.ratios[i].is_finite())
        .collect();
    if rows.len() < 3 {
        return None;
    }
    let u: Vec<f64> = rows.iter().map(|&i| report.u_values[i]).collect();
    let r: Vec<f64> = rows.iter().map(|&i| report.ratios[i]).collect();
    let w: Vec<f64> = rows
        .iter()
        .map(|&i| {
            let s = report.empirical[i].standard_error / report.asymptotic[i];
            1.0 / (s * s)
        })
        .collect();
    let inv: Vec<f64> = u.iter().map(|v| 1.0 / v).collect();
    let (s1, e1) = weighted_slope(&inv, &r, &w);
    let dev: Vec<f64> = r.iter().map(|v| (v - 1.0).abs()).collect();
    let (s2, e2) = weighted_slope(&u, &dev, &w);
    let steps = dev.len() - 1;
    let increasing = dev.windows(2).filter(|d| d[1] > d[0]).count();
    Some(TrendStatistic {
        slope_vs_inverse_u: s1,
        slope_vs_inverse_u_se: e1,
        deviation_slope: s2,
        deviation_slope_se: e2,
        increasing_steps: increasing,
        steps,
        sign_test_p: binomial_upper_tail(increasing, steps),
    })
}

impl RatioReport {
    /// Records the ratio shift against a report on a coarser nested grid at the same levels.
    pub fn with_refinement(mut self, coarse: &RatioReport) -> Result<Self> {
        if coarse.u_values != self.u_values {
            return Err(Error::Configuration("refinement reports use different u values".into()));
        }
        self.discretization_diagnostic = Some(self.ratios.iter().zip(&coarse.ratios).map(|(f, c)| f - c).collect());
        Ok(self)
    }
}

/// exp(−(u − m̂)² / (2(1 − δ)σ²_max)) for a region whose variance is at most (1 − δ)σ²_max.
pub fn borell_tis_bound(u: f64, expected_sup: f64, sigma_max: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain("delta", delta));
    }
    if !(sigma_max > 0.0) {
        return Err(domain("sigma_max", sigma_max));
    }
    if u < expected_sup {
        return Err(Error::BoundNotApplicable { u, expected_sup });
    }
    let d = u - expected_sup;
    Ok((-d * d / (2.0 * (1.0 - delta) * sigma_max * sigma_max)).exp())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BorellTisRow {
    pub u: f64,
    pub empirical: McEstimate,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BorellTisReport {
    pub expected_sup: f64,
    pub sigma_max: f64,
    pub delta: f64,
    pub rows: Vec<BorellTisRow>,
}

impl BorellTisReport {
    pub fn never_falsified(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

/// Simulates the field on a low-variance `subgrid` and checks the empirical tail against
/// [`borell_tis_bound`] at each u ≥ m̂. `sigma_max` is the largest standard deviation of
/// the whole domain; δ is derived from the largest variance on the subgrid.
#[allow(clippy::too_many_arguments)]
pub fn borell_tis_diagnostic<R: ReplicationRunner>(
    runner: &R,
    model: &CovarianceModel,
    subgrid: &[SpherePoint],
    sigma_max: f64,
    u_values: &[f64],
    replications: usize,
    seed: u64,
) -> Result<BorellTisReport> {
    let var_sub = subgrid.iter().map(|p| model.std_dev(p).powi(2)).fold(0.0, f64::max);
    let delta = 1.0 - var_sub / (sigma_max * sigma_max);
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Configuration(format!(
            "subgrid variance {var_sub} is not below the maximum {}",
            sigma_max * sigma_max
        )));
    }
    let sampler = build_sfbm_sampler(model, subgrid, seed)?;
    let maxima = path_maxima(runner, &sampler, replications, &[]).swap_remove(0);
    let m_hat = maxima.iter().sum::<f64>() / maxima.len() as f64;
    let curve = ExcursionCurve::from_maxima(&maxima, u_values, "borell-tis", seed)?;
    let mut rows = Vec::new();
    for (&u, p) in u_values.iter().zip(&curve.probabilities) {
        let bound = borell_tis_bound(u, m_hat, sigma_max, delta)?;
        rows.push(BorellTisRow {
            u,
            empirical: *p,
            bound,
            holds: p.mean <= bound,
        });
    }
    Ok(BorellTisReport {
        expected_sup: m_hat,
        sigma_max,
        delta,
        rows,
    })
}
