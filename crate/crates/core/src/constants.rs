//! Monte Carlo estimation of the Pickands, Piterbarg, M and M̂ constants from their
//! defining limits.
//!
//! Every rung of a ladder evaluates E sup exp(χ_H(t) − g(t)) over a box on three nested
//! grids (steps h, h/2, h/4) built from the same sample paths, and removes the leading
//! discretization terms by Richardson extrapolation in h^p, h^{2p}.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

// Redundant whenever std is linked into the build.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::sampler::{build_chi_sampler, ReplicationRunner};

/// Default cap on the number of grid points of one sampler.
pub const DEFAULT_MAX_POINTS: usize = 5000;

/// Which limit a [`ConstantEstimate`] approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ConstantKind {
    Pickands,
    Piterbarg,
    #[cfg_attr(feature = "serde", serde(rename = "M"))]
    M,
    #[cfg_attr(feature = "serde", serde(rename = "M_hat"))]
    MHat,
}

/// Drift g subtracted from χ_H.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "form", rename_all = "snake_case"))]
pub enum DriftSpec {
    /// g ≡ 0.
    Zero,
    /// b‖t‖^η.
    NormPower { b: f64, eta: f64 },
    /// b|t₁|^γ.
    FirstCoordPower { b: f64, gamma: f64 },
    /// c₁^{−β}·h·|t₁|^γ.
    DiscForm {
        c1: f64,
        beta: f64,
        h: f64,
        gamma: f64,
    },
    /// ‖M t‖^η with M row-major N×N.
    QuadraticFormPower { matrix: Vec<f64>, eta: f64 },
}

impl DriftSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        let positive = |what, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(domain(what, v))
            }
        };
        match self {
            DriftSpec::Zero => Ok(()),
            DriftSpec::NormPower { b, eta } => {
                positive("drift coefficient", *b)?;
                positive("drift exponent", *eta)
            }
            DriftSpec::FirstCoordPower { b, gamma } => {
                positive("drift coefficient", *b)?;
                positive("drift exponent", *gamma)
            }
            DriftSpec::DiscForm { c1, beta, h, gamma } => {
                positive("c1", *c1)?;
                positive("beta", *beta)?;
                positive("h", *h)?;
                positive("drift exponent", *gamma)
            }
            DriftSpec::QuadraticFormPower { matrix, eta } => {
                if matrix.len() != n * n {
                    return Err(Error::Configuration(format!(
                        "drift matrix has {} entries, expected {}",
                        matrix.len(),
                        n * n
                    )));
                }
                if let Some(bad) = matrix.iter().find(|v| !v.is_finite()) {
                    return Err(domain("drift matrix entry", *bad));
                }
                positive("drift exponent", *eta)
            }
        }
    }

    /// g(t).
    pub fn eval(&self, t: &[f64]) -> f64 {
        match self {
            DriftSpec::Zero => 0.0,
            DriftSpec::NormPower { b, eta } => b * crate::sampler::norm(t).powf(*eta),
            DriftSpec::FirstCoordPower { b, gamma } => b * t[0].abs().powf(*gamma),
            DriftSpec::DiscForm { c1, beta, h, gamma } => {
                c1.powf(-beta) * h * t[0].abs().powf(*gamma)
            }
            DriftSpec::QuadraticFormPower { matrix, eta } => {
                let n = t.len();
                let mut s = 0.0;
                for i in 0..n {
                    let row: f64 = (0..n).map(|j| matrix[i * n + j] * t[j]).sum();
                    s += row * row;
                }
                s.sqrt().powf(*eta)
            }
        }
    }

    /// True when g depends on t₁ alone.
    pub fn first_coordinate_only(&self) -> bool {
        matches!(
            self,
            DriftSpec::Zero | DriftSpec::FirstCoordPower { .. } | DriftSpec::DiscForm { .. }
        )
    }

    /// Coefficient b and exponent of a drift of the form b|t₁|^γ, if it is one.
    pub fn first_coordinate_power(&self) -> Option<(f64, f64)> {
        match *self {
            DriftSpec::FirstCoordPower { b, gamma } => Some((b, gamma)),
            DriftSpec::DiscForm { c1, beta, h, gamma } => Some((c1.powf(-beta) * h, gamma)),
            _ => None,
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McMean {
    pub mean: f64,
    pub standard_error: f64,
    pub replications: usize,
}

impl McMean {
    pub fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        McMean {
            mean,
            standard_error: (var / nf).sqrt(),
            replications: n,
        }
    }
}

/// Axis-aligned box ∏[loᵢ, hiᵢ].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxRegion {
    pub bounds: Vec<(f64, f64)>,
}

impl BoxRegion {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Configuration("region has no coordinates".into()));
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(domain("region bound", if lo.is_finite() { hi } else { lo }));
            }
        }
        Ok(Self { bounds })
    }

    /// [0,S]×[0,S₁]^{N−1}
    pub fn one_sided(n: usize, s: f64, s1: f64) -> Result<Self> {
        let mut b = alloc::vec![(0.0, s)];
        b.extend(core::iter::repeat((0.0, s1)).take(n - 1));
        Self::new(b)
    }

    /// [−S,S]×[0,S₁]^{N−1}
    pub fn two_sided_first(n: usize, s: f64, s1: f64) -> Result<Self> {
        let mut b = alloc::vec![(-s, s)];
        b.extend(core::iter::repeat((0.0, s1)).take(n - 1));
        Self::new(b)
    }

    /// [−S,S]^N
    pub fn symmetric(n: usize, s: f64) -> Result<Self> {
        Self::new(alloc::vec![(-s, s); n])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    fn intervals(&self, grid_step: f64) -> Vec<usize> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| {
                let len = hi - lo;
                if len == 0.0 {
                    0
                } else {
                    4 * ((len / grid_step - 1e-9).ceil() as usize).max(1)
                }
            })
            .collect()
    }

    /// Points of the finest of the three nested grids for coarse step `grid_step`.
    pub fn nested_point_count(&self, grid_step: f64) -> usize {
        self.intervals(grid_step).iter().map(|m| m + 1).product()
    }
}

/// A box grid carrying membership of the coarse (h) and middle (h/2) sub-grids.
#[derive(Debug, Clone)]
pub struct NestedBoxGrid {
    pub points: Vec<Vec<f64>>,
    /// 0 = on the coarse grid, 1 = on the middle grid only, 2 = finest grid only.
    pub level: Vec<u8>,
}

impl NestedBoxGrid {
    pub fn build(region: &BoxRegion, grid_step: f64, max_points: usize) -> Result<Self> {
        if !(grid_step > 0.0 && grid_step.is_finite()) {
            return Err(domain("grid step", grid_step));
        }
        let m = region.intervals(grid_step);
        let count: usize = m.iter().map(|k| k + 1).product();
        if count > max_points {
            let n = region.dim() as f64;
            let scale = (count as f64 / max_points as f64).powf(1.0 / n);
            return Err(Error::Resource {
                points: count,
                cap: max_points,
                suggested_resolution: grid_step * scale * 1.01,
            });
        }
        let n = region.dim();
        let mut points = Vec::with_capacity(count);
        let mut level = Vec::with_capacity(count);
        let mut idx = alloc::vec![0usize; n];
        for _ in 0..count {
            let mut p = Vec::with_capacity(n);
            let mut lv = 0u8;
            for d in 0..n {
                let (lo, hi) = region.bounds[d];
                let x = if m[d] == 0 {
                    lo
                } else {
                    lo + (hi - lo) * idx[d] as f64 / m[d] as f64
                };
                p.push(x);
                if idx[d] % 4 != 0 {
                    lv = lv.max(if idx[d] % 2 == 0 { 1 } else { 2 });
                }
            }
            points.push(p);
            level.push(lv);
            for d in (0..n).rev() {
                idx[d] += 1;
                if idx[d] <= m[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        // Growing shells in the sup norm, so boxes sharing a step share a prefix.
        let mut order: Vec<usize> = (0..count).collect();
        let key = |i: usize| points[i].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
        Ok(Self {
            points: order.iter().map(|&i| points[i].clone()).collect(),
            level: order.iter().map(|&i| level[i]).collect(),
        })
    }
}

/// Weights w with Σ wᵢ vᵢ eliminating b·y + c·y² for yᵢ = 2^{−i p}, i = 0, 1, 2.
pub fn richardson_weights(p: f64) -> [f64; 3] {
    let y = [1.0, 2f64.powf(-p), 4f64.powf(-p)];
    let mut w = [0.0; 3];
    for i in 0..3 {
        let mut v = 1.0;
        for j in 0..3 {
            if j != i {
                v *= y[j] / (y[j] - y[i]);
            }
        }
        w[i] = v;
    }
    w
}

/// Leading discretization order of the grid maximum of χ_H.
pub fn discretization_order(h: f64) -> f64 {
    if h >= 1.0 {
        2.0
    } else {
        h
    }
}

/// Expected supremum on one box: per-level means and the extrapolated value.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SupEstimate {
    /// Steps h, h/2, h/4.
    pub levels: [McMean; 3],
    pub extrapolated: McMean,
}

/// Drifted and drift-free expected suprema from the same paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RungSample {
    pub drifted: SupEstimate,
    pub drift_free: SupEstimate,
    pub points: usize,
}

/// E sup exp(χ_H − g) over `region`, plus the drift-free counterpart.
#[allow(clippy::too_many_arguments)]
pub fn sample_rung<R: ReplicationRunner>(
    runner: &R,
    h: f64,
    region: &BoxRegion,
    drift: &DriftSpec,
    grid_step: f64,
    replications: usize,
    seed: u64,
    max_points: usize,
) -> Result<RungSample> {
    if replications == 0 {
        return Err(domain("replications", 0.0));
    }
    drift.validate(region.dim())?;
    let grid = NestedBoxGrid::build(region, grid_step, max_points)?;
    let g: Vec<f64> = grid.points.iter().map(|t| drift.eval(t)).collect();
    let sampler = build_chi_sampler(h, &grid.points, seed)?;
    let level = &grid.level;
    let per_rep = runner.map_rows(&sampler, replications, |row| {
        let mut d = [f64::NEG_INFINITY; 3];
        let mut f = [f64::NEG_INFINITY; 3];
        for ((&x, &gi), &lv) in row.iter().zip(&g).zip(level) {
            let y = x - gi;
            for k in lv as usize..3 {
                d[k] = d[k].max(y);
                f[k] = f[k].max(x);
            }
        }
        [d[0].exp(), d[1].exp(), d[2].exp(), f[0].exp(), f[1].exp(), f[2].exp()]
    });
    let w = richardson_weights(discretization_order(h));
    let summarize = |offset: usize| {
        let mut sums = [0.0; 4];
        let mut sq = [0.0; 4];
        for r in &per_rep {
            let v = [r[offset], r[offset + 1], r[offset + 2]];
            let all_equal = v[0] == v[2];
            let x = if all_equal {
                v[0]
            } else {
                w[0] * v[0] + w[1] * v[1] + w[2] * v[2]
            };
            for (k, val) in v.iter().chain(core::iter::once(&x)).enumerate() {
                sums[k] += val;
                sq[k] += val * val;
            }
        }
        let m = |k: usize| McMean::from_sums(sums[k], sq[k], replications);
        SupEstimate {
            levels: [m(0), m(1), m(2)],
            extrapolated: m(3),
        }
    };
    Ok(RungSample {
        drifted: summarize(0),
        drift_free: summarize(3),
        points: grid.points.len(),
    })
}

/// Spec of one ladder: the S values, how S₁ follows S, the coarse grid step and
/// replication count per rung.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LadderSpec {
    pub s_values: Vec<f64>,
    /// S₁ = s1_factor·S for the non-drifted coordinates.
    pub s1_factor: f64,
    pub grid_step: f64,
    pub replications: usize,
    pub max_points: usize,
}

impl LadderSpec {
    /// S_max·{1/8, 1/4, 1/2, 1} with S_max^{2H} = 2^{3−2H}, trimmed to the point cap.
    pub fn pickands_default(h: f64, n: usize, replications: usize) -> Self {
        let s_max = 2f64.powf((3.0 - 2.0 * h) / (2.0 * h));
        Self {
            s_values: [0.125, 0.25, 0.5, 1.0].iter().map(|f| f * s_max).collect(),
            s1_factor: 1.0,
            grid_step: 0.5,
            replications,
            max_points: DEFAULT_MAX_POINTS,
        }
        .trimmed(n, false)
    }

    /// {2, 4, 8, 16} for N = 1 and {2, 4, 8} otherwise, trimmed to the point cap.
    pub fn drift_default(n: usize, replications: usize, two_sided_all: bool) -> Self {
        let s: &[f64] = if n == 1 { &[2.0, 4.0, 8.0, 16.0] } else { &[2.0, 4.0, 8.0] };
        Self {
            s_values: s.to_vec(),
            s1_factor: 1.0,
            grid_step: 0.5,
            replications,
            max_points: DEFAULT_MAX_POINTS,
        }
        .trimmed(n, two_sided_all)
    }

    pub fn with_max_points(mut self, max_points: usize, n: usize, two_sided_all: bool) -> Self {
        self.max_points = max_points;
        self.trimmed(n, two_sided_all)
    }

    /// Drops rungs whose grids exceed the cap (at least one rung is always kept).
    fn trimmed(mut self, n: usize, symmetric: bool) -> Self {
        let fits = |s: f64| {
            let region = if symmetric {
                BoxRegion::symmetric(n, s)
            } else {
                BoxRegion::one_sided(n, s, s * self.s1_factor)
            };
            region
                .map(|r| r.nested_point_count(self.grid_step) <= self.max_points)
                .unwrap_or(false)
        };
        let keep: Vec<f64> = self.s_values.iter().copied().filter(|&s| fits(s)).collect();
        if !keep.is_empty() {
            self.s_values = keep;
        } else {
            self.s_values.truncate(1);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_values.is_empty() {
            return Err(Error::Configuration("ladder has no rungs".into()));
        }
        if self.s_values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Configuration("ladder S values must increase".into()));
        }
        if let Some(&s) = self.s_values.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(domain("ladder S", s));
        }
        if !(self.s1_factor > 0.0 && self.s1_factor.is_finite()) {
            return Err(domain("s1_factor", self.s1_factor));
        }
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(domain("grid step", self.grid_step));
        }
        if self.replications < 2 {
            return Err(domain("replications", self.replications as f64));
        }
        Ok(())
    }
}

/// One rung of a ladder.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LadderRung {
    pub s: f64,
    pub s1: f64,
    pub grid_step: f64,
    pub raw_value: f64,
    pub standard_error: f64,
    pub points: usize,
    /// Unextrapolated values on steps h, h/2, h/4 (same normalization as `raw_value`).
    pub level_values: [f64; 3],
    /// Drift-free value on the same region, recorded for M and M̂ ladders.
    pub drift_free_value: Option<f64>,
}

/// Outcome of the limit diagnostics.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "status", content = "detail", rename_all = "snake_case"))]
pub enum LimitStatus {
    Stable,
    Unstable(String),
    Divergent(String),
}

/// Upper bound M̂ ≤ M([0,S]) + Σ_{k≥1} C·S·e^{−b(kS)^{2H}} with C·S fitted as the
/// drift-free rung M⁰([0,S]), minimized over rungs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FinitenessBound {
    pub bound: f64,
    pub at_s: f64,
    pub fitted_c: f64,
    pub holds: bool,
    /// Largest (rung − bound)/se over the ladder; negative when every rung is below.
    pub worst_excess_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstantEstimate {
    pub kind: ConstantKind,
    pub hurst: f64,
    pub dim: usize,
    pub drift: DriftSpec,
    pub value: f64,
    pub standard_error: f64,
    pub ladder: Vec<LadderRung>,
    pub extrapolation_residual: f64,
    pub seed: u64,
    pub grid_steps: [f64; 3],
    pub replications: usize,
    pub status: LimitStatus,
    pub finiteness: Option<FinitenessBound>,
}

impl ConstantEstimate {
    /// Turns a failed limit diagnostic into an error.
    pub fn check(&self) -> Result<()> {
        match &self.status {
            LimitStatus::Stable => Ok(()),
            LimitStatus::Unstable(m) => Err(Error::UnstableLimit(m.clone())),
            LimitStatus::Divergent(m) => Err(Error::DivergentConstant(m.clone())),
        }
    }
}

fn validate_common(h: f64, n: usize, ladder: &LadderSpec) -> Result<()> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(domain("H", h));
    }
    if n == 0 {
        return Err(domain("dimension", 0.0));
    }
    ladder.validate()
}

struct RawLadder {
    rungs: Vec<LadderRung>,
}

#[allow(clippy::too_many_arguments)]
fn run_ladder<R: ReplicationRunner>(
    runner: &R,
    h: f64,
    n: usize,
    drift: &DriftSpec,
    ladder: &LadderSpec,
    seed: u64,
    region_for: impl Fn(f64, f64) -> Result<BoxRegion>,
    normalize: impl Fn(f64, f64) -> f64,
    record_drift_free: bool,
) -> Result<RawLadder> {
    validate_common(h, n, ladder)?;
    let mut rungs = Vec::with_capacity(ladder.s_values.len());
    for &s in &ladder.s_values {
        let s1 = s * ladder.s1_factor;
        let region = region_for(s, s1)?;
        let sample = sample_rung(
            runner,
            h,
            &region,
            drift,
            ladder.grid_step,
            ladder.replications,
            seed,
            ladder.max_points,
        )?;
        let norm = normalize(s, s1);
        let d = &sample.drifted;
        rungs.push(LadderRung {
            s,
            s1,
            grid_step: ladder.grid_step,
            raw_value: d.extrapolated.mean / norm,
            standard_error: d.extrapolated.standard_error / norm,
            points: sample.points,
            level_values: [
                d.levels[0].mean / norm,
                d.levels[1].mean / norm,
                d.levels[2].mean / norm,
            ],
            drift_free_value: record_drift_free
                .then(|| sample.drift_free.extrapolated.mean / norm),
        });
    }
    Ok(RawLadder { rungs })
}

/// Interpolates c + a/S + b/S² through three rungs and evaluates at S = ∞, along with
/// the propagated standard error. Fewer rungs fall back to lower-order fits.
pub fn extrapolate_inverse_s(rungs: &[(f64, f64, f64)]) -> (f64, f64) {
    let k = rungs.len().min(3);
    let top = &rungs[rungs.len() - k..];
    let x: Vec<f64> = top.iter().map(|r| 1.0 / r.0).collect();
    let mut value = 0.0;
    let mut var = 0.0;
    for i in 0..k {
        let mut w = 1.0;
        for j in 0..k {
            if j != i {
                w *= x[j] / (x[j] - x[i]);
            }
        }
        value += w * top[i].1;
        var += w * w * top[i].2 * top[i].2;
    }
    (value, var.sqrt())
}

fn combined_se(a: &LadderRung, b: &LadderRung) -> f64 {
    (a.standard_error * a.standard_error + b.standard_error * b.standard_error).sqrt()
}

/// Pickands constant 𝓗^N_{2H}: per rung E sup_{[0,S]×[0,S₁]^{N−1}} e^{χ_H} / (S·S₁^{N−1}),
/// extrapolated in 1/S.
pub fn estimate_pickands_unchecked<R: ReplicationRunner>(
    runner: &R,
    h: f64,
    n: usize,
    ladder: &LadderSpec,
    seed: u64,
) -> Result<ConstantEstimate> {
    let raw = run_ladder(
        runner,
        h,
        n,
        &DriftSpec::Zero,
        ladder,
        seed,
        |s, s1| BoxRegion::one_sided(n, s, s1),
        |s, s1| s * s1.powi(n as i32 - 1),
        false,
    )?;
    let rungs = raw.rungs;
    let triples: Vec<(f64, f64, f64)> = rungs
        .iter()
        .map(|r| (r.s, r.raw_value, r.standard_error))
        .collect();
    let (value, se) = extrapolate_inverse_s(&triples);
    let residual = if triples.len() >= 4 {
        (value - extrapolate_inverse_s(&triples[..triples.len() - 1]).0).abs()
    } else if triples.len() >= 2 {
        (value - triples[triples.len() - 1].1).abs()
    } else {
        0.0
    };
    let mut status = LimitStatus::Stable;
    for w in rungs.windows(2) {
        if w[1].raw_value > w[0].raw_value + 3.0 * combined_se(&w[0], &w[1]) {
            status = LimitStatus::Unstable(format!(
                "rung S={} exceeds rung S={} by more than 3 standard errors",
                w[1].s, w[0].s
            ));
        }
    }
    if !(value > 0.0) && status == LimitStatus::Stable {
        status = LimitStatus::Unstable(format!("extrapolated value {value} is not positive"));
    }
    Ok(ConstantEstimate {
        kind: ConstantKind::Pickands,
        hurst: h,
        dim: n,
        drift: DriftSpec::Zero,
        value,
        standard_error: se,
        ladder: rungs,
        extrapolation_residual: residual,
        seed,
        grid_steps: steps(ladder.grid_step),
        replications: ladder.replications,
        status,
        finiteness: None,
    })
}

pub fn estimate_pickands<R: ReplicationRunner>(
    runner: &R,
    h: f64,
    n: usize,
    ladder: &LadderSpec,
    seed: u64,
) -> Result<ConstantEstimate> {
    let e = estimate_pickands_unchecked(runner, h, n, ladder, seed)?;
    e.check()?;
    Ok(e)
}

fn steps(h0: f64) -> [f64; 3] {
    [h0, h0 / 2.0, h0 / 4.0]
}

fn stabilization_status(rungs: &[LadderRung]) -> LimitStatus {
    let k = rungs.len();
    if k >= 3 {
        let (a, b, c) = (&rungs[k - 3], &rungs[k - 2], &rungs[k - 1]);
        if b.raw_value > a.raw_value
            && c.raw_value > b.raw_value
            && c.raw_value - a.raw_value > 5.0 * combined_se(a, c)
        {
            return LimitStatus::Divergent(format!(
                "rungs keep growing: {} -> {} -> {}",
                a.raw_value, b.raw_value, c.raw_value
            ));
        }
    }
    LimitStatus::Stable
}

fn stabilized(
    kind: ConstantKind,
    h: f64,
    n: usize,
    drift: &DriftSpec,
    ladder: &LadderSpec,
    seed: u64,
    rungs: Vec<LadderRung>,
) -> ConstantEstimate {
    let top = rungs.last().expect("ladder has at least one rung");
    let residual = if rungs.len() >= 2 {
        (top.raw_value - rungs[rungs.len() - 2].raw_value).abs()
    } else {
        0.0
    };
    ConstantEstimate {
        kind,
        hurst: h,
        dim: n,
        drift: drift.clone(),
        value: top.raw_value,
        standard_error: top.standard_error,
        extrapolation_residual: residual,
        status: stabilization_status(&rungs),
        ladder: rungs,
        seed,
        grid_steps: steps(ladder.grid_step),
        replications: ladder.replications,
        finiteness: None,
    }
}

/// Piterbarg constant 𝓟^g_{2H}: E sup_{[−S,S]^N} e^{χ_H − g}, taken at the top rung.
pub fn estimate_piterbarg_unchecked<R: ReplicationRunner>(
    runner: &R,
    h: f64,
    n: usize,
    drift: &DriftSpec,
    ladder: &LadderSpec,
    seed: u64,
) -> Result<ConstantEstimate> {
    let raw = run_ladder(
        runner,
        h,
        n,
        drift,
        ladder,
        seed,
        |s, _| BoxRegion::symmetric(n, s),
        |_, _| 1.0,
        false,
    )?;
    Ok(stabilized(ConstantKind::Piterbarg, h, n, drift, ladder, seed, raw.rungs))
}

pub fn estimate_piterbarg<R: ReplicationRunner>(
    runner: &R,
    h: f64,
    n: usize,
    drift: &DriftSpec,
    ladder: &LadderSpec,
    seed: u64,
) -> Result<ConstantEstimate> {
    let e = estimate_piterbarg_unchecked(runner, h, n, drift, ladder, seed)?;
    e.check()?;
    Ok(e)
}

fn require_first_coordinate(drift: &DriftSpec) -> Result<()> {
    if drift.first_coordinate_only() {
        Ok(())
    } else {
        Err(Error::Configuration(
            "this constant needs a drift depending on the first coordinate only".into(),
        ))
    }
}

/// M^g_{2H}: E sup_{[−S,S]×[0,S₁]^{N−1}} e^{χ_H − g} / S₁^{N−1}.
pub fn estimate_m_unchecked<R: ReplicationRunner>(
    runner: &R,
    h: f64,
    n: usize,
    drift: &DriftSpec,
    ladder: &LadderSpec,
    seed: u64,
) -> Result<ConstantEstimate> {
    require_first_coordinate(drift)?;
    let raw = run_ladder(
        runner,
        h,
        n,
        drift,
        ladder,
        seed,
        |s, s1| BoxRegion::two_sided_first(n, s, s1),
        |_, s1| s1.powi(n as i32 - 1),
        true,
    )?;
    Ok(stabilized(ConstantKind::M, h, n, drift, ladder, seed, raw.rungs))
}

pub fn estimate_m<R: ReplicationRunner>(
    runner: &R,
    h: f64,
    n: usize,
    drift: &DriftSpec,
    ladder: &LadderSpec,
    seed: u64,
) -> Result<ConstantEstimate> {
    let e = estimate_m_unchecked(runner, h, n, drift, ladder, seed)?;
    e.check()?;
    Ok(e)
}

/// M̂^g_{2H}: E sup_{[0,S]×[0,S₁]^{N−1}} e^{χ_H − g} / S₁^{N−1}, with the finiteness bound
/// attached when g = b|t₁|^{2H}.
pub fn estimate_m_hat_unchecked<R: ReplicationRunner>(
    runner: &R,
    h: f64,
    n: usize,
    drift: &DriftSpec,
    ladder: &LadderSpec,
    seed: u64,
) -> Result<ConstantEstimate> {
    require_first_coordinate(drift)?;
    let raw = run_ladder(
        runner,
        h,
        n,
        drift,
        ladder,
        seed,
        |s, s1| BoxRegion::one_sided(n, s, s1),
        |_, s1| s1.powi(n as i32 - 1),
        true,
    )?;
    let mut e = stabilized(ConstantKind::MHat, h, n, drift, ladder, seed, raw.rungs);
    if let Some((b, gamma)) = drift.first_coordinate_power() {
        if (gamma - 2.0 * h).abs() < 1e-12 {
            e.finiteness = finiteness_bound(&e.ladder, b, h);
            if let Some(f) = e.finiteness {
                if f.worst_excess_se > 3.0 && e.status == LimitStatus::Stable {
                    e.status = LimitStatus::Divergent(format!(
                        "a ladder rung exceeds the finiteness bound {} by {:.1} standard errors",
                        f.bound, f.worst_excess_se
                    ));
                }
            }
        }
    }
    Ok(e)
}

pub fn estimate_m_hat<R: ReplicationRunner>(
    runner: &R,
    h: f64,
    n: usize,
    drift: &DriftSpec,
    ladder: &LadderSpec,
    seed: u64,
) -> Result<ConstantEstimate> {
    let e = estimate_m_hat_unchecked(runner, h, n, drift, ladder, seed)?;
    e.check()?;
    Ok(e)
}

/// Σ_{k≥1} e^{−b(kS)^{2H}}, summed until terms vanish.
pub fn drift_tail_sum(b: f64, s: f64, h: f64) -> f64 {
    let mut total = 0.0;
    for k in 1..100_000 {
        let term = (-b * (k as f64 * s).powf(2.0 * h)).exp();
        total += term;
        if term < 1e-18 * total {
            break;
        }
    }
    total
}

/// Tightest bound over the ladder; `holds` reports whether every rung lies below it.
pub fn finiteness_bound(rungs: &[LadderRung], b: f64, h: f64) -> Option<FinitenessBound> {
    let mut best: Option<FinitenessBound> = None;
    for r in rungs {
        let c_s = r.drift_free_value?;
        let bound = r.raw_value + c_s * drift_tail_sum(b, r.s, h);
        if best.map_or(true, |x| bound < x.bound) {
            best = Some(FinitenessBound {
                bound,
                at_s: r.s,
                fitted_c: c_s / r.s,
                holds: true,
                worst_excess_se: f64::NEG_INFINITY,
            });
        }
    }
    best.map(|mut f| {
        f.holds = rungs.iter().all(|r| r.raw_value <= f.bound);
        f.worst_excess_se = rungs
            .iter()
            .map(|r| (r.raw_value - f.bound) / r.standard_error.max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max);
        f
    })
}
