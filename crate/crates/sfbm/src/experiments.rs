//! Experiment orchestration shared by the command line and the acceptance suite.

use serde::Serialize;
use sfbm_core::asymptotics::{arc_asymptotic, disc_asymptotic, sphere_asymptotic, AsymptoticValue, ConstantInput};
use sfbm_core::constants::{
    estimate_m_hat_unchecked, estimate_m_unchecked, estimate_pickands_unchecked, estimate_piterbarg_unchecked,
    ConstantEstimate, ConstantKind,
};
use sfbm_core::excursion::{
    path_maxima, trend_statistic, usable_window, validate_ratio, ExcursionCurve, RatioReport, TrendStatistic,
};
use sfbm_core::grid::{design_grid, nested_subset, DomainSpec, GridDesign};
use sfbm_core::model::CovarianceModel;
use sfbm_core::sampler::{build_sfbm_sampler, ReplicationRunner};
use sfbm_core::{Error, Result};

use crate::config::ConstantJob;

/// Decorrelated child seed for the `stream`-th sub-experiment (SplitMix64 finalizer).
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs the ladder for `job`, returning the estimate whatever its limit status.
pub fn estimate_constant<R: ReplicationRunner>(
    runner: &R,
    job: &ConstantJob,
    seed: u64,
    max_points: usize,
) -> Result<ConstantEstimate> {
    let ladder = job.ladder(max_points);
    let (h, n, d) = (job.hurst, job.dim, &job.drift);
    match job.kind {
        ConstantKind::Pickands => estimate_pickands_unchecked(runner, h, n, &ladder, seed),
        ConstantKind::Piterbarg => estimate_piterbarg_unchecked(runner, h, n, d, &ladder, seed),
        ConstantKind::M => estimate_m_unchecked(runner, h, n, d, &ladder, seed),
        ConstantKind::MHat => estimate_m_hat_unchecked(runner, h, n, d, &ladder, seed),
    }
}

pub fn model_for(domain: &DomainSpec, beta: f64) -> Result<CovarianceModel> {
    match domain {
        DomainSpec::FullSphere { n } => CovarianceModel::for_sphere(beta, *n),
        DomainSpec::GeodesicDisc { n, .. } => CovarianceModel::for_disc(beta, *n),
        DomainSpec::EuclideanRectangle { .. } => Err(Error::Configuration(
            "the spherical field is not defined on a Euclidean rectangle".into(),
        )),
    }
}

/// The tail asymptotic of the domain: sphere, arc (N = 1 disc) or disc.
pub fn formula_for(domain: &DomainSpec, beta: f64, constant: ConstantInput) -> Result<AsymptoticValue> {
    match domain {
        DomainSpec::FullSphere { n } => sphere_asymptotic(*n, beta, constant),
        DomainSpec::GeodesicDisc { n: 1, a } => arc_asymptotic(beta, *a, constant),
        DomainSpec::GeodesicDisc { n, a } => disc_asymptotic(*n, beta, *a, constant),
        DomainSpec::EuclideanRectangle { .. } => Err(Error::Configuration(
            "no spherical asymptotic for a Euclidean rectangle".into(),
        )),
    }
}

/// Smallest level considered asymptotic: 2·max(1, 1/c) with c the tail-argument scale.
pub fn window_floor(formula: &AsymptoticValue) -> f64 {
    2.0 * 1f64.max(1.0 / formula.tail_argument_scale)
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub id: String,
    pub domain: DomainSpec,
    pub resolution: f64,
    pub refinement_level: u32,
    pub points: usize,
    pub mesh: f64,
}

impl From<&GridDesign> for GridSummary {
    fn from(g: &GridDesign) -> Self {
        Self {
            id: g.id(),
            domain: g.domain.clone(),
            resolution: g.resolution,
            refinement_level: g.refinement_level,
            points: g.len(),
            mesh: g.mesh,
        }
    }
}

/// Everything a validation run produces.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationRun {
    pub beta: f64,
    pub grid: GridSummary,
    pub coarse_grid: Option<GridSummary>,
    pub formula: AsymptoticValue,
    pub curve: ExcursionCurve,
    pub report: RatioReport,
    /// Row indices inside the usable window.
    pub window: Vec<usize>,
    pub window_trend: Option<TrendStatistic>,
}

impl ValidationRun {
    pub fn largest_usable(&self) -> Option<usize> {
        self.window.last().copied()
    }
}

/// Simulates the field on a grid of the domain, compares the excursion curve with the
/// asymptotic, and records the ratio shift against the nested grid at twice the
/// resolution when one exists.
#[allow(clippy::too_many_arguments)]
pub fn run_validation<R: ReplicationRunner>(
    runner: &R,
    domain: &DomainSpec,
    beta: f64,
    resolution: f64,
    u_values: &[f64],
    replications: usize,
    seed: u64,
    constant: ConstantInput,
    min_exceedances: usize,
    max_points: usize,
) -> Result<ValidationRun> {
    let model = model_for(domain, beta)?;
    let formula = formula_for(domain, beta, constant)?;
    let grid = design_grid(domain, resolution, max_points)?;
    let coarse = design_grid(domain, 2.0 * resolution, max_points)
        .ok()
        .and_then(|c| nested_subset(&c, &grid).map(|idx| (c, idx)));
    let points = grid
        .sphere_points()
        .ok_or_else(|| Error::Configuration("spherical grid expected".into()))?;
    let sampler = build_sfbm_sampler(&model, points, seed)?;
    let subsets: Vec<Vec<usize>> = coarse.iter().map(|(_, idx)| idx.clone()).collect();
    let maxima = path_maxima(runner, &sampler, replications, &subsets);
    let curve = ExcursionCurve::from_maxima(&maxima[0], u_values, grid.id(), seed)?;
    let mut report = validate_ratio(&curve, &formula);
    if let Some((c, _)) = &coarse {
        let coarse_curve = ExcursionCurve::from_maxima(&maxima[1], u_values, c.id(), seed)?;
        report = report.with_refinement(&validate_ratio(&coarse_curve, &formula))?;
    }
    let floor = window_floor(&formula);
    let window: Vec<usize> = usable_window(&curve, grid.mesh, beta, min_exceedances)
        .into_iter()
        .filter(|&i| u_values[i] >= floor)
        .collect();
    let window_trend = trend_statistic(&report, &window);
    Ok(ValidationRun {
        beta,
        grid: GridSummary::from(&grid),
        coarse_grid: coarse.as_ref().map(|(c, _)| GridSummary::from(c)),
        formula,
        curve,
        report,
        window,
        window_trend,
    })
}
