//! Covariance structure of spherical fractional Brownian motion (SFBM).
//!
//! B(o) = 0 and E[B(x) − B(y)]² = d(x, y)^{2β}, so
//! Cov(B(x), B(y)) = ½(d(x,o)^{2β} + d(y,o)^{2β} − d(x,y)^{2β}).

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

// Redundant whenever std is linked into the build.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::geometry::{
    disc_metric_scales, geodesic_distance, to_cartesian, SphericalCoord, SpherePoint,
};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CovarianceModel {
    beta: f64,
    origin: SpherePoint,
}

impl CovarianceModel {
    /// `beta` must lie in (0, 1/2]; the field does not exist on the sphere beyond 1/2.
    pub fn new(beta: f64, origin: SpherePoint) -> Result<Self> {
        if !(beta > 0.0 && beta <= 0.5) {
            return Err(domain("Hurst index beta", beta));
        }
        Ok(Self { beta, origin })
    }

    /// Base point (0, …, 0, 1, 0) used for the full sphere; its antipode is θ₀ = (π/2, …, π/2, π).
    pub fn sphere_origin(n: usize) -> SpherePoint {
        SpherePoint::axis(n, n - 1)
    }

    /// Base point (1, 0, …, 0) used for geodesic discs, spherical coordinates (0, …, 0).
    pub fn disc_origin(n: usize) -> SpherePoint {
        SpherePoint::axis(n, 0)
    }

    pub fn for_sphere(beta: f64, n: usize) -> Result<Self> {
        Self::new(beta, Self::sphere_origin(n))
    }

    pub fn for_disc(beta: f64, n: usize) -> Result<Self> {
        Self::new(beta, Self::disc_origin(n))
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn origin(&self) -> &SpherePoint {
        &self.origin
    }

    pub fn dim(&self) -> usize {
        self.origin.dim()
    }

    pub fn variogram(&self, p: &SpherePoint, q: &SpherePoint) -> f64 {
        self.power(geodesic_distance(p, q))
    }

    pub fn covariance(&self, p: &SpherePoint, q: &SpherePoint) -> f64 {
        0.5 * (self.variogram(p, &self.origin) + self.variogram(q, &self.origin)
            - self.variogram(p, q))
    }

    pub fn std_dev(&self, p: &SpherePoint) -> f64 {
        geodesic_distance(p, &self.origin).powf(self.beta)
    }

    pub fn correlation(&self, p: &SpherePoint, q: &SpherePoint) -> Result<f64> {
        let (sp, sq) = (self.std_dev(p), self.std_dev(q));
        if sp == 0.0 || sq == 0.0 {
            return Err(Error::UndefinedCorrelation);
        }
        Ok((self.covariance(p, q) / (sp * sq)).clamp(-1.0, 1.0))
    }

    /// 1 − r(p, q) = [d^{2β}(p,q) − (σ(p) − σ(q))²] / (2σ(p)σ(q)), without cancellation near r = 1.
    pub fn one_minus_correlation(&self, p: &SpherePoint, q: &SpherePoint) -> Result<f64> {
        let (sp, sq) = (self.std_dev(p), self.std_dev(q));
        if sp == 0.0 || sq == 0.0 {
            return Err(Error::UndefinedCorrelation);
        }
        let diff = sp - sq;
        Ok((self.variogram(p, q) - diff * diff) / (2.0 * sp * sq))
    }

    fn power(&self, d: f64) -> f64 {
        d.powf(2.0 * self.beta)
    }

    fn require_origin(&self, want: SpherePoint, which: &str) -> Result<()> {
        if self.origin.chord(&want) > 1e-12 {
            return Err(Error::Configuration(alloc::format!(
                "{which} expansion needs the model based at its canonical origin"
            )));
        }
        Ok(())
    }
}

/// θ₀ = (π/2, …, π/2, π): spherical coordinates of the antipode of the sphere base point.
pub fn sphere_maximizer(n: usize) -> SphericalCoord {
    let mut theta = alloc::vec![FRAC_PI_2; n];
    theta[n - 1] = PI;
    SphericalCoord::new(theta).expect("valid maximizer coordinates")
}

/// Relative errors of the two local expansions of the field on the full sphere around θ₀:
/// σ̃(θ) ≈ π^β − βπ^{β−1}‖θ − θ₀‖ and 1 − r̃(θ, φ) ≈ ‖φ − θ‖^{2β}/(2π^{2β}).
///
/// The model must be based at [`CovarianceModel::sphere_origin`].
pub fn sphere_expansion_error(
    m: &CovarianceModel,
    theta: &SphericalCoord,
    phi: &SphericalCoord,
) -> Result<(f64, f64)> {
    let n = m.dim();
    m.require_origin(CovarianceModel::sphere_origin(n), "sphere")?;
    check_dims(n, theta, phi)?;
    let beta = m.beta;

    let dist0 = theta.angle_distance(&sphere_maximizer(n));
    if dist0 == 0.0 {
        return Err(Error::DegenerateInput("theta equals the variance maximizer"));
    }
    let h = phi.angle_distance(theta);
    if h == 0.0 {
        return Err(Error::DegenerateInput("theta equals phi"));
    }

    let (x, y) = (to_cartesian(theta), to_cartesian(phi));
    let slope = beta * PI.powf(beta - 1.0) * dist0;
    let sigma_err = (m.std_dev(&x) - (PI.powf(beta) - slope)) / slope;

    let model_corr = h.powf(2.0 * beta) / (2.0 * PI.powf(2.0 * beta));
    let corr_err = (m.one_minus_correlation(&x, &y)? - model_corr) / model_corr;
    Ok((sigma_err, corr_err))
}

/// Relative errors of the expansions near the boundary shell θ₁ = a of the geodesic disc
/// T_a about (1, 0, …, 0):
/// σ̃(θ)/a^β ≈ 1 − (β/a)|a − θ₁| and
/// 1 − r̃(θ, φ) ≈ (2a^{2β})^{-1}[Σ wᵢ(φᵢ − θᵢ)²]^β with w = [`disc_metric_scales`]`(a, θ̂)`.
pub fn disc_expansion_error(
    m: &CovarianceModel,
    a: f64,
    theta: &SphericalCoord,
    phi: &SphericalCoord,
) -> Result<(f64, f64)> {
    let n = m.dim();
    m.require_origin(CovarianceModel::disc_origin(n), "disc")?;
    check_dims(n, theta, phi)?;
    if !(a > 0.0 && a < PI) {
        return Err(domain("disc radius", a));
    }
    let (t1, p1) = (theta.angles()[0], phi.angles()[0]);
    if !(0.0..=a).contains(&t1) || !(0.0..=a).contains(&p1) {
        return Err(domain("first angle outside [0, a]", if t1 > a { t1 } else { p1 }));
    }
    let beta = m.beta;

    let gap = a - t1;
    if gap == 0.0 {
        return Err(Error::DegenerateInput("theta lies on the boundary shell"));
    }
    if theta == phi {
        return Err(Error::DegenerateInput("theta equals phi"));
    }
    let (x, y) = (to_cartesian(theta), to_cartesian(phi));

    let slope = beta / a * gap;
    let sigma_err = (m.std_dev(&x) / a.powf(beta) - (1.0 - slope)) / slope;

    let weights = disc_metric_scales(a, &theta.angles()[1..])?;
    let quad: f64 = weights
        .iter()
        .zip(theta.angles().iter().zip(phi.angles()))
        .map(|(w, (t, p))| w * (p - t) * (p - t))
        .sum();
    let model_corr = quad.powf(beta) / (2.0 * a.powf(2.0 * beta));
    let corr_err = (m.one_minus_correlation(&x, &y)? - model_corr) / model_corr;
    Ok((sigma_err, corr_err))
}

fn check_dims(n: usize, theta: &SphericalCoord, phi: &SphericalCoord) -> Result<()> {
    if theta.dim() != n || phi.dim() != n {
        return Err(Error::Configuration(alloc::format!(
            "coordinates of dimension {}/{} for a model on S^{n}",
            theta.dim(),
            phi.dim()
        )));
    }
    Ok(())
}

/// Empirical Hölder constant: the largest d^{2β}(p, q)/‖p − q‖^{2β} over distinct pairs
/// of `points`. Geodesic distance is at most π/2 times the chord, so the value never
/// exceeds (π/2)^{2β}.
pub fn holder_constant(m: &CovarianceModel, points: &[SpherePoint]) -> f64 {
    let mut c: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            let chord = p.chord(q);
            if chord > 0.0 {
                c = c.max(m.variogram(p, q) / chord.powf(2.0 * m.beta));
            }
        }
    }
    c
}

/// Dense covariance matrix (row-major, n × n) of the field over `points`.
pub fn covariance_matrix(m: &CovarianceModel, points: &[SpherePoint]) -> Vec<f64> {
    let n = points.len();
    let to_origin: Vec<f64> = points.iter().map(|p| m.variogram(p, &m.origin)).collect();
    let mut cov = alloc::vec![0.0; n * n];
    for i in 0..n {
        cov[i * n + i] = to_origin[i];
        for j in 0..i {
            let c = 0.5 * (to_origin[i] + to_origin[j] - m.variogram(&points[i], &points[j]));
            cov[i * n + j] = c;
            cov[j * n + i] = c;
        }
    }
    cov
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn circle(angle: f64) -> SpherePoint {
        SpherePoint::new(vec![angle.cos(), angle.sin()]).unwrap()
    }

    fn circle_model(beta: f64) -> CovarianceModel {
        CovarianceModel::new(beta, circle(0.0)).unwrap()
    }

    #[test]
    fn beta_range() {
        let o = circle(0.0);
        assert!(CovarianceModel::new(0.0, o.clone()).is_err());
        assert!(CovarianceModel::new(0.6, o.clone()).is_err());
        assert!(CovarianceModel::new(f64::NAN, o.clone()).is_err());
        assert!(CovarianceModel::new(0.5, o).is_ok());
    }

    #[test]
    fn variogram_values() {
        let m = circle_model(0.5);
        let p = circle(1.0);
        assert_eq!(m.variogram(&p, &p), 0.0);
        assert!((m.variogram(&p, &p.antipode()) - PI).abs() < 1e-7);
        let m = circle_model(0.25);
        let v = m.variogram(&circle(0.0), &circle(FRAC_PI_2));
        assert!((v - 1.253_314_137_315_500_3).abs() < 1e-12);
    }

    #[test]
    fn covariance_values() {
        let m = circle_model(0.5);
        let (p, q) = (circle(1.0), circle(2.0));
        assert_eq!(m.covariance(&p, m.origin()), 0.0);
        assert!((m.covariance(&p, &p) - 1.0).abs() < 1e-12);
        assert!((m.covariance(&p, &q) - 1.0).abs() < 1e-12);
        assert!((m.correlation(&p, &q).unwrap() - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((m.correlation(&p, &p).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(m.correlation(&p, m.origin()), Err(Error::UndefinedCorrelation));
    }

    #[test]
    fn std_dev_values() {
        let m = circle_model(0.5);
        assert_eq!(m.std_dev(m.origin()), 0.0);
        assert!((m.std_dev(&circle(PI)) - PI.sqrt()).abs() < 1e-12);
        assert!((m.std_dev(&circle(PI / 4.0)) - 0.886_226_925_452_758).abs() < 1e-12);
        let m = CovarianceModel::for_sphere(0.3, 2).unwrap();
        let anti = to_cartesian(&sphere_maximizer(2));
        assert!((m.std_dev(&anti) - PI.powf(0.3)).abs() < 1e-7);
    }

    #[test]
    fn sphere_expansion_first_error_small() {
        let m = CovarianceModel::for_sphere(0.25, 2).unwrap();
        let t0 = sphere_maximizer(2);
        let d = 1e-3 / 2f64.sqrt();
        let theta = SphericalCoord::new(vec![t0.angles()[0] + d, PI - d]).unwrap();
        let phi = SphericalCoord::new(vec![t0.angles()[0] - d, PI - d]).unwrap();
        let (e1, _) = sphere_expansion_error(&m, &theta, &phi).unwrap();
        assert!(e1.abs() < 0.01, "{e1}");
    }

    #[test]
    fn sphere_expansion_second_error_small() {
        let m = CovarianceModel::for_sphere(0.5, 2).unwrap();
        let phi = SphericalCoord::new(vec![FRAC_PI_2 + 2e-3, PI - 1e-3]).unwrap();
        let theta = SphericalCoord::new(vec![FRAC_PI_2 + 3e-3, PI - 1e-3]).unwrap();
        let (_, e2) = sphere_expansion_error(&m, &theta, &phi).unwrap();
        assert!(e2.abs() < 0.05, "{e2}");
    }

    #[test]
    fn expansion_degenerate_inputs() {
        let m = CovarianceModel::for_sphere(0.5, 2).unwrap();
        let t0 = sphere_maximizer(2);
        let phi = SphericalCoord::new(vec![1.0, 3.0]).unwrap();
        assert!(matches!(
            sphere_expansion_error(&m, &t0, &phi),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            sphere_expansion_error(&m, &phi, &phi),
            Err(Error::DegenerateInput(_))
        ));
        let wrong_origin = CovarianceModel::for_disc(0.5, 2).unwrap();
        assert!(matches!(
            sphere_expansion_error(&wrong_origin, &phi, &t0),
            Err(Error::Configuration(_))
        ));

        let m = CovarianceModel::for_disc(0.5, 2).unwrap();
        let on_shell = SphericalCoord::new(vec![1.0, 0.5]).unwrap();
        let inside = SphericalCoord::new(vec![0.9, 0.5]).unwrap();
        assert!(matches!(
            disc_expansion_error(&m, 1.0, &on_shell, &inside),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            disc_expansion_error(&m, 1.0, &inside, &inside),
            Err(Error::DegenerateInput(_))
        ));
        assert!(disc_expansion_error(&m, 0.5, &inside, &on_shell).is_err());
    }

    #[test]
    fn disc_variance_error_is_taylor_remainder() {
        let a = FRAC_PI_2;
        let m = CovarianceModel::for_disc(0.5, 2).unwrap();
        let theta = SphericalCoord::new(vec![a - 1e-3, 1.0]).unwrap();
        let phi = SphericalCoord::new(vec![a - 2e-3, 1.1]).unwrap();
        let (e1, _) = disc_expansion_error(&m, a, &theta, &phi).unwrap();
        // (1 − δ/a)^β = 1 − βδ/a + β(β−1)/2 (δ/a)² + …
        let delta = 1e-3 / a;
        let remainder = ((1.0 - delta).powf(0.5) - 1.0 + 0.5 * delta) / (0.5 * delta);
        assert!((e1 - remainder).abs() < 1e-9);
        assert!(e1.abs() < 1e-3);
    }

    #[test]
    fn disc_n1_matches_arc() {
        let a = 1.0;
        let m = CovarianceModel::for_disc(0.5, 1).unwrap();
        let theta = SphericalCoord::new(vec![a - 1e-4]).unwrap();
        let phi = SphericalCoord::new(vec![a - 3e-4]).unwrap();
        let (_, e2) = disc_expansion_error(&m, a, &theta, &phi).unwrap();
        assert!(e2.abs() < 1e-3, "{e2}");
    }

    fn sphere_point(n: usize) -> impl Strategy<Value = SpherePoint> {
        prop::collection::vec(-1.0f64..1.0, n + 1)
            .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
            .prop_map(|v| SpherePoint::new(v).unwrap())
    }

    #[test]
    fn holder_constant_is_finite_and_sharp() {
        let n = 2;
        let m = CovarianceModel::for_sphere(0.4, n).unwrap();
        // Near-antipodal pairs approach the bound.
        let pts: Vec<SpherePoint> = (0..400)
            .map(|k| {
                let t = k as f64 * 0.7;
                SpherePoint::new(vec![t.cos(), t.sin() * (0.3 * t).cos(), t.sin() * (0.3 * t).sin()]).unwrap()
            })
            .collect();
        let c = holder_constant(&m, &pts);
        let bound = FRAC_PI_2.powf(0.8);
        assert!(c <= bound + 1e-12 && c > 0.99 * bound, "{c} vs {bound}");
    }

    proptest! {
        #[test]
        fn variogram_below_holder_bound(
            beta in 0.05f64..=0.5,
            (p, q) in (1usize..=3).prop_flat_map(|n| (sphere_point(n), sphere_point(n))),
        ) {
            let m = CovarianceModel::new(beta, CovarianceModel::sphere_origin(p.dim())).unwrap();
            let bound = FRAC_PI_2.powf(2.0 * beta) * p.chord(&q).powf(2.0 * beta);
            prop_assert!(m.variogram(&p, &q) <= bound * (1.0 + 1e-12) + 1e-15);
        }

        #[test]
        fn covariance_is_definition_consistent(
            beta in 0.05f64..=0.5,
            (p, q) in (1usize..=3).prop_flat_map(|n| (sphere_point(n), sphere_point(n))),
        ) {
            let m = CovarianceModel::new(beta, CovarianceModel::sphere_origin(p.dim())).unwrap();
            let o = m.origin().clone();
            let want = 0.5 * (m.variogram(&p, &o) + m.variogram(&q, &o) - m.variogram(&p, &q));
            prop_assert_eq!(m.covariance(&p, &q), want);
            prop_assert_eq!(m.covariance(&p, &q), m.covariance(&q, &p));
        }

        #[test]
        fn correlation_below_one_for_distinct_points(
            beta in 0.05f64..=0.5,
            (p, q) in (1usize..=3).prop_flat_map(|n| (sphere_point(n), sphere_point(n))),
        ) {
            let m = CovarianceModel::new(beta, CovarianceModel::sphere_origin(p.dim())).unwrap();
            prop_assume!(p.chord(&q) > 1e-6 && m.std_dev(&p) > 1e-6 && m.std_dev(&q) > 1e-6);
            let r = m.correlation(&p, &q).unwrap();
            prop_assert!(r < 1.0 && r >= -1.0);
            prop_assert!(m.one_minus_correlation(&p, &q).unwrap() > 0.0);
        }
    }
}
