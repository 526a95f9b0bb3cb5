//! Quasi-uniform point sets on spheres, geodesic discs and rectangles.
//!
//! Sphere-domain grids are expressed in the coordinates of [`CovarianceModel`]: the full
//! sphere is based at `sphere_origin(N)` and always contains its antipode θ₀; a geodesic
//! disc is centred at `disc_origin(N)` and always contains its boundary shell θ₁ = a,
//! sampled at half the mesh within 4·resolution of it.
//!
//! [`CovarianceModel`]: crate::model::CovarianceModel

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

// Redundant whenever std is linked into the build.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::geometry::SpherePoint;
use crate::model::CovarianceModel;
use crate::special::unit_sphere_area;

/// Region a grid covers.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum DomainSpec {
    FullSphere { n: usize },
    GeodesicDisc { n: usize, a: f64 },
    EuclideanRectangle { bounds: Vec<(f64, f64)> },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::FullSphere { n } if *n == 0 => Err(domain("sphere dimension", 0.0)),
            DomainSpec::GeodesicDisc { n, .. } if *n == 0 => Err(domain("disc dimension", 0.0)),
            DomainSpec::GeodesicDisc { a, .. } if !(*a > 0.0 && *a < PI) => {
                Err(domain("disc radius", *a))
            }
            DomainSpec::EuclideanRectangle { bounds } => {
                if bounds.is_empty() {
                    return Err(Error::Configuration("rectangle has no coordinates".into()));
                }
                for &(lo, hi) in bounds {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(domain("rectangle bound", hi));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Rough point count of a grid with the given resolution, used before building.
    pub fn projected_points(&self, resolution: f64) -> f64 {
        match self {
            DomainSpec::FullSphere { n } => {
                let nf = *n as f64;
                unit_sphere_area(n + 1) / resolution.powf(nf) * 1.3 + 2.0
            }
            DomainSpec::GeodesicDisc { n, a } => {
                let nf = *n as f64;
                let cap = unit_sphere_area(*n) * a.powf(nf) / nf;
                let shell = unit_sphere_area(*n) * a.sin().max(a / 10.0).powf(nf - 1.0)
                    * 4.0
                    * resolution;
                (cap + shell * (2f64.powf(nf) - 1.0)) / resolution.powf(nf) + 2.0
            }
            DomainSpec::EuclideanRectangle { bounds } => bounds
                .iter()
                .map(|(lo, hi)| ((hi - lo) / resolution).ceil() + 1.0)
                .product(),
        }
    }

    fn label(&self) -> String {
        match self {
            DomainSpec::FullSphere { n } => format!("sphere{n}"),
            DomainSpec::GeodesicDisc { n, a } => format!("disc{n}-a{a}"),
            DomainSpec::EuclideanRectangle { bounds } => format!("rect{}", bounds.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum GridPoints {
    Sphere(Vec<SpherePoint>),
    Euclidean(Vec<Vec<f64>>),
}

impl GridPoints {
    pub fn len(&self) -> usize {
        match self {
            GridPoints::Sphere(p) => p.len(),
            GridPoints::Euclidean(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridDesign {
    pub domain: DomainSpec,
    pub points: GridPoints,
    /// Target mesh.
    pub resolution: f64,
    pub refinement_level: u32,
    /// Audited mesh: largest nearest-neighbour distance.
    pub mesh: f64,
}

impl GridDesign {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn sphere_points(&self) -> Option<&[SpherePoint]> {
        match &self.points {
            GridPoints::Sphere(p) => Some(p),
            GridPoints::Euclidean(_) => None,
        }
    }

    pub fn id(&self) -> String {
        format!(
            "{}-res{:.6}-level{}-{}pts",
            self.domain.label(),
            self.resolution,
            self.refinement_level,
            self.len()
        )
    }

    /// The grid at half the resolution; for circles, arcs and rectangles it contains this one.
    pub fn refined(&self, max_points: usize) -> Result<Self> {
        let mut g = design_grid(&self.domain, self.resolution / 2.0, max_points)?;
        g.refinement_level = self.refinement_level + 1;
        Ok(g)
    }
}

fn resource(domain_spec: &DomainSpec, points: usize, cap: usize, resolution: f64) -> Error {
    let dim = match domain_spec {
        DomainSpec::FullSphere { n } | DomainSpec::GeodesicDisc { n, .. } => *n,
        DomainSpec::EuclideanRectangle { bounds } => bounds.len(),
    } as f64;
    let scale = (points as f64 / cap as f64).powf(1.0 / dim);
    Error::Resource {
        points,
        cap,
        suggested_resolution: resolution * scale * 1.05,
    }
}

/// Builds a grid with mesh ≤ `resolution`, rejecting designs above `max_points`.
pub fn design_grid(domain_spec: &DomainSpec, resolution: f64, max_points: usize) -> Result<GridDesign> {
    domain_spec.validate()?;
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(domain("resolution", resolution));
    }
    let projected = domain_spec.projected_points(resolution);
    if projected > 4.0 * max_points as f64 {
        return Err(resource(domain_spec, projected as usize, max_points, resolution));
    }
    let points = match domain_spec {
        DomainSpec::FullSphere { n } => GridPoints::Sphere(full_sphere(*n, resolution)),
        DomainSpec::GeodesicDisc { n, a } => GridPoints::Sphere(disc(*n, *a, resolution)),
        DomainSpec::EuclideanRectangle { bounds } => GridPoints::Euclidean(rectangle(bounds, resolution)),
    };
    if points.len() > max_points {
        return Err(resource(domain_spec, points.len(), max_points, resolution));
    }
    let mesh = match &points {
        GridPoints::Sphere(p) => sphere_mesh(p),
        GridPoints::Euclidean(p) => euclidean_mesh(p),
    };
    Ok(GridDesign {
        domain: domain_spec.clone(),
        points,
        resolution,
        refinement_level: 0,
        mesh,
    })
}

fn intervals(len: f64, step: f64) -> usize {
    ((len / step - 1e-9).ceil() as usize).max(1)
}

fn circle_point(theta: f64) -> SpherePoint {
    SpherePoint::new(alloc::vec![theta.cos(), theta.sin()]).expect("unit vector")
}

fn full_sphere(n: usize, res: f64) -> Vec<SpherePoint> {
    match n {
        1 => {
            // Base point at angle 0, antipode at π: an even count keeps both on the grid.
            let mut m = intervals(TAU, res);
            m += m % 2;
            m = m.max(2);
            (0..m).map(|k| circle_point(TAU * k as f64 / m as f64)).collect()
        }
        2 => fibonacci_sphere(res),
        _ => {
            let mut pts = rings(n, PI, res, None);
            let anti = CovarianceModel::sphere_origin(n).antipode();
            if !pts.iter().any(|p| p.chord(&anti) < 1e-12) {
                pts.retain(|p| p.chord(&anti) > 0.25 * res);
                pts.push(anti);
            }
            pts
        }
    }
}

/// Fibonacci lattice on S², enlarged until the audited mesh meets `res`, plus θ₀.
fn fibonacci_sphere(res: f64) -> Vec<SpherePoint> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let anti = CovarianceModel::sphere_origin(2).antipode();
    // Hexagonal packing estimate of the count, then grow until the audit passes.
    let mut m = (4.0 * PI / (0.5 * 3f64.sqrt() * res * res)).ceil() as usize;
    loop {
        let mut pts: Vec<SpherePoint> = (0..m)
            .map(|k| {
                let z = 1.0 - (2 * k + 1) as f64 / m as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * k as f64;
                SpherePoint::new(alloc::vec![r * phi.cos(), z, r * phi.sin()]).expect("unit vector")
            })
            .collect();
        pts.retain(|p| p.chord(&anti) > 0.25 * res);
        pts.push(anti.clone());
        if sphere_mesh(&pts) <= res || m > 50_000_000 {
            return pts;
        }
        m = (m as f64 * 1.03).ceil() as usize;
    }
}

/// Polar angles 0 = x₀ < … < x_K = top with step ≤ res, halved within 4·res of `shell`.
fn polar_levels(top: f64, res: f64, shell: Option<f64>) -> Vec<f64> {
    let k = intervals(top, res);
    let step = top / k as f64;
    let mut xs = Vec::with_capacity(2 * k + 1);
    for i in 0..=k {
        let x = step * i as f64;
        if i > 0 {
            let prev = step * (i - 1) as f64;
            if let Some(s) = shell {
                if prev >= s - 4.0 * res - 1e-12 {
                    xs.push(0.5 * (prev + x));
                }
            }
        }
        xs.push(x);
    }
    xs
}

/// Points of S^{n−1} at resolution `res` (n ≥ 1), as unit vectors of ℝⁿ.
fn sub_sphere(n: usize, res: f64) -> Vec<Vec<f64>> {
    let res = res.min(PI / 2.0);
    if n == 1 {
        return alloc::vec![alloc::vec![1.0], alloc::vec![-1.0]];
    }
    full_sphere(n - 1, res)
        .into_iter()
        .map(|p| p.coords().to_vec())
        .collect()
}

/// Latitude rings about e₀ up to polar angle `top`; each ring is a scaled S^{n−1} grid.
fn rings(n: usize, top: f64, res: f64, shell: Option<f64>) -> Vec<SpherePoint> {
    let mut pts = alloc::vec![SpherePoint::axis(n, 0)];
    for theta in polar_levels(top, res, shell).into_iter().skip(1) {
        let near_shell = shell.is_some_and(|s| theta >= s - 4.0 * res - 1e-12);
        let local = if near_shell { res / 2.0 } else { res };
        let s = theta.sin();
        if s < 1e-12 {
            let mut x = alloc::vec![0.0; n + 1];
            x[0] = theta.cos();
            pts.push(SpherePoint::new(x).expect("unit vector"));
            continue;
        }
        for y in sub_sphere(n, local / s) {
            let mut x = Vec::with_capacity(n + 1);
            x.push(theta.cos());
            x.extend(y.iter().map(|v| s * v));
            pts.push(SpherePoint::new(x).expect("unit vector"));
        }
    }
    pts
}

fn disc(n: usize, a: f64, res: f64) -> Vec<SpherePoint> {
    if n == 1 {
        // Arc of half-angle a about (1, 0); both ends are on the shell.
        let k = intervals(2.0 * a, res);
        let step = 2.0 * a / k as f64;
        let mut angles = Vec::with_capacity(k + 32);
        for i in 0..=k {
            let x = -a + step * i as f64;
            if i > 0 {
                let prev = x - step;
                if prev >= a - 4.0 * res - 1e-12 || x <= -a + 4.0 * res + 1e-12 {
                    angles.push(0.5 * (prev + x));
                }
            }
            angles.push(x);
        }
        return angles.into_iter().map(circle_point).collect();
    }
    rings(n, a, res, Some(a))
}

fn rectangle(bounds: &[(f64, f64)], res: f64) -> Vec<Vec<f64>> {
    let m: Vec<usize> = bounds.iter().map(|(lo, hi)| intervals(hi - lo, res)).collect();
    let count: usize = m.iter().map(|k| k + 1).product();
    let mut idx = alloc::vec![0usize; bounds.len()];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(
            idx.iter()
                .zip(bounds)
                .zip(&m)
                .map(|((&i, &(lo, hi)), &k)| lo + (hi - lo) * i as f64 / k as f64)
                .collect(),
        );
        for d in (0..bounds.len()).rev() {
            idx[d] += 1;
            if idx[d] <= m[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

/// Largest geodesic nearest-neighbour distance (brute force).
pub fn sphere_mesh(points: &[SpherePoint]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mut best = f64::INFINITY;
        for (j, q) in points.iter().enumerate() {
            if i != j {
                best = best.min(p.chord(q));
            }
        }
        worst = worst.max(best);
    }
    2.0 * (0.5 * worst).min(1.0).asin()
}

pub fn euclidean_mesh(points: &[Vec<f64>]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mut best = f64::INFINITY;
        for (j, q) in points.iter().enumerate() {
            if i != j {
                best = best.min(crate::sampler::distance(p, q));
            }
        }
        worst = worst.max(best);
    }
    worst
}

/// Positions in `fine` of every point of `coarse`, if `coarse` is a subset.
pub fn nested_subset(coarse: &GridDesign, fine: &GridDesign) -> Option<Vec<usize>> {
    let (c, f) = match (&coarse.points, &fine.points) {
        (GridPoints::Sphere(c), GridPoints::Sphere(f)) => (
            c.iter().map(|p| p.coords().to_vec()).collect::<Vec<_>>(),
            f.iter().map(|p| p.coords().to_vec()).collect::<Vec<_>>(),
        ),
        (GridPoints::Euclidean(c), GridPoints::Euclidean(f)) => (c.clone(), f.clone()),
        _ => return None,
    };
    let mut order: Vec<usize> = (0..f.len()).collect();
    order.sort_by(|&i, &j| f[i][0].total_cmp(&f[j][0]));
    let mut out = Vec::with_capacity(c.len());
    for p in &c {
        let start = order.partition_point(|&i| f[i][0] < p[0] - 1e-9);
        let hit = order[start..]
            .iter()
            .take_while(|&&i| f[i][0] <= p[0] + 1e-9)
            .find(|&&i| crate::sampler::distance(&f[i], p) < 1e-9)?;
        out.push(*hit);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{geodesic_distance, to_spherical};

    #[test]
    fn circle_grid_example() {
        let g = design_grid(&DomainSpec::FullSphere { n: 1 }, TAU / 1024.0, 5000).unwrap();
        assert_eq!(g.len(), 1024);
        let anti = CovarianceModel::sphere_origin(1).antipode();
        let pts = g.sphere_points().unwrap();
        assert!(pts.iter().any(|p| p.chord(&anti) < 1e-12));
        assert!((g.mesh - TAU / 1024.0).abs() < 1e-9);
    }

    #[test]
    fn arc_grid_example() {
        let res = 1.0 / 512.0;
        let g = design_grid(&DomainSpec::GeodesicDisc { n: 1, a: 1.0 }, res, 5000).unwrap();
        let o = CovarianceModel::disc_origin(1);
        let d: Vec<f64> = g.sphere_points().unwrap().iter().map(|p| geodesic_distance(p, &o)).collect();
        assert!(d.iter().any(|&x| (x - 1.0).abs() < 1e-12));
        assert!(d.iter().all(|&x| x <= 1.0 + 1e-12));
        assert!(g.mesh <= res + 1e-12);
        // Half mesh next to both ends.
        let pts = g.sphere_points().unwrap();
        let ang: Vec<f64> = pts.iter().map(|p| p.coords()[1].atan2(p.coords()[0])).collect();
        for w in ang.windows(2) {
            let gap = w[1] - w[0];
            assert!(gap > 0.0);
            if w[1] > 1.0 - 3.0 * res || w[0] < -1.0 + 3.0 * res {
                assert!(gap <= 0.5 * res + 1e-12);
            }
        }
    }

    #[test]
    fn two_sphere_grid_example() {
        let g = design_grid(&DomainSpec::FullSphere { n: 2 }, 0.06, 5000).unwrap();
        assert!(g.mesh <= 0.06, "{}", g.mesh);
        assert!(g.len() > 3000 && g.len() < 4800, "{}", g.len());
        let anti = CovarianceModel::sphere_origin(2).antipode();
        assert!(g.sphere_points().unwrap().iter().any(|p| p.chord(&anti) < 1e-12));
    }

    #[test]
    fn disc_grid_contains_the_shell() {
        let a = 1.2;
        let res = 0.1;
        let g = design_grid(&DomainSpec::GeodesicDisc { n: 2, a }, res, 5000).unwrap();
        let pts = g.sphere_points().unwrap();
        let o = CovarianceModel::disc_origin(2);
        let d: Vec<f64> = pts.iter().map(|p| geodesic_distance(p, &o)).collect();
        assert!(d.iter().all(|&x| x <= a + 1e-12));
        let shell = d.iter().filter(|&&x| (x - a).abs() < 1e-12).count();
        assert!(shell as f64 >= 2.0 * TAU * a.sin() / res);
        assert!(g.mesh <= res + 1e-12);
        for p in pts {
            let c = to_spherical(p);
            assert!(c.angles()[0] <= a + 1e-12);
        }
    }

    #[test]
    fn higher_dimensional_grids() {
        let g = design_grid(&DomainSpec::FullSphere { n: 3 }, 0.5, 5000).unwrap();
        assert!(g.mesh <= 0.5 + 1e-12);
        let anti = CovarianceModel::sphere_origin(3).antipode();
        assert!(g.sphere_points().unwrap().iter().any(|p| p.chord(&anti) < 1e-12));
        let d = design_grid(&DomainSpec::GeodesicDisc { n: 3, a: 1.0 }, 0.3, 5000).unwrap();
        assert!(d.mesh <= 0.3 + 1e-12);
    }

    #[test]
    fn rectangle_grid() {
        let g = design_grid(
            &DomainSpec::EuclideanRectangle { bounds: alloc::vec![(0.0, 1.0), (-1.0, 1.0)] },
            0.25,
            5000,
        )
        .unwrap();
        assert_eq!(g.len(), 5 * 9);
        assert!((g.mesh - 0.25).abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced_with_a_suggestion() {
        let err = design_grid(&DomainSpec::FullSphere { n: 2 }, 0.01, 5000).unwrap_err();
        match err {
            Error::Resource { cap, suggested_resolution, .. } => {
                assert_eq!(cap, 5000);
                let g = design_grid(&DomainSpec::FullSphere { n: 2 }, suggested_resolution, 5000);
                assert!(g.is_ok(), "{suggested_resolution}");
            }
            other => panic!("{other:?}"),
        }
        assert!(design_grid(&DomainSpec::FullSphere { n: 1 }, 0.0, 10).is_err());
        assert!(design_grid(&DomainSpec::GeodesicDisc { n: 1, a: 4.0 }, 0.1, 10).is_err());
    }

    #[test]
    fn refinements_nest() {
        for d in [
            DomainSpec::FullSphere { n: 1 },
            DomainSpec::GeodesicDisc { n: 1, a: 1.0 },
            DomainSpec::EuclideanRectangle { bounds: alloc::vec![(0.0, 1.0), (0.0, 2.0)] },
        ] {
            let g = design_grid(&d, 0.05, 5000).unwrap();
            let f = g.refined(5000).unwrap();
            assert_eq!(f.refinement_level, 1);
            let idx = nested_subset(&g, &f).expect("nested");
            assert_eq!(idx.len(), g.len());
        }
        let g = design_grid(&DomainSpec::FullSphere { n: 1 }, 0.1, 5000).unwrap();
        let shifted = design_grid(&DomainSpec::GeodesicDisc { n: 1, a: 1.0 }, 0.1, 5000).unwrap();
        assert!(nested_subset(&shifted, &g).is_none());
    }
}
