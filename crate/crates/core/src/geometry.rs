//! Points on the unit sphere S^N ⊂ ℝ^{N+1} and their hyperspherical coordinates.
//!
//! Coordinates follow x₁ = cos θ₁, x_k = (∏_{i<k} sin θᵢ) cos θ_k for k ≤ N and
//! x_{N+1} = ∏ sin θᵢ, with θ ∈ [0, π]^{N-1} × [0, 2π).

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};


// Redundant whenever std is linked into the build.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Result};
use crate::special;

/// Hyperspherical angles θ = (θ₁, …, θ_N) of a point of S^N.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SphericalCoord {
    theta: Vec<f64>,
}

impl SphericalCoord {
    /// Validates θᵢ ∈ [0, π] for i < N and θ_N ∈ [0, 2π).
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        let n = theta.len();
        if n == 0 {
            return Err(domain("sphere dimension", 0.0));
        }
        for (i, &t) in theta.iter().enumerate() {
            let ok = if i + 1 < n {
                (0.0..=PI).contains(&t)
            } else {
                (0.0..TAU).contains(&t)
            };
            if !ok {
                return Err(domain("spherical angle", t));
            }
        }
        Ok(Self { theta })
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.theta
    }

    /// Euclidean distance between angle vectors (the metric the local expansions use).
    pub fn angle_distance(&self, other: &Self) -> f64 {
        self.theta
            .iter()
            .zip(&other.theta)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// A unit vector in ℝ^{N+1}.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpherePoint {
    x: Vec<f64>,
}

impl SpherePoint {
    /// Renormalizes `x` onto the sphere. Needs at least two finite, not-all-zero components.
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.len() < 2 {
            return Err(domain("ambient dimension", x.len() as f64));
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(domain("vector norm", norm));
        }
        Ok(Self {
            x: x.into_iter().map(|v| v / norm).collect(),
        })
    }

    /// The k-th standard basis vector of ℝ^{n+1} (0-based `k`).
    pub fn axis(n: usize, k: usize) -> Self {
        let mut x = alloc::vec![0.0; n + 1];
        x[k] = 1.0;
        Self { x }
    }

    /// Sphere dimension N (ambient dimension minus one).
    pub fn dim(&self) -> usize {
        self.x.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.x
    }

    pub fn antipode(&self) -> Self {
        Self {
            x: self.x.iter().map(|v| -v).collect(),
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x.iter().zip(&other.x).map(|(a, b)| a * b).sum()
    }

    /// Chordal (ambient Euclidean) distance.
    pub fn chord(&self, other: &Self) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

pub fn to_cartesian(c: &SphericalCoord) -> SpherePoint {
    let n = c.dim();
    let mut x = Vec::with_capacity(n + 1);
    let mut sin_prod = 1.0;
    for &t in c.angles() {
        x.push(sin_prod * t.cos());
        sin_prod *= t.sin();
    }
    x.push(sin_prod);
    SpherePoint { x }
}

/// Inverse of [`to_cartesian`]. Where the angles are not unique (some sin θᵢ = 0)
/// every angle after the degenerate one is set to zero.
pub fn to_spherical(p: &SpherePoint) -> SphericalCoord {
    let x = p.coords();
    let n = p.dim();
    let mut theta = alloc::vec![0.0; n];

    // tails[k] = ‖(x_k, …, x_N)‖ (0-based)
    let mut tails = alloc::vec![0.0; n + 2];
    for k in (0..=n).rev() {
        tails[k] = (tails[k + 1] * tails[k + 1] + x[k] * x[k]).sqrt();
    }

    for i in 0..n - 1 {
        let rest = tails[i + 1];
        if rest == 0.0 {
            theta[i] = if x[i] < 0.0 { PI } else { 0.0 };
            return SphericalCoord { theta };
        }
        theta[i] = rest.atan2(x[i]);
    }
    if tails[n - 1] == 0.0 {
        return SphericalCoord { theta };
    }
    let mut last = x[n].atan2(x[n - 1]);
    if last < 0.0 {
        last += TAU;
    }
    if last >= TAU {
        last = 0.0;
    }
    theta[n - 1] = last;
    SphericalCoord { theta }
}

/// Great-circle distance arccos⟨p, q⟩ ∈ [0, π].
pub fn geodesic_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    p.dot(q).clamp(-1.0, 1.0).acos()
}

/// Area of S^{N-1}, i.e. 2π^{N/2}/Γ(N/2). For N = 1 this is the two points of S⁰.
pub fn sphere_area(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(domain("sphere_area dimension", 0.0));
    }
    Ok(special::unit_sphere_area(n))
}

/// Weights (1, sin²a, sin²a·sin²θ₂, …, sin²a·∏_{i=2}^{N-1} sin²θᵢ) of the quadratic form
/// in the correlation expansion near the boundary shell θ₁ = a of a geodesic disc.
///
/// `theta_hat` holds (θ₂, …, θ_N); only the first N − 2 entries enter.
pub fn disc_metric_scales(a: f64, theta_hat: &[f64]) -> Result<Vec<f64>> {
    if !(a > 0.0 && a < PI) {
        return Err(domain("disc radius", a));
    }
    let n = theta_hat.len() + 1;
    let mut scales = Vec::with_capacity(n);
    scales.push(1.0);
    if n == 1 {
        return Ok(scales);
    }
    let mut w = a.sin().powi(2);
    scales.push(w);
    for &t in &theta_hat[..n - 2] {
        w *= t.sin().powi(2);
        scales.push(w);
    }
    Ok(scales)
}
