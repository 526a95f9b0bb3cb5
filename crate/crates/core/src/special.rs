//! Standard-normal tail and gamma-function helpers.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

// Redundant whenever std is linked into the build.
#[allow(unused_imports)]
use num_traits::Float;


/// ln √(2π)
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Above this level `erfc` output is subnormal and the log-space route is used instead.
const ERFC_CUTOFF: f64 = 37.0;

/// Standard normal tail probability Ψ(u) = P(Z > u).
pub fn psi_tail(u: f64) -> f64 {
    if u.is_nan() {
        return f64::NAN;
    }
    if u <= ERFC_CUTOFF {
        0.5 * libm::erfc(u * FRAC_1_SQRT_2)
    } else {
        ln_psi_tail(u).exp()
    }
}

/// ln Ψ(u), finite for every finite `u`.
pub fn ln_psi_tail(u: f64) -> f64 {
    if u < 0.0 {
        return (-psi_tail(-u)).ln_1p();
    }
    if u < 8.0 {
        return psi_tail(u).ln();
    }
    -0.5 * u * u - LN_SQRT_2PI + mills_ratio(u).ln()
}

/// Mills ratio Ψ(u)/φ(u) for u ≥ 8 via the Laplace continued fraction
/// R = 1/(u + 1/(u + 2/(u + 3/(u + …)))), evaluated bottom-up.
fn mills_ratio(u: f64) -> f64 {
    let mut tail = u;
    for k in (1..=120).rev() {
        tail = u + k as f64 / tail;
    }
    1.0 / tail
}

/// Γ(x).
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Surface area of the unit sphere S^{n-1} ⊂ ℝⁿ, 2π^{n/2}/Γ(n/2).
///
/// For n = 1 this is the counting measure of S⁰ = {±1}, i.e. 2.
pub(crate) fn unit_sphere_area(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * PI.powf(half) / gamma(half)
}
