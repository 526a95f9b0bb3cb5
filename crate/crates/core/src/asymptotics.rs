//! Closed-form excursion asymptotics of the form prefactor·u^e·Ψ(c·u).

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

// Redundant whenever std is linked into the build.
#[allow(unused_imports)]
use num_traits::Float;

use crate::constants::{ConstantEstimate, ConstantKind};
use crate::cubature::integrate_rectangle;
use crate::error::{domain, Error, Result};
use crate::geometry::disc_metric_scales;
use crate::special::{gamma, ln_psi_tail, psi_tail, unit_sphere_area};

/// Relative tolerance of the t̂-integrals.
pub const CUBATURE_TOLERANCE: f64 = 1e-8;

/// prefactor·u^{u_exponent}·Ψ(tail_argument_scale·u).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AsymptoticValue {
    pub prefactor: f64,
    pub u_exponent: f64,
    pub tail_argument_scale: f64,
}

impl AsymptoticValue {
    pub fn new(prefactor: f64, u_exponent: f64, tail_argument_scale: f64) -> Result<Self> {
        if !(prefactor > 0.0 && prefactor.is_finite()) {
            return Err(domain("prefactor", prefactor));
        }
        if !(tail_argument_scale > 0.0 && tail_argument_scale.is_finite()) {
            return Err(domain("tail argument scale", tail_argument_scale));
        }
        Ok(Self {
            prefactor,
            u_exponent,
            tail_argument_scale,
        })
    }

    pub fn value_at(&self, u: f64) -> f64 {
        if self.u_exponent == 0.0 {
            return self.prefactor * psi_tail(self.tail_argument_scale * u);
        }
        self.prefactor * u.powf(self.u_exponent) * psi_tail(self.tail_argument_scale * u)
    }

    /// ln of [`value_at`](Self::value_at) for u > 0; finite far beyond underflow.
    pub fn ln_value_at(&self, u: f64) -> f64 {
        self.prefactor.ln() + self.u_exponent * u.ln() + ln_psi_tail(self.tail_argument_scale * u)
    }

    /// The same asymptotic written in the level v = c·u: prefactor·c^e, scale·c.
    pub fn rescaled(&self, c: f64) -> Self {
        Self {
            prefactor: self.prefactor * c.powf(self.u_exponent),
            u_exponent: self.u_exponent,
            tail_argument_scale: self.tail_argument_scale * c,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            prefactor: self.prefactor * factor,
            ..*self
        }
    }
}

/// A constant entering a formula: its value and, when known, which limit it is.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstantInput {
    pub value: f64,
    pub kind: Option<ConstantKind>,
}

impl ConstantInput {
    pub fn of_kind(value: f64, kind: ConstantKind) -> Self {
        Self {
            value,
            kind: Some(kind),
        }
    }

    fn require(&self, want: ConstantKind) -> Result<f64> {
        if let Some(k) = self.kind {
            if k != want {
                return Err(Error::Configuration(format!(
                    "formula needs a {want:?} constant, got {k:?}"
                )));
            }
        }
        if !(self.value > 0.0 && self.value.is_finite()) {
            return Err(domain("constant", self.value));
        }
        Ok(self.value)
    }
}

impl From<f64> for ConstantInput {
    fn from(value: f64) -> Self {
        Self { value, kind: None }
    }
}

impl From<&ConstantEstimate> for ConstantInput {
    fn from(e: &ConstantEstimate) -> Self {
        Self::of_kind(e.value, e.kind)
    }
}

fn is_half(beta: f64) -> bool {
    (beta - 0.5).abs() < 1e-12
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 0.5 + 1e-12 {
        Ok(())
    } else {
        Err(domain("beta", beta))
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        Err(domain("dimension", 0.0))
    } else {
        Ok(())
    }
}

fn check_radius(a: f64) -> Result<()> {
    if a > 0.0 && a < PI {
        Ok(())
    } else {
        Err(domain("disc radius", a))
    }
}

/// P{sup over S^N of B_β > u}. β < 1/2 takes 𝓗^N_{2β}; β = 1/2 takes 𝓟^{‖t‖}_1.
pub fn sphere_asymptotic(n: usize, beta: f64, constant: ConstantInput) -> Result<AsymptoticValue> {
    check_dim(n)?;
    check_beta(beta)?;
    if is_half(beta) {
        let p = constant.require(ConstantKind::Piterbarg)?;
        return AsymptoticValue::new(p, 0.0, PI.powf(-0.5));
    }
    let h = constant.require(ConstantKind::Pickands)?;
    let nf = n as f64;
    let prefactor = h * gamma(nf + 1.0) * PI.powf((2.0 * beta - 0.5) * nf)
        / (2f64.powf(nf / (2.0 * beta)) * beta.powf(nf) * gamma(nf / 2.0 + 1.0));
    AsymptoticValue::new(prefactor, (1.0 - 2.0 * beta) * nf / beta, PI.powf(-beta))
}

/// P{sup over the geodesic disc of radius a of B_β > u}. β < 1/2 takes 𝓗^N_{2β};
/// β = 1/2 takes M̂^{|t₁|}_1.
pub fn disc_asymptotic(
    n: usize,
    beta: f64,
    a: f64,
    constant: ConstantInput,
) -> Result<AsymptoticValue> {
    check_dim(n)?;
    check_beta(beta)?;
    check_radius(a)?;
    let nf = n as f64;
    let area = nf * PI.powf(nf / 2.0) * a.sin().powf(nf - 1.0) / gamma(nf / 2.0 + 1.0);
    if is_half(beta) {
        let m = constant.require(ConstantKind::MHat)?;
        let prefactor = m * area / (2f64.powf(nf - 1.0) * a.powf(2.0 * (nf - 1.0)));
        return AsymptoticValue::new(prefactor, 2.0 * (nf - 1.0), a.powf(-0.5));
    }
    let h = constant.require(ConstantKind::Pickands)?;
    let prefactor = h * area
        / (2f64.powf(nf / (2.0 * beta)) * a.powf(2.0 * nf - 2.0 * beta - 1.0) * beta);
    AsymptoticValue::new(prefactor, nf / beta - 2.0, a.powf(-beta))
}

/// The circular-arc form of the one-dimensional disc result.
pub fn arc_asymptotic(beta: f64, a: f64, constant: ConstantInput) -> Result<AsymptoticValue> {
    check_beta(beta)?;
    check_radius(a)?;
    if is_half(beta) {
        let m = constant.require(ConstantKind::MHat)?;
        return AsymptoticValue::new(2.0 * m, 0.0, a.powf(-0.5));
    }
    let h = constant.require(ConstantKind::Pickands)?;
    let prefactor = h * a.powf(2.0 * beta - 1.0) / (2f64.powf(1.0 / (2.0 * beta) - 1.0) * beta);
    AsymptoticValue::new(prefactor, 1.0 / beta - 2.0, a.powf(-beta))
}

/// Largest relative gap between [`disc_asymptotic`] at N = 1 and [`arc_asymptotic`] over
/// u ∈ {5, 10, 20, 40}.
pub fn consistency_n1(beta: f64, a: f64, constant: f64) -> Result<f64> {
    let kind = if is_half(beta) {
        ConstantKind::MHat
    } else {
        ConstantKind::Pickands
    };
    let c = ConstantInput::of_kind(constant, kind);
    let disc = disc_asymptotic(1, beta, a, c)?;
    let arc = arc_asymptotic(beta, a, c)?;
    Ok([5.0, 10.0, 20.0, 40.0]
        .iter()
        .map(|&u| (disc.ln_value_at(u) - arc.ln_value_at(u)).exp_m1().abs())
        .fold(0.0, f64::max))
}

/// Where the variance maximizer sits relative to the parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MaximizerPosition {
    Boundary,
    Interior,
}

fn determinant(m: &[f64], n: usize) -> f64 {
    let mut a = m.to_vec();
    let mut det = 1.0;
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
            .unwrap_or(k);
        if a[pivot * n + k] == 0.0 {
            return 0.0;
        }
        if pivot != k {
            for j in 0..n {
                a.swap(k * n + j, pivot * n + j);
            }
            det = -det;
        }
        let d = a[k * n + k];
        det *= d;
        for i in k + 1..n {
            let f = a[i * n + k] / d;
            for j in k..n {
                a[i * n + j] -= f * a[k * n + j];
            }
        }
    }
    det
}

/// ∫_{ℝᴺ} exp(−‖A C^{−1} t‖^η) dt = |det C| / |det A| · Area(S^{N−1})·Γ(N/η)/η.
pub fn exp_norm_integral(a: &[f64], c: &[f64], n: usize, eta: f64) -> Result<f64> {
    check_dim(n)?;
    if a.len() != n * n || c.len() != n * n {
        return Err(Error::Configuration(format!("matrices must be {n}×{n}")));
    }
    if !(eta > 0.0) {
        return Err(domain("eta", eta));
    }
    let (da, dc) = (determinant(a, n), determinant(c, n));
    if da == 0.0 || !da.is_finite() {
        return Err(domain("det A", da));
    }
    if dc == 0.0 || !dc.is_finite() {
        return Err(domain("det C", dc));
    }
    let nf = n as f64;
    Ok((dc / da).abs() * unit_sphere_area(n) * gamma(nf / eta) / eta)
}

/// Tail of a field with 1 − σ ∼ ‖At‖^η and 1 − r ∼ ‖Ct − Cs‖^α at a single maximizer.
///
/// α < η takes 𝓗^N_α, α = η takes 𝓟^{‖AC^{−1}t‖^α}_α (M̂ on a boundary), α > η takes none.
pub fn piterbarg_point_asymptotic(
    n: usize,
    eta: f64,
    alpha: f64,
    a: &[f64],
    c: &[f64],
    constant: ConstantInput,
    position: MaximizerPosition,
) -> Result<AsymptoticValue> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(domain("alpha", alpha));
    }
    let integral = exp_norm_integral(a, c, n, eta)?;
    let nf = n as f64;
    if (alpha - eta).abs() < 1e-12 {
        let kind = match position {
            MaximizerPosition::Interior => ConstantKind::Piterbarg,
            MaximizerPosition::Boundary => ConstantKind::MHat,
        };
        return AsymptoticValue::new(constant.require(kind)?, 0.0, 1.0);
    }
    if alpha > eta {
        return AsymptoticValue::new(1.0, 0.0, 1.0);
    }
    let h = constant.require(ConstantKind::Pickands)?;
    let half = match position {
        MaximizerPosition::Interior => 1.0,
        MaximizerPosition::Boundary => 0.5,
    };
    AsymptoticValue::new(
        half * h * integral,
        2.0 * nf / alpha - 2.0 * nf / eta,
        1.0,
    )
}

/// The full-sphere case-(i) asymptotic assembled through [`piterbarg_point_asymptotic`].
pub fn sphere_point_pipeline(n: usize, beta: f64, pickands: ConstantInput) -> Result<AsymptoticValue> {
    let id = |s: f64| {
        let mut m = alloc::vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = s;
        }
        m
    };
    let a = id(beta / PI);
    let c = id(2f64.powf(-1.0 / (2.0 * beta)) / PI);
    Ok(piterbarg_point_asymptotic(
        n,
        1.0,
        2.0 * beta,
        &a,
        &c,
        pickands,
        MaximizerPosition::Interior,
    )?
    .rescaled(PI.powf(-beta)))
}

type ScalarField = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorField = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A field on ∏[aᵢ,bᵢ] whose standard deviation peaks on {t₁*}×∏_{i≥2}[aᵢ,bᵢ] with
/// 1 − σ ∼ h(t̂)|t₁ − t₁*|^γ and 1 − r ∼ (c₁Δ₁² + Σ cᵢ(t̂)Δᵢ²)^β.
pub struct EuclideanSpec {
    pub n: usize,
    pub gamma: f64,
    pub beta: f64,
    pub h: ScalarField,
    pub c1: f64,
    /// (c₂, …, c_N) at t̂.
    pub c_hat: VectorField,
    /// [aᵢ, bᵢ] for i = 2..N.
    pub hat_bounds: Vec<(f64, f64)>,
    pub position: MaximizerPosition,
    /// Number of congruent copies of the maximizing set (2 for both ends of an arc).
    pub copies: f64,
}

impl EuclideanSpec {
    pub fn validate(&self) -> Result<()> {
        check_dim(self.n)?;
        if !(self.gamma > 0.0) {
            return Err(domain("gamma", self.gamma));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(domain("beta", self.beta));
        }
        if !(self.c1 > 0.0) {
            return Err(domain("c1", self.c1));
        }
        if self.hat_bounds.len() != self.n - 1 {
            return Err(Error::Configuration(format!(
                "expected {} bounds for t̂, got {}",
                self.n - 1,
                self.hat_bounds.len()
            )));
        }
        if !(self.copies > 0.0) {
            return Err(domain("copies", self.copies));
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        let half_gamma = self.gamma / 2.0;
        if (self.beta - half_gamma).abs() < 1e-12 {
            Regime::Critical
        } else if self.beta < half_gamma {
            Regime::Pickands
        } else {
            Regime::Smooth
        }
    }
}

/// Which of the three cases applies (β versus γ/2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// β < γ/2
    Pickands,
    /// β = γ/2
    Critical,
    /// β > γ/2
    Smooth,
}

/// Values of M̂^{b|t₁|^γ} (or M) tabulated over b, interpolated log-linearly.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DriftConstantTable {
    pub kind: ConstantKind,
    /// (b, value) sorted by b.
    pub entries: Vec<(f64, f64)>,
}

impl DriftConstantTable {
    pub fn at(&self, b: f64) -> Result<f64> {
        let e = &self.entries;
        if e.is_empty() {
            return Err(Error::Configuration("empty constant table".into()));
        }
        if e.len() == 1 {
            if ((e[0].0 - b) / b).abs() < 1e-9 {
                return Ok(e[0].1);
            }
            return Err(domain("drift coefficient outside table", b));
        }
        let (lo, hi) = (e[0].0, e[e.len() - 1].0);
        if b < lo * (1.0 - 1e-12) || b > hi * (1.0 + 1e-12) {
            return Err(domain("drift coefficient outside table", b));
        }
        let k = e.windows(2).position(|w| b <= w[1].0).unwrap_or(e.len() - 2);
        let (b0, v0) = e[k];
        let (b1, v1) = e[k + 1];
        let s = (b.ln() - b0.ln()) / (b1.ln() - b0.ln());
        Ok((v0.ln() + s * (v1.ln() - v0.ln())).exp())
    }
}

/// Constants for [`euclidean_extension_asymptotic`], matching the regime.
#[derive(Debug, Clone, PartialEq)]
pub enum EuclideanConstants {
    /// 𝓗^N_{2β} for β < γ/2.
    Pickands(ConstantInput),
    /// M̂ (boundary) or M (interior) over b = c₁^{−β}h(t̂) for β = γ/2.
    DriftTable(DriftConstantTable),
    /// 𝓗^{N−1}_{2β} for β > γ/2; N = 1 takes the value 1.
    LowerPickands(ConstantInput),
}

fn hat_integral(spec: &EuclideanSpec, f: impl Fn(&[f64]) -> f64) -> f64 {
    integrate_rectangle(
        |t| {
            let c = (spec.c_hat)(t);
            f(t) * c.iter().map(|v| v.sqrt()).product::<f64>()
        },
        &spec.hat_bounds,
        CUBATURE_TOLERANCE,
    )
}

/// Tail asymptotic of the field described by `spec`, in its standardized level u.
pub fn euclidean_extension_asymptotic(
    spec: &EuclideanSpec,
    constants: &EuclideanConstants,
) -> Result<AsymptoticValue> {
    spec.validate()?;
    let nf = spec.n as f64;
    let beta = spec.beta;
    let mismatch = |want: &str| {
        Err(Error::Configuration(format!(
            "regime {:?} needs {want}",
            spec.regime()
        )))
    };
    let value = match (spec.regime(), constants) {
        (Regime::Pickands, EuclideanConstants::Pickands(c)) => {
            let h = c.require(ConstantKind::Pickands)?;
            let g = spec.gamma;
            let integral = hat_integral(spec, |t| (spec.h)(t).powf(-1.0 / g));
            let double = match spec.position {
                MaximizerPosition::Boundary => 1.0,
                MaximizerPosition::Interior => 2.0,
            };
            AsymptoticValue::new(
                double * spec.c1.sqrt() * gamma(1.0 / g + 1.0) * h * integral,
                nf / beta - 2.0 / g,
                1.0,
            )?
        }
        (Regime::Pickands, _) => return mismatch("a Pickands constant"),
        (Regime::Critical, EuclideanConstants::DriftTable(table)) => {
            let want = match spec.position {
                MaximizerPosition::Boundary => ConstantKind::MHat,
                MaximizerPosition::Interior => ConstantKind::M,
            };
            if table.kind != want {
                return Err(Error::Configuration(format!(
                    "table holds {:?} constants, the maximizer position needs {want:?}",
                    table.kind
                )));
            }
            let scale = spec.c1.powf(-beta);
            let failed = core::cell::Cell::new(None);
            let integral = hat_integral(spec, |t| match table.at(scale * (spec.h)(t)) {
                Ok(v) => v,
                Err(e) => {
                    failed.set(Some(e));
                    0.0
                }
            });
            if let Some(e) = failed.take() {
                return Err(e);
            }
            AsymptoticValue::new(integral, (nf - 1.0) / beta, 1.0)?
        }
        (Regime::Critical, _) => return mismatch("a table of drifted constants"),
        (Regime::Smooth, EuclideanConstants::LowerPickands(c)) => {
            let h = if spec.n == 1 {
                1.0
            } else {
                c.require(ConstantKind::Pickands)?
            };
            let integral = hat_integral(spec, |_| 1.0);
            AsymptoticValue::new(h * integral, (nf - 1.0) / beta, 1.0)?
        }
        (Regime::Smooth, _) => return mismatch("an (N−1)-dimensional Pickands constant"),
    };
    Ok(value.scaled(spec.copies))
}

/// The disc of radius a in coordinates (θ₁, θ̂): γ = 1, h = β/a, c₁ = (2a^{2β})^{−1/β}
/// and cᵢ = c₁ times the metric coefficients at θ₁ = a. Levels are in units of a^β.
pub fn disc_euclidean_spec(n: usize, beta: f64, a: f64) -> Result<EuclideanSpec> {
    check_dim(n)?;
    check_beta(beta)?;
    check_radius(a)?;
    let c1 = (2.0 * a.powf(2.0 * beta)).powf(-1.0 / beta);
    let mut hat_bounds = alloc::vec![(0.0, PI); n.saturating_sub(2)];
    if n >= 2 {
        hat_bounds.push((0.0, 2.0 * PI));
    }
    Ok(EuclideanSpec {
        n,
        gamma: 1.0,
        beta,
        h: Box::new(move |_| beta / a),
        c1,
        c_hat: Box::new(move |t| {
            disc_metric_scales(a, t)
                .map(|s| s[1..].iter().map(|v| c1 * v).collect())
                .unwrap_or_default()
        }),
        hat_bounds,
        position: MaximizerPosition::Boundary,
        copies: if n == 1 { 2.0 } else { 1.0 },
    })
}

/// [`disc_asymptotic`] obtained through [`euclidean_extension_asymptotic`].
pub fn disc_via_extension(
    n: usize,
    beta: f64,
    a: f64,
    constants: &EuclideanConstants,
) -> Result<AsymptoticValue> {
    let spec = disc_euclidean_spec(n, beta, a)?;
    Ok(euclidean_extension_asymptotic(&spec, constants)?.rescaled(a.powf(-beta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubature::integrate;
    use alloc::vec;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn pickands(v: f64) -> ConstantInput {
        ConstantInput::of_kind(v, ConstantKind::Pickands)
    }

    #[test]
    fn sphere_case_one_example() {
        let v = sphere_asymptotic(1, 0.25, pickands(1.0)).unwrap();
        assert!(rel(v.prefactor, 2.0 / PI.sqrt()) < 1e-14);
        assert!((v.u_exponent - 2.0).abs() < 1e-14);
        assert!(rel(v.tail_argument_scale, PI.powf(-0.25)) < 1e-14);
    }

    #[test]
    fn sphere_case_two_is_pure_tail() {
        let p = ConstantInput::of_kind(2.5, ConstantKind::Piterbarg);
        let v = sphere_asymptotic(2, 0.5, p).unwrap();
        assert_eq!(v.u_exponent, 0.0);
        assert_eq!(v.prefactor, 2.5);
        assert!(rel(v.value_at(3.0), 2.5 * psi_tail(3.0 / PI.sqrt())) < 1e-14);
    }

    #[test]
    fn kind_mismatch_is_a_configuration_error() {
        let p = ConstantInput::of_kind(1.0, ConstantKind::Piterbarg);
        assert!(matches!(sphere_asymptotic(1, 0.25, p), Err(Error::Configuration(_))));
        let h = pickands(1.0);
        assert!(matches!(disc_asymptotic(1, 0.5, 1.0, h), Err(Error::Configuration(_))));
        assert!(matches!(disc_asymptotic(1, 0.25, 3.2, h), Err(Error::Domain { .. })));
    }

    #[test]
    fn disc_two_dimensional_example() {
        let v = disc_asymptotic(2, 0.25, PI / 2.0, pickands(1.0)).unwrap();
        let want = PI / (2.0 * (PI / 2.0).powf(2.5));
        assert!(rel(v.prefactor, want) < 1e-13, "{}", v.prefactor);
        assert!((v.u_exponent - 6.0).abs() < 1e-14);
        assert!(rel(v.tail_argument_scale, (PI / 2.0).powf(-0.25)) < 1e-14);
    }

    #[test]
    fn disc_critical_one_dimensional() {
        let m = ConstantInput::of_kind(1.7, ConstantKind::MHat);
        let v = disc_asymptotic(1, 0.5, 1.0, m).unwrap();
        assert!(rel(v.prefactor, 3.4) < 1e-14);
        assert_eq!(v.u_exponent, 0.0);
    }

    #[test]
    fn consistency_examples() {
        assert!(consistency_n1(0.25, 1.0, 1.0).unwrap() <= 1e-10);
        assert!(consistency_n1(0.5, PI / 2.0, 1.0).unwrap() <= 1e-10);
    }

    #[test]
    fn point_maximizer_examples() {
        let id = vec![1.0, 0.0, 0.0, 1.0];
        let i2 = exp_norm_integral(&id, &id, 2, 1.0).unwrap();
        assert!(rel(i2, 2.0 * PI / gamma(2.0)) < 1e-14);
        for n in 1..=4 {
            let mut e = vec![0.0; n * n];
            for i in 0..n {
                e[i * n + i] = 1.0;
            }
            let nf = n as f64;
            let want = gamma(nf + 1.0) * PI.powf(nf / 2.0) / gamma(nf / 2.0 + 1.0);
            assert!(rel(exp_norm_integral(&e, &e, n, 1.0).unwrap(), want) < 1e-13);
        }
        let b = 0.25;
        let i1 = exp_norm_integral(&[b / PI], &[2f64.powf(-1.0 / (2.0 * b)) / PI], 1, 1.0).unwrap();
        assert!(rel(i1, 2.0) < 1e-14);

        let smooth = piterbarg_point_asymptotic(1, 1.0, 2.0, &[1.0], &[1.0], 1.0.into(), MaximizerPosition::Interior)
            .unwrap();
        assert_eq!(smooth.value_at(3.0), psi_tail(3.0));
        assert!(matches!(
            exp_norm_integral(&[1.0, 2.0, 2.0, 4.0], &id, 2, 1.0),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn general_matrix_integral_matches_cubature() {
        let a = [1.2, 0.3, -0.4, 0.9];
        let c = [0.8, 0.0, 0.2, 1.1];
        // M = A·C⁻¹ computed by hand for the 2×2 case.
        let det_c = c[0] * c[3] - c[1] * c[2];
        let ci = [c[3] / det_c, -c[1] / det_c, -c[2] / det_c, c[0] / det_c];
        let m = [
            a[0] * ci[0] + a[1] * ci[2],
            a[0] * ci[1] + a[1] * ci[3],
            a[2] * ci[0] + a[3] * ci[2],
            a[2] * ci[1] + a[3] * ci[3],
        ];
        for &eta in &[1.0, 1.5] {
            let numeric = integrate_rectangle(
                |t| {
                    let x = m[0] * t[0] + m[1] * t[1];
                    let y = m[2] * t[0] + m[3] * t[1];
                    (-(x * x + y * y).sqrt().powf(eta)).exp()
                },
                &[(-60.0, 60.0), (-60.0, 60.0)],
                1e-10,
            );
            let closed = exp_norm_integral(&a, &c, 2, eta).unwrap();
            assert!(rel(closed, numeric) < 1e-6, "{closed} {numeric}");
        }
    }

    #[test]
    fn sphere_pipeline_matches() {
        for n in 1..=4 {
            for &b in &[0.05, 0.1, 0.25, 0.4, 0.49] {
                let direct = sphere_asymptotic(n, b, pickands(1.3)).unwrap();
                let pipe = sphere_point_pipeline(n, b, pickands(1.3)).unwrap();
                assert!(rel(pipe.prefactor, direct.prefactor) < 1e-10);
                assert!((pipe.u_exponent - direct.u_exponent).abs() < 1e-12);
                assert!(rel(pipe.tail_argument_scale, direct.tail_argument_scale) < 1e-14);
            }
        }
    }

    #[test]
    fn extension_reproduces_disc() {
        for n in 1..=3 {
            for &(b, a) in &[(0.25, 1.0), (0.1, 2.5), (0.4, PI / 2.0)] {
                let direct = disc_asymptotic(n, b, a, pickands(0.9)).unwrap();
                let ext = disc_via_extension(n, b, a, &EuclideanConstants::Pickands(pickands(0.9))).unwrap();
                assert!(rel(ext.prefactor, direct.prefactor) < 1e-10, "{n} {b} {a}");
                assert!((ext.u_exponent - direct.u_exponent).abs() < 1e-12);
                assert!(rel(ext.tail_argument_scale, direct.tail_argument_scale) < 1e-14);
            }
            let table = DriftConstantTable {
                kind: ConstantKind::MHat,
                entries: vec![(1.0, 1.95)],
            };
            let direct = disc_asymptotic(n, 0.5, 1.2, ConstantInput::of_kind(1.95, ConstantKind::MHat)).unwrap();
            let ext = disc_via_extension(n, 0.5, 1.2, &EuclideanConstants::DriftTable(table)).unwrap();
            assert!(rel(ext.prefactor, direct.prefactor) < 1e-10);
            assert_eq!(ext.u_exponent, direct.u_exponent);
        }
    }

    #[test]
    fn constant_fields_reduce_to_products() {
        let spec = EuclideanSpec {
            n: 3,
            gamma: 2.0,
            beta: 0.3,
            h: Box::new(|_| 0.5),
            c1: 2.0,
            c_hat: Box::new(|_| vec![4.0, 9.0]),
            hat_bounds: vec![(0.0, 2.0), (1.0, 4.0)],
            position: MaximizerPosition::Boundary,
            copies: 1.0,
        };
        let v = euclidean_extension_asymptotic(&spec, &EuclideanConstants::Pickands(pickands(1.0))).unwrap();
        let want = 2f64.sqrt() * gamma(1.5) * 0.5f64.powf(-0.5) * 2.0 * 3.0 * 6.0;
        assert!(rel(v.prefactor, want) < 1e-10);
        assert!((v.u_exponent - (3.0 / 0.3 - 1.0)).abs() < 1e-12);

        let interior = EuclideanSpec {
            position: MaximizerPosition::Interior,
            ..spec
        };
        let w = euclidean_extension_asymptotic(&interior, &EuclideanConstants::Pickands(pickands(1.0))).unwrap();
        assert!(rel(w.prefactor, 2.0 * want) < 1e-12);
        assert!(matches!(
            euclidean_extension_asymptotic(&interior, &EuclideanConstants::LowerPickands(pickands(1.0))),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn smooth_regime_in_one_dimension_is_the_plain_tail() {
        let spec = EuclideanSpec {
            n: 1,
            gamma: 0.5,
            beta: 0.5,
            h: Box::new(|_| 1.0),
            c1: 1.0,
            c_hat: Box::new(|_| vec![]),
            hat_bounds: vec![],
            position: MaximizerPosition::Boundary,
            copies: 1.0,
        };
        let v = euclidean_extension_asymptotic(&spec, &EuclideanConstants::LowerPickands(1.0.into())).unwrap();
        let point = piterbarg_point_asymptotic(1, 0.5, 1.0, &[1.0], &[1.0], 1.0.into(), MaximizerPosition::Boundary)
            .unwrap();
        for u in [2.0, 5.0, 9.0] {
            assert!(rel(v.value_at(u), point.value_at(u)) < 1e-14);
        }
    }

    #[test]
    fn table_interpolation() {
        let t = DriftConstantTable {
            kind: ConstantKind::MHat,
            entries: vec![(1.0, 2.0), (4.0, 1.0)],
        };
        assert_eq!(t.at(1.0).unwrap(), 2.0);
        assert!(rel(t.at(2.0).unwrap(), 2f64.sqrt()) < 1e-14);
        assert!(t.at(5.0).is_err());
    }

    #[test]
    fn t_hat_dependent_table_integrates() {
        // h(t̂) varies, so the constant does too; compare with a 1-D quadrature.
        let table = DriftConstantTable {
            kind: ConstantKind::MHat,
            entries: vec![(0.5, 3.0), (1.0, 2.0), (2.0, 1.5)],
        };
        let spec = EuclideanSpec {
            n: 2,
            gamma: 1.0,
            beta: 0.5,
            h: Box::new(|t| 0.5 + t[0]),
            c1: 1.0,
            c_hat: Box::new(|_| vec![1.0]),
            hat_bounds: vec![(0.0, 1.5)],
            position: MaximizerPosition::Boundary,
            copies: 1.0,
        };
        let v = euclidean_extension_asymptotic(&spec, &EuclideanConstants::DriftTable(table.clone())).unwrap();
        let want = integrate(|x| table.at(0.5 + x).unwrap(), 0.0, 1.5, 1e-12).value;
        assert!(rel(v.prefactor, want) < 1e-7);
    }

    #[test]
    fn values_are_decreasing_in_u() {
        // ln value has slope below e/u − c²u, so it falls once u > √e / c.
        for &(n, b, a) in &[(1, 0.25, 1.0), (2, 0.25, 1.0), (3, 0.1, 2.0), (2, 0.5, 0.5)] {
            let kind = if b == 0.5 { ConstantKind::MHat } else { ConstantKind::Pickands };
            let v = disc_asymptotic(n, b, a, ConstantInput::of_kind(1.0, kind)).unwrap();
            let c = v.tail_argument_scale;
            let start = (2.0 * 1f64.max(1.0 / c)).max(v.u_exponent.sqrt() / c);
            let mut prev = f64::INFINITY;
            for k in 0..200 {
                let u = start + 0.25 * k as f64;
                let x = v.ln_value_at(u);
                assert!(x < prev && v.value_at(u) >= 0.0);
                prev = x;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn consistency_random_pairs(beta in 0.01f64..0.5, a in 0.01f64..3.13, half in any::<bool>()) {
            let beta = if half { 0.5 } else { beta };
            prop_assert!(consistency_n1(beta, a, 1.234).unwrap() <= 1e-10);
        }

        #[test]
        fn continuity_within_regime(n in 1usize..4, beta in 0.05f64..0.45, a in 0.2f64..2.9, u in 3.0f64..30.0) {
            let f = |b: f64, r: f64| disc_asymptotic(n, b, r, pickands(1.0)).unwrap().ln_value_at(u);
            let d = f(beta + 1e-9, a + 1e-9) - f(beta, a);
            prop_assert!(d.abs() < 1e-5);
        }

        #[test]
        fn rescaling_commutes_with_evaluation(c in 0.1f64..3.0, u in 1.0f64..20.0) {
            let v = AsymptoticValue::new(1.7, 2.5, 0.6).unwrap();
            let r = v.rescaled(c);
            prop_assert!((r.ln_value_at(u) - v.ln_value_at(c * u)).abs() < 1e-10);
        }
    }
}
