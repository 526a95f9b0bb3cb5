//! Adaptive Gauss–Kronrod quadrature and iterated cubature over rectangles.

use alloc::vec::Vec;

// Redundant whenever std is linked into the build.
#[allow(unused_imports)]
use num_traits::Float;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 2000;

/// Integral estimate with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Quadrature {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Quadrature {
        value: k * h,
        error: ((k - g) * h).abs(),
    }
}

/// ∫ₐᵇ f with global adaptive bisection until the summed error is below
/// `rel_tol·|I|` (or an absolute floor of `rel_tol·1e-300`).
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64) -> Quadrature {
    if a == b {
        return Quadrature {
            value: 0.0,
            error: 0.0,
        };
    }
    let mut pieces: Vec<(f64, f64, Quadrature)> = alloc::vec![(a, b, kronrod(&mut f, a, b))];
    loop {
        let value: f64 = pieces.iter().map(|p| p.2.value).sum();
        let error: f64 = pieces.iter().map(|p| p.2.error).sum();
        if error <= rel_tol * value.abs() || error < 1e-300 || pieces.len() >= MAX_INTERVALS {
            return Quadrature { value, error };
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        pieces.push((lo, mid, kronrod(&mut f, lo, mid)));
        pieces.push((mid, hi, kronrod(&mut f, mid, hi)));
    }
}

/// ∫ f over the rectangle ∏[loᵢ, hiᵢ] by nesting [`integrate`] one coordinate at a time.
/// An empty rectangle (zero dimensions) integrates to f(∅).
pub fn integrate_rectangle<F: Fn(&[f64]) -> f64>(f: F, bounds: &[(f64, f64)], rel_tol: f64) -> f64 {
    let mut point = alloc::vec![0.0; bounds.len()];
    nested(&f, bounds, 0, &mut point, rel_tol)
}

fn nested<F: Fn(&[f64]) -> f64>(
    f: &F,
    bounds: &[(f64, f64)],
    depth: usize,
    point: &mut Vec<f64>,
    rel_tol: f64,
) -> f64 {
    if depth == bounds.len() {
        return f(point);
    }
    let (lo, hi) = bounds[depth];
    // Inner integrals are tightened so their noise stays below the outer tolerance.
    let inner_tol = if depth + 1 < bounds.len() { rel_tol * 0.1 } else { rel_tol };
    integrate(
        |x| {
            point[depth] = x;
            nested(f, bounds, depth + 1, point, inner_tol)
        },
        lo,
        hi,
        rel_tol,
    )
    .value
}
