//! Exact joint sampling of Gaussian vectors through a dense Cholesky factor.
//!
//! Every replication draws its standard normals from its own ChaCha8 stream
//! (key derived from the sampler seed, stream = replication index), so any
//! replication can be regenerated in isolation and batches do not depend on how
//! replications are scheduled. Replications are produced in fixed blocks of
//! [`BLOCK`] rows; block boundaries are absolute, never worker-dependent.

use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

// Redundant whenever std is linked into the build.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Result};
use crate::geometry::SpherePoint;
use crate::linalg::{cholesky_with_jitter, CholeskyFactor};
use crate::model::{covariance_matrix, CovarianceModel};

/// Replications per deterministic block.
pub const BLOCK: usize = 128;

/// Output columns per triangular GEMM panel.
const COLUMN_PANEL: usize = 256;

#[derive(Debug, Clone)]
pub struct GaussianSampler {
    dim: usize,
    /// Coordinates with positive variance; the rest are pinned to their mean.
    active: Vec<usize>,
    factor: CholeskyFactor,
    mean: Vec<f64>,
    seed: u64,
}

impl GaussianSampler {
    /// Builds a sampler for N(mean, cov). Coordinates whose variance is exactly zero are
    /// deterministic and left out of the factorization.
    pub fn from_covariance(cov: &[f64], mean: Vec<f64>, seed: u64) -> Result<Self> {
        let dim = mean.len();
        assert_eq!(cov.len(), dim * dim, "covariance buffer is not dim×dim");
        let active: Vec<usize> = (0..dim).filter(|&i| cov[i * dim + i] != 0.0).collect();
        let na = active.len();
        let mut reduced = alloc::vec![0.0; na * na];
        for (r, &i) in active.iter().enumerate() {
            for (c, &j) in active.iter().enumerate() {
                reduced[r * na + c] = cov[i * dim + j];
            }
        }
        let factor = cholesky_with_jitter(&reduced, na).map_err(|e| match e {
            crate::Error::SingularCovariance { minor, jitter } => {
                crate::Error::SingularCovariance {
                    minor: active[minor],
                    jitter,
                }
            }
            other => other,
        })?;
        Ok(Self {
            dim,
            active,
            factor,
            mean,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Absolute diagonal jitter that made the factorization succeed.
    pub fn jitter_used(&self) -> f64 {
        self.factor.jitter()
    }

    /// Indices of the coordinates that carry randomness.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Relative Frobenius error of L·Lᵀ against the full covariance `cov`
    /// (restricted to the active coordinates; pinned ones are exact by construction).
    pub fn reconstruction_error(&self, cov: &[f64]) -> f64 {
        let na = self.active.len();
        let mut reduced = alloc::vec![0.0; na * na];
        for (r, &i) in self.active.iter().enumerate() {
            for (c, &j) in self.active.iter().enumerate() {
                reduced[r * na + c] = cov[i * self.dim + j];
            }
        }
        self.factor.reconstruction_error(&reduced)
    }

    /// Standard normals driving replication `rep`.
    pub fn normals(&self, rep: u64, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(rep);
        for z in out.iter_mut() {
            *z = StandardNormal.sample(&mut rng);
        }
    }

    /// Writes replications `first .. first + count` into `out` (count × dim, row-major).
    pub fn draw_rows(&self, first: u64, count: usize, out: &mut [f64]) {
        let (dim, na) = (self.dim, self.active.len());
        assert_eq!(out.len(), count * dim, "output buffer has the wrong size");
        if count == 0 {
            return;
        }
        let mut z = alloc::vec![0.0; count * na];
        for (r, row) in z.chunks_exact_mut(na.max(1)).enumerate().take(count) {
            if na > 0 {
                self.normals(first + r as u64, row);
            }
        }
        let mut x = if na == dim {
            Vec::new()
        } else {
            alloc::vec![0.0; count * na]
        };
        let target: &mut [f64] = if na == dim { &mut *out } else { &mut x };
        self.multiply_factor(&z, count, target);

        if na != dim {
            for r in 0..count {
                let row = &mut out[r * dim..(r + 1) * dim];
                row.copy_from_slice(&self.mean);
                for (c, &i) in self.active.iter().enumerate() {
                    row[i] += x[r * na + c];
                }
            }
        } else {
            for row in out.chunks_exact_mut(dim) {
                for (v, m) in row.iter_mut().zip(&self.mean) {
                    *v += m;
                }
            }
        }
    }

    /// x = z·Lᵀ row by row, skipping the zero upper triangle one column panel at a time.
    fn multiply_factor(&self, z: &[f64], count: usize, x: &mut [f64]) {
        let na = self.active.len();
        let l = self.factor.lower();
        let mut j0 = 0;
        while j0 < na {
            let j1 = (j0 + COLUMN_PANEL).min(na);
            // SAFETY: z is count×na, L is na×na, x is count×na; all strides in bounds.
            unsafe {
                matrixmultiply::dgemm(
                    count,
                    j1,
                    j1 - j0,
                    1.0,
                    z.as_ptr(),
                    na as isize,
                    1,
                    l.as_ptr().add(j0 * na),
                    1,
                    na as isize,
                    0.0,
                    x.as_mut_ptr().add(j0),
                    na as isize,
                    1,
                );
            }
            j0 = j1;
        }
    }

    /// Produces block `block` (replications `block·BLOCK ..`) capped at `total`, and maps
    /// every row through `f`.
    pub fn map_block<T, F>(&self, block: usize, total: usize, f: &F) -> Vec<T>
    where
        F: Fn(&[f64]) -> T,
    {
        let first = block * BLOCK;
        let count = BLOCK.min(total.saturating_sub(first));
        let mut rows = alloc::vec![0.0; count * self.dim];
        self.draw_rows(first as u64, count, &mut rows);
        rows.chunks_exact(self.dim.max(1))
            .take(count)
            .map(|row| f(row))
            .collect()
    }

    /// Sequential draw of a whole batch.
    pub fn draw(&self, replications: usize, grid_id: impl Into<String>) -> SampleBatch {
        let mut values = alloc::vec![0.0; replications * self.dim];
        let mut first = 0;
        while first < replications {
            let count = BLOCK.min(replications - first);
            self.draw_rows(
                first as u64,
                count,
                &mut values[first * self.dim..(first + count) * self.dim],
            );
            first += count;
        }
        SampleBatch {
            values,
            replications,
            dim: self.dim,
            seed_base: self.seed,
            grid_id: grid_id.into(),
        }
    }
}

/// Number of [`BLOCK`]s needed for `replications` rows.
pub fn block_count(replications: usize) -> usize {
    replications.div_ceil(BLOCK)
}

/// Rows of i.i.d. draws (replications × grid points).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub replications: usize,
    pub dim: usize,
    pub seed_base: u64,
    pub grid_id: String,
}

impl SampleBatch {
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.dim..(r + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim.max(1)).take(self.replications)
    }
}

/// Runs a per-row map over all replications of a sampler. Implementations must return
/// results in replication order and may only parallelize across whole blocks.
pub trait ReplicationRunner {
    fn map_rows<T, F>(&self, sampler: &GaussianSampler, replications: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[f64]) -> T + Sync;
}

/// Single-threaded runner.
#[derive(Debug, Clone, Copy, Default)]
pub struct SerialRunner;

impl ReplicationRunner for SerialRunner {
    fn map_rows<T, F>(&self, sampler: &GaussianSampler, replications: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[f64]) -> T + Sync,
    {
        let mut out = Vec::with_capacity(replications);
        for b in 0..block_count(replications) {
            out.extend(sampler.map_block(b, replications, &f));
        }
        out
    }
}

/// SFBM at the given points: Σᵢⱼ = Cov(B(gᵢ), B(gⱼ)), zero mean.
pub fn build_sfbm_sampler(
    m: &CovarianceModel,
    grid: &[SpherePoint],
    seed: u64,
) -> Result<GaussianSampler> {
    if grid.is_empty() {
        return Err(domain("grid size", 0.0));
    }
    let cov = covariance_matrix(m, grid);
    GaussianSampler::from_covariance(&cov, alloc::vec![0.0; grid.len()], seed)
}

/// Covariance of the drifted field χ_H: ‖t‖^{2H} + ‖s‖^{2H} − ‖t − s‖^{2H}.
pub fn chi_covariance(h: f64, grid: &[Vec<f64>]) -> Vec<f64> {
    let n = grid.len();
    let norms: Vec<f64> = grid.iter().map(|t| norm(t).powf(2.0 * h)).collect();
    let mut cov = alloc::vec![0.0; n * n];
    for i in 0..n {
        cov[i * n + i] = 2.0 * norms[i];
        for j in 0..i {
            let c = norms[i] + norms[j] - distance(&grid[i], &grid[j]).powf(2.0 * h);
            cov[i * n + j] = c;
            cov[j * n + i] = c;
        }
    }
    cov
}

/// χ_H on Euclidean points: mean −‖t‖^{2H}, covariance [`chi_covariance`].
pub fn build_chi_sampler(h: f64, grid: &[Vec<f64>], seed: u64) -> Result<GaussianSampler> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(domain("H", h));
    }
    if grid.is_empty() {
        return Err(domain("grid size", 0.0));
    }
    let mean = grid.iter().map(|t| -norm(t).powf(2.0 * h)).collect();
    GaussianSampler::from_covariance(&chi_covariance(h, grid), mean, seed)
}

/// Unit-variance homogeneous field with correlation exp(−‖s − t‖^{2β}).
pub fn homogeneous_covariance(beta: f64, grid: &[Vec<f64>]) -> Vec<f64> {
    let n = grid.len();
    let mut cov = alloc::vec![0.0; n * n];
    for i in 0..n {
        cov[i * n + i] = 1.0;
        for j in 0..i {
            let c = (-distance(&grid[i], &grid[j]).powf(2.0 * beta)).exp();
            cov[i * n + j] = c;
            cov[j * n + i] = c;
        }
    }
    cov
}

pub fn build_homogeneous_sampler(
    beta: f64,
    grid: &[Vec<f64>],
    seed: u64,
) -> Result<GaussianSampler> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(domain("beta", beta));
    }
    if grid.is_empty() {
        return Err(domain("grid size", 0.0));
    }
    GaussianSampler::from_covariance(
        &homogeneous_covariance(beta, grid),
        alloc::vec![0.0; grid.len()],
        seed,
    )
}

pub(crate) fn norm(t: &[f64]) -> f64 {
    t.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigen_extremes;
    use alloc::vec;

    fn circle(angle: f64) -> SpherePoint {
        SpherePoint::new(vec![angle.cos(), angle.sin()]).unwrap()
    }

    #[test]
    fn origin_only_grid_is_constant_zero() {
        let m = CovarianceModel::for_disc(0.5, 1).unwrap();
        let s = build_sfbm_sampler(&m, &[circle(0.0)], 1).unwrap();
        let batch = s.draw(50, "origin");
        assert!(batch.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn three_point_circle_covariance() {
        let m = CovarianceModel::for_disc(0.5, 1).unwrap();
        let grid = [circle(0.5), circle(1.0), circle(2.0)];
        let cov = covariance_matrix(&m, &grid);
        let want = [0.5, 0.5, 0.5, 0.5, 1.0, 1.0, 0.5, 1.0, 2.0];
        for (c, w) in cov.iter().zip(want) {
            assert!((c - w).abs() < 1e-12);
        }
        let s = build_sfbm_sampler(&m, &grid, 3).unwrap();
        assert!(s.reconstruction_error(&cov) < 1e-14);
    }

    #[test]
    fn random_sphere_grid_reconstructs() {
        use rand_distr::Distribution;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let grid: Vec<SpherePoint> = (0..500)
            .map(|_| {
                let v: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
                SpherePoint::new(v).unwrap()
            })
            .collect();
        let m = CovarianceModel::for_sphere(0.25, 2).unwrap();
        let s = build_sfbm_sampler(&m, &grid, 1).unwrap();
        let cov = covariance_matrix(&m, &grid);
        assert!(s.reconstruction_error(&cov) < 1e-8);
        let max_diag = (0..500).map(|i| cov[i * 500 + i]).fold(0.0, f64::max);
        assert!(s.jitter_used() <= 1e-6 * max_diag);
    }

    #[test]
    fn empirical_moments_match() {
        let grid = vec![vec![0.5], vec![1.0], vec![2.0]];
        let s = build_chi_sampler(0.5, &grid, 5).unwrap();
        let n = 40_000;
        let batch = s.draw(n, "moments");
        let cov = chi_covariance(0.5, &grid);
        for i in 0..3 {
            let mean = batch.rows().map(|r| r[i]).sum::<f64>() / n as f64;
            assert!((mean - s.mean()[i]).abs() < 4.0 * (cov[i * 4] / n as f64).sqrt());
            for j in 0..3 {
                let c = batch
                    .rows()
                    .map(|r| (r[i] - s.mean()[i]) * (r[j] - s.mean()[j]))
                    .sum::<f64>()
                    / n as f64;
                assert!((c - cov[i * 3 + j]).abs() < 0.1, "{i} {j} {c}");
            }
        }
    }

    #[test]
    fn chi_line_example() {
        let grid = vec![vec![1.0], vec![2.0]];
        let cov = chi_covariance(0.5, &grid);
        assert_eq!(cov, vec![2.0, 2.0, 2.0, 4.0]);
        let s = build_chi_sampler(0.5, &grid, 0).unwrap();
        assert_eq!(s.mean(), &[-1.0, -2.0]);
    }

    #[test]
    fn chi_origin_coordinate_is_zero() {
        let grid = vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 0.5]];
        let s = build_chi_sampler(0.7, &grid, 11).unwrap();
        assert_eq!(s.active(), &[1, 2]);
        let batch = s.draw(20, "chi");
        assert!(batch.rows().all(|r| r[0] == 0.0));
        let cov = chi_covariance(0.7, &grid);
        for i in 0..3 {
            assert!((cov[i * 3 + i] - 2.0 * norm(&grid[i]).powf(1.4)).abs() < 1e-15);
        }
    }

    #[test]
    fn homogeneous_entries() {
        let grid = vec![vec![0.0], vec![1.0], vec![2.0]];
        let cov = homogeneous_covariance(0.5, &grid);
        assert!((0..3).all(|i| cov[i * 3 + i] == 1.0));
        assert!((cov[1] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((cov[2] - 0.135_335_283_236_612_7).abs() < 1e-15);
        let cov = homogeneous_covariance(0.3, &grid);
        assert!((cov[1] - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn builders_validate_parameters() {
        assert!(build_chi_sampler(0.0, &[vec![1.0]], 0).is_err());
        assert!(build_chi_sampler(1.5, &[vec![1.0]], 0).is_err());
        assert!(build_homogeneous_sampler(1.2, &[vec![1.0]], 0).is_err());
        let m = CovarianceModel::for_disc(0.5, 1).unwrap();
        assert!(build_sfbm_sampler(&m, &[], 0).is_err());
    }

    #[test]
    fn sfbm_covariance_is_psd() {
        let m = CovarianceModel::for_sphere(0.3, 2).unwrap();
        let grid: Vec<SpherePoint> = (0..40)
            .map(|k| {
                let t = k as f64 * 0.37;
                SpherePoint::new(vec![t.cos() * (0.2 * t).sin(), t.sin(), (0.2 * t).cos()]).unwrap()
            })
            .collect();
        let cov = covariance_matrix(&m, &grid);
        let (lo, hi) = symmetric_eigen_extremes(&cov, grid.len());
        assert!(lo >= -1e-8 * hi, "{lo} {hi}");
    }

    #[test]
    fn rows_do_not_depend_on_batching() {
        let m = CovarianceModel::for_disc(0.25, 1).unwrap();
        let grid: Vec<SpherePoint> = (1..=300).map(|k| circle(k as f64 * 0.01)).collect();
        let s = build_sfbm_sampler(&m, &grid, 99).unwrap();
        let full = s.draw(300, "g");
        let prefix = s.draw(77, "g");
        assert_eq!(&full.values[..77 * 300], &prefix.values[..]);
        let mut single = vec![0.0; 300];
        s.draw_rows(200, 1, &mut single);
        assert_eq!(full.row(200), &single[..]);
        let maxima = SerialRunner.map_rows(&s, 300, |r| r.iter().cloned().fold(f64::MIN, f64::max));
        for (k, mx) in maxima.iter().enumerate() {
            assert_eq!(*mx, full.row(k).iter().cloned().fold(f64::MIN, f64::max));
        }
    }
}
