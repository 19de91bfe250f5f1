//! Test matrices and right-hand sides: finite-difference Laplacians, random
//! SPD matrices on a pattern, random loads and extremal eigenvalue estimates.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::iter::SpectralClass;
use crate::math;
use crate::sparse::{SparseMatrix, SparsityPattern};

/// Finite-difference Laplacian on the unit interval or square.
#[derive(Clone, Debug)]
pub struct FemProblem {
    pub dim: usize,
    pub nodes: usize,
    pub matrix: SparseMatrix,
    pub spectral: SpectralClass,
}

impl FemProblem {
    /// Mesh width `1 / (N + 1)`.
    pub fn h(&self) -> f64 {
        1.0 / (self.nodes as f64 + 1.0)
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn pattern(&self) -> &SparsityPattern {
        self.matrix.pattern()
    }
}

/// `k`-th eigenvalue `4 sin^2(k pi / (2(N+1)))` of the 1D stencil `(-1, 2, -1)`.
pub fn laplacian_eigenvalue(nodes: usize, k: usize) -> f64 {
    let s = libm::sin(k as f64 * core::f64::consts::PI / (2.0 * (nodes as f64 + 1.0)));
    4.0 * s * s
}

/// 1D `(-1, 2, -1)` or 2D five-point Laplacian with `N` nodes per direction.
/// Spectral bounds are the closed-form extremes widened by a few ulps.
pub fn gen_laplacian(dim: usize, nodes: usize) -> Result<FemProblem> {
    if nodes < 2 {
        return Err(invalid("a Laplacian needs at least 2 nodes per direction"));
    }
    let (pattern, diag) = match dim {
        1 => (SparsityPattern::tridiagonal(nodes)?, 2.0),
        2 => (SparsityPattern::five_point(nodes)?, 4.0),
        _ => return Err(invalid("only 1D and 2D Laplacians are available")),
    };
    let values = pattern
        .entries()
        .map(|(i, j)| if i == j { diag } else { -1.0 })
        .collect();
    let matrix = SparseMatrix::new(pattern, values)?;
    let d = dim as f64;
    let lo = d * laplacian_eigenvalue(nodes, 1) * (1.0 - 8.0 * f64::EPSILON);
    let hi = d * laplacian_eigenvalue(nodes, nodes) * (1.0 + 8.0 * f64::EPSILON);
    Ok(FemProblem {
        dim,
        nodes,
        matrix,
        spectral: SpectralClass::new(lo, hi)?,
    })
}

/// Symmetric matrix on `pattern` whose Gershgorin discs lie in
/// `[lambda, Lambda]`: random symmetric off-diagonal part plus a diagonal
/// drawn inside the admissible range of each row.
pub fn random_spd(pattern: &SparsityPattern, spec: &SpectralClass, seed: u64) -> Result<SparseMatrix> {
    if !pattern.is_symmetric() {
        return Err(Error::InvalidPattern("pattern is not symmetric".into()));
    }
    let diag = pattern
        .diagonal_positions()
        .ok_or_else(|| Error::InvalidPattern("pattern misses a diagonal entry".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (spec.lambda_min(), spec.lambda_max());
    let n = pattern.n();
    let eta = pattern.eta();

    let mut values = vec![0.0; eta];
    for (p, (i, j)) in pattern.entries().enumerate() {
        if i < j {
            let v: f64 = rng.random_range(-1.0..=1.0);
            values[p] = v;
            let q = pattern.position(j, i).expect("symmetric pattern");
            values[q] = v;
        }
    }
    let radius: Vec<f64> = (0..n)
        .map(|i| {
            let off = pattern.offset(i);
            pattern
                .row(i)
                .iter()
                .enumerate()
                .filter(|&(_, &j)| j != i)
                .map(|(k, _)| values[off + k].abs())
                .sum()
        })
        .collect();
    let max_radius = radius.iter().copied().fold(0.0, f64::max);
    let half_width = (hi - lo) / 2.0;
    let fill: f64 = rng.random_range(0.05..=1.0);
    let scale = if max_radius > 0.0 {
        fill * half_width / max_radius
    } else {
        0.0
    };
    for (p, (i, j)) in pattern.entries().enumerate() {
        if i != j {
            values[p] *= scale;
        }
    }
    for i in 0..n {
        let r = radius[i] * scale;
        let (a, b) = (lo + r, hi - r);
        values[diag[i]] = if b > a { rng.random_range(a..=b) } else { (lo + hi) / 2.0 };
    }
    SparseMatrix::new(pattern.clone(), values)
}

/// Uniformly random direction scaled to `||r||_2 = c_sc lambda`.
pub fn random_rhs(n: usize, c_sc: f64, lambda: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = math::norm2(&v);
        if norm > 0.0 {
            let s = c_sc * lambda / norm;
            return v.iter().map(|x| x * s).collect();
        }
    }
}

/// Extremal eigenvalue estimates with the residual of the final iterate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenEstimate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Residuals `||A v - mu v||_2` of the two Ritz pairs; each bounds the
    /// distance from the estimate to an eigenvalue.
    pub residual_min: f64,
    pub residual_max: f64,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 200_000;
const RESTART_AFTER: usize = 20_000;

/// Power iteration on `x -> shift x + sign A x`; returns the Rayleigh quotient
/// `mu`, its residual and the iteration count.
fn power_iteration(
    a: &SparseMatrix,
    shift: f64,
    sign: f64,
    tol: f64,
    scale: f64,
    rng: &mut ChaCha8Rng,
) -> core::result::Result<(f64, f64, usize), (f64, usize)> {
    let n = a.n();
    let apply = |v: &[f64]| -> Vec<f64> {
        let av = a.matvec(v);
        v.iter().zip(&av).map(|(x, y)| shift * x + sign * y).collect()
    };
    let fresh = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = math::norm2(&v);
        v.iter().map(|x| x / norm).collect()
    };
    let mut v = fresh(rng);
    let mut mu = 0.0;
    for it in 1..=MAX_ITERATIONS {
        let w = apply(&v);
        mu = v.iter().zip(&w).map(|(x, y)| x * y).sum();
        let res = math::norm2(&w.iter().zip(&v).map(|(y, x)| y - mu * x).collect::<Vec<_>>());
        if res <= tol * scale {
            return Ok((mu, res, it));
        }
        let norm = math::norm2(&w);
        if norm == 0.0 || it % RESTART_AFTER == 0 {
            // Stagnation or an unlucky start in a null space: restart.
            v = fresh(rng);
        } else {
            v = w.iter().map(|x| x / norm).collect();
        }
    }
    Err((mu, MAX_ITERATIONS))
}

/// Largest eigenvalue by power iteration on `A`, smallest by power iteration
/// on `Lambda_est I - A`, each to residual `tol * Lambda_est`.
pub fn estimate_extremal_eigs(a: &SparseMatrix, tol: f64, seed: u64) -> Result<EigenEstimate> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let (hi, res_hi, it_hi) = power_iteration(a, 0.0, 1.0, tol, scale, &mut rng).map_err(|(mu, it)| {
        Error::NoConvergence {
            lambda_min: f64::NAN,
            lambda_max: mu,
            iterations: it,
        }
    })?;
    let (mu, res_lo, it_lo) = power_iteration(a, hi, -1.0, tol, scale.max(hi), &mut rng)
        .map_err(|(mu, it)| Error::NoConvergence {
            lambda_min: hi - mu,
            lambda_max: hi,
            iterations: it_hi + it,
        })?;
    Ok(EigenEstimate {
        lambda_min: hi - mu,
        lambda_max: hi,
        residual_min: res_lo,
        residual_max: res_hi,
        iterations: it_hi + it_lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_1d_shape_and_spectrum() {
        let p = gen_laplacian(1, 4).unwrap();
        let sizes: Vec<usize> = p.pattern().rows().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![2, 3, 3, 2]);
        assert_eq!(p.pattern().eta(), 10);
        let exact = 2.0 - 2.0 * libm::cos(core::f64::consts::PI / 5.0);
        assert!((p.spectral.lambda_min() - exact).abs() <= 1e-14);
        assert!((p.spectral.lambda_min() - 0.381966).abs() <= 1e-6);
        assert!(p.spectral.lambda_min() <= exact);
    }

    #[test]
    fn laplacian_2d_shape() {
        let p = gen_laplacian(2, 3).unwrap();
        assert_eq!(p.n(), 9);
        assert!(p.pattern().chi_max() <= 5);
        assert!(p.matrix.is_symmetric());
        assert_eq!(p.matrix.get(4, 4), 4.0);
        assert!(gen_laplacian(3, 4).is_err());
        assert!(gen_laplacian(1, 1).is_err());
    }

    #[test]
    fn diagonal_pattern_gives_uniform_diagonal() {
        let pattern = SparsityPattern::diagonal(50).unwrap();
        let spec = SpectralClass::new(0.5, 3.0).unwrap();
        let a = random_spd(&pattern, &spec, 7).unwrap();
        assert!(a.values().iter().all(|&v| (0.5..=3.0).contains(&v)));
        assert_eq!(a, random_spd(&pattern, &spec, 7).unwrap());
        assert_ne!(a, random_spd(&pattern, &spec, 8).unwrap());
    }

    #[test]
    fn random_spd_rejects_bad_patterns() {
        let spec = SpectralClass::new(1.0, 2.0).unwrap();
        let asym = SparsityPattern::new(vec![vec![0, 1], vec![1]]).unwrap();
        assert!(random_spd(&asym, &spec, 0).is_err());
        let no_diag = SparsityPattern::new(vec![vec![1], vec![0]]).unwrap();
        assert!(random_spd(&no_diag, &spec, 0).is_err());
    }

    #[test]
    fn rhs_has_requested_norm() {
        let r = random_rhs(17, 2.5, 0.3, 11);
        assert!((math::norm2(&r) - 0.75).abs() <= 1e-12 * 0.75);
        let u = random_rhs(5, 1.0, 1.0, 3);
        assert!((math::norm2(&u) - 1.0).abs() <= 1e-12);
        assert_eq!(r, random_rhs(17, 2.5, 0.3, 11));
    }

    #[test]
    fn eigen_estimates() {
        let i = SparseMatrix::identity(4).unwrap();
        let e = estimate_extremal_eigs(&i, 1e-10, 0).unwrap();
        assert!((e.lambda_min - 1.0).abs() <= 1e-12 && (e.lambda_max - 1.0).abs() <= 1e-12);

        let d = SparseMatrix::new(SparsityPattern::diagonal(2).unwrap(), vec![1.0, 4.0]).unwrap();
        let e = estimate_extremal_eigs(&d, 1e-8, 0).unwrap();
        assert!((e.lambda_min - 1.0).abs() <= 1e-6 && (e.lambda_max - 4.0).abs() <= 1e-6);

        let p = gen_laplacian(1, 10).unwrap();
        let e = estimate_extremal_eigs(&p.matrix, 1e-8, 1).unwrap();
        assert!((e.lambda_min - laplacian_eigenvalue(10, 1)).abs() <= 1e-6);
        assert!((e.lambda_max - laplacian_eigenvalue(10, 10)).abs() <= 1e-6);
    }
}
