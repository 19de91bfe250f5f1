//! Approximate arithmetic networks: squaring, multiplication, scalar products
//! and sparse matrix-vector products.
//!
//! Squaring uses the sawtooth construction: on `[0, 1]`,
//! `F_s(t) = t - sum_{k=1}^{s} g_k(t) / 4^k` with `g_k` the k-fold composed
//! hat function. `F_s` is the piecewise-linear interpolant of `t^2` on the
//! grid `j 2^-s`, so `0 <= F_s(t) - t^2 <= 2^{-2s-2}`. Products use the
//! polarization identity `uv = ((u+v)/2)^2 - ((u-v)/2)^2`, and because both
//! squares overestimate, the product error is bounded by the same
//! `2^{-2s-2}`.
//!
//! Channels of the two squares are interleaved so that equal square values
//! cancel exactly in the output sum; this is what makes `mult(0, y)` and
//! `mult(x, 0)` exactly zero.

use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::{concat, parallelize, selection_layer};
use crate::error::{invalid, Result};
use crate::math;
use crate::net::{Layer, LayerBuilder, ReluNetwork};
use crate::sparse::SparsityPattern;

/// Refinement level `s = ceil((log2(1/eps) + 2 log2 D) / 2)`, at least 1.
pub fn refinement_level(eps: f64, domain: f64) -> u32 {
    let raw = (math::log2(1.0 / eps) + 2.0 * math::log2(domain)) / 2.0;
    (math::ceil(raw) as i64).max(1) as u32
}

/// Column layout of the sawtooth state after a stage.
#[derive(Clone, Copy)]
enum Stage {
    /// `(T, B)` per channel: `g_1 = 2T - 4B` and `F_0 = T`.
    First,
    /// `(A, B, F)` per channel: `g_j = 2A - 4B`, `F = F_{j-1}`.
    Later,
}

/// Emits `(column, weight)` pairs of `F_j(t) = F_{j-1} - g_j / 4^j` for one
/// channel, where `level = j` is the level held in the current state.
fn refined_square_terms(stage: Stage, channels: usize, c: usize, level: u32) -> Vec<(usize, f64)> {
    let damp = math::powi(0.25, level as i32);
    match stage {
        Stage::First => vec![(c, 1.0 - 2.0 * damp), (channels + c, 4.0 * damp)],
        Stage::Later => vec![
            (c, -2.0 * damp),
            (channels + c, 4.0 * damp),
            (2 * channels + c, 1.0),
        ],
    }
}

/// `g_{j+1} = hat(g_j)` reads `2A - 4B` in both stage layouts.
fn hat_terms(channels: usize, c: usize) -> [(usize, f64); 2] {
    [(c, 2.0), (channels + c, -4.0)]
}

/// Hidden sawtooth layers for `channels` parallel squares. The layer feeding
/// them must output `[p_0..p_{c-1}, n_0..n_{c-1}]` with `t_c = p_c + n_c` in
/// `[0, 1]`. Returns the hidden layers and the terminal stage.
fn sawtooth_layers(channels: usize, s: u32) -> (Vec<Layer>, Stage) {
    let mut layers = Vec::with_capacity(s as usize);
    let mut first = LayerBuilder::new(2 * channels);
    for c in 0..channels {
        first.push_row([(c, 1.0), (channels + c, 1.0)], 0.0);
    }
    for c in 0..channels {
        first.push_row([(c, 1.0), (channels + c, 1.0)], -0.5);
    }
    layers.push(first.finish());
    let mut stage = Stage::First;
    for level in 1..s {
        let width = match stage {
            Stage::First => 2 * channels,
            Stage::Later => 3 * channels,
        };
        let mut next = LayerBuilder::new(width);
        for c in 0..channels {
            next.push_row(hat_terms(channels, c), 0.0);
        }
        for c in 0..channels {
            next.push_row(hat_terms(channels, c), -0.5);
        }
        for c in 0..channels {
            next.push_row(refined_square_terms(stage, channels, c, level), 0.0);
        }
        layers.push(next.finish());
        stage = Stage::Later;
    }
    (layers, stage)
}

fn stage_width(stage: Stage, channels: usize) -> usize {
    match stage {
        Stage::First => 2 * channels,
        Stage::Later => 3 * channels,
    }
}

/// Output row `sum_c coeffs[c] * F_s(t_c)`, ordered so that channel pairs
/// with opposite coefficients are summed next to each other.
fn square_combination(stage: Stage, channels: usize, s: u32, coeffs: &[f64]) -> Vec<(usize, f64)> {
    let mut row = Vec::new();
    for (c, &w) in coeffs.iter().enumerate() {
        for (j, v) in refined_square_terms(stage, channels, c, s) {
            row.push((j, w * v));
        }
    }
    row
}

/// Network `q` with `|q(x) - x^2| <= D^2 2^{-2s-2}` for `|x| <= D` and
/// `q(0) = 0`. Depth `s + 2`.
pub fn square_net(s: u32, domain: f64) -> Result<ReluNetwork> {
    if s == 0 {
        return Err(invalid("square_net needs refinement level s >= 1"));
    }
    if !(domain >= 1.0) || !domain.is_finite() {
        return Err(invalid("square_net needs a finite domain bound D >= 1"));
    }
    let mut split = LayerBuilder::new(1);
    split.push_row([(0, 1.0 / domain)], 0.0);
    split.push_row([(0, -1.0 / domain)], 0.0);
    let (hidden, stage) = sawtooth_layers(1, s);
    let mut out = LayerBuilder::new(stage_width(stage, 1));
    out.push_row(square_combination(stage, 1, s, &[domain * domain]), 0.0);
    let mut layers = vec![split.finish()];
    layers.extend(hidden);
    layers.push(out.finish());
    Ok(ReluNetwork::from_layers(layers))
}

/// Inputs `(x, y)`, output `scale * (wx x) (wy y)` up to `scale * 2^{-2s-2}`
/// whenever `|wx x|, |wy y| <= 1`.
fn unit_product(s: u32, wx: f64, wy: f64, scale: f64) -> ReluNetwork {
    // Channels: 0 -> a = (u + v)/2, 1 -> b = (u - v)/2.
    let mut split = LayerBuilder::new(2);
    split.push_row([(0, 0.5 * wx), (1, 0.5 * wy)], 0.0);
    split.push_row([(0, 0.5 * wx), (1, -0.5 * wy)], 0.0);
    split.push_row([(0, -0.5 * wx), (1, -0.5 * wy)], 0.0);
    split.push_row([(0, -0.5 * wx), (1, 0.5 * wy)], 0.0);
    let (hidden, stage) = sawtooth_layers(2, s);
    let mut out = LayerBuilder::new(stage_width(stage, 2));
    out.push_row(square_combination(stage, 2, s, &[scale, -scale]), 0.0);
    let mut layers = vec![split.finish()];
    layers.extend(hidden);
    layers.push(out.finish());
    ReluNetwork::from_layers(layers)
}

/// `|net(x, y) - xy| <= eps` for `|x|, |y| <= D`, exactly zero when either
/// factor is zero.
pub fn mult_net(eps: f64, domain: f64) -> Result<ReluNetwork> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("mult_net accuracy must lie in (0, 1)"));
    }
    if !(domain >= 1.0) || !domain.is_finite() {
        return Err(invalid("mult_net needs a finite domain bound D >= 1"));
    }
    let s = refinement_level(eps, domain);
    Ok(unit_product(s, 1.0 / domain, 1.0 / domain, domain * domain))
}

/// Approximates `y . x` for `||x||_2 <= 1`, `||y||_2 <= z` to accuracy
/// `eps`. Input layout `(y_1..y_k, x_1..x_k)`.
pub fn scalar_product_net(k: usize, eps: f64, z: f64) -> Result<ReluNetwork> {
    scalar_product_scaled(k, eps, z, 1.0)
}

fn check_accuracy(eps: f64, z: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("accuracy must lie in (0, 1)"));
    }
    if !(z >= 1.0) || !z.is_finite() {
        return Err(invalid("input bound z must be finite and >= 1"));
    }
    Ok(())
}

/// Scalar product whose summation layer multiplies by `out_scale`; the
/// accuracy `eps` refers to the unscaled product.
fn scalar_product_scaled(k: usize, eps: f64, z: f64, out_scale: f64) -> Result<ReluNetwork> {
    check_accuracy(eps, z)?;
    if k == 0 {
        return Err(invalid("scalar product of length 0"));
    }
    let s = refinement_level(eps / (k as f64 * z), 1.0);
    // Term i takes (x_i, y_i) and returns z * x_i * (y_i / z).
    let terms = (0..k).map(|_| unit_product(s, 1.0, 1.0 / z, z)).collect();
    let products = parallelize(terms)?;
    let mut picks = Vec::with_capacity(2 * k);
    for i in 0..k {
        picks.push(k + i);
        picks.push(i);
    }
    let gather = crate::calculus::affine_net(selection_layer(2 * k, &picks));
    let mut sum = LayerBuilder::new(k);
    sum.push_row((0..k).map(|i| (i, out_scale)), 0.0);
    let summed = concat(crate::calculus::affine_net(sum.finish()), products)?;
    concat(summed, gather)
}

/// Approximates `A r` for `A` in the pattern with `||A||_2 <= 1` and
/// `||r||_2 <= z`, to accuracy `eps` in the Euclidean norm. Input layout
/// `(A^v, r)` of length `eta + n`.
pub fn sparse_matvec_net(pattern: &SparsityPattern, eps: f64, z: f64) -> Result<ReluNetwork> {
    sparse_matvec_scaled(pattern, eps, z, 1.0)
}

/// Matrix-vector network whose output is multiplied by `out_scale`; `eps`
/// bounds the error before that scaling.
pub(crate) fn sparse_matvec_scaled(
    pattern: &SparsityPattern,
    eps: f64,
    z: f64,
    out_scale: f64,
) -> Result<ReluNetwork> {
    check_accuracy(eps, z)?;
    let n = pattern.n();
    let eta = pattern.eta();
    let row_eps = eps / math::sqrt(n as f64);
    let rows = (0..n)
        .map(|i| scalar_product_scaled(pattern.row(i).len(), row_eps, z, out_scale))
        .collect::<Result<Vec<_>>>()?;
    let stacked = parallelize(rows)?;
    // Restriction: row i reads (r restricted to chi_i, row i of A^v).
    let mut picks = Vec::with_capacity(2 * eta);
    for i in 0..n {
        picks.extend(pattern.row(i).iter().map(|&j| eta + j));
        let off = pattern.offset(i);
        picks.extend(off..off + pattern.row(i).len());
    }
    let restrict = crate::calculus::affine_net(selection_layer(eta + n, &picks));
    concat(stacked, restrict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMatrix;

    #[test]
    fn square_vanishes_at_zero() {
        for s in 1..8 {
            let net = square_net(s, 3.0).unwrap();
            assert_eq!(net.evaluate(&[0.0]).unwrap(), vec![0.0]);
            assert_eq!(net.depth(), s as usize + 2);
        }
    }

    #[test]
    fn square_is_exact_at_first_knot() {
        let net = square_net(1, 1.0).unwrap();
        assert_eq!(net.evaluate(&[0.5]).unwrap(), vec![0.25]);
        assert_eq!(net.evaluate(&[-0.5]).unwrap(), vec![0.25]);
        assert_eq!(net.evaluate(&[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn square_error_bound_on_grid() {
        for &(s, d) in &[(1u32, 1.0), (3, 1.0), (5, 2.5), (8, 4.0)] {
            let net = square_net(s, d).unwrap();
            let bound = d * d * math::powi(2.0, -2 * s as i32 - 2);
            for k in 0..=10_000 {
                let x = -d + 2.0 * d * k as f64 / 10_000.0;
                let err = (net.evaluate(&[x]).unwrap()[0] - x * x).abs();
                assert!(err <= bound * (1.0 + 1e-9) + 1e-14, "s={s} D={d} x={x} err={err}");
            }
        }
    }

    #[test]
    fn mult_exact_zero_factors() {
        let net = mult_net(1e-4, 3.0).unwrap();
        for &y in &[0.7, -2.9, 1e-9, 3.0] {
            assert_eq!(net.evaluate(&[0.0, y]).unwrap(), vec![0.0]);
            assert_eq!(net.evaluate(&[y, 0.0]).unwrap(), vec![0.0]);
        }
    }

    #[test]
    fn mult_examples() {
        let net = mult_net(0.01, 1.0).unwrap();
        assert!((net.evaluate(&[1.0, 1.0]).unwrap()[0] - 1.0).abs() <= 0.01);
        let d = 4.0;
        let net = mult_net(1e-3, d).unwrap();
        assert!((net.evaluate(&[-d, d]).unwrap()[0] + d * d).abs() <= 1e-3);
    }

    #[test]
    fn mult_rejects_bad_accuracy() {
        assert!(mult_net(0.0, 1.0).is_err());
        assert!(mult_net(1.5, 1.0).is_err());
        assert!(mult_net(0.1, 0.5).is_err());
    }

    #[test]
    fn scalar_product_examples() {
        let net = scalar_product_net(3, 1e-3, 2.0).unwrap();
        assert_eq!(net.evaluate(&[1.0, -2.0, 0.5, 0.0, 0.0, 0.0]).unwrap(), vec![0.0]);

        let z = 5.0;
        let net = scalar_product_net(1, 1e-4, z).unwrap();
        assert!((net.evaluate(&[z, 1.0]).unwrap()[0] - z).abs() <= 1e-4);

        let net = scalar_product_net(4, 1e-4, 1.0).unwrap();
        let e2 = [0.0, 1.0, 0.0, 0.0];
        let input: Vec<f64> = e2.iter().chain(e2.iter()).copied().collect();
        assert!((net.evaluate(&input).unwrap()[0] - 1.0).abs() <= 1e-4);
    }

    #[test]
    fn matvec_of_zero_matrix_is_zero() {
        let pattern = SparsityPattern::tridiagonal(5).unwrap();
        let net = sparse_matvec_net(&pattern, 1e-3, 2.0).unwrap();
        let mut input = vec![0.0; pattern.eta()];
        input.extend([1.0, -1.0, 0.5, 0.25, -0.3]);
        assert_eq!(net.evaluate(&input).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn matvec_identity_reproduces_rhs() {
        let pattern = SparsityPattern::diagonal(4).unwrap();
        let z = 3.0;
        let eps = 1e-4;
        let net = sparse_matvec_net(&pattern, eps, z).unwrap();
        let r = [1.5, -2.0, 0.3, 1.0];
        let mut input = vec![1.0; 4];
        input.extend(r);
        let out = net.evaluate(&input).unwrap();
        let err: f64 = out.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum();
        assert!(math::sqrt(err) <= eps);
    }

    #[test]
    fn matvec_first_column_of_normalized_laplacian() {
        let pattern = SparsityPattern::tridiagonal(4).unwrap();
        let values: Vec<f64> = pattern
            .entries()
            .map(|(i, j)| if i == j { 2.0 / 4.0 } else { -1.0 / 4.0 })
            .collect();
        let a = SparseMatrix::new(pattern.clone(), values).unwrap();
        let eps = 1e-5;
        let net = sparse_matvec_net(&pattern, eps, 1.0).unwrap();
        let e1 = [1.0, 0.0, 0.0, 0.0];
        let mut input = a.values().to_vec();
        input.extend(e1);
        let out = net.evaluate(&input).unwrap();
        let exact = a.matvec(&e1);
        let err: f64 = out.iter().zip(&exact).map(|(a, b)| (a - b) * (a - b)).sum();
        assert!(math::sqrt(err) <= eps);
    }

    #[test]
    fn matvec_rejects_bad_parameters() {
        let pattern = SparsityPattern::diagonal(2).unwrap();
        assert!(sparse_matvec_net(&pattern, 2.0, 1.0).is_err());
        assert!(sparse_matvec_net(&pattern, 0.1, 0.5).is_err());
    }
}
