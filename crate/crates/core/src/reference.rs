//! Classical oracles: dense Cholesky solve, Richardson partial sums,
//! Chebyshev recurrences, Clenshaw evaluation and polynomial division.
//!
//! Nothing here shares code with the network builders.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::math;
use crate::sparse::SparseMatrix;

/// Solves `A x = r` by a dense Cholesky factorization.
pub fn solve_exact(a: &SparseMatrix, r: &[f64]) -> Result<Vec<f64>> {
    let n = a.n();
    if r.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: r.len(),
        });
    }
    let mut l = a.to_dense();
    for j in 0..n {
        let mut d = l[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let d = math::sqrt(d);
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = l[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    let mut y = r.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    Ok(y)
}

/// `x^{m+1}` of `x <- x - omega A x + omega r` from `x^0 = 0`, that is
/// `sum_{l=0}^{m} (I - omega A)^l omega r`.
pub fn richardson_iterate(a: &SparseMatrix, r: &[f64], omega: f64, m: usize) -> Vec<f64> {
    let mut x = vec![0.0; r.len()];
    for _ in 0..=m {
        let ax = a.matvec(&x);
        for i in 0..x.len() {
            x[i] += omega * (r[i] - ax[i]);
        }
    }
    x
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChebyshevKind {
    First,
    Second,
}

/// `T_j(x)` or `U_j(x)` by the three-term recurrence.
pub fn chebyshev_eval(kind: ChebyshevKind, j: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if j == 0 {
        return prev;
    }
    let mut cur = match kind {
        ChebyshevKind::First => x,
        ChebyshevKind::Second => 2.0 * x,
    };
    for _ in 1..j {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `T_j(x0) = cosh(j acosh x0)` for `x0 >= 1`.
pub fn chebyshev_t_cosh(j: usize, x0: f64) -> f64 {
    libm::cosh(j as f64 * math::acosh(x0))
}

/// `sum_l coeffs[l] U_l(x)` by the backward recurrence
/// `b_k = coeffs[k] + 2 x b_{k+1} - b_{k+2}`.
pub fn clenshaw_scalar(coeffs: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coeffs.iter().rev() {
        let b0 = c + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    b1
}

/// `sum_l coeffs[l] U_l(x)` summing the forward recurrence directly.
pub fn chebyshev_series_scalar(coeffs: &[f64], x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    let mut sum = 0.0;
    for (l, &c) in coeffs.iter().enumerate() {
        let u = match l {
            0 => 1.0,
            1 => cur,
            _ => {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
                cur
            }
        };
        sum += c * u;
    }
    sum
}

/// `b_0` of `b_k = coeffs[k] r + 2 B b_{k+1} - b_{k+2}` with
/// `b_m = b_{m+1} = 0`.
pub fn clenshaw_eval(coeffs: &[f64], b: &SparseMatrix, r: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut b1 = vec![0.0; n];
    let mut b2 = vec![0.0; n];
    for &c in coeffs.iter().rev() {
        let bb = b.matvec(&b1);
        let b0: Vec<f64> = (0..n).map(|i| c * r[i] + 2.0 * bb[i] - b2[i]).collect();
        b2 = b1;
        b1 = b0;
    }
    b1
}

/// `sum_l coeffs[l] U_l(B) r` with `U_l(B) r` from the forward recurrence.
pub fn chebyshev_series(coeffs: &[f64], b: &SparseMatrix, r: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut sum = vec![0.0; n];
    let mut prev = r.to_vec();
    let mut cur: Vec<f64> = b.matvec(r).iter().map(|v| 2.0 * v).collect();
    for (l, &c) in coeffs.iter().enumerate() {
        if l >= 2 {
            let bc = b.matvec(&cur);
            let next: Vec<f64> = (0..n).map(|i| 2.0 * bc[i] - prev[i]).collect();
            prev = core::mem::replace(&mut cur, next);
        }
        let u = if l == 0 { &prev } else { &cur };
        for i in 0..n {
            sum[i] += c * u[i];
        }
    }
    sum
}

/// Degrees up to which [`divided_cheb_coeffs`] divides in exact rationals.
pub const EXACT_DIVISION_MAX_DEGREE: usize = 12;

/// Second-kind Chebyshev coefficients of `(T_m(x) - T_m(x0)) / (x - x0)`.
pub fn divided_cheb_coeffs(m: usize, x0: f64) -> Vec<f64> {
    if m <= EXACT_DIVISION_MAX_DEGREE {
        divided_cheb_coeffs_exact(m, x0)
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    } else {
        divided_cheb_coeffs_compensated(m, x0)
    }
}

/// Monomial coefficients of `T_m` (first kind) or `U_m` (second kind).
fn chebyshev_monomials(kind: ChebyshevKind, m: usize) -> Vec<BigInt> {
    let mut prev = vec![BigInt::one()];
    let mut cur = match kind {
        ChebyshevKind::First => vec![BigInt::zero(), BigInt::one()],
        ChebyshevKind::Second => vec![BigInt::zero(), BigInt::from(2)],
    };
    if m == 0 {
        return prev;
    }
    for _ in 1..m {
        let mut next = vec![BigInt::zero(); cur.len() + 1];
        for (k, c) in cur.iter().enumerate() {
            next[k + 1] += c * 2;
        }
        for (k, c) in prev.iter().enumerate() {
            next[k] -= c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Exact division in rational arithmetic; `x0` is converted exactly.
pub fn divided_cheb_coeffs_exact(m: usize, x0: f64) -> Vec<BigRational> {
    assert!(m >= 1, "degree must be at least 1");
    let x0 = BigRational::from_f64(x0).expect("finite x0");
    let t = chebyshev_monomials(ChebyshevKind::First, m);
    // Synthetic division: q_{k-1} = t_k + x0 q_k, top down.
    let mut q = vec![BigRational::zero(); m];
    let mut carry = BigRational::zero();
    for k in (1..=m).rev() {
        carry = BigRational::from_integer(t[k].clone()) + &x0 * carry;
        q[k - 1] = carry.clone();
    }
    let u: Vec<Vec<BigInt>> = (0..m).map(|d| chebyshev_monomials(ChebyshevKind::Second, d)).collect();
    let mut alpha = vec![BigRational::zero(); m];
    for d in (0..m).rev() {
        let lead = BigRational::from_integer(u[d][d].clone());
        let a = &q[d] / lead;
        for (k, c) in u[d].iter().enumerate() {
            q[k] -= &a * BigRational::from_integer(c.clone());
        }
        alpha[d] = a;
    }
    alpha
}

/// Double-double number `hi + lo`.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Self { hi: s, lo: err }
    }

    fn add(self, o: Self) -> Self {
        let s = Self::two_sum(self.hi, o.hi);
        let t = Self::two_sum(self.lo, o.lo);
        let lo = s.lo + t.hi;
        let r = Self::two_sum(s.hi, lo);
        let lo = r.lo + t.lo;
        Self::two_sum(r.hi, lo)
    }

    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let err = libm::fma(self.hi, o.hi, -p);
        let lo = err + (self.hi * o.lo + self.lo * o.hi);
        Self::two_sum(p, lo)
    }

    fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Self::new(q1)).neg());
        let q2 = r.hi / o.hi;
        Self::two_sum(q1, q2)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

fn monomials_dd(kind: ChebyshevKind, m: usize) -> Vec<Dd> {
    let mut prev = vec![Dd::new(1.0)];
    let mut cur = match kind {
        ChebyshevKind::First => vec![Dd::new(0.0), Dd::new(1.0)],
        ChebyshevKind::Second => vec![Dd::new(0.0), Dd::new(2.0)],
    };
    if m == 0 {
        return prev;
    }
    for _ in 1..m {
        let mut next = vec![Dd::new(0.0); cur.len() + 1];
        for (k, c) in cur.iter().enumerate() {
            next[k + 1] = next[k + 1].add(c.mul(Dd::new(2.0)));
        }
        for (k, c) in prev.iter().enumerate() {
            next[k] = next[k].add(c.neg());
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// The same division carried out in double-double arithmetic.
pub fn divided_cheb_coeffs_compensated(m: usize, x0: f64) -> Vec<f64> {
    assert!(m >= 1, "degree must be at least 1");
    let x = Dd::new(x0);
    let t = monomials_dd(ChebyshevKind::First, m);
    let mut q = vec![Dd::new(0.0); m];
    let mut carry = Dd::new(0.0);
    for k in (1..=m).rev() {
        carry = t[k].add(x.mul(carry));
        q[k - 1] = carry;
    }
    let mut alpha = vec![0.0; m];
    for d in (0..m).rev() {
        let u = monomials_dd(ChebyshevKind::Second, d);
        let a = q[d].div(u[d]);
        for (k, c) in u.iter().enumerate() {
            q[k] = q[k].add(a.mul(*c).neg());
        }
        alpha[d] = a.to_f64();
    }
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparsityPattern;

    fn laplacian(n: usize) -> SparseMatrix {
        let p = SparsityPattern::tridiagonal(n).unwrap();
        let v = p.entries().map(|(i, j)| if i == j { 2.0 } else { -1.0 }).collect();
        SparseMatrix::new(p, v).unwrap()
    }

    #[test]
    fn solve_scaled_identities() {
        let i = SparseMatrix::identity(3).unwrap();
        assert_eq!(solve_exact(&i, &[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);
        let two = i.map_values(|_, _, v| 2.0 * v);
        let x = solve_exact(&two, &[1.0, -2.0, 3.0]).unwrap();
        for (u, v) in x.iter().zip([0.5, -1.0, 1.5]) {
            assert!((u - v).abs() <= 1e-15);
        }
    }

    #[test]
    fn solve_reports_indefinite_pivot() {
        let p = SparsityPattern::new(vec![vec![0, 1], vec![0, 1]]).unwrap();
        let a = SparseMatrix::new(p, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            solve_exact(&a, &[1.0, 1.0]),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
    }

    #[test]
    fn solve_agrees_with_long_richardson() {
        let a = laplacian(8);
        let mut r = vec![0.0; 8];
        r[0] = 1.0;
        let x = solve_exact(&a, &r).unwrap();
        let ax = a.matvec(&x);
        let res: f64 = ax.iter().zip(&r).map(|(u, v)| (u - v) * (u - v)).sum();
        assert!(math::sqrt(res) <= 1e-10);
        let y = richardson_iterate(&a, &r, 0.5, 20_000);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() <= 1e-8);
        }
    }

    #[test]
    fn richardson_examples() {
        let a = laplacian(3);
        assert_eq!(richardson_iterate(&a, &[1.0, 2.0, 3.0], 0.25, 0), vec![0.25, 0.5, 0.75]);
        let i = SparseMatrix::identity(2).unwrap();
        assert_eq!(richardson_iterate(&i, &[3.0, -1.0], 1.0, 7), vec![3.0, -1.0]);
    }

    #[test]
    fn chebyshev_examples() {
        assert_eq!(chebyshev_eval(ChebyshevKind::First, 2, 2.0), 7.0);
        assert_eq!(chebyshev_eval(ChebyshevKind::Second, 1, 0.5), 1.0);
        for j in 0..=50 {
            for k in 0..=400 {
                let x = -1.0 + k as f64 / 200.0;
                assert!(chebyshev_eval(ChebyshevKind::Second, j, x).abs() <= j as f64 + 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn clenshaw_examples() {
        assert_eq!(clenshaw_scalar(&[1.0, 1.0], 0.5), 2.0);
        let b = laplacian(3);
        assert_eq!(clenshaw_eval(&[2.5], &b, &[1.0, 2.0, 3.0]), vec![2.5, 5.0, 7.5]);
    }

    #[test]
    fn division_examples() {
        assert_eq!(divided_cheb_coeffs(2, 2.0), vec![4.0, 1.0]);
        assert_eq!(divided_cheb_coeffs(1, 0.3), vec![1.0]);
        assert_eq!(divided_cheb_coeffs(3, 1.0), vec![2.0, 2.0, 1.0]);
    }

    #[test]
    fn compensated_division_matches_exact() {
        for m in 1..=12 {
            for &x0 in &[1.01, 1.5, 2.0, 10.0] {
                let exact = divided_cheb_coeffs(m, x0);
                let dd = divided_cheb_coeffs_compensated(m, x0);
                for (a, b) in exact.iter().zip(&dd) {
                    assert!((a - b).abs() <= 1e-13 * a.abs(), "m={m} x0={x0}");
                }
            }
        }
    }
}
