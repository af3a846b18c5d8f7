//! Dense linear algebra in double-double arithmetic.
//!
//! Used where a covariance matrix is singular to working precision in `f64`
//! but its inverse quadratic form still has a well-defined limit, as happens
//! for segment covariances of smooth noise at short times.

use twofloat::TwoFloat;

/// Double-double quotient `a / b` accurate to about 2^-104 relative error.
///
/// The quotient of the leading words is refined twice with exact residuals.
pub fn div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

/// `ln 2` split into leading and trailing words.
const LN2: (f64, f64) = (std::f64::consts::LN_2, 2.319_046_813_846_299_6e-17);

/// Double-double exponential.
///
/// Argument reduction `x = k ln 2 + r`, a Taylor series for `exp(r / 32)`
/// and five squarings.
pub fn exp(x: TwoFloat) -> TwoFloat {
    let k = (x.hi() / LN2.0).round();
    let r = x - TwoFloat::new_mul(k, LN2.0) - TwoFloat::new_mul(k, LN2.1);
    let r = r / 32.0;
    let mut sum = TwoFloat::from(1.0);
    let mut term = TwoFloat::from(1.0);
    for i in 1..=20 {
        term = term * r / i as f64;
        sum += term;
    }
    for _ in 0..5 {
        sum = sum * sum;
    }
    sum * 2f64.powi(k as i32)
}

/// Square matrix stored row-major in double-double precision.
#[derive(Debug, Clone)]
pub struct DdMatrix {
    n: usize,
    data: Vec<TwoFloat>,
}

impl DdMatrix {
    /// Zero matrix of size `n x n`.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![TwoFloat::from(0.0); n * n],
        }
    }

    /// Dimension of the matrix.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> TwoFloat {
        self.data[i * self.n + j]
    }

    /// Sets entry `(i, j)`.
    pub fn set(&mut self, i: usize, j: usize, v: TwoFloat) {
        self.data[i * self.n + j] = v;
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    ///
    /// Returns `None` when a pivot vanishes exactly.
    pub fn solve(&self, b: &[TwoFloat]) -> Option<Vec<TwoFloat>> {
        let n = self.n;
        assert_eq!(b.len(), n, "right-hand side length must match matrix dimension");
        let mut a = self.data.clone();
        let mut x: Vec<TwoFloat> = b.to_vec();
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r, &s| {
                    a[r * n + col]
                        .abs()
                        .partial_cmp(&a[s * n + col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("non-empty pivot range");
            if a[pivot_row * n + col] == 0.0 {
                return None;
            }
            if pivot_row != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot_row * n + k);
                }
                x.swap(col, pivot_row);
            }
            let pivot = a[col * n + col];
            for r in col + 1..n {
                let factor = div(a[r * n + col], pivot);
                if factor == 0.0 {
                    continue;
                }
                for k in col..n {
                    let v = a[col * n + k];
                    a[r * n + k] -= factor * v;
                }
                let v = x[col];
                x[r] -= factor * v;
            }
        }
        for col in (0..n).rev() {
            let mut acc = x[col];
            for k in col + 1..n {
                acc -= a[col * n + k] * x[k];
            }
            x[col] = div(acc, a[col * n + col]);
        }
        Some(x)
    }
}
