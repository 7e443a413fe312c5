//! Small dense complex linear algebra.
//!
//! Everything here operates on matrices of size at most a few dozen, so a
//! straightforward LU with partial pivoting is both fast enough and easy to
//! audit. Singular value decompositions are delegated to `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Returned when a pivot falls below `n * eps * max|entry|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singular;

/// LU factorization `P A = L U` with unit lower triangular `L`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    swaps: usize,
}

impl Lu {
    pub fn new(a: &CMatrix) -> Result<Self, Singular> {
        assert!(a.is_square(), "LU of a non-square matrix");
        let n = a.nrows();
        let scale = a.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        let threshold = (n.max(1) as f64) * f64::EPSILON * scale;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;

        for k in 0..n {
            let (piv, piv_abs) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_abs <= threshold || piv_abs == 0.0 {
                return Err(Singular);
            }
            if piv != k {
                lu.swap_rows(piv, k);
                perm.swap(piv, k);
                swaps += 1;
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor != ZERO {
                    for j in (k + 1)..n {
                        let t = lu[(k, j)];
                        lu[(i, j)] -= factor * t;
                    }
                }
            }
        }
        Ok(Lu { lu, perm, swaps })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    pub fn determinant(&self) -> C64 {
        let mut det = if self.swaps % 2 == 0 { ONE } else { -ONE };
        for k in 0..self.dim() {
            det *= self.lu[(k, k)];
        }
        det
    }

    pub fn solve_vec(&self, b: &CVector) -> CVector {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x = CVector::from_fn(n, |i, _| b[self.perm[i]]);
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(b.nrows(), b.ncols());
        for c in 0..b.ncols() {
            let col = self.solve_vec(&b.column(c).into_owned());
            out.set_column(c, &col);
        }
        out
    }

    pub fn inverse(&self) -> CMatrix {
        self.solve(&CMatrix::identity(self.dim(), self.dim()))
    }
}

/// Determinant by LU; a numerically singular matrix yields `Err(Singular)`.
pub fn det(a: &CMatrix) -> Result<C64, Singular> {
    if a.nrows() == 0 {
        return Ok(ONE);
    }
    Lu::new(a).map(|lu| lu.determinant())
}

/// Determinant that returns exactly zero instead of failing on singular input.
pub fn det_or_zero(a: &CMatrix) -> C64 {
    det(a).unwrap_or(ZERO)
}

pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let svd = a.clone().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Ratio of smallest to largest singular value (0 for the zero matrix).
pub fn inverse_condition(a: &CMatrix) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `|a - b| / max(|a|, |b|)`, or the absolute difference when both vanish.
pub fn rel_diff(a: C64, b: C64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

pub fn real_matrix(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |i, j| C64::new(f(i, j), 0.0))
}
