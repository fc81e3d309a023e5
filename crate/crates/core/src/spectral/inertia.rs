//! Inertia of a Hermitian matrix via Bunch–Kaufman symmetric pivoting.
//!
//! `A = P L D L^* P^T` with `D` block diagonal (1x1 and 2x2 blocks). Sylvester's
//! law of inertia gives the number of negative eigenvalues of `A` as the number
//! of negative eigenvalues of `D`. Only the lower triangle is referenced and the
//! factor `L` is not kept.

use super::dense::DenseMatrix;
use super::scalar::Scalar;

/// Bunch–Kaufman growth constant `(1 + sqrt 17) / 8`.
const ALPHA: f64 = 0.640_388_203_202_208_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

/// Returns `None` when a pivot (or a 2x2 pivot determinant) falls below `tol`.
pub(crate) fn inertia<T: Scalar>(mut a: DenseMatrix<T>, tol: f64) -> Option<Inertia> {
    let n = a.rows();
    let mut inertia = Inertia { negative: 0, zero: 0, positive: 0 };
    let mut k = 0;
    while k < n {
        let akk = a[(k, k)].re().abs();
        let (imax, colmax) = column_max(&a, k, k + 1);
        if akk.max(colmax) <= tol {
            return None;
        }

        let mut two_by_two = false;
        let mut pivot_row = k;
        if akk < ALPHA * colmax {
            let rowmax = offdiag_row_max(&a, k, imax);
            if akk * rowmax >= ALPHA * colmax * colmax {
                // keep the 1x1 pivot at k
            } else if a[(imax, imax)].re().abs() >= ALPHA * rowmax {
                pivot_row = imax;
            } else {
                two_by_two = true;
                pivot_row = imax;
            }
        }

        if two_by_two {
            if pivot_row != k + 1 {
                symmetric_swap(&mut a, k, k + 1, pivot_row);
            }
            let d11 = a[(k, k)].re();
            let d22 = a[(k + 1, k + 1)].re();
            let d21 = a[(k + 1, k)];
            let det = d11 * d22 - d21.abs_sqr();
            let scale = d11.abs().max(d22.abs()).max(d21.abs());
            if det.abs() <= tol * scale {
                return None;
            }
            if det < 0.0 {
                inertia.negative += 1;
                inertia.positive += 1;
            } else if d11 + d22 > 0.0 {
                inertia.positive += 2;
            } else {
                inertia.negative += 2;
            }
            eliminate_2x2(&mut a, k, d11, d21, d22, det);
            k += 2;
        } else {
            if pivot_row != k {
                symmetric_swap(&mut a, k, k, pivot_row);
            }
            let d = a[(k, k)].re();
            if d.abs() <= tol {
                return None;
            }
            if d < 0.0 {
                inertia.negative += 1;
            } else {
                inertia.positive += 1;
            }
            eliminate_1x1(&mut a, k, d);
            k += 1;
        }
    }
    Some(inertia)
}

/// Largest |a[i, col]| for `i >= from`.
fn column_max<T: Scalar>(a: &DenseMatrix<T>, col: usize, from: usize) -> (usize, f64) {
    let mut best = (col, 0.0);
    for (off, x) in a.col(col)[from..].iter().enumerate() {
        let v = x.abs();
        if v > best.1 {
            best = (from + off, v);
        }
    }
    best
}

/// Largest off-diagonal |a[r, j]| over the trailing block starting at `k`.
fn offdiag_row_max<T: Scalar>(a: &DenseMatrix<T>, k: usize, r: usize) -> f64 {
    let mut m: f64 = 0.0;
    for j in k..r {
        m = m.max(a[(r, j)].abs());
    }
    for x in &a.col(r)[r + 1..] {
        m = m.max(x.abs());
    }
    m
}

/// Symmetric interchange of indices `p < q` in the trailing block starting at
/// `k`, lower storage.
fn symmetric_swap<T: Scalar>(a: &mut DenseMatrix<T>, k: usize, p: usize, q: usize) {
    debug_assert!(k <= p && p < q);
    let n = a.rows();
    for j in k..p {
        let t = a[(p, j)];
        a[(p, j)] = a[(q, j)];
        a[(q, j)] = t;
    }
    let t = a[(p, p)];
    a[(p, p)] = a[(q, q)];
    a[(q, q)] = t;
    for j in (p + 1)..q {
        let t = a[(j, p)];
        a[(j, p)] = a[(q, j)].conj();
        a[(q, j)] = t.conj();
    }
    a[(q, p)] = a[(q, p)].conj();
    for i in (q + 1)..n {
        let t = a[(i, p)];
        a[(i, p)] = a[(i, q)];
        a[(i, q)] = t;
    }
}

fn eliminate_1x1<T: Scalar>(a: &mut DenseMatrix<T>, k: usize, d: f64) {
    let n = a.rows();
    let inv = 1.0 / d;
    let c: Vec<T> = a.col(k)[k + 1..].to_vec();
    for j in (k + 1)..n {
        let cj = c[j - k - 1].conj().scale(inv);
        if cj == T::zero() {
            continue;
        }
        let col = &mut a.col_mut(j)[j..];
        for (x, ci) in col.iter_mut().zip(&c[j - k - 1..]) {
            *x -= *ci * cj;
        }
    }
}

fn eliminate_2x2<T: Scalar>(a: &mut DenseMatrix<T>, k: usize, d11: f64, d21: T, d22: f64, det: f64) {
    let n = a.rows();
    let m = n - k - 2;
    let c0: Vec<T> = a.col(k)[k + 2..].to_vec();
    let c1: Vec<T> = a.col(k + 1)[k + 2..].to_vec();
    // rows of C D^{-1}, D = [[d11, conj(d21)], [d21, d22]]
    let inv_det = 1.0 / det;
    let w0: Vec<T> = (0..m).map(|i| (c0[i].scale(d22) - c1[i] * d21).scale(inv_det)).collect();
    let w1: Vec<T> = (0..m).map(|i| (c1[i].scale(d11) - c0[i] * d21.conj()).scale(inv_det)).collect();
    for j in 0..m {
        let b0 = c0[j].conj();
        let b1 = c1[j].conj();
        let col = &mut a.col_mut(k + 2 + j)[k + 2 + j..];
        for (off, x) in col.iter_mut().enumerate() {
            let i = j + off;
            *x -= w0[i] * b0 + w1[i] * b1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dense::{CMatrix, RMatrix};
    use num_complex::Complex64;

    #[test]
    fn diagonal_inertia() {
        let a = RMatrix::from_diagonal(&[-1.5, -0.5, 0.5]);
        let i = inertia(a, 1e-12).unwrap();
        assert_eq!((i.negative, i.positive), (2, 1));
    }

    #[test]
    fn zero_diagonal_forces_two_by_two() {
        // [[0, 1], [1, 0]] has eigenvalues -1, 1
        let a = RMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let i = inertia(a, 1e-12).unwrap();
        assert_eq!((i.negative, i.positive), (1, 1));
        let y = CMatrix::from_rows(&[
            vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)],
            vec![Complex64::new(0.0, -1.0), Complex64::new(0.0, 0.0)],
        ]);
        let i = inertia(y, 1e-12).unwrap();
        assert_eq!((i.negative, i.positive), (1, 1));
    }

    #[test]
    fn singular_matrix_is_refused() {
        let a = RMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(inertia(a, 1e-12).is_none());
    }
}
