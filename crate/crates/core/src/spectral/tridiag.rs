//! Householder reduction of a Hermitian matrix to real symmetric tridiagonal
//! form, followed by implicit-shift QL iteration.
//!
//! The reduction follows the lower-triangle variant: at step `k` a reflector
//! `H = I - tau v v^*` with `H^* x = beta e_1`, `beta` real, annihilates column
//! `k` below the subdiagonal. Because every `beta` is real, the resulting
//! tridiagonal matrix is real even for complex input, and the reflectors carry
//! the diagonal phases.

use super::dense::DenseMatrix;
use super::scalar::Scalar;
use crate::error::{Error, Result};

pub(crate) struct Tridiagonal<T> {
    pub diag: Vec<f64>,
    /// `off[i]` couples `i` and `i + 1`; the last entry is zero.
    pub off: Vec<f64>,
    taus: Vec<T>,
    /// Reflector `k` lives in column `k`, rows `k+1..` (leading entry 1).
    reflectors: DenseMatrix<T>,
}

/// Generates `H` with `H^* (alpha, x) = (beta, 0)`; scales `x` into the
/// reflector tail in place. Returns `(beta, tau)`.
fn householder<T: Scalar>(alpha: T, x: &mut [T]) -> (f64, T) {
    let xnorm = x.iter().map(|v| v.abs_sqr()).sum::<f64>().sqrt();
    let (ar, ai) = (alpha.re(), alpha.im());
    if xnorm == 0.0 && ai == 0.0 {
        return (ar, T::zero());
    }
    let norm = (alpha.abs_sqr() + xnorm * xnorm).sqrt();
    let beta = if ar >= 0.0 { -norm } else { norm };
    let tau = (T::from_real(beta) - alpha).scale(1.0 / beta);
    let inv = T::one() / (alpha - T::from_real(beta));
    for v in x.iter_mut() {
        *v *= inv;
    }
    (beta, tau)
}

pub(crate) fn tridiagonalize<T: Scalar>(mut a: DenseMatrix<T>) -> Tridiagonal<T> {
    let n = a.rows();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    let mut taus = vec![T::zero(); n.saturating_sub(1)];
    let mut v = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];

    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1;
        let (beta, tau) = {
            let col = a.col_mut(k);
            let alpha = col[k + 1];
            householder(alpha, &mut col[k + 2..])
        };
        off[k] = beta;
        taus[k] = tau;
        diag[k] = a[(k, k)].re();

        if tau == T::zero() {
            a[(k + 1, k)] = T::one();
            continue;
        }
        a[(k + 1, k)] = T::one();
        v[..m].copy_from_slice(&a.col(k)[k + 1..]);

        // w = tau * A22 v, using the lower triangle only
        let (vv, ww) = (&v[..m], &mut w[..m]);
        ww.iter_mut().for_each(|x| *x = T::zero());
        for j in 0..m {
            let col = &a.col(k + 1 + j)[k + 1..];
            let vj = vv[j];
            let mut acc = T::from_real(col[j].re()) * vj;
            for i in (j + 1)..m {
                let aij = col[i];
                ww[i] += aij * vj;
                acc += aij.conj() * vv[i];
            }
            ww[j] += acc;
        }
        let mut wv = T::zero();
        for i in 0..m {
            ww[i] *= tau;
            wv += ww[i].conj() * vv[i];
        }
        let shift = -(tau * wv).scale(0.5);
        for i in 0..m {
            ww[i] += shift * vv[i];
        }

        // A22 -= v w^* + w v^*
        for j in 0..m {
            let vj = vv[j].conj();
            let wj = ww[j].conj();
            let col = &mut a.col_mut(k + 1 + j)[k + 1..];
            for i in j..m {
                col[i] -= vv[i] * wj + ww[i] * vj;
            }
            col[j] = T::from_real(col[j].re());
        }
    }
    if n > 0 {
        diag[n - 1] = a[(n - 1, n - 1)].re();
    }
    Tridiagonal { diag, off, taus, reflectors: a }
}

impl<T: Scalar> Tridiagonal<T> {
    /// Unitary `Q` with `A = Q T Q^*`.
    pub fn form_q(&self) -> DenseMatrix<T> {
        let n = self.diag.len();
        let mut q = DenseMatrix::<T>::identity(n);
        for k in (0..n.saturating_sub(1)).rev() {
            let tau = self.taus[k];
            if tau == T::zero() {
                continue;
            }
            let v = &self.reflectors.col(k)[k + 1..];
            for j in (k + 1)..n {
                let col = &mut q.col_mut(j)[k + 1..];
                let mut s = T::zero();
                for (vi, qi) in v.iter().zip(col.iter()) {
                    s += vi.conj() * *qi;
                }
                let s = tau * s;
                for (vi, qi) in v.iter().zip(col.iter_mut()) {
                    *qi -= *vi * s;
                }
            }
        }
        q
    }
}

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Implicit-shift QL on a symmetric tridiagonal matrix. When `vectors` is
/// given, its columns are rotated along (start from `Q` to obtain the
/// eigenvectors of the original matrix). Eigenvalues are returned ascending,
/// with the vector columns permuted to match.
pub(crate) fn tql<T: Scalar>(
    mut d: Vec<f64>,
    mut e: Vec<f64>,
    mut vectors: Option<&mut DenseMatrix<T>>,
) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(d);
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_SWEEPS_PER_EIGENVALUE {
                    return Err(Error::NoConvergence { index: l });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = vectors.as_deref_mut() {
                        rotate_columns(z, i, c, s);
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    if let Some(z) = vectors {
        if order.iter().enumerate().any(|(k, &i)| k != i) {
            let old = z.clone();
            for (k, &i) in order.iter().enumerate() {
                z.col_mut(k).copy_from_slice(old.col(i));
            }
        }
    }
    Ok(sorted)
}

#[inline]
fn rotate_columns<T: Scalar>(z: &mut DenseMatrix<T>, i: usize, c: f64, s: f64) {
    let rows = z.rows();
    let data = z.data_mut();
    let (left, right) = data.split_at_mut((i + 1) * rows);
    let zi = &mut left[i * rows..];
    let zi1 = &mut right[..rows];
    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
        let h = *b;
        *b = a.scale(s) + h.scale(c);
        *a = a.scale(c) - h.scale(s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dense::{CMatrix, RMatrix};
    use num_complex::Complex64;

    fn tridiag_matrix(d: &[f64], e: &[f64]) -> RMatrix {
        let n = d.len();
        RMatrix::from_fn(n, n, |i, j| {
            if i == j {
                d[i]
            } else if i + 1 == j {
                e[i]
            } else if j + 1 == i {
                e[j]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn householder_annihilates() {
        let alpha = Complex64::new(0.3, -1.2);
        let x0 = vec![Complex64::new(1.0, 0.5), Complex64::new(-0.7, 2.0)];
        let mut x = x0.clone();
        let (beta, tau) = householder(alpha, &mut x);
        let v: Vec<Complex64> = std::iter::once(Complex64::new(1.0, 0.0)).chain(x.iter().copied()).collect();
        let full: Vec<Complex64> = std::iter::once(alpha).chain(x0).collect();
        // H^* y = y - conj(tau) v (v^* y)
        let vy: Complex64 = v.iter().zip(&full).map(|(a, b)| a.conj() * b).sum();
        let out: Vec<Complex64> = full.iter().zip(&v).map(|(y, vi)| y - tau.conj() * vi * vy).collect();
        assert!((out[0] - Complex64::new(beta, 0.0)).norm() < 1e-14);
        assert!(out[1].norm() < 1e-14 && out[2].norm() < 1e-14);
    }

    #[test]
    fn reduction_reconstructs_matrix() {
        let n = 6;
        let a = CMatrix::from_fn(n, n, |i, j| {
            let (lo, hi) = (i.min(j) as f64, i.max(j) as f64);
            let re = (lo * 0.7 + hi * 1.3).sin();
            let im = if i == j {
                0.0
            } else {
                let s = (lo * 1.1 - hi * 0.4).cos();
                if i > j {
                    s
                } else {
                    -s
                }
            };
            Complex64::new(re, im)
        });
        assert!(a.is_hermitian_exact());
        let t = tridiagonalize(a.clone());
        let q = t.form_q();
        let tm = tridiag_matrix(&t.diag, &t.off[..n - 1]).to_complex();
        let back = q.matmul(&tm).matmul(&q.adjoint());
        assert!(back.max_abs_diff(&a) < 1e-13, "{}", back.max_abs_diff(&a));
        let qq = q.adjoint().matmul(&q);
        assert!(qq.max_abs_diff(&CMatrix::identity(n)) < 1e-14);
    }

    #[test]
    fn ql_on_known_tridiagonal() {
        // free chain with 2 on the diagonal and -1 off it: 2 - 2 cos(k pi / (n+1))
        let n = 7;
        let d = vec![2.0; n];
        let e = vec![-1.0; n];
        let mut z = RMatrix::identity(n);
        let vals = tql(d.clone(), e.clone(), Some(&mut z)).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13);
        }
        let t = tridiag_matrix(&d, &e[..n - 1]);
        let tz = t.matmul(&z);
        for k in 0..n {
            for i in 0..n {
                assert!((tz[(i, k)] - vals[k] * z[(i, k)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn one_by_one_and_empty() {
        assert_eq!(tql::<f64>(vec![], vec![], None).unwrap(), Vec::<f64>::new());
        assert_eq!(tql::<f64>(vec![3.5], vec![0.0], None).unwrap(), vec![3.5]);
    }
}
