//! Small dense symmetric solvers used by the Newton optimizer.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::scalar::Scalar;

/// Solves `A x = b` by an unpivoted `L D L^T` factorization of symmetric `A`.
///
/// Returns `None` when a pivot is tiny relative to the largest diagonal magnitude, which is
/// how numerical singularity is detected. Indefinite but well-conditioned systems succeed.
pub fn ldlt_solve<T: Scalar>(a: ArrayView2<'_, T>, b: ArrayView1<'_, T>) -> Option<Array1<T>> {
    let n = a.nrows();
    debug_assert_eq!(a.ncols(), n);
    debug_assert_eq!(b.len(), n);
    let scale = a.diag().iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tol = T::epsilon() * T::from_count(n.max(1)) * T::lit(16.0) * scale.max(T::min_positive_value());
    let mut l = Array2::<T>::eye(n);
    let mut d = Array1::<T>::zeros(n);
    for j in 0..n {
        let mut dj = a[[j, j]];
        for k in 0..j {
            dj = dj - l[[j, k]] * l[[j, k]] * d[k];
        }
        if !dj.is_finite() || dj.abs() <= tol {
            return None;
        }
        d[j] = dj;
        for i in (j + 1)..n {
            let mut v = a[[i, j]];
            for k in 0..j {
                v = v - l[[i, k]] * l[[j, k]] * d[k];
            }
            l[[i, j]] = v / dj;
        }
    }
    let mut z = b.to_owned();
    for i in 0..n {
        for k in 0..i {
            z[i] = z[i] - l[[i, k]] * z[k];
        }
    }
    for i in 0..n {
        z[i] = z[i] / d[i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            z[i] = z[i] - l[[k, i]] * z[k];
        }
    }
    z.iter().all(|v| v.is_finite()).then_some(z)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations: `(values, vectors)`
/// with eigenvectors stored as columns.
pub fn symmetric_eigen<T: Scalar>(a: ArrayView2<'_, T>) -> (Array1<T>, Array2<T>) {
    let n = a.nrows();
    let mut m = a.to_owned();
    let mut v = Array2::<T>::eye(n);
    let two = T::lit(2.0);
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum();
        let total: T = m.iter().map(|x| *x * *x).sum();
        if off <= T::epsilon() * T::epsilon() * total || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    (m.diag().to_owned(), v)
}

/// Minimum-norm least-squares solve through the eigen-decomposition, discarding
/// eigenvalues below `rcond * max|lambda|`.
pub fn pseudo_solve<T: Scalar>(a: ArrayView2<'_, T>, b: ArrayView1<'_, T>, rcond: T) -> Array1<T> {
    let (values, vectors) = symmetric_eigen(a);
    let top = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let cutoff = rcond * top;
    let mut x = Array1::zeros(b.len());
    for (k, &lam) in values.iter().enumerate() {
        if lam.abs() <= cutoff || lam == T::zero() {
            continue;
        }
        let u = vectors.column(k);
        let coef = u.dot(&b) / lam;
        x.scaled_add(coef, &u);
    }
    x
}
