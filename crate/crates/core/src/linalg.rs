//! Small dense linear algebra: Cholesky solves and the ridge pilot fit.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{MdLassoError, Result};

/// Lower Cholesky factor of a symmetric positive definite matrix, in place.
pub(crate) fn cholesky_factor(mut a: Array2<f64>) -> Result<Array2<f64>> {
    let m = a.nrows();
    for j in 0..m {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= a[[j, k]] * a[[j, k]];
        }
        if !(d > 0.0) {
            return Err(MdLassoError::invalid("matrix", "not positive definite"));
        }
        let d = d.sqrt();
        a[[j, j]] = d;
        for i in j + 1..m {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= a[[i, k]] * a[[j, k]];
            }
            a[[i, j]] = s / d;
        }
    }
    Ok(a)
}

/// Solve `L L^T x = b` given the factor from [`cholesky_factor`].
pub(crate) fn cholesky_solve_factored(l: &Array2<f64>, b: ArrayView1<'_, f64>) -> Array1<f64> {
    let m = l.nrows();
    let mut z = b.to_owned();
    for i in 0..m {
        for k in 0..i {
            z[i] -= l[[i, k]] * z[k];
        }
        z[i] /= l[[i, i]];
    }
    for i in (0..m).rev() {
        for k in i + 1..m {
            z[i] -= l[[k, i]] * z[k];
        }
        z[i] /= l[[i, i]];
    }
    z
}

/// Solve `a x = b` for symmetric positive definite `a`.
pub(crate) fn cholesky_solve(a: Array2<f64>, b: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    Ok(cholesky_solve_factored(&cholesky_factor(a)?, b))
}

/// Ridge penalty used by the pilot fit: `1e-2 * trace(X^T X) / (n p)`.
pub fn ridge_penalty(x: ArrayView2<'_, f64>) -> f64 {
    let (n, p) = x.dim();
    1e-2 * x.iter().map(|v| v * v).sum::<f64>() / (n * p) as f64
}

/// Minimizer of `(1/2n)||y - X b||^2 + (alpha/2)||b||^2` with the pilot
/// penalty. Works in the smaller of the primal and dual dimensions.
pub fn ridge_pilot(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    let (n, p) = x.dim();
    let alpha = ridge_penalty(x);
    if alpha == 0.0 {
        return Ok(Array1::zeros(p));
    }
    let nf = n as f64;
    if n >= p {
        let mut gram = x.t().dot(&x) / nf;
        for j in 0..p {
            gram[[j, j]] += alpha;
        }
        let rhs = x.t().dot(&y) / nf;
        cholesky_solve(gram, rhs.view())
    } else {
        let mut gram = x.dot(&x.t()) / nf;
        for i in 0..n {
            gram[[i, i]] += alpha;
        }
        let dual = cholesky_solve(gram, y)?;
        Ok(x.t().dot(&dual) / nf)
    }
}
