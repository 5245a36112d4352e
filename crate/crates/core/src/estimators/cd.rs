//! Coordinate descent for the weighted Lasso
//! `(1/2) sum_i w_i (y_i - x_i' b)^2 + lambda ||b||_1`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};

use crate::prox::{kkt_residual, shrink};

/// Design stored column-major as rows of `X^T`, so each coordinate update
/// reads one contiguous slice.
pub(crate) struct ColumnMajor {
    xt: Array2<f64>,
}

impl ColumnMajor {
    pub(crate) fn new(x: ArrayView2<'_, f64>) -> Self {
        ColumnMajor {
            xt: x.t().as_standard_layout().into_owned(),
        }
    }

    fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.xt.row(j)
    }

    fn p(&self) -> usize {
        self.xt.nrows()
    }
}

pub(crate) struct CdOutcome {
    pub beta: Array1<f64>,
    pub residuals: Array1<f64>,
    pub sweeps: usize,
    pub kkt: f64,
    pub converged: bool,
}

/// Gradient of the smooth part, `-X^T (w ⊙ r)`.
fn gradient(design: &ColumnMajor, w: ArrayView1<'_, f64>, r: ArrayView1<'_, f64>) -> Array1<f64> {
    let wr = &w * &r;
    Array1::from_shape_fn(design.p(), |j| -design.column(j).dot(&wr))
}

fn residuals(
    design: &ColumnMajor,
    y: ArrayView1<'_, f64>,
    beta: ArrayView1<'_, f64>,
) -> Array1<f64> {
    let mut r = y.to_owned();
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            r.scaled_add(-b, &design.column(j));
        }
    }
    r
}

/// One pass of cyclic updates over `coords`; returns the largest change.
fn sweep(
    design: &ColumnMajor,
    w: ArrayView1<'_, f64>,
    curvature: &Array1<f64>,
    lambda: f64,
    beta: &mut Array1<f64>,
    r: &mut Array1<f64>,
    coords: impl Iterator<Item = usize>,
) -> f64 {
    let mut largest: f64 = 0.0;
    for j in coords {
        let a = curvature[j];
        if a == 0.0 {
            beta[j] = 0.0;
            continue;
        }
        let col = design.column(j);
        let mut corr = 0.0;
        Zip::from(&col)
            .and(&w)
            .and(&*r)
            .for_each(|&x, &wi, &ri| corr += wi * x * ri);
        let old = beta[j];
        let new = shrink(corr + a * old, lambda) / a;
        if new != old {
            r.scaled_add(old - new, &col);
            beta[j] = new;
            largest = largest.max((new - old).abs() * a.sqrt());
        }
    }
    largest
}

/// Solve to a KKT residual of at most `tol`, alternating full sweeps with
/// sweeps restricted to the current support.
pub(crate) fn weighted_lasso(
    design: &ColumnMajor,
    y: ArrayView1<'_, f64>,
    w: ArrayView1<'_, f64>,
    lambda: f64,
    init: Array1<f64>,
    tol: f64,
    max_sweeps: usize,
) -> CdOutcome {
    let p = design.p();
    let curvature = Array1::from_shape_fn(p, |j| {
        let col = design.column(j);
        let mut s = 0.0;
        Zip::from(&col).and(&w).for_each(|&x, &wi| s += wi * x * x);
        s
    });
    let mut beta = init;
    let mut sweeps = 0;
    let mut kkt;
    let mut r;
    loop {
        // Fresh residuals at each full pass keep rounding drift bounded.
        r = residuals(design, y, beta.view());
        sweep(design, w, &curvature, lambda, &mut beta, &mut r, 0..p);
        sweeps += 1;
        kkt = kkt_residual(beta.view(), gradient(design, w, r.view()).view(), lambda);
        if kkt <= tol || sweeps >= max_sweeps {
            break;
        }
        let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
        while sweeps < max_sweeps {
            sweep(
                design,
                w,
                &curvature,
                lambda,
                &mut beta,
                &mut r,
                active.iter().copied(),
            );
            sweeps += 1;
            let wr = &w * &r;
            let active_kkt = active
                .iter()
                .map(|&j| {
                    let g = -design.column(j).dot(&wr);
                    kkt_residual(ndarray::aview1(&[beta[j]]), ndarray::aview1(&[g]), lambda)
                })
                .fold(0.0f64, f64::max);
            if active_kkt <= 0.5 * tol {
                break;
            }
        }
    }
    CdOutcome {
        beta,
        residuals: r,
        sweeps,
        kkt,
        converged: kkt <= tol,
    }
}
