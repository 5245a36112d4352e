//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use crate::error::{MdLassoError, Result};

const NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the odd-indexed nodes 1, 3, 5, 7.
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 5000;

struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn kronrod(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Piece {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mid = f(centre);
    let mut k = KRONROD_WEIGHTS[7] * mid;
    let mut g = GAUSS_WEIGHTS[3] * mid;
    for i in 0..7 {
        let dx = half * NODES[i];
        let pair = f(centre - dx) + f(centre + dx);
        k += KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            g += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    Piece {
        lo,
        hi,
        value: k * half,
        error: ((k - g) * half).abs(),
    }
}

/// Integral of `f` over `[lo, hi]` to within `max(abs_tol, rel_tol |I|)`.
/// Returns the estimate and its error estimate.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let mut pieces = vec![kronrod(&f, lo, hi)];
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if !value.is_finite() {
            return Err(MdLassoError::Quadrature {
                estimate: value,
                error_estimate: error,
            });
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok((value, error));
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(MdLassoError::Quadrature {
                estimate: value,
                error_estimate: error,
            });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .expect("non-empty");
        let piece = pieces.swap_remove(worst);
        let mid = 0.5 * (piece.lo + piece.hi);
        pieces.push(kronrod(&f, piece.lo, mid));
        pieces.push(kronrod(&f, mid, piece.hi));
    }
}

/// Integral over `[0, inf)` through the map `x = t / (1 - t)`.
pub fn integrate_half_line(
    f: impl Fn(f64) -> f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let mapped = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        let v = f(t / s) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(mapped, 0.0, 1.0, abs_tol, rel_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let (v, _) = integrate(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((v - 13.5).abs() < 1e-12);
    }

    #[test]
    fn gaussian_half_line() {
        let (v, _) = integrate_half_line(|x| (-x * x).exp(), 1e-13, 1e-12).unwrap();
        assert!((v - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn slowly_decaying_integrand() {
        // int_0^inf 1/(1+x^2) dx = pi/2
        let (v, _) = integrate_half_line(|x| 1.0 / (1.0 + x * x), 1e-12, 1e-12).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }
}
