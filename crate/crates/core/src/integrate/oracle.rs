//! Alternating-minimization reference solver for the fusion objective.
//!
//! Shares no code with the closed-form path: given the coefficients it sets
//! every pixel to its weighted mean, and given the fused depth it refits each
//! view's scale and offset by a 2×2 weighted least squares. The objective is a
//! jointly convex quadratic, so the iteration descends to the global minimum.

use super::{AffineCoeff, ViewEstimate};
use crate::grid::{DepthMap, Grid, WeightMap};

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub depth: DepthMap,
    pub coeffs: Vec<AffineCoeff>,
    pub loss: f64,
    /// Objective after each full sweep.
    pub history: Vec<f64>,
}

fn weighted_mean(p: usize, d0: &DepthMap, phi0: &WeightMap, views: &[ViewEstimate], coeffs: &[AffineCoeff]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    let w0 = phi0.as_slice()[p];
    if w0 > 0.0 {
        num += w0 * d0.as_slice()[p];
        den += w0;
    }
    for (v, c) in views.iter().zip(coeffs) {
        let w = v.weight.as_slice()[p];
        if w > 0.0 {
            num += w * (c.scale * v.estimate.as_slice()[p] + c.offset);
            den += w;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

fn objective(x: &[f64], d0: &DepthMap, phi0: &WeightMap, views: &[ViewEstimate], coeffs: &[AffineCoeff]) -> f64 {
    let mut total = 0.0;
    for (p, &xp) in x.iter().enumerate() {
        let w0 = phi0.as_slice()[p];
        if w0 > 0.0 {
            total += w0 * (xp - d0.as_slice()[p]).powi(2);
        }
        for (v, c) in views.iter().zip(coeffs) {
            let w = v.weight.as_slice()[p];
            if w > 0.0 {
                total += w * (xp - c.scale * v.estimate.as_slice()[p] - c.offset).powi(2);
            }
        }
    }
    total
}

/// Best `(scale, offset)` for one view against the current depth. Flat
/// estimates keep their scale and refit only the offset.
fn refit(view: &ViewEstimate, x: &[f64], current: AffineCoeff) -> AffineCoeff {
    let (mut sw, mut se, mut see, mut sx, mut sex) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (p, &xp) in x.iter().enumerate() {
        let w = view.weight.as_slice()[p];
        if w > 0.0 {
            let e = view.estimate.as_slice()[p];
            sw += w;
            se += w * e;
            see += w * e * e;
            sx += w * xp;
            sex += w * e * xp;
        }
    }
    if sw == 0.0 {
        return current;
    }
    let det = see * sw - se * se;
    if det <= 1e-12 * see * sw {
        return AffineCoeff {
            scale: current.scale,
            offset: (sx - current.scale * se) / sw,
        };
    }
    AffineCoeff {
        scale: (sex * sw - se * sx) / det,
        offset: (see * sx - se * sex) / det,
    }
}

/// Iterates until a sweep lowers the objective by no more than `tol` times its
/// previous value, or `max_iters` sweeps have run. Starts from identity maps.
pub fn oracle_integrate(
    d0: &DepthMap,
    phi0: &WeightMap,
    views: &[ViewEstimate],
    max_iters: usize,
    tol: f64,
) -> OracleResult {
    let n_px = d0.len();
    let mut coeffs = vec![
        AffineCoeff {
            scale: 1.0,
            offset: 0.0
        };
        views.len()
    ];
    let mut x: Vec<f64> = (0..n_px).map(|p| weighted_mean(p, d0, phi0, views, &coeffs)).collect();
    let mut loss = objective(&x, d0, phi0, views, &coeffs);
    let mut history = vec![loss];
    for _ in 0..max_iters {
        for (c, v) in coeffs.iter_mut().zip(views) {
            *c = refit(v, &x, *c);
        }
        for (p, xp) in x.iter_mut().enumerate() {
            *xp = weighted_mean(p, d0, phi0, views, &coeffs);
        }
        let next = objective(&x, d0, phi0, views, &coeffs);
        history.push(next);
        let decrease = loss - next;
        loss = next;
        if decrease <= tol * history[history.len() - 2] || loss == 0.0 {
            break;
        }
    }
    OracleResult {
        depth: Grid::from_vec(d0.height(), d0.width(), x).expect("same shape as d0"),
        coeffs,
        loss,
        history,
    }
}
