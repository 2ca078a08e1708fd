//! Depth accuracy after per-image affine alignment, and PSNR for images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DepthMap, Grid, Mask, RgbImage};

/// Pixels where both maps are finite.
fn valid_pairs<'a>(est: &'a DepthMap, gt: &'a DepthMap) -> impl Iterator<Item = (f64, f64)> + 'a {
    est.as_slice()
        .iter()
        .zip(gt.as_slice())
        .filter(|(e, g)| e.is_finite() && g.is_finite())
        .map(|(&e, &g)| (e, g))
}

/// Least-squares `(scale, offset)` minimizing `Σ (scale·est + offset − gt)²` over
/// pixels finite in both maps. A flat estimate gets scale 1 and an offset-only fit.
pub fn align_affine(est: &DepthMap, gt: &DepthMap) -> Result<(f64, f64)> {
    est.check_dims(gt, "ground truth")?;
    let (mut n, mut me, mut mg) = (0usize, 0.0, 0.0);
    for (e, g) in valid_pairs(est, gt) {
        n += 1;
        me += e;
        mg += g;
    }
    if n < 2 {
        return Err(Error::invalid(format!(
            "affine alignment needs at least 2 valid pixels, found {n}"
        )));
    }
    me /= n as f64;
    mg /= n as f64;
    let (mut see, mut seg) = (0.0, 0.0);
    for (e, g) in valid_pairs(est, gt) {
        let de = e - me;
        see += de * de;
        seg += de * (g - mg);
    }
    if see <= f64::EPSILON * f64::EPSILON * me * me * n as f64 {
        return Ok((1.0, mg - me));
    }
    let scale = seg / see;
    Ok((scale, mg - scale * me))
}

/// Mean of `|z − z*| / z*` over valid pixels.
pub fn absrel(est: &DepthMap, gt: &DepthMap) -> Result<f64> {
    est.check_dims(gt, "ground truth")?;
    let mut n = 0usize;
    let mut acc = 0.0;
    for (e, g) in valid_pairs(est, gt) {
        if g <= 0.0 {
            return Err(Error::invalid(format!("ground-truth depth {g} must be positive")));
        }
        acc += (e - g).abs() / g;
        n += 1;
    }
    if n == 0 {
        return Err(Error::invalid("no valid pixels"));
    }
    Ok(acc / n as f64)
}

pub fn rmse(est: &DepthMap, gt: &DepthMap) -> Result<f64> {
    est.check_dims(gt, "ground truth")?;
    let mut n = 0usize;
    let mut acc = 0.0;
    for (e, g) in valid_pairs(est, gt) {
        acc += (e - g) * (e - g);
        n += 1;
    }
    if n == 0 {
        return Err(Error::invalid("no valid pixels"));
    }
    Ok((acc / n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse: f64,
    pub absrel: f64,
    pub scale: f64,
    pub offset: f64,
    pub valid_pixels: usize,
}

/// Aligns `est` to `gt` and scores the aligned estimate.
pub fn evaluate_depth(est: &DepthMap, gt: &DepthMap) -> Result<EvalReport> {
    let (scale, offset) = align_affine(est, gt)?;
    let aligned = est.map(|&e| scale * e + offset);
    Ok(EvalReport {
        rmse: rmse(&aligned, gt)?,
        absrel: absrel(&aligned, gt)?,
        scale,
        offset,
        valid_pixels: valid_pairs(est, gt).count(),
    })
}

/// PSNR in dB with peak 255. `mask` restricts the comparison to pixels with
/// coverage > 0. Identical inputs give +∞.
pub fn psnr(a: &RgbImage, b: &RgbImage, mask: Option<&Mask>) -> Result<f64> {
    a.check_dims(b, "second image")?;
    if let Some(m) = mask {
        a.check_dims(m, "mask")?;
    }
    let mut n = 0usize;
    let mut sse = 0.0;
    for (p, (x, y)) in a.as_slice().iter().zip(b.as_slice()).enumerate() {
        if mask.is_some_and(|m| m.as_slice()[p] <= 0.0) {
            continue;
        }
        for c in 0..3 {
            let d = x[c] as f64 - y[c] as f64;
            sse += d * d;
        }
        n += 3;
    }
    if n == 0 {
        return Err(Error::invalid("PSNR mask selects no pixels"));
    }
    Ok(psnr_from_mse(sse / n as f64))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * 255f64.log10() - 10.0 * mse.log10()
    }
}

/// Binary mask of pixels `k` pixels or more from the border of a `height×width` image.
pub fn interior_mask(height: usize, width: usize, margin: usize) -> Mask {
    Grid::from_fn(height, width, |i, j| {
        let inside = i >= margin && j >= margin && i + margin < height && j + margin < width;
        inside as u8 as f64
    })
}
