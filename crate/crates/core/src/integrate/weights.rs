//! Per-pixel weight maps for the coarse depth and the tangent-view estimates.

use rayon::prelude::*;

use super::{IntegrationConfig, ViewEstimate};
use crate::error::{Error, Result};
use crate::grid::{DepthMap, Grid, Mask, WeightMap};
use crate::layout::SemanticMap;
use crate::sphere::{CameraSpec, ErpGrid};

/// Tangent-image weight at edge coordinate `(x, y)` of a `width×height` image:
/// `{1 − (2y/H − 1)²}{1 − (2x/W − 1)²}`, 1 at the center and 0 on the border.
pub fn tangent_weight(x: f64, y: f64, width: usize, height: usize) -> f64 {
    let fy = 2.0 * y / height as f64 - 1.0;
    let fx = 2.0 * x / width as f64 - 1.0;
    ((1.0 - fy * fy) * (1.0 - fx * fx)).max(0.0)
}

/// The tangent weight sampled at integer pixel indices `(i, j)`.
pub fn tangent_weight_map(height: usize, width: usize) -> Result<WeightMap> {
    if height < 2 || width < 2 {
        return Err(Error::invalid(format!(
            "tangent weight map needs at least 2x2 pixels, got {height}x{width}"
        )));
    }
    Ok(Grid::from_fn(height, width, |i, j| {
        tangent_weight(j as f64, i as f64, width, height)
    }))
}

/// Transfers one tangent view to the panorama: each ERP pixel inside the
/// frustum receives the view's tangent weight at the projected position and,
/// when `depth` is given, a bilinear sample of it. Outside pixels get weight 0.
fn project_view(cam: &CameraSpec, depth: Option<&Grid<f64>>, grid: ErpGrid) -> ViewEstimate {
    let rot = cam.rotation();
    let w = grid.width();
    let mut estimate = Grid::filled(grid.height(), w, 0.0);
    let mut weight = Grid::filled(grid.height(), w, 0.0);
    estimate
        .as_mut_slice()
        .par_chunks_mut(w)
        .zip(weight.as_mut_slice().par_chunks_mut(w))
        .enumerate()
        .for_each(|(i, (erow, wrow))| {
            for j in 0..w {
                let d = grid.pixel_center(i, j);
                if let Some((x, y)) = cam.project(&rot, d.as_array()) {
                    let wt = tangent_weight(x, y, cam.width, cam.height);
                    let est = depth.map_or(0.0, |g| g.sample_clamped(y - 0.5, x - 0.5));
                    if wt > 0.0 && est.is_finite() {
                        wrow[j] = wt;
                        erow[j] = est;
                    }
                }
            }
        });
    ViewEstimate { estimate, weight }
}

/// ERP weight map of every camera in `rig`.
pub fn erp_view_weights(rig: &[CameraSpec], grid: ErpGrid) -> Result<Vec<WeightMap>> {
    rig.iter()
        .map(|cam| {
            cam.validate()?;
            Ok(project_view(cam, None, grid).weight)
        })
        .collect()
}

/// Re-projects a tangent-view depth estimate (radial depth, `cam`-sized) to the
/// panorama together with its weight map. Non-finite estimates get weight 0.
pub fn view_estimate_to_erp(depth: &Grid<f64>, cam: &CameraSpec, grid: ErpGrid) -> Result<ViewEstimate> {
    cam.validate()?;
    if depth.dims() != (cam.height, cam.width) {
        return Err(Error::DimensionMismatch(format!(
            "view depth is {}x{} but camera expects {}x{}",
            depth.height(),
            depth.width(),
            cam.height,
            cam.width
        )));
    }
    Ok(project_view(cam, Some(depth), grid))
}

/// Floor-plan coarse weight: `η_L` wherever the partial image or any object
/// covers the pixel, `η_H` elsewhere.
pub fn coarse_weight_floorplan(
    partial_mask: &Mask,
    semantic: &SemanticMap,
    cfg: &IntegrationConfig,
    grid: ErpGrid,
) -> Result<WeightMap> {
    cfg.validate()?;
    let expected = Grid::filled(grid.height(), grid.width(), ());
    expected.check_dims(partial_mask, "partial mask")?;
    for c in 0..semantic.channels() {
        expected.check_dims(semantic.hit_distance(c), "semantic channel")?;
    }
    Ok(Grid::from_fn(grid.height(), grid.width(), |i, j| {
        if *partial_mask.get(i, j) > 0.0 || semantic.any_set(i, j) {
            cfg.eta_low
        } else {
            cfg.eta_high
        }
    }))
}

/// Terrain coarse weight `α / (d₀² + ε)` with `d₀` normalized by its largest
/// finite value; infinite depth gets weight 0.
pub fn coarse_weight_terrain(d0: &DepthMap, cfg: &IntegrationConfig) -> Result<WeightMap> {
    cfg.validate()?;
    let max = d0
        .as_slice()
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::NoAnchor("coarse depth is infinite everywhere".into()));
    }
    if max <= 0.0 {
        return Err(Error::invalid(format!(
            "coarse depth must be positive, largest finite value is {max}"
        )));
    }
    if let Some(v) = d0.as_slice().iter().find(|v| v.is_nan() || **v < 0.0) {
        return Err(Error::invalid(format!("coarse depth contains invalid value {v}")));
    }
    Ok(d0.map(|&d| {
        if d.is_finite() {
            let n = d / max;
            cfg.alpha / (n * n + cfg.epsilon)
        } else {
            0.0
        }
    }))
}
