//! Plain-Rust demo computations behind the browser bindings.

use panoscene::integrate::{
    coarse_weight_floorplan, erp_view_weights, integrate, view_estimate_to_erp, IntegrationConfig,
};
use panoscene::layout::{floorplan_coarse_depth, floorplan_semantic_map, parse_layout, FloorPlan, Layout};
use panoscene::sphere::{erp_to_perspective, tangent_rig_sized};
use panoscene::{DepthMap, ErpGrid, Grid, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rectangular room centered on the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomParams {
    pub width: f64,
    pub length: f64,
    pub ceiling: f64,
    pub eye_height: f64,
    pub observer_x: f64,
    pub observer_z: f64,
}

impl Default for RoomParams {
    fn default() -> Self {
        Self {
            width: 5.0,
            length: 4.0,
            ceiling: 2.6,
            eye_height: 1.5,
            observer_x: 0.0,
            observer_z: 0.0,
        }
    }
}

/// RGBA raster, row-major, 4 bytes per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub rgba: Vec<u8>,
}

const STOPS: [[f64; 3]; 5] = [
    [13.0, 8.0, 135.0],
    [126.0, 3.0, 168.0],
    [204.0, 71.0, 120.0],
    [248.0, 149.0, 64.0],
    [240.0, 249.0, 33.0],
];

/// Maps `t ∈ [0, 1]` onto a perceptual purple-to-yellow ramp.
pub fn ramp(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let k = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - k as f64;
    let c = |n: usize| (STOPS[k][n] * (1.0 - f) + STOPS[k + 1][n] * f).round() as u8;
    [c(0), c(1), c(2)]
}

/// Near is bright, far is dark; non-finite pixels are black.
pub fn colorize(depth: &DepthMap, near: f64, far: f64) -> Image {
    let span = (far - near).max(f64::MIN_POSITIVE);
    let mut rgba = Vec::with_capacity(depth.len() * 4);
    for &d in depth.as_slice() {
        let [r, g, b] = if d.is_finite() {
            ramp(1.0 - (d - near) / span)
        } else {
            [0, 0, 0]
        };
        rgba.extend_from_slice(&[r, g, b, 255]);
    }
    Image {
        width: depth.width(),
        height: depth.height(),
        rgba,
    }
}

fn finite_range(maps: &[&DepthMap]) -> (f64, f64) {
    maps.iter()
        .flat_map(|m| m.as_slice().iter().copied())
        .filter(|d| d.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)))
}

fn room_document(p: &RoomParams, objects: &str) -> String {
    let (hw, hl) = (p.width / 2.0, p.length / 2.0);
    format!(
        r#"{{"kind": "floorplan",
            "corners": [[{nx}, {nz}], [{hw}, {nz}], [{hw}, {hl}], [{nx}, {hl}]],
            "floor_height": 0.0, "ceiling_height": {c}, "objects": [{objects}],
            "observer": {{"position": [{ox}, {oz}], "eye_height": {e}}}}}"#,
        nx = -hw,
        nz = -hl,
        c = p.ceiling,
        ox = p.observer_x,
        oz = p.observer_z,
        e = p.eye_height,
    )
}

fn floorplan(doc: &str) -> Result<FloorPlan> {
    match parse_layout(doc, std::path::Path::new("."))? {
        Layout::FloorPlan(fp) => Ok(fp),
        Layout::Terrain(_) => unreachable!("document kind is floorplan"),
    }
}

/// Coarse depth of an unfurnished rectangular room, colorized.
pub fn room_depth(p: &RoomParams, erp_height: usize) -> Result<(DepthMap, Image)> {
    let grid = ErpGrid::new(erp_height, 2 * erp_height)?;
    let depth = floorplan_coarse_depth(&floorplan(&room_document(p, ""))?, grid);
    let (near, far) = finite_range(&[&depth]);
    let image = colorize(&depth, near, far);
    Ok((depth, image))
}

/// Outcome of the fusion demo.
#[derive(Debug, Clone)]
pub struct FusionDemo {
    /// Ground truth, coarse layout depth and fused depth stacked top to bottom.
    pub image: Image,
    pub loss: f64,
    pub coarse_rmse: f64,
    pub fused_rmse: f64,
    /// Per view: (true scale, true offset, recovered scale, recovered offset).
    pub coefficients: Vec<[f64; 4]>,
}

/// A furnished room is the truth; the coarse depth ignores the furniture and
/// the 16 tangent views carry random affine distortions plus noise. Fusion
/// should recover the furniture and undo the distortions.
pub fn fusion_demo(noise: f64, seed: u64, erp_height: usize) -> Result<FusionDemo> {
    let params = RoomParams::default();
    let grid = ErpGrid::new(erp_height, 2 * erp_height)?;
    let objects = r#"{"class": "sofa", "bbox": [[-1.5, 1.0], [0.5, 1.9]], "bottom": 0, "top": 0.9},
                     {"class": "shelf", "bbox": [[2.0, -1.0], [2.4, 0.8]], "bottom": 0, "top": 2.2}"#;
    let furnished = floorplan(&room_document(&params, objects))?;
    let coarse = floorplan_coarse_depth(&furnished, grid);
    let semantic = floorplan_semantic_map(&furnished, grid);
    let truth = Grid::from_fn(grid.height(), grid.width(), |i, j| {
        (0..semantic.channels())
            .map(|c| *semantic.hit_distance(c).get(i, j))
            .fold(*coarse.get(i, j), f64::min)
    });

    let cfg = IntegrationConfig::default();
    let no_partial = Grid::filled(grid.height(), grid.width(), 0.0);
    let phi0 = coarse_weight_floorplan(&no_partial, &semantic, &cfg, grid)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = (erp_height / 2).max(8);
    let mut views = Vec::new();
    let mut truth_coeffs = Vec::new();
    for cam in tangent_rig_sized(side, side) {
        let (m, o) = (rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0));
        let tangent = erp_to_perspective(&truth, &cam)?.map(|&d| (d - o) / m + noise * rng.gen_range(-1.0..1.0));
        views.push(view_estimate_to_erp(&tangent, &cam, grid)?);
        truth_coeffs.push((m, o));
    }

    let fused = integrate(&coarse, &phi0, &views, &cfg)?;
    let coarse_rmse = rmse(&coarse, &truth);
    let fused_rmse = rmse(&fused.depth, &truth);

    let (near, far) = finite_range(&[&truth, &coarse, &fused.depth]);
    let mut rgba = Vec::new();
    for map in [&truth, &coarse, &fused.depth] {
        rgba.extend(colorize(map, near, far).rgba);
    }
    Ok(FusionDemo {
        image: Image {
            width: grid.width(),
            height: 3 * grid.height(),
            rgba,
        },
        loss: fused.loss,
        coarse_rmse,
        fused_rmse,
        coefficients: truth_coeffs
            .iter()
            .zip(&fused.coeffs)
            .map(|(&(m, o), c)| [m, o, c.scale, c.offset])
            .collect(),
    })
}

/// Plain RMSE, no alignment: the fused depth should already be metric.
fn rmse(est: &DepthMap, gt: &DepthMap) -> f64 {
    let (sum, n) = est
        .as_slice()
        .iter()
        .zip(gt.as_slice())
        .filter(|(e, g)| e.is_finite() && g.is_finite())
        .fold((0.0, 0usize), |(s, n), (e, g)| (s + (e - g).powi(2), n + 1));
    (sum / n.max(1) as f64).sqrt()
}

/// Summed tangent-rig weight per panorama pixel, colorized relative to its
/// maximum; uncovered pixels are black.
pub fn rig_coverage(erp_height: usize) -> Result<(Grid<f64>, Image)> {
    let grid = ErpGrid::new(erp_height, 2 * erp_height)?;
    let side = (erp_height / 2).max(8);
    let weights = erp_view_weights(&tangent_rig_sized(side, side), grid)?;
    let total = Grid::from_fn(grid.height(), grid.width(), |i, j| {
        weights.iter().map(|w| *w.get(i, j)).sum()
    });
    let max = total
        .as_slice()
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut rgba = Vec::with_capacity(total.len() * 4);
    for &t in total.as_slice() {
        let [r, g, b] = if t > 0.0 { ramp(t / max) } else { [0, 0, 0] };
        rgba.extend_from_slice(&[r, g, b, 255]);
    }
    Ok((
        total,
        Image {
            width: grid.width(),
            height: grid.height(),
            rgba,
        },
    ))
}
