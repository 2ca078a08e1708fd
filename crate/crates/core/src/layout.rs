//! Top-view layouts (room floor plans and terrain heightfields) and their
//! rasterization into coarse panoramic depth and semantic maps.
//!
//! Floor plans live in the world frame directly: corners are `[x, z]` in
//! meters and heights are absolute `y`. Terrain cells are addressed as
//! `[u, v]` = (column, row); world `x = u·cell_size`, `z = v·cell_size`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DepthMap, Grid};
use crate::sphere::{CameraSpec, Direction, ErpGrid};

/// Observer eye point and the camera of the partial image.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverSpec {
    /// Floor plan: `[x, z]` meters. Terrain: continuous grid `[u, v]`.
    pub position: [f64; 2],
    /// Floor plan: absolute eye height. Terrain: height above the local surface.
    pub eye_height: f64,
    pub camera: CameraSpec,
    /// Partial perspective image, resolved against the layout's directory.
    pub partial_image: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoomObject {
    pub class_name: String,
    /// `[[xmin, zmin], [xmax, zmax]]`.
    pub bbox: [[f64; 2]; 2],
    pub bottom: f64,
    pub top: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloorPlan {
    corners: Vec<[f64; 2]>,
    pub floor_height: f64,
    pub ceiling_height: f64,
    pub objects: Vec<RoomObject>,
    pub observer: ObserverSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerrainMap {
    pub heights: Grid<f64>,
    pub cell_size: f64,
    pub max_distance: f64,
    pub observer: ObserverSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    FloorPlan(FloorPlan),
    Terrain(TerrainMap),
}

impl Layout {
    pub fn observer(&self) -> &ObserverSpec {
        match self {
            Layout::FloorPlan(fp) => &fp.observer,
            Layout::Terrain(tm) => &tm.observer,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Layout::FloorPlan(_) => "floorplan",
            Layout::Terrain(_) => "terrain",
        }
    }
}

// ---------------------------------------------------------------------------
// Document schema

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FloorPlanDoc {
    #[allow(dead_code)]
    kind: String,
    corners: Vec<[f64; 2]>,
    floor_height: f64,
    ceiling_height: f64,
    #[serde(default)]
    objects: Vec<ObjectDoc>,
    observer: ObserverDoc,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    class: String,
    bbox: [[f64; 2]; 2],
    bottom: f64,
    top: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TerrainDoc {
    #[allow(dead_code)]
    kind: String,
    heights: HeightsDoc,
    cell_size: f64,
    max_distance: f64,
    observer: ObserverDoc,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum HeightsDoc {
    Inline(Vec<Vec<f64>>),
    File { pfm: PathBuf },
}

fn default_hfov() -> f64 {
    90.0
}

fn default_image_size() -> usize {
    512
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObserverDoc {
    #[serde(default)]
    position: Option<[f64; 2]>,
    #[serde(default)]
    grid_pos: Option<[f64; 2]>,
    eye_height: f64,
    #[serde(default)]
    yaw_deg: f64,
    #[serde(default)]
    pitch_deg: f64,
    #[serde(default)]
    roll_deg: f64,
    #[serde(default = "default_hfov")]
    hfov_deg: f64,
    #[serde(default = "default_image_size")]
    image_width: usize,
    #[serde(default = "default_image_size")]
    image_height: usize,
    #[serde(default)]
    partial_image: Option<PathBuf>,
}

/// Reads and validates a layout file; relative paths inside it resolve
/// against the file's directory.
pub fn load_layout(path: &Path) -> Result<Layout> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_layout(&text, base)
}

/// Parses a layout JSON document and enforces every invariant.
pub fn parse_layout(document: &str, base_dir: &Path) -> Result<Layout> {
    let value: serde_json::Value = serde_json::from_str(document).map_err(|e| Error::schema("$", e.to_string()))?;
    let kind = value
        .get("kind")
        .ok_or_else(|| Error::schema("kind", "missing field"))?
        .as_str()
        .ok_or_else(|| Error::schema("kind", "must be a string"))?;
    match kind {
        "floorplan" => floorplan_from_doc(from_value(value)?, base_dir).map(Layout::FloorPlan),
        "terrain" => terrain_from_doc(from_value(value)?, base_dir).map(Layout::Terrain),
        other => Err(Error::schema(
            "kind",
            format!("unknown layout kind {other:?}; expected \"floorplan\" or \"terrain\""),
        )),
    }
}

fn from_value<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::schema(
            if path == "." { "$".to_string() } else { path },
            e.into_inner().to_string(),
        )
    })
}

fn finite(path: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::schema(path, "must be finite"))
    }
}

fn observer_from_doc(doc: ObserverDoc, terrain: bool, base_dir: &Path) -> Result<ObserverSpec> {
    let (field, pos) = if terrain {
        if doc.position.is_some() {
            return Err(Error::schema("observer.position", "terrain observers use grid_pos"));
        }
        ("observer.grid_pos", doc.grid_pos)
    } else {
        if doc.grid_pos.is_some() {
            return Err(Error::schema("observer.grid_pos", "floor-plan observers use position"));
        }
        ("observer.position", doc.position)
    };
    let position = pos.ok_or_else(|| Error::schema(field, "missing field"))?;
    finite(field, position[0])?;
    finite(field, position[1])?;
    finite("observer.eye_height", doc.eye_height)?;
    for (name, v) in [
        ("observer.yaw_deg", doc.yaw_deg),
        ("observer.pitch_deg", doc.pitch_deg),
        ("observer.roll_deg", doc.roll_deg),
    ] {
        finite(name, v)?;
    }
    if !(doc.hfov_deg > 0.0 && doc.hfov_deg < 180.0) {
        return Err(Error::schema("observer.hfov_deg", "must lie in (0, 180)"));
    }
    if doc.image_width == 0 {
        return Err(Error::schema("observer.image_width", "must be at least 1"));
    }
    if doc.image_height == 0 {
        return Err(Error::schema("observer.image_height", "must be at least 1"));
    }
    let camera = CameraSpec {
        yaw: doc.yaw_deg.to_radians(),
        pitch: doc.pitch_deg.to_radians(),
        roll: doc.roll_deg.to_radians(),
        hfov: doc.hfov_deg.to_radians(),
        width: doc.image_width,
        height: doc.image_height,
    };
    Ok(ObserverSpec {
        position,
        eye_height: doc.eye_height,
        camera,
        partial_image: doc.partial_image.map(|p| base_dir.join(p)),
    })
}

fn floorplan_from_doc(doc: FloorPlanDoc, base_dir: &Path) -> Result<FloorPlan> {
    let observer = observer_from_doc(doc.observer, false, base_dir)?;
    let objects = doc
        .objects
        .into_iter()
        .map(|o| RoomObject {
            class_name: o.class,
            bbox: o.bbox,
            bottom: o.bottom,
            top: o.top,
        })
        .collect();
    FloorPlan::new(doc.corners, doc.floor_height, doc.ceiling_height, objects, observer)
}

fn terrain_from_doc(doc: TerrainDoc, base_dir: &Path) -> Result<TerrainMap> {
    let heights = match doc.heights {
        HeightsDoc::Inline(rows) => {
            let h = rows.len();
            let w = rows.first().map_or(0, Vec::len);
            if let Some(k) = rows.iter().position(|r| r.len() != w) {
                return Err(Error::schema(format!("heights[{k}]"), format!("expected {w} columns")));
            }
            Grid::from_vec(h, w, rows.into_iter().flatten().collect())?
        }
        HeightsDoc::File { pfm } => {
            let path = base_dir.join(pfm);
            crate::io::read_pfm(&path)?.map(|&v| v as f64)
        }
    };
    let observer = observer_from_doc(doc.observer, true, base_dir)?;
    TerrainMap::new(heights, doc.cell_size, doc.max_distance, observer)
}

// ---------------------------------------------------------------------------
// Floor plans

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n).map(|k| cross(poly[k], poly[(k + 1) % n])).sum::<f64>() / 2.0
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(sub(q2, q1), sub(p1, q1));
    let d2 = cross(sub(q2, q1), sub(p2, q1));
    let d3 = cross(sub(p2, p1), sub(q1, p1));
    let d4 = cross(sub(p2, p1), sub(q2, p1));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: [f64; 2], b: [f64; 2], p: [f64; 2], d: f64| {
        d == 0.0 && p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn is_simple(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    for a in 0..n {
        for b in a + 1..n {
            // adjacent edges share a vertex
            if b == a + 1 || (a == 0 && b == n - 1) {
                continue;
            }
            if segments_intersect(poly[a], poly[(a + 1) % n], poly[b], poly[(b + 1) % n]) {
                return false;
            }
        }
    }
    true
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = sub(b, a);
    let t = ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1]);
    let t = t.clamp(0.0, 1.0);
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

impl FloorPlan {
    /// Validates and builds a floor plan. Clockwise corner lists are reversed
    /// so the stored polygon is always counter-clockwise.
    pub fn new(
        mut corners: Vec<[f64; 2]>,
        floor_height: f64,
        ceiling_height: f64,
        objects: Vec<RoomObject>,
        observer: ObserverSpec,
    ) -> Result<Self> {
        if corners.len() < 3 {
            return Err(Error::schema("corners", "a room needs at least 3 corners"));
        }
        for (k, c) in corners.iter().enumerate() {
            if !(c[0].is_finite() && c[1].is_finite()) {
                return Err(Error::schema(format!("corners[{k}]"), "must be finite"));
            }
        }
        let area = signed_area(&corners);
        if area.is_nan() || area.abs() <= 0.0 {
            return Err(Error::schema("corners", "polygon has zero area"));
        }
        if !is_simple(&corners) {
            return Err(Error::schema("corners", "polygon edges self-intersect"));
        }
        if area < 0.0 {
            corners.reverse();
        }
        finite("floor_height", floor_height)?;
        finite("ceiling_height", ceiling_height)?;
        if ceiling_height <= floor_height {
            return Err(Error::schema(
                "ceiling_height",
                format!("must exceed floor_height ({floor_height})"),
            ));
        }
        let pos = observer.position;
        let n = corners.len();
        let on_wall = (0..n).any(|k| point_segment_distance(pos, corners[k], corners[(k + 1) % n]) == 0.0);
        if on_wall || !point_in_polygon(pos, &corners) {
            return Err(Error::schema(
                "observer.position",
                "must lie strictly inside the room polygon",
            ));
        }
        if !(observer.eye_height > floor_height && observer.eye_height < ceiling_height) {
            return Err(Error::schema(
                "observer.eye_height",
                format!("must lie strictly between floor ({floor_height}) and ceiling ({ceiling_height})"),
            ));
        }
        for (k, o) in objects.iter().enumerate() {
            let path = |f: &str| format!("objects[{k}].{f}");
            if o.class_name.trim().is_empty() {
                return Err(Error::schema(path("class"), "class name must not be empty"));
            }
            if o.class_name == "none" {
                return Err(Error::schema(path("class"), "\"none\" is reserved for empty pixels"));
            }
            let [[x0, z0], [x1, z1]] = o.bbox;
            if ![x0, z0, x1, z1].iter().all(|v| v.is_finite()) {
                return Err(Error::schema(path("bbox"), "must be finite"));
            }
            if !(x1 > x0 && z1 > z0) {
                return Err(Error::schema(
                    path("bbox"),
                    "max corner must exceed min corner on both axes",
                ));
            }
            finite(&path("bottom"), o.bottom)?;
            finite(&path("top"), o.top)?;
            if o.top <= o.bottom {
                return Err(Error::schema(path("top"), "must exceed bottom"));
            }
        }
        observer.camera.validate()?;
        Ok(Self {
            corners,
            floor_height,
            ceiling_height,
            objects,
            observer,
        })
    }

    pub fn corners(&self) -> &[[f64; 2]] {
        &self.corners
    }

    pub fn eye(&self) -> [f64; 3] {
        [
            self.observer.position[0],
            self.observer.eye_height,
            self.observer.position[1],
        ]
    }

    /// Distance from the eye to the unfurnished room (walls, floor, ceiling) along `d`.
    pub fn ray_distance(&self, d: Direction) -> f64 {
        let [ex, ey, ez] = self.eye();
        let [dx, dy, dz] = d.as_array();
        let mut best = if dy < 0.0 {
            (self.floor_height - ey) / dy
        } else if dy > 0.0 {
            (self.ceiling_height - ey) / dy
        } else {
            f64::INFINITY
        };
        let origin = [ex, ez];
        let r = [dx, dz];
        let n = self.corners.len();
        for k in 0..n {
            let a = self.corners[k];
            let e = sub(self.corners[(k + 1) % n], a);
            let denom = cross(r, e);
            if denom == 0.0 {
                continue;
            }
            let ao = sub(a, origin);
            let t = cross(ao, e) / denom;
            let s = cross(ao, r) / denom;
            const SLACK: f64 = 1e-12;
            if t > 0.0 && (-SLACK..=1.0 + SLACK).contains(&s) && t < best {
                best = t;
            }
        }
        best
    }

    /// Legend of distinct object classes in first-appearance order.
    pub fn class_legend(&self) -> Vec<String> {
        let mut legend: Vec<String> = Vec::new();
        for o in &self.objects {
            if !legend.contains(&o.class_name) {
                legend.push(o.class_name.clone());
            }
        }
        legend
    }
}

/// Distance along `d` from `eye` to the axis-aligned box, if the ray meets it.
/// An eye inside the box hits at distance 0.
pub fn ray_box_distance(eye: [f64; 3], d: [f64; 3], lo: [f64; 3], hi: [f64; 3]) -> Option<f64> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for a in 0..3 {
        if d[a] == 0.0 {
            if eye[a] < lo[a] || eye[a] > hi[a] {
                return None;
            }
            continue;
        }
        let t0 = (lo[a] - eye[a]) / d[a];
        let t1 = (hi[a] - eye[a]) / d[a];
        let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        t_near = t_near.max(t0);
        t_far = t_far.min(t1);
    }
    (t_near <= t_far && t_far >= 0.0).then(|| t_near.max(0.0))
}

/// Coarse depth of the unfurnished room seen from the observer.
pub fn floorplan_coarse_depth(fp: &FloorPlan, grid: ErpGrid) -> DepthMap {
    raster(grid, |d| fp.ray_distance(d))
}

fn raster(grid: ErpGrid, f: impl Fn(Direction) -> f64 + Sync) -> DepthMap {
    let w = grid.width();
    let mut out = Grid::filled(grid.height(), w, 0.0);
    out.as_mut_slice().par_chunks_mut(w).enumerate().for_each(|(i, row)| {
        for (j, px) in row.iter_mut().enumerate() {
            *px = f(grid.pixel_center(i, j));
        }
    });
    out
}

/// Per-class binary coverage of object volumes on the panorama.
///
/// Each channel also remembers the nearest hit distance so the map can be
/// flattened to a single index image without losing the occlusion order.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticMap {
    legend: Vec<String>,
    hits: Vec<Grid<f64>>,
}

impl SemanticMap {
    pub fn new(legend: Vec<String>, hits: Vec<Grid<f64>>) -> Result<Self> {
        if legend.len() != hits.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} legend entries for {} channels",
                legend.len(),
                hits.len()
            )));
        }
        if let Some(first) = hits.first() {
            for h in &hits[1..] {
                first.check_dims(h, "semantic channel")?;
            }
        }
        Ok(Self { legend, hits })
    }

    pub fn legend(&self) -> &[String] {
        &self.legend
    }

    pub fn channels(&self) -> usize {
        self.legend.len()
    }

    pub fn is_set(&self, c: usize, i: usize, j: usize) -> bool {
        self.hits[c].get(i, j).is_finite()
    }

    pub fn any_set(&self, i: usize, j: usize) -> bool {
        (0..self.channels()).any(|c| self.is_set(c, i, j))
    }

    /// Distance to the nearest class-`c` object along the pixel ray (+∞ when none).
    pub fn hit_distance(&self, c: usize) -> &Grid<f64> {
        &self.hits[c]
    }

    /// Binary channel as 0/1 bytes.
    pub fn channel(&self, c: usize) -> Grid<u8> {
        self.hits[c].map(|d| d.is_finite() as u8)
    }

    /// Class index per pixel (0 = none, k = legend entry k − 1). The nearest
    /// object along the ray wins; equal distances go to the lower class index.
    pub fn index_map(&self, grid: ErpGrid) -> Result<Grid<u8>> {
        if self.channels() > 255 {
            return Err(Error::invalid(format!(
                "{} classes do not fit an 8-bit index image",
                self.channels()
            )));
        }
        Ok(Grid::from_fn(grid.height(), grid.width(), |i, j| {
            let mut best = (f64::INFINITY, 0u8);
            for (c, h) in self.hits.iter().enumerate() {
                let d = *h.get(i, j);
                if d < best.0 {
                    best = (d, c as u8 + 1);
                }
            }
            best.1
        }))
    }
}

/// Projects every object's solid box onto the panorama from the observer.
pub fn floorplan_semantic_map(fp: &FloorPlan, grid: ErpGrid) -> SemanticMap {
    let legend = fp.class_legend();
    let index: HashMap<&str, usize> = legend.iter().enumerate().map(|(k, c)| (c.as_str(), k)).collect();
    let eye = fp.eye();
    let mut boxes: Vec<Vec<([f64; 3], [f64; 3])>> = vec![Vec::new(); legend.len()];
    for o in &fp.objects {
        let [[x0, z0], [x1, z1]] = o.bbox;
        boxes[index[o.class_name.as_str()]].push(([x0, o.bottom, z0], [x1, o.top, z1]));
    }
    let hits = boxes
        .iter()
        .map(|class_boxes| {
            raster(grid, |d| {
                let d = d.as_array();
                class_boxes
                    .iter()
                    .filter_map(|(lo, hi)| ray_box_distance(eye, d, *lo, *hi))
                    .fold(f64::INFINITY, f64::min)
            })
        })
        .collect();
    SemanticMap { legend, hits }
}

// ---------------------------------------------------------------------------
// Terrain

impl TerrainMap {
    pub fn new(heights: Grid<f64>, cell_size: f64, max_distance: f64, observer: ObserverSpec) -> Result<Self> {
        if heights.height() < 2 || heights.width() < 2 {
            return Err(Error::schema(
                "heights",
                format!(
                    "grid must be at least 2x2, got {}x{}",
                    heights.height(),
                    heights.width()
                ),
            ));
        }
        if let Some(k) = heights.as_slice().iter().position(|h| !h.is_finite()) {
            return Err(Error::schema(
                format!("heights[{}][{}]", k / heights.width(), k % heights.width()),
                "must be finite",
            ));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::schema("cell_size", "must be positive"));
        }
        if !(max_distance > 0.0 && max_distance.is_finite()) {
            return Err(Error::schema("max_distance", "must be positive"));
        }
        if observer.eye_height.is_nan() || observer.eye_height <= 0.0 {
            return Err(Error::schema(
                "observer.eye_height",
                "must be positive above the terrain",
            ));
        }
        let [u, v] = observer.position;
        let (umax, vmax) = ((heights.width() - 1) as f64, (heights.height() - 1) as f64);
        if !((0.0..=umax).contains(&u) && (0.0..=vmax).contains(&v)) {
            return Err(Error::schema(
                "observer.grid_pos",
                format!("({u}, {v}) outside grid [0, {umax}] x [0, {vmax}]"),
            ));
        }
        observer.camera.validate()?;
        let tm = Self {
            heights,
            cell_size,
            max_distance,
            observer,
        };
        let eye = tm.eye();
        if eye[1] <= tm.height_at(eye[0], eye[2]).unwrap_or(f64::NEG_INFINITY) {
            return Err(Error::schema("observer.eye_height", "eye point lies below the terrain"));
        }
        Ok(tm)
    }

    /// World-space eye point.
    pub fn eye(&self) -> [f64; 3] {
        let [u, v] = self.observer.position;
        let ground = self.heights.sample_clamped(v, u);
        [
            u * self.cell_size,
            ground + self.observer.eye_height,
            v * self.cell_size,
        ]
    }

    /// Bilinear terrain height under world `(x, z)`; `None` off the grid.
    pub fn height_at(&self, x: f64, z: f64) -> Option<f64> {
        let u = x / self.cell_size;
        let v = z / self.cell_size;
        let (umax, vmax) = ((self.heights.width() - 1) as f64, (self.heights.height() - 1) as f64);
        ((0.0..=umax).contains(&u) && (0.0..=vmax).contains(&v)).then(|| self.heights.sample_clamped(v, u))
    }

    /// First intersection with the heightfield along `d`, or +∞.
    ///
    /// Marches in steps of a quarter cell and refines the bracketing step with
    /// 40 bisections. Rays that leave the grid, climb above the highest cell, or
    /// pass `max_distance` report no hit.
    pub fn ray_distance(&self, d: Direction) -> f64 {
        let eye = self.eye();
        let d = d.as_array();
        let max_height = self
            .heights
            .as_slice()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        self.march(eye, d, max_height)
    }

    fn march(&self, eye: [f64; 3], d: [f64; 3], max_height: f64) -> f64 {
        let gap = |t: f64| -> Option<f64> {
            let y = eye[1] + t * d[1];
            self.height_at(eye[0] + t * d[0], eye[2] + t * d[2]).map(|h| y - h)
        };
        let step = self.cell_size / 4.0;
        let mut prev = 0.0;
        let mut k = 1usize;
        loop {
            let t = (k as f64 * step).min(self.max_distance);
            let y = eye[1] + t * d[1];
            if d[1] >= 0.0 && y > max_height {
                return f64::INFINITY;
            }
            match gap(t) {
                None => return f64::INFINITY,
                Some(g) if g <= 0.0 => {
                    let (mut lo, mut hi) = (prev, t);
                    for _ in 0..40 {
                        let mid = 0.5 * (lo + hi);
                        match gap(mid) {
                            Some(g) if g > 0.0 => lo = mid,
                            _ => hi = mid,
                        }
                    }
                    return 0.5 * (lo + hi);
                }
                Some(_) => {}
            }
            if t >= self.max_distance {
                return f64::INFINITY;
            }
            prev = t;
            k += 1;
        }
    }
}

/// Coarse depth of the bare terrain; sky pixels are +∞.
pub fn terrain_coarse_depth(tm: &TerrainMap, grid: ErpGrid) -> DepthMap {
    let eye = tm.eye();
    let max_height = tm.heights.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    raster(grid, |d| tm.march(eye, d.as_array(), max_height))
}

// ---------------------------------------------------------------------------
// Gaussian-mixture terrain synthesis

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmComponent {
    /// Peak height of the component (meters).
    pub weight: f64,
    /// `[u, v]` grid coordinates (0-based column, row).
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmSpec {
    pub height: usize,
    pub width: usize,
    pub components: Vec<GmmComponent>,
}

impl GmmSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::schema("$", e.to_string()))?;
        let spec: GmmSpec = from_value(value)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::schema("height", "terrain dimensions must be positive"));
        }
        if self.components.is_empty() {
            return Err(Error::schema("components", "at least one component is required"));
        }
        for (k, c) in self.components.iter().enumerate() {
            let path = |f: &str| format!("components[{k}].{f}");
            finite(&path("weight"), c.weight)?;
            finite(&path("mean"), c.mean[0])?;
            finite(&path("mean"), c.mean[1])?;
            let [[a, b], [b2, d]] = c.cov;
            if ![a, b, b2, d].iter().all(|v| v.is_finite()) {
                return Err(Error::schema(path("cov"), "must be finite"));
            }
            if b != b2 {
                return Err(Error::schema(path("cov"), "covariance must be symmetric"));
            }
            if !(a > 0.0 && d > 0.0 && a * d - b * b > 0.0) {
                return Err(Error::schema(path("cov"), "covariance must be positive definite"));
            }
        }
        Ok(())
    }
}

/// Evaluates `Σ_k w_k · exp(−½ (p − μ_k)ᵀ Σ_k⁻¹ (p − μ_k))` at every integer
/// grid point `p = (u, v)`. Rows are `v`, columns `u`.
pub fn synth_terrain_gmm(spec: &GmmSpec) -> Result<Grid<f64>> {
    spec.validate()?;
    let inv: Vec<[f64; 3]> = spec
        .components
        .iter()
        .map(|c| {
            let [[a, b], [_, d]] = c.cov;
            let det = a * d - b * b;
            [d / det, -b / det, a / det]
        })
        .collect();
    Ok(Grid::from_fn(spec.height, spec.width, |v, u| {
        spec.components
            .iter()
            .zip(&inv)
            .map(|(c, [ia, ib, id])| {
                let du = u as f64 - c.mean[0];
                let dv = v as f64 - c.mean[1];
                let q = ia * du * du + 2.0 * ib * du * dv + id * dv * dv;
                c.weight * (-0.5 * q).exp()
            })
            .sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn cam() -> CameraSpec {
        CameraSpec::new(0.0, 0.0, FRAC_PI_2, 64, 64).unwrap()
    }

    fn observer(x: f64, z: f64, eye: f64) -> ObserverSpec {
        ObserverSpec {
            position: [x, z],
            eye_height: eye,
            camera: cam(),
            partial_image: None,
        }
    }

    fn square_room(objects: Vec<RoomObject>) -> FloorPlan {
        FloorPlan::new(
            vec![[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0], [-2.0, 2.0]],
            0.0,
            2.5,
            objects,
            observer(0.0, 0.0, 1.5),
        )
        .unwrap()
    }

    fn obj(class: &str, bbox: [[f64; 2]; 2], bottom: f64, top: f64) -> RoomObject {
        RoomObject {
            class_name: class.into(),
            bbox,
            bottom,
            top,
        }
    }

    #[test]
    fn box_room_hand_distances() {
        let fp = square_room(vec![]);
        assert_abs_diff_eq!(fp.ray_distance(Direction::from_angles(0.0, 0.0)), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            fp.ray_distance(Direction::from_angles(-FRAC_PI_2, 0.0)),
            1.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            fp.ray_distance(Direction::from_angles(FRAC_PI_2, 0.0)),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            fp.ray_distance(Direction::from_angles(0.0, FRAC_PI_4)),
            2.0 * 2f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn coarse_depth_is_finite_and_bounded_below() {
        let fp = square_room(vec![]);
        let depth = floorplan_coarse_depth(&fp, ErpGrid::new(32, 64).unwrap());
        assert!(depth.as_slice().iter().all(|d| d.is_finite() && *d >= 1.0 - 1e-12));
    }

    #[test]
    fn non_convex_room_nearest_wall_wins() {
        // L-shaped room; looking +x from (-1, 1) hits the inner corner wall at x = 0.
        let corners = vec![
            [-2.0, -2.0],
            [2.0, -2.0],
            [2.0, 0.0],
            [0.0, 0.0],
            [0.0, 2.0],
            [-2.0, 2.0],
        ];
        let fp = FloorPlan::new(corners, 0.0, 3.0, vec![], observer(-1.0, 1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(
            fp.ray_distance(Direction::from_angles(0.0, FRAC_PI_2)),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn clockwise_corners_are_normalized() {
        let fp = FloorPlan::new(
            vec![[-2.0, -2.0], [-2.0, 2.0], [2.0, 2.0], [2.0, -2.0]],
            0.0,
            2.5,
            vec![],
            observer(0.0, 0.0, 1.0),
        )
        .unwrap();
        assert!(signed_area(fp.corners()) > 0.0);
    }

    #[test]
    fn invalid_rooms_rejected() {
        let sq = || vec![[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0], [-2.0, 2.0]];
        let bow = vec![[-2.0, -2.0], [2.0, 2.0], [2.0, -2.0], [-2.0, 2.0]];
        assert!(FloorPlan::new(bow, 0.0, 2.5, vec![], observer(0.0, 0.5, 1.0)).is_err());
        assert!(FloorPlan::new(sq(), 0.0, 2.5, vec![], observer(3.0, 0.0, 1.0)).is_err());
        assert!(FloorPlan::new(sq(), 0.0, 2.5, vec![], observer(2.0, 0.0, 1.0)).is_err());
        assert!(FloorPlan::new(sq(), 2.5, 2.5, vec![], observer(0.0, 0.0, 1.0)).is_err());
        assert!(FloorPlan::new(sq(), 0.0, 2.5, vec![], observer(0.0, 0.0, 3.0)).is_err());
        let empty = obj(" ", [[0.0, 0.0], [1.0, 1.0]], 0.0, 1.0);
        assert!(FloorPlan::new(sq(), 0.0, 2.5, vec![empty], observer(0.0, 0.0, 1.0)).is_err());
        let flat = obj("bed", [[0.0, 0.0], [0.0, 1.0]], 0.0, 1.0);
        assert!(FloorPlan::new(sq(), 0.0, 2.5, vec![flat], observer(0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn semantic_map_marks_box_on_axis() {
        let grid = ErpGrid::new(33, 65).unwrap();
        let fp = square_room(vec![obj("cabinet", [[-0.3, 1.0], [0.3, 1.5]], 1.0, 2.0)]);
        let sem = floorplan_semantic_map(&fp, grid);
        assert_eq!(sem.legend(), ["cabinet"]);
        // Row 16, column 32 is θ = 0, φ = 0.
        assert!(sem.is_set(0, 16, 32));
        assert_abs_diff_eq!(*sem.hit_distance(0).get(16, 32), 1.0, epsilon = 1e-12);
        assert!(!sem.is_set(0, 16, 0));
    }

    #[test]
    fn empty_room_has_empty_semantics() {
        let grid = ErpGrid::new(8, 16).unwrap();
        let sem = floorplan_semantic_map(&square_room(vec![]), grid);
        assert_eq!(sem.channels(), 0);
        assert!(sem.index_map(grid).unwrap().as_slice().iter().all(|&v| v == 0));
    }

    #[test]
    fn overlapping_boxes_set_both_channels() {
        let grid = ErpGrid::new(33, 65).unwrap();
        let a = obj("table", [[-0.5, 1.0], [0.5, 1.4]], 0.5, 1.8);
        let b = obj("lamp", [[-0.2, 1.2], [0.2, 1.8]], 1.0, 2.0);
        let sem = floorplan_semantic_map(&square_room(vec![a.clone(), b.clone()]), grid);
        assert!(sem.is_set(0, 16, 32) && sem.is_set(1, 16, 32));
        // the table is nearer along the forward ray
        assert_eq!(*sem.index_map(grid).unwrap().get(16, 32), 1);

        let swapped = floorplan_semantic_map(&square_room(vec![b, a]), grid);
        assert_eq!(swapped.legend(), ["lamp", "table"]);
        assert_eq!(sem.channel(0), swapped.channel(1));
        assert_eq!(sem.channel(1), swapped.channel(0));
    }

    #[test]
    fn ray_box_inside_and_miss() {
        assert_eq!(
            ray_box_distance([0.0; 3], [1.0, 0.0, 0.0], [-1.0; 3], [1.0; 3]),
            Some(0.0)
        );
        assert_eq!(
            ray_box_distance([0.0; 3], [-1.0, 0.0, 0.0], [1.0, -1.0, -1.0], [2.0, 1.0, 1.0]),
            None
        );
        assert_eq!(
            ray_box_distance([0.0; 3], [1.0, 0.0, 0.0], [1.0, -1.0, -1.0], [2.0, 1.0, 1.0]),
            Some(1.0)
        );
    }

    fn flat_terrain() -> TerrainMap {
        TerrainMap::new(Grid::filled(65, 65, 0.0), 1.0, 500.0, observer(32.0, 32.0, 1.7)).unwrap()
    }

    #[test]
    fn flat_terrain_hand_values() {
        let tm = flat_terrain();
        assert_abs_diff_eq!(
            tm.ray_distance(Direction::from_angles(-FRAC_PI_2, 0.0)),
            1.7,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            tm.ray_distance(Direction::from_angles(-PI / 6.0, 0.3)),
            3.4,
            epsilon = 1e-9
        );
        assert_eq!(tm.ray_distance(Direction::from_angles(0.1, 0.0)), f64::INFINITY);
        assert_eq!(tm.ray_distance(Direction::from_angles(0.0, 1.0)), f64::INFINITY);
    }

    #[test]
    fn terrain_max_distance_cuts_rays() {
        let tm = TerrainMap::new(Grid::filled(65, 65, 0.0), 1.0, 2.0, observer(32.0, 32.0, 1.7)).unwrap();
        assert_eq!(tm.ray_distance(Direction::from_angles(-PI / 6.0, 0.0)), f64::INFINITY);
    }

    #[test]
    fn terrain_hill_blocks_view() {
        // A wall of height 10 at column 40, observer at column 32 looking +x.
        let heights = Grid::from_fn(65, 65, |_, u| if u >= 40 { 10.0 } else { 0.0 });
        let tm = TerrainMap::new(heights, 1.0, 500.0, observer(32.0, 32.0, 1.7)).unwrap();
        let d = tm.ray_distance(Direction::from_angles(0.0, FRAC_PI_2));
        // Bilinear ramp between u=39 (0) and u=40 (10) reaches 1.7 at u = 39.17.
        assert_abs_diff_eq!(d, 7.17, epsilon = 1e-6);
    }

    #[test]
    fn terrain_invariants_rejected() {
        assert!(TerrainMap::new(Grid::filled(1, 5, 0.0), 1.0, 10.0, observer(0.0, 0.0, 1.0)).is_err());
        assert!(TerrainMap::new(Grid::filled(4, 4, 0.0), 0.0, 10.0, observer(1.0, 1.0, 1.0)).is_err());
        assert!(TerrainMap::new(Grid::filled(4, 4, 0.0), 1.0, 10.0, observer(1.0, 1.0, 0.0)).is_err());
        assert!(TerrainMap::new(Grid::filled(4, 4, 0.0), 1.0, 10.0, observer(5.0, 1.0, 1.0)).is_err());
        let mut h = Grid::filled(4, 4, 0.0);
        h.set(1, 1, f64::NAN);
        assert!(TerrainMap::new(h, 1.0, 10.0, observer(2.0, 2.0, 1.0)).is_err());
    }

    fn comp(weight: f64, mean: [f64; 2], cov: [[f64; 2]; 2]) -> GmmComponent {
        GmmComponent { weight, mean, cov }
    }

    #[test]
    fn gmm_peak_and_unit_distance() {
        let spec = GmmSpec {
            height: 17,
            width: 17,
            components: vec![comp(2.0, [8.0, 8.0], [[3.0, 0.5], [0.5, 2.0]])],
        };
        let t = synth_terrain_gmm(&spec).unwrap();
        assert_eq!(*t.get(8, 8), 2.0);

        let spec = GmmSpec {
            height: 17,
            width: 17,
            components: vec![comp(1.0, [8.0, 8.0], [[1.0, 0.0], [0.0, 1.0]])],
        };
        let t = synth_terrain_gmm(&spec).unwrap();
        assert_abs_diff_eq!(*t.get(8, 9), (-0.5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(*t.get(9, 8), 0.6065306597126334, epsilon = 1e-15);
    }

    #[test]
    fn gmm_rejects_bad_specs() {
        let empty = GmmSpec {
            height: 4,
            width: 4,
            components: vec![],
        };
        assert!(synth_terrain_gmm(&empty).is_err());
        let indefinite = GmmSpec {
            height: 4,
            width: 4,
            components: vec![comp(1.0, [1.0, 1.0], [[1.0, 2.0], [2.0, 1.0]])],
        };
        assert!(synth_terrain_gmm(&indefinite).is_err());
        let asym = GmmSpec {
            height: 4,
            width: 4,
            components: vec![comp(1.0, [1.0, 1.0], [[1.0, 0.1], [0.2, 1.0]])],
        };
        assert!(synth_terrain_gmm(&asym).is_err());
    }

    #[test]
    fn gmm_is_additive_and_order_free() {
        let a = comp(2.0, [3.0, 4.0], [[4.0, 1.0], [1.0, 3.0]]);
        let b = comp(-0.7, [9.0, 2.0], [[2.0, -0.5], [-0.5, 5.0]]);
        let mk = |cs: Vec<GmmComponent>| {
            synth_terrain_gmm(&GmmSpec {
                height: 12,
                width: 14,
                components: cs,
            })
            .unwrap()
        };
        let ab = mk(vec![a.clone(), b.clone()]);
        let ba = mk(vec![b.clone(), a.clone()]);
        let sum = mk(vec![a])
            .as_slice()
            .iter()
            .zip(mk(vec![b]).as_slice())
            .map(|(x, y)| x + y)
            .collect::<Vec<_>>();
        for ((x, y), z) in ab.as_slice().iter().zip(ba.as_slice()).zip(&sum) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
            assert_abs_diff_eq!(x, z, epsilon = 1e-15);
        }
    }

    const MINIMAL_ROOM: &str = r#"{
        "kind": "floorplan",
        "corners": [[-2, -2], [2, -2], [2, 2], [-2, 2]],
        "floor_height": 0.0,
        "ceiling_height": 2.5,
        "observer": {"position": [0, 0], "eye_height": 1.5}
    }"#;

    #[test]
    fn parses_minimal_floorplan() {
        let layout = parse_layout(MINIMAL_ROOM, Path::new(".")).unwrap();
        let Layout::FloorPlan(fp) = layout else {
            panic!("expected floor plan")
        };
        assert_eq!(fp.corners().len(), 4);
        assert_eq!(fp.observer.camera.width, 512);
        assert_abs_diff_eq!(fp.observer.camera.hfov, FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn parse_errors_name_the_field() {
        let doc = MINIMAL_ROOM.replace("\"ceiling_height\": 2.5", "\"ceiling_height\": -1");
        let err = parse_layout(&doc, Path::new(".")).unwrap_err();
        assert!(
            matches!(&err, Error::Schema { path, .. } if path == "ceiling_height"),
            "{err}"
        );

        let doc = MINIMAL_ROOM.replace("\"floor_height\": 0.0,", "\"floor_height\": \"low\",");
        let err = parse_layout(&doc, Path::new(".")).unwrap_err();
        assert!(
            matches!(&err, Error::Schema { path, .. } if path == "floor_height"),
            "{err}"
        );

        let doc = MINIMAL_ROOM.replace("floorplan", "castle");
        assert!(matches!(parse_layout(&doc, Path::new(".")), Err(Error::Schema { .. })));

        let doc = MINIMAL_ROOM.replace("\"eye_height\": 1.5", "\"eye_height\": 1.5, \"hfov_deg\": 190");
        let err = parse_layout(&doc, Path::new(".")).unwrap_err();
        assert!(
            matches!(&err, Error::Schema { path, .. } if path == "observer.hfov_deg"),
            "{err}"
        );
    }

    #[test]
    fn parses_inline_terrain() {
        let doc = r#"{
            "kind": "terrain",
            "heights": [[0, 0, 0], [0, 1, 0], [0, 0, 0]],
            "cell_size": 2.0,
            "max_distance": 100,
            "observer": {"grid_pos": [1, 1], "eye_height": 1.7, "hfov_deg": 60}
        }"#;
        let Layout::Terrain(tm) = parse_layout(doc, Path::new(".")).unwrap() else {
            panic!()
        };
        assert_eq!(tm.heights.dims(), (3, 3));
        assert_abs_diff_eq!(tm.eye()[1], 2.7, epsilon = 1e-12);

        let ragged = doc.replace("[0, 1, 0]", "[0, 1]");
        let err = parse_layout(&ragged, Path::new(".")).unwrap_err();
        assert!(
            matches!(&err, Error::Schema { path, .. } if path == "heights[1]"),
            "{err}"
        );
    }
}
