//! Equirectangular (ERP) coordinates, pinhole cameras and resampling between them.
//!
//! World frame: y up, longitude φ = 0 looks down +z and φ = π/2 down +x.
//! Latitude θ is positive above the horizon. A pixel center `(i, j)` of an
//! `H×W` panorama sits at θ = π/2 − π(i + 0.5)/H and φ = −π + 2π(j + 0.5)/W.
//!
//! Cameras look down their local +z with +x to the right and +y up; image rows
//! grow downward. Image-plane points are in edge coordinates, so `(0, 0)` is the
//! top-left corner of the first pixel and `(W, H)` the bottom-right corner.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Interpolate, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErpGrid {
    height: usize,
    width: usize,
}

impl ErpGrid {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "ERP grid must be at least 1x1, got {height}x{width}"
            )));
        }
        Ok(Self { height, width })
    }

    /// Parses `"HxW"`, e.g. `"512x1024"`.
    pub fn parse(s: &str) -> Result<Self> {
        let (h, w) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::invalid(format!("expected HxW, got {s:?}")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("expected HxW, got {s:?}")))
        };
        Self::new(parse(h)?, parse(w)?)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn of<T>(grid: &Grid<T>) -> Result<Self> {
        Self::new(grid.height(), grid.width())
    }

    /// Latitude of continuous row coordinate `i`.
    pub fn latitude(&self, i: f64) -> f64 {
        FRAC_PI_2 - PI * (i + 0.5) / self.height as f64
    }

    /// Longitude of continuous column coordinate `j`.
    pub fn longitude(&self, j: f64) -> f64 {
        -PI + TAU * (j + 0.5) / self.width as f64
    }

    /// Direction through continuous pixel coordinate `(i, j)`.
    ///
    /// Rows are accepted from `0` down to the south pole at `H − 0.5`; columns
    /// from `0` to `W`. Anything else is rejected rather than clamped.
    pub fn pixel_to_direction(&self, i: f64, j: f64) -> Result<Direction> {
        let h = self.height as f64;
        let w = self.width as f64;
        if !(i >= 0.0 && i <= h - 0.5) {
            return Err(Error::invalid(format!(
                "row {i} outside [0, {}] for {}x{} ERP",
                h - 0.5,
                self.height,
                self.width
            )));
        }
        if !(j >= 0.0 && j <= w) {
            return Err(Error::invalid(format!(
                "column {j} outside [0, {w}] for {}x{} ERP",
                self.height, self.width
            )));
        }
        Ok(Direction::from_angles(self.latitude(i), self.longitude(j)))
    }

    /// Direction through the center of pixel `(i, j)`; indices must be in range.
    pub fn pixel_center(&self, i: usize, j: usize) -> Direction {
        debug_assert!(i < self.height && j < self.width);
        Direction::from_angles(self.latitude(i as f64), self.longitude(j as f64))
    }

    /// Continuous pixel coordinate of `d`. Rows are clamped to the first and last
    /// row centers; columns wrap into `[0, W)`.
    pub fn direction_to_pixel(&self, d: Direction) -> (f64, f64) {
        let (lat, lon) = d.angles();
        let h = self.height as f64;
        let w = self.width as f64;
        let i = ((FRAC_PI_2 - lat) * h / PI - 0.5).clamp(0.0, h - 1.0);
        let j = ((lon + PI) * w / TAU - 0.5).rem_euclid(w);
        (i, j)
    }
}

/// Unit vector in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction([f64; 3]);

impl Direction {
    /// Normalizes `v`; fails on zero or non-finite vectors.
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = norm(v);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid(format!("cannot normalize {v:?}")));
        }
        Ok(Self(v.map(|c| c / n)))
    }

    pub fn from_angles(lat: f64, lon: f64) -> Self {
        let (sl, cl) = lat.sin_cos();
        let (so, co) = lon.sin_cos();
        Self([cl * so, sl, cl * co])
    }

    /// `(latitude, longitude)`; longitude is 0 when undefined at the poles.
    pub fn angles(&self) -> (f64, f64) {
        let [x, y, z] = self.0;
        let lat = y.clamp(-1.0, 1.0).asin();
        let lon = if x == 0.0 && z == 0.0 { 0.0 } else { x.atan2(z) };
        (lat, lon)
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }
}

pub(crate) fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Row-major 3×3 rotation taking camera coordinates to world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(pub [[f64; 3]; 3]);

impl Rotation {
    pub const IDENTITY: Rotation = Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// `R = R_yaw · R_pitch · R_roll`. Positive yaw turns +z toward +x, positive
    /// pitch tilts +z toward +y, and roll spins about the optical axis.
    pub fn from_angles(yaw: f64, pitch: f64, roll: f64) -> Self {
        let (sy, cy) = yaw.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let (sr, cr) = roll.sin_cos();
        let r_yaw = Rotation([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]]);
        let r_pitch = Rotation([[1.0, 0.0, 0.0], [0.0, cp, sp], [0.0, -sp, cp]]);
        let r_roll = Rotation([[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]]);
        r_yaw.compose(&r_pitch).compose(&r_roll)
    }

    pub fn compose(&self, rhs: &Rotation) -> Rotation {
        let mut out = [[0.0; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.0[r][k] * rhs.0[k][c]).sum();
            }
        }
        Rotation(out)
    }

    pub fn transpose(&self) -> Rotation {
        let m = self.0;
        Rotation([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// Applies the inverse (transpose) rotation.
    pub fn apply_inverse(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
            m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
            m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

/// Pinhole camera with square pixels. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub yaw: f64,
    pub pitch: f64,
    #[serde(default)]
    pub roll: f64,
    pub hfov: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraSpec {
    pub fn new(yaw: f64, pitch: f64, hfov: f64, width: usize, height: usize) -> Result<Self> {
        let cam = Self {
            yaw,
            pitch,
            roll: 0.0,
            hfov,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn with_roll(mut self, roll: f64) -> Self {
        self.roll = roll;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hfov > 0.0 && self.hfov < PI) {
            return Err(Error::invalid(format!(
                "horizontal FoV must lie in (0, π), got {}",
                self.hfov
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid(format!(
                "camera image must be at least 1x1, got {}x{}",
                self.height, self.width
            )));
        }
        if ![self.yaw, self.pitch, self.roll].iter().all(|a| a.is_finite()) {
            return Err(Error::invalid("camera angles must be finite"));
        }
        Ok(())
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.hfov / 2.0).tan()
    }

    pub fn vfov(&self) -> f64 {
        2.0 * ((self.height as f64 / 2.0) / self.focal()).atan()
    }

    pub fn rotation(&self) -> Rotation {
        Rotation::from_angles(self.yaw, self.pitch, self.roll)
    }

    /// Projects a camera-frame vector to edge coordinates `(x, y)`; `None` behind the camera.
    pub fn project_local(&self, c: [f64; 3]) -> Option<(f64, f64)> {
        if c[2] <= 0.0 {
            return None;
        }
        let f = self.focal();
        Some((
            f * c[0] / c[2] + self.width as f64 / 2.0,
            -f * c[1] / c[2] + self.height as f64 / 2.0,
        ))
    }

    /// Projects a world direction and keeps it only if it lands on the image.
    pub fn project(&self, rot: &Rotation, d: [f64; 3]) -> Option<(f64, f64)> {
        let (x, y) = self.project_local(rot.apply_inverse(d))?;
        let inside = (0.0..=self.width as f64).contains(&x) && (0.0..=self.height as f64).contains(&y);
        inside.then_some((x, y))
    }

    /// World direction through edge coordinate `(x, y)`.
    pub fn ray(&self, rot: &Rotation, x: f64, y: f64) -> Direction {
        let f = self.focal();
        let local = [
            (x - self.width as f64 / 2.0) / f,
            -(y - self.height as f64 / 2.0) / f,
            1.0,
        ];
        let v = rot.apply(local);
        let n = norm(v);
        Direction(v.map(|c| c / n))
    }
}

/// Places a perspective image on the sphere. Returns the resampled panorama and
/// a coverage mask that is 1 inside the camera frustum and 0 elsewhere.
pub fn perspective_to_erp<T>(img: &Grid<T>, cam: &CameraSpec, grid: ErpGrid) -> Result<(Grid<T>, Mask)>
where
    T: Interpolate + Default + Send + Sync,
{
    cam.validate()?;
    if img.dims() != (cam.height, cam.width) {
        return Err(Error::DimensionMismatch(format!(
            "image is {}x{} but camera expects {}x{}",
            img.height(),
            img.width(),
            cam.height,
            cam.width
        )));
    }
    let rot = cam.rotation();
    let w = grid.width();
    let mut out = Grid::filled(grid.height(), w, T::default());
    let mut mask = Grid::filled(grid.height(), w, 0.0);
    out.as_mut_slice()
        .par_chunks_mut(w)
        .zip(mask.as_mut_slice().par_chunks_mut(w))
        .enumerate()
        .for_each(|(i, (row, mrow))| {
            for j in 0..w {
                let d = grid.pixel_center(i, j);
                if let Some((x, y)) = cam.project(&rot, d.as_array()) {
                    row[j] = img.sample_clamped(y - 0.5, x - 0.5);
                    mrow[j] = 1.0;
                }
            }
        });
    Ok((out, mask))
}

/// Gnomonic extraction: renders the panorama through `cam` by bilinear lookup
/// along each pixel ray (longitude wraps, latitude clamps).
pub fn erp_to_perspective<T>(erp: &Grid<T>, cam: &CameraSpec) -> Result<Grid<T>>
where
    T: Interpolate + Default + Send + Sync,
{
    cam.validate()?;
    let grid = ErpGrid::of(erp)?;
    let rot = cam.rotation();
    let mut out = Grid::filled(cam.height, cam.width, T::default());
    out.as_mut_slice()
        .par_chunks_mut(cam.width)
        .enumerate()
        .for_each(|(v, row)| {
            for (u, px) in row.iter_mut().enumerate() {
                let d = cam.ray(&rot, u as f64 + 0.5, v as f64 + 0.5);
                let (i, j) = grid.direction_to_pixel(d);
                *px = erp.sample_wrapped(i, j);
            }
        });
    Ok(out)
}

pub const TANGENT_VIEWS: usize = 16;
pub const TANGENT_SIZE: usize = 512;

/// Latitude and longitude of view `n` (1-based) in the 16-view tangent rig,
/// longitude reduced to `[0, 2π)`.
pub fn tangent_direction(n: usize) -> (f64, f64) {
    assert!((1..=TANGENT_VIEWS).contains(&n), "tangent view index {n} out of 1..=16");
    // Reduce in whole quarter/eighth turns so the angles are exact multiples.
    match n {
        1..=4 => (FRAC_PI_4, (n % 4) as f64 * FRAC_PI_2),
        5..=8 => (-FRAC_PI_4, (n % 4) as f64 * FRAC_PI_2),
        _ => (0.0, (n % 8) as f64 * FRAC_PI_4),
    }
}

/// The 16 tangent cameras: 90° horizontal FoV, 512×512, no roll.
pub fn tangent_rig() -> Vec<CameraSpec> {
    tangent_rig_sized(TANGENT_SIZE, TANGENT_SIZE)
}

pub fn tangent_rig_sized(height: usize, width: usize) -> Vec<CameraSpec> {
    (1..=TANGENT_VIEWS)
        .map(|n| {
            let (lat, lon) = tangent_direction(n);
            CameraSpec {
                yaw: lon,
                pitch: lat,
                roll: 0.0,
                hfov: FRAC_PI_2,
                width,
                height,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn center_pixel_looks_forward() {
        let g = ErpGrid::new(512, 1024).unwrap();
        let d = g.pixel_to_direction(255.5, 511.5).unwrap().as_array();
        assert_abs_diff_eq!(d[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[2], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn out_of_range_rows_rejected() {
        let g = ErpGrid::new(512, 1024).unwrap();
        assert!(g.pixel_to_direction(-0.5, 10.0).is_err());
        assert!(g.pixel_to_direction(600.0, 10.0).is_err());
        assert!(g.pixel_to_direction(10.0, -1.0).is_err());
        assert!(g.pixel_to_direction(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn small_grid_hand_value() {
        let g = ErpGrid::new(4, 8).unwrap();
        let d = g.pixel_to_direction(0.5, 6.5).unwrap().as_array();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // cos(π/4)sin(3π/4), sin(π/4), cos(π/4)cos(3π/4)
        assert_abs_diff_eq!(d[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d[1], s, epsilon = 1e-12);
        assert_abs_diff_eq!(d[2], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn forward_maps_to_center() {
        let g = ErpGrid::new(512, 1024).unwrap();
        let (i, j) = g.direction_to_pixel(Direction::new([0.0, 0.0, 1.0]).unwrap());
        assert_abs_diff_eq!(i, 255.5, epsilon = 1e-12);
        assert_abs_diff_eq!(j, 511.5, epsilon = 1e-12);
    }

    #[test]
    fn north_pole_clamps_to_first_row() {
        let g = ErpGrid::new(512, 1024).unwrap();
        let (i, j) = g.direction_to_pixel(Direction::new([0.0, 1.0, 0.0]).unwrap());
        assert_eq!(i, 0.0);
        assert_abs_diff_eq!(j, 511.5, epsilon = 1e-12);
    }

    #[test]
    fn identity_and_yaw_convention() {
        let r = Rotation::from_angles(0.0, 0.0, 0.0);
        assert_eq!(r, Rotation::IDENTITY);
        let r = Rotation::from_angles(FRAC_PI_2, 0.0, 0.0);
        let v = r.apply([0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn yaw_pitch_forward_matches_angles() {
        let r = Rotation::from_angles(0.7, -0.3, 1.1);
        let f = r.apply([0.0, 0.0, 1.0]);
        let e = Direction::from_angles(-0.3, 0.7).as_array();
        for k in 0..3 {
            assert_abs_diff_eq!(f[k], e[k], epsilon = 1e-14);
        }
    }

    #[test]
    fn rig_matches_shooting_directions() {
        let (lat, lon) = tangent_direction(1);
        assert_eq!((lat, lon), (FRAC_PI_4, FRAC_PI_2));
        let (lat, lon) = tangent_direction(9);
        assert_eq!(lat, 0.0);
        assert_abs_diff_eq!(lon, FRAC_PI_4, epsilon = 1e-15);
        assert_eq!(tangent_direction(16), (0.0, 0.0));
        let rig = tangent_rig();
        assert_eq!(rig.len(), 16);
        assert!(rig
            .iter()
            .all(|c| c.hfov == FRAC_PI_2 && c.width == 512 && c.height == 512 && c.roll == 0.0));
    }

    #[test]
    fn degenerate_fov_rejected() {
        let img = Grid::filled(4, 4, [1u8, 2, 3]);
        let grid = ErpGrid::new(8, 16).unwrap();
        for hfov in [0.0, -1.0, PI, 4.0] {
            let cam = CameraSpec {
                yaw: 0.0,
                pitch: 0.0,
                roll: 0.0,
                hfov,
                width: 4,
                height: 4,
            };
            assert!(perspective_to_erp(&img, &cam, grid).is_err());
        }
    }

    #[test]
    fn constant_image_fills_frustum() {
        let img = Grid::filled(30, 40, [10u8, 20, 30]);
        let cam = CameraSpec::new(1.0, 0.2, 1.2, 40, 30).unwrap();
        let grid = ErpGrid::new(64, 128).unwrap();
        let (erp, mask) = perspective_to_erp(&img, &cam, grid).unwrap();
        let mut covered = 0;
        for (px, m) in erp.as_slice().iter().zip(mask.as_slice()) {
            if *m > 0.0 {
                covered += 1;
                assert_eq!(*px, [10, 20, 30]);
            } else {
                assert_eq!(*px, [0, 0, 0]);
            }
        }
        assert!(covered > 0);
    }

    #[test]
    fn optical_axis_and_back_of_camera() {
        // 2x2 image with distinct pixels: the optical axis sits on the shared corner,
        // so use an odd-sized image whose center pixel is well defined.
        let img = Grid::from_fn(3, 3, |i, j| [(i * 3 + j) as u8 * 10, 0, 0]);
        let cam = CameraSpec::new(0.0, 0.0, FRAC_PI_2, 3, 3).unwrap();
        let grid = ErpGrid::new(65, 129).unwrap();
        let (erp, mask) = perspective_to_erp(&img, &cam, grid).unwrap();
        // Row 32 is θ = 0, column 64 is φ = 0.
        assert_eq!(*erp.get(32, 64), *img.get(1, 1));
        assert_eq!(*mask.get(32, 64), 1.0);
        // Column 0 is φ ≈ −π, directly behind.
        assert_eq!(*mask.get(32, 0), 0.0);
    }

    #[test]
    fn coverage_grows_with_fov() {
        let grid = ErpGrid::new(32, 64).unwrap();
        let img = Grid::filled(16, 16, 1.0f64);
        let mut prev: Option<Mask> = None;
        for hfov in [0.4, 0.9, 1.5, 2.2, 3.0] {
            let cam = CameraSpec::new(0.3, -0.2, hfov, 16, 16).unwrap();
            let (_, mask) = perspective_to_erp(&img, &cam, grid).unwrap();
            if let Some(p) = &prev {
                for (a, b) in p.as_slice().iter().zip(mask.as_slice()) {
                    assert!(b >= a);
                }
            }
            prev = Some(mask);
        }
    }

    #[test]
    fn constant_erp_gives_constant_view() {
        let erp = Grid::filled(16, 32, [7u8, 8, 9]);
        let cam = CameraSpec::new(2.0, 0.5, 1.0, 10, 6).unwrap();
        let out = erp_to_perspective(&erp, &cam).unwrap();
        assert!(out.as_slice().iter().all(|p| *p == [7, 8, 9]));
    }

    #[test]
    fn rig_view_16_center_ray_is_forward() {
        let cam = tangent_rig()[15];
        let d = cam.ray(&cam.rotation(), 256.0, 256.0).as_array();
        assert_abs_diff_eq!(d[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[2], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn parse_grid_spec() {
        let g = ErpGrid::parse("512x1024").unwrap();
        assert_eq!((g.height(), g.width()), (512, 1024));
        assert!(ErpGrid::parse("0x4").is_err());
        assert!(ErpGrid::parse("512").is_err());
    }

    proptest! {
        #[test]
        fn direction_pixel_round_trip(lat in -(FRAC_PI_2 - 1e-4)..(FRAC_PI_2 - 1e-4), lon in -PI..PI) {
            let g = ErpGrid::new(512, 1024).unwrap();
            let d = Direction::from_angles(lat, lon);
            let (i, j) = g.direction_to_pixel(d);
            // Rows above the first or below the last row center are clamped.
            prop_assume!(i > 0.0 && i < 511.0);
            let back = g.pixel_to_direction(i, j).unwrap().as_array();
            let a = d.as_array();
            for k in 0..3 {
                prop_assert!((back[k] - a[k]).abs() < 1e-10);
            }
        }

        #[test]
        fn rotations_are_orthonormal(y in -10.0f64..10.0, p in -10.0f64..10.0, r in -10.0f64..10.0) {
            let m = Rotation::from_angles(y, p, r);
            let prod = m.transpose().compose(&m);
            for a in 0..3 {
                for b in 0..3 {
                    let e = if a == b { 1.0 } else { 0.0 };
                    prop_assert!((prod.0[a][b] - e).abs() < 1e-12);
                }
            }
            prop_assert!((m.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn direction_is_unit(lat in -FRAC_PI_2..FRAC_PI_2, lon in -PI..PI) {
            let d = Direction::from_angles(lat, lon);
            prop_assert!((norm(d.as_array()) - 1.0).abs() < 1e-12);
        }
    }
}
