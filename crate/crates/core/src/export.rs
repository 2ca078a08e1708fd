//! Point clouds and translated perspective renders from an RGB-D panorama.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{DepthMap, Grid, RgbImage};
use crate::sphere::{CameraSpec, ErpGrid};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<[f32; 3]>,
    pub colors: Vec<[u8; 3]>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_rgbd(rgb: &RgbImage, depth: &DepthMap) -> Result<ErpGrid> {
    depth.check_dims(rgb, "RGB panorama")?;
    if let Some(p) = depth.as_slice().iter().position(|d| d.is_nan() || *d < 0.0) {
        return Err(Error::invalid(format!(
            "depth {} at pixel {p} is not a valid distance",
            depth.as_slice()[p]
        )));
    }
    ErpGrid::of(depth)
}

/// One colored point per finite-depth pixel at `depth · direction`.
pub fn unproject(rgb: &RgbImage, depth: &DepthMap) -> Result<PointCloud> {
    let grid = check_rgbd(rgb, depth)?;
    let mut cloud = PointCloud::default();
    for i in 0..grid.height() {
        for j in 0..grid.width() {
            let d = *depth.get(i, j);
            if !d.is_finite() {
                continue;
            }
            let dir = grid.pixel_center(i, j).as_array();
            cloud.points.push(dir.map(|c| (c * d) as f32));
            cloud.colors.push(*rgb.get(i, j));
        }
    }
    Ok(cloud)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Render {
    pub image: RgbImage,
    /// Radial distance from the translated camera; +∞ where nothing landed.
    pub depth: DepthMap,
    /// 255 where no point landed, 0 elsewhere.
    pub holes: Grid<u8>,
}

impl Render {
    pub fn hole_count(&self) -> usize {
        self.holes.as_slice().iter().filter(|&&h| h != 0).count()
    }
}

/// Forward-splats every finite-depth pixel into `cam` placed at `translation`.
/// Each point covers one pixel; the nearest point wins and, at equal distance,
/// the earlier panorama pixel keeps the slot.
pub fn render_translated(rgb: &RgbImage, depth: &DepthMap, cam: &CameraSpec, translation: [f64; 3]) -> Result<Render> {
    cam.validate()?;
    if !translation.iter().all(|t| t.is_finite()) {
        return Err(Error::invalid("translation must be finite"));
    }
    let grid = check_rgbd(rgb, depth)?;
    let rot = cam.rotation();
    let mut image = Grid::filled(cam.height, cam.width, [0u8; 3]);
    let mut zbuf = Grid::filled(cam.height, cam.width, f64::INFINITY);
    for i in 0..grid.height() {
        for j in 0..grid.width() {
            let d = *depth.get(i, j);
            if !d.is_finite() {
                continue;
            }
            let dir = grid.pixel_center(i, j).as_array();
            let q = [
                dir[0] * d - translation[0],
                dir[1] * d - translation[1],
                dir[2] * d - translation[2],
            ];
            let Some((x, y)) = cam.project_local(rot.apply_inverse(q)) else {
                continue;
            };
            if !(x >= 0.0 && y >= 0.0 && x < cam.width as f64 && y < cam.height as f64) {
                continue;
            }
            let (u, v) = (x as usize, y as usize);
            let dist = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
            if dist < *zbuf.get(v, u) {
                zbuf.set(v, u, dist);
                image.set(v, u, *rgb.get(i, j));
            }
        }
    }
    let holes = zbuf.map(|z| if z.is_finite() { 0 } else { 255 });
    Ok(Render {
        image,
        depth: zbuf,
        holes,
    })
}

const PLY_PROPERTIES: &str = "property float x\nproperty float y\nproperty float z\n\
property uchar red\nproperty uchar green\nproperty uchar blue\n";

/// Binary little-endian PLY with float xyz and uchar rgb per vertex.
pub fn write_ply(cloud: &PointCloud, path: &Path) -> Result<()> {
    if cloud.points.len() != cloud.colors.len() {
        return Err(Error::invalid(format!(
            "{} points but {} colors",
            cloud.points.len(),
            cloud.colors.len()
        )));
    }
    let io = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n{PLY_PROPERTIES}end_header\n",
        cloud.len()
    );
    let mut write = || -> std::io::Result<()> {
        w.write_all(header.as_bytes())?;
        for (p, c) in cloud.points.iter().zip(&cloud.colors) {
            for v in p {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(c)?;
        }
        w.flush()
    };
    write().map_err(io)
}

/// Reads back a PLY in exactly the layout [`write_ply`] produces.
pub fn read_ply(path: &Path) -> Result<PointCloud> {
    let io = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let bad = |message: String| Error::Format {
        path: path.to_owned(),
        message,
    };
    let mut r = BufReader::new(File::open(path).map_err(io)?);
    let mut header = String::new();
    let mut count = None;
    loop {
        let mut line = String::new();
        if r.read_line(&mut line).map_err(io)? == 0 {
            return Err(bad("PLY header has no end_header".into()));
        }
        if let Some(n) = line.trim_end().strip_prefix("element vertex ") {
            count = Some(n.parse::<usize>().map_err(|_| bad(format!("bad vertex count {n:?}")))?);
        }
        header.push_str(&line);
        if line.trim_end() == "end_header" {
            break;
        }
    }
    let count = count.ok_or_else(|| bad("PLY header has no vertex element".into()))?;
    let expected =
        format!("ply\nformat binary_little_endian 1.0\nelement vertex {count}\n{PLY_PROPERTIES}end_header\n");
    if header != expected {
        return Err(bad("unsupported PLY layout".into()));
    }
    let mut cloud = PointCloud {
        points: Vec::with_capacity(count),
        colors: Vec::with_capacity(count),
    };
    let mut rec = [0u8; 15];
    for _ in 0..count {
        r.read_exact(&mut rec).map_err(io)?;
        let f = |k: usize| f32::from_le_bytes([rec[k], rec[k + 1], rec[k + 2], rec[k + 3]]);
        cloud.points.push([f(0), f(4), f(8)]);
        cloud.colors.push([rec[12], rec[13], rec[14]]);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest).map_err(io)?;
    if !rest.is_empty() {
        return Err(bad(format!("{} trailing bytes after vertex data", rest.len())));
    }
    Ok(cloud)
}
