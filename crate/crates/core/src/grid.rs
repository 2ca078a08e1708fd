//! Row-major 2D buffers shared by every image, depth and weight map.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

pub type RgbImage = Grid<[u8; 3]>;
/// Radial depth in meters; `f64::INFINITY` marks rays with no surface.
pub type DepthMap = Grid<f64>;
pub type WeightMap = Grid<f64>;
/// Coverage values in `[0, 1]`.
pub type Mask = Grid<f64>;

impl<T: Clone> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "buffer of {} elements cannot hold {height}x{width}",
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.width + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[i * self.width + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.width + j] = value;
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.width.max(1))
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn same_dims<U>(&self, other: &Grid<U>) -> bool {
        self.dims() == other.dims()
    }

    /// Errors unless `other` has the same shape; `what` names the operand.
    pub fn check_dims<U>(&self, other: &Grid<U>, what: &str) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{what} is {}x{}, expected {}x{}",
                other.height, other.width, self.height, self.width
            )))
        }
    }
}

/// Pixel types that can be blended by bilinear sampling.
pub trait Interpolate: Copy {
    fn blend(samples: [(Self, f64); 4]) -> Self;
}

impl Interpolate for f64 {
    fn blend(samples: [(Self, f64); 4]) -> Self {
        let mut acc = 0.0;
        for (v, w) in samples {
            if w != 0.0 {
                acc += v * w;
            }
        }
        acc
    }
}

impl Interpolate for f32 {
    fn blend(samples: [(Self, f64); 4]) -> Self {
        let mut acc = 0.0f64;
        for (v, w) in samples {
            if w != 0.0 {
                acc += v as f64 * w;
            }
        }
        acc as f32
    }
}

impl Interpolate for [u8; 3] {
    fn blend(samples: [(Self, f64); 4]) -> Self {
        let mut acc = [0.0f64; 3];
        for (v, w) in samples {
            for c in 0..3 {
                acc[c] += v[c] as f64 * w;
            }
        }
        acc.map(|c| c.round().clamp(0.0, 255.0) as u8)
    }
}

impl<T: Interpolate> Grid<T> {
    /// Bilinear sample at continuous pixel-center coordinates, clamping at all edges.
    pub fn sample_clamped(&self, i: f64, j: f64) -> T {
        let (i0, i1, fi) = clamp_axis(i, self.height);
        let (j0, j1, fj) = clamp_axis(j, self.width);
        self.blend4(i0, i1, fi, j0, j1, fj)
    }

    /// Bilinear sample with columns wrapping around (longitude seam) and rows clamped.
    pub fn sample_wrapped(&self, i: f64, j: f64) -> T {
        let (i0, i1, fi) = clamp_axis(i, self.height);
        let w = self.width as f64;
        let jw = j.rem_euclid(w);
        let jf = jw.floor();
        let fj = jw - jf;
        let j0 = (jf as usize).min(self.width - 1);
        let j1 = if j0 + 1 == self.width { 0 } else { j0 + 1 };
        self.blend4(i0, i1, fi, j0, j1, fj)
    }

    fn blend4(&self, i0: usize, i1: usize, fi: f64, j0: usize, j1: usize, fj: f64) -> T {
        T::blend([
            (*self.get(i0, j0), (1.0 - fi) * (1.0 - fj)),
            (*self.get(i0, j1), (1.0 - fi) * fj),
            (*self.get(i1, j0), fi * (1.0 - fj)),
            (*self.get(i1, j1), fi * fj),
        ])
    }
}

fn clamp_axis(x: f64, n: usize) -> (usize, usize, f64) {
    let max = (n - 1) as f64;
    let x = x.clamp(0.0, max);
    let f = x.floor();
    let lo = f as usize;
    let hi = (lo + 1).min(n - 1);
    (lo, hi, x - f)
}
