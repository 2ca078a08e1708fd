//! Readers and writers for the interchange formats: 8-bit PNG, little-endian
//! single-channel PFM, and the semantic index/legend/channel bundle.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, RgbImage};
use crate::layout::SemanticMap;
use crate::sphere::ErpGrid;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_owned(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// PNG

/// Reads an 8-bit PNG as RGB. Grayscale expands to gray RGB and alpha is dropped;
/// 16-bit files are rejected.
pub fn read_png(path: &Path) -> Result<RgbImage> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| png_err(path, e))?;
    let info = reader.info();
    if info.bit_depth == png::BitDepth::Sixteen {
        return Err(format_err(path, "16-bit PNG is not supported; expected 8-bit channels"));
    }
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader.next_frame(&mut buf).map_err(|e| png_err(path, e))?;
    if frame.bit_depth != png::BitDepth::Eight {
        return Err(format_err(path, format!("unsupported bit depth {:?}", frame.bit_depth)));
    }
    let (w, h) = (frame.width as usize, frame.height as usize);
    let channels = match frame.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => return Err(format_err(path, "palette expansion failed")),
    };
    let data = &buf[..frame.buffer_size()];
    let mut pixels = Vec::with_capacity(w * h);
    for row in data.chunks_exact(frame.line_size) {
        for px in row[..w * channels].chunks_exact(channels) {
            pixels.push(if channels < 3 {
                [px[0]; 3]
            } else {
                [px[0], px[1], px[2]]
            });
        }
    }
    Grid::from_vec(h, w, pixels)
}

/// Reads an 8-bit grayscale PNG (masks, index images, channels).
pub fn read_gray_png(path: &Path) -> Result<Grid<u8>> {
    let file = File::open(path).map_err(io_err(path))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| png_err(path, e))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader.next_frame(&mut buf).map_err(|e| png_err(path, e))?;
    if frame.color_type != png::ColorType::Grayscale || frame.bit_depth != png::BitDepth::Eight {
        return Err(format_err(
            path,
            format!(
                "expected 8-bit grayscale, got {:?} {:?}",
                frame.color_type, frame.bit_depth
            ),
        ));
    }
    let (w, h) = (frame.width as usize, frame.height as usize);
    let data: Vec<u8> = buf[..frame.buffer_size()]
        .chunks_exact(frame.line_size)
        .flat_map(|row| row[..w].iter().copied())
        .collect();
    Grid::from_vec(h, w, data)
}

fn png_err(path: &Path, e: png::DecodingError) -> Error {
    match e {
        png::DecodingError::IoError(source) => Error::Io {
            path: path.to_owned(),
            source,
        },
        other => format_err(path, other.to_string()),
    }
}

fn write_png_raw(path: &Path, width: usize, height: usize, color: png::ColorType, data: &[u8]) -> Result<()> {
    let (w, h) = match (u32::try_from(width), u32::try_from(height)) {
        (Ok(w), Ok(h)) if w > 0 && h > 0 => (w, h),
        _ => return Err(format_err(path, format!("cannot encode a {height}x{width} PNG"))),
    };
    let file = File::create(path).map_err(io_err(path))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), w, h);
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let enc_err = |e: png::EncodingError| match e {
        png::EncodingError::IoError(source) => Error::Io {
            path: path.to_owned(),
            source,
        },
        other => format_err(path, other.to_string()),
    };
    let mut writer = encoder.write_header().map_err(enc_err)?;
    writer.write_image_data(data).map_err(enc_err)?;
    writer.finish().map_err(enc_err)
}

pub fn write_png(path: &Path, img: &RgbImage) -> Result<()> {
    let data: Vec<u8> = img.as_slice().iter().flatten().copied().collect();
    write_png_raw(path, img.width(), img.height(), png::ColorType::Rgb, &data)
}

pub fn write_gray_png(path: &Path, img: &Grid<u8>) -> Result<()> {
    write_png_raw(
        path,
        img.width(),
        img.height(),
        png::ColorType::Grayscale,
        img.as_slice(),
    )
}

// ---------------------------------------------------------------------------
// PFM

/// Serializes a single-channel little-endian PFM. Rows are stored bottom-up.
/// NaN is rejected; infinities are kept bit-exactly.
pub fn encode_pfm(grid: &Grid<f32>) -> Result<Vec<u8>> {
    if let Some(k) = grid.as_slice().iter().position(|v| v.is_nan()) {
        return Err(Error::invalid(format!(
            "NaN at row {}, column {} cannot be written to PFM",
            k / grid.width().max(1),
            k % grid.width().max(1)
        )));
    }
    let header = format!("Pf\n{} {}\n-1.0\n", grid.width(), grid.height());
    let mut out = Vec::with_capacity(header.len() + grid.len() * 4);
    out.extend_from_slice(header.as_bytes());
    for row in grid.rows().rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a str> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos]).ok().filter(|s| !s.is_empty())
}

/// Parses a single-channel PFM. Only little-endian files (negative scale) are accepted.
pub fn decode_pfm(bytes: &[u8]) -> std::result::Result<Grid<f32>, String> {
    let mut pos = 0;
    match header_token(bytes, &mut pos) {
        Some("Pf") => {}
        Some("PF") => return Err("three-channel PFM (PF) is not supported".into()),
        other => return Err(format!("bad PFM magic {other:?}")),
    }
    let mut dim = |name: &str| -> std::result::Result<usize, String> {
        header_token(bytes, &mut pos)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| format!("bad PFM {name}"))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let scale: f64 = header_token(bytes, &mut pos)
        .and_then(|t| t.parse().ok())
        .ok_or("bad PFM scale")?;
    if scale >= 0.0 {
        return Err(format!("big-endian PFM (scale {scale}) is not supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or("PFM dimensions overflow")?;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() != expected {
        return Err(format!(
            "PFM raster has {} bytes, expected {expected} for {width}x{height}",
            raster.len()
        ));
    }
    let mut data = vec![0f32; width * height];
    for (r, chunk) in raster.chunks_exact(width.max(1) * 4).enumerate().take(height) {
        let row = height - 1 - r;
        for (c, b) in chunk.chunks_exact(4).enumerate() {
            data[row * width + c] = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
        }
    }
    Grid::from_vec(height, width, data).map_err(|e| e.to_string())
}

pub fn read_pfm(path: &Path) -> Result<Grid<f32>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    decode_pfm(&bytes).map_err(|m| format_err(path, m))
}

pub fn write_pfm(path: &Path, grid: &Grid<f32>) -> Result<()> {
    let bytes = encode_pfm(grid)?;
    let mut f = BufWriter::new(File::create(path).map_err(io_err(path))?);
    f.write_all(&bytes).and_then(|_| f.flush()).map_err(io_err(path))
}

/// Reads a PFM into double precision.
pub fn read_map(path: &Path) -> Result<Grid<f64>> {
    Ok(read_pfm(path)?.map(|&v| v as f64))
}

/// Writes a double-precision map as PFM (rounded to f32).
pub fn write_map(path: &Path, grid: &Grid<f64>) -> Result<()> {
    write_pfm(path, &grid.map(|&v| v as f32))
}

// ---------------------------------------------------------------------------
// Semantic bundle

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticLegend {
    /// Index-image value → class name; entry 0 is always `"none"`.
    pub classes: Vec<String>,
    /// Per-class binary channel files, in legend order.
    pub channels: Vec<String>,
}

/// Files produced by [`write_semantic`].
#[derive(Debug, Clone, Default)]
pub struct SemanticFiles {
    pub index: Option<PathBuf>,
    pub legend: PathBuf,
    pub channels: Vec<PathBuf>,
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes `<prefix>_index.png`, `<prefix>_legend.json` and one
/// `<prefix>_<kk>_<class>.png` (0/255) per channel. The index image is skipped
/// with an error after the channels are written if there are more than 255 classes.
pub fn write_semantic(map: &SemanticMap, grid: ErpGrid, prefix: &Path) -> Result<SemanticFiles> {
    let with_suffix = |suffix: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    let mut files = SemanticFiles {
        legend: with_suffix("_legend.json"),
        ..Default::default()
    };
    let mut channel_names = Vec::new();
    for (c, class) in map.legend().iter().enumerate() {
        let path = with_suffix(&format!("_{:02}_{}.png", c + 1, sanitize(class)));
        write_gray_png(&path, &map.channel(c).map(|&v| v * 255))?;
        channel_names.push(
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        );
        files.channels.push(path);
    }
    let legend = SemanticLegend {
        classes: std::iter::once("none".to_string())
            .chain(map.legend().iter().cloned())
            .collect(),
        channels: channel_names,
    };
    let json = serde_json::to_string_pretty(&legend).expect("legend serializes");
    std::fs::write(&files.legend, json + "\n").map_err(io_err(&files.legend))?;

    let index = map.index_map(grid)?;
    let path = with_suffix("_index.png");
    write_gray_png(&path, &index)?;
    files.index = Some(path);
    Ok(files)
}
