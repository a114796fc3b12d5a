//! Little-endian binary containers and PNG export.
//!
//! Complex grids: 8-byte magic (`CSKS-V1\0` for k-space, `CSIM-V1\0` for
//! images), `u32` height, `u32` width, then `height·width` `(f32 re, f32 im)`
//! pairs in row-major order. Masks: magic `CSMK-V1\0`, `u32` height, `u32`
//! width, then one byte per point (0 or 1).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{AcsRegion, ComplexImage, Grid, KSpaceGrid, SamplingMask};

pub const KSPACE_MAGIC: &[u8; 8] = b"CSKS-V1\0";
pub const IMAGE_MAGIC: &[u8; 8] = b"CSIM-V1\0";
pub const MASK_MAGIC: &[u8; 8] = b"CSMK-V1\0";

fn format_err(path: &Path, offset: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        offset: offset as u64,
        reason: reason.into(),
    }
}

fn magic_name(magic: &[u8; 8]) -> String {
    String::from_utf8_lossy(&magic[..7]).into_owned()
}

/// Check the magic and read the dimensions; returns `(h, w, payload offset)`.
fn header(bytes: &[u8], magic: &[u8; 8], path: &Path) -> Result<(usize, usize, usize)> {
    if bytes.len() < 8 || &bytes[..8] != magic {
        return Err(format_err(
            path,
            0,
            format!("bad magic, expected {}", magic_name(magic)),
        ));
    }
    if bytes.len() < 16 {
        return Err(format_err(path, bytes.len(), "truncated header: missing dimensions"));
    }
    let h = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if h == 0 || w == 0 {
        return Err(format_err(path, 8, format!("invalid dimensions {h}x{w}")));
    }
    Ok((h, w, 16))
}

fn encode_grid<D>(grid: &Grid<D>, magic: &[u8; 8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + grid.len() * 8);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(grid.height() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.width() as u32).to_le_bytes());
    for v in grid.data() {
        out.extend_from_slice(&(v.re as f32).to_le_bytes());
        out.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    out
}

fn decode_grid<D>(bytes: &[u8], magic: &[u8; 8], path: &Path) -> Result<Grid<D>> {
    let (h, w, start) = header(bytes, magic, path)?;
    let need = h * w * 8;
    if bytes.len() - start < need {
        return Err(format_err(
            path,
            bytes.len(),
            format!("truncated payload: {h}x{w} grid needs {need} bytes after the header"),
        ));
    }
    if bytes.len() - start > need {
        return Err(format_err(path, start + need, "trailing bytes after payload"));
    }
    let data = bytes[start..]
        .chunks_exact(8)
        .map(|c| {
            Complex64::new(
                f32::from_le_bytes(c[..4].try_into().unwrap()) as f64,
                f32::from_le_bytes(c[4..].try_into().unwrap()) as f64,
            )
        })
        .collect();
    Grid::from_vec(h, w, data)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(bytes)?;
    f.flush()?;
    Ok(())
}

pub fn encode_kspace(grid: &KSpaceGrid) -> Vec<u8> {
    encode_grid(grid, KSPACE_MAGIC)
}

pub fn decode_kspace(bytes: &[u8], path: &Path) -> Result<KSpaceGrid> {
    decode_grid(bytes, KSPACE_MAGIC, path)
}

pub fn encode_image(grid: &ComplexImage) -> Vec<u8> {
    encode_grid(grid, IMAGE_MAGIC)
}

pub fn decode_image(bytes: &[u8], path: &Path) -> Result<ComplexImage> {
    decode_grid(bytes, IMAGE_MAGIC, path)
}

pub fn encode_mask(mask: &SamplingMask) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + mask.height() * mask.width());
    out.extend_from_slice(MASK_MAGIC);
    out.extend_from_slice(&(mask.height() as u32).to_le_bytes());
    out.extend_from_slice(&(mask.width() as u32).to_le_bytes());
    out.extend(mask.sampled().iter().map(|&s| s as u8));
    out
}

/// The ACS descriptor is not stored; pass the one the mask was built with.
pub fn decode_mask(bytes: &[u8], acs: AcsRegion, path: &Path) -> Result<SamplingMask> {
    let (h, w, start) = header(bytes, MASK_MAGIC, path)?;
    let need = h * w;
    if bytes.len() - start < need {
        return Err(format_err(
            path,
            bytes.len(),
            format!("truncated payload: {h}x{w} mask needs {need} bytes after the header"),
        ));
    }
    if bytes.len() - start > need {
        return Err(format_err(path, start + need, "trailing bytes after payload"));
    }
    let mut sampled = Vec::with_capacity(need);
    for (i, &b) in bytes[start..].iter().enumerate() {
        match b {
            0 => sampled.push(false),
            1 => sampled.push(true),
            _ => return Err(format_err(path, start + i, format!("mask byte {b} is neither 0 nor 1"))),
        }
    }
    SamplingMask::new(h, w, sampled, acs).map_err(|e| format_err(path, start, e.to_string()))
}

pub fn write_kspace(path: impl AsRef<Path>, grid: &KSpaceGrid) -> Result<()> {
    write_bytes(path.as_ref(), &encode_kspace(grid))
}

pub fn read_kspace(path: impl AsRef<Path>) -> Result<KSpaceGrid> {
    let path = path.as_ref();
    decode_kspace(&std::fs::read(path)?, path)
}

pub fn write_image(path: impl AsRef<Path>, grid: &ComplexImage) -> Result<()> {
    write_bytes(path.as_ref(), &encode_image(grid))
}

pub fn read_image(path: impl AsRef<Path>) -> Result<ComplexImage> {
    let path = path.as_ref();
    decode_image(&std::fs::read(path)?, path)
}

pub fn write_mask(path: impl AsRef<Path>, mask: &SamplingMask) -> Result<()> {
    write_bytes(path.as_ref(), &encode_mask(mask))
}

pub fn read_mask(path: impl AsRef<Path>, acs: AcsRegion) -> Result<SamplingMask> {
    let path = path.as_ref();
    decode_mask(&std::fs::read(path)?, acs, path)
}

/// 8-bit grayscale PNG of `values` mapped linearly from `[0, peak]`.
/// A non-positive `peak` uses the maximum of `values`.
pub fn write_gray_png(path: impl AsRef<Path>, height: usize, width: usize, values: &[f64], peak: f64) -> Result<()> {
    if values.len() != height * width {
        return Err(Error::InvalidInput(format!(
            "{} values for a {height}x{width} image",
            values.len()
        )));
    }
    let peak = if peak > 0.0 {
        peak
    } else {
        values.iter().cloned().fold(0.0, f64::max)
    };
    let pixels: Vec<u8> = values
        .iter()
        .map(|&v| {
            if peak > 0.0 {
                (v / peak * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect();
    let file = BufWriter::new(File::create(path.as_ref())?);
    let mut enc = png::Encoder::new(file, width as u32, height as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let io_err = |e: png::EncodingError| Error::Io(std::io::Error::other(e));
    let mut writer = enc.write_header().map_err(io_err)?;
    writer.write_image_data(&pixels).map_err(io_err)?;
    writer.finish().map_err(io_err)?;
    Ok(())
}

/// Magnitude image as an 8-bit PNG scaled by its own peak.
pub fn write_magnitude_png(path: impl AsRef<Path>, image: &ComplexImage) -> Result<()> {
    write_gray_png(path, image.height(), image.width(), &image.magnitudes(), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_image() -> ComplexImage {
        ComplexImage::from_fn(3, 5, |r, c| Complex64::new(r as f64 * 0.5 - 1.0, c as f64 * 0.25))
    }

    #[test]
    fn grid_round_trip() {
        let img = sample_image();
        let bytes = encode_image(&img);
        assert_eq!(bytes.len(), 16 + 15 * 8);
        assert_eq!(decode_image(&bytes, Path::new("x")).unwrap(), img);
    }

    #[test]
    fn wrong_magic_names_expected_format() {
        let bytes = encode_image(&sample_image());
        let err = decode_kspace(&bytes, Path::new("img.bin")).unwrap_err();
        match err {
            Error::Format { offset, reason, .. } => {
                assert_eq!(offset, 0);
                assert!(reason.contains("CSKS-V1"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode_image(&sample_image());
        let cut = &bytes[..bytes.len() - 5];
        match decode_image(cut, Path::new("x")).unwrap_err() {
            Error::Format { offset, reason, .. } => {
                assert_eq!(offset as usize, cut.len());
                assert!(reason.contains("truncated"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(decode_image(&bytes[..10], Path::new("x")), Err(Error::Format { .. })));
    }

    #[test]
    fn mask_round_trip_and_bad_byte() {
        let mut bits = vec![false; 12];
        bits[1] = true;
        bits[7] = true;
        let m = SamplingMask::new(3, 4, bits, AcsRegion::default()).unwrap();
        let mut bytes = encode_mask(&m);
        assert_eq!(decode_mask(&bytes, AcsRegion::default(), Path::new("m")).unwrap(), m);
        bytes[16 + 3] = 7;
        assert!(matches!(
            decode_mask(&bytes, AcsRegion::default(), Path::new("m")),
            Err(Error::Format { offset: 19, .. })
        ));
    }
}
