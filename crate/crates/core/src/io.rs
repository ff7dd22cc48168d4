//! Image files.
//!
//! Inputs may be 8- or 16-bit grayscale PNG, binary PGM (`P5`), or the flat
//! float format below. Color images are rejected.
//!
//! Flat float format, all fields little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic b"AITV"
//! 4       4     u32 rows (M)
//! 8       4     u32 cols (N)
//! 12      4     u32 reserved, written as 0
//! 16      4*M*N f32 pixels, row-major
//! ```

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::image::Image;

pub const FLAT_MAGIC: &[u8; 4] = b"AITV";
pub const FLAT_HEADER_LEN: usize = 16;

pub fn encode_flat(img: &Image) -> Vec<u8> {
    let mut out = Vec::with_capacity(FLAT_HEADER_LEN + 4 * img.len());
    out.extend_from_slice(FLAT_MAGIC);
    out.extend_from_slice(&(img.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(img.cols() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for &v in img.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_flat(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < FLAT_HEADER_LEN || &bytes[..4] != FLAT_MAGIC {
        return Err(Error::Format("missing AITV header".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let (rows, cols) = (word(4), word(8));
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(FLAT_HEADER_LEN))
        .ok_or_else(|| Error::Format("flat image dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "flat image {rows}x{cols} needs {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let data = bytes[FLAT_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Image::new(rows, cols, data)
}

/// Decodes grayscale PNG/PGM bytes or the flat format.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    if bytes.starts_with(FLAT_MAGIC) {
        return decode_flat(bytes);
    }
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(Error::Io)?;
    let decoded = reader
        .decode()
        .map_err(|e| Error::Format(e.to_string()))?;
    let (cols, rows) = (decoded.width() as usize, decoded.height() as usize);
    let data: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(f64::from).collect(),
        other => return Err(Error::ColorImage(format!("{:?}", other.color()))),
    };
    Image::new(rows, cols, data)
}

pub fn read_image(path: &Path) -> Result<Image> {
    decode_image(&fs::read(path)?)
}

/// 8-bit rendering: scale by `255 / dynamic_range`, round half to even, clamp.
pub fn to_preview(img: &Image, dynamic_range: f64) -> GrayImage {
    let scale = 255.0 / dynamic_range;
    let raw: Vec<u8> = img
        .data()
        .iter()
        .map(|&v| (v * scale).round_ties_even().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::from_raw(img.cols() as u32, img.rows() as u32, raw)
        .expect("buffer length matches dimensions")
}

pub fn write_preview(path: &Path, img: &Image, dynamic_range: f64) -> Result<()> {
    let format = match extension(path).as_deref() {
        Some("pgm") | Some("pnm") => ImageFormat::Pnm,
        _ => ImageFormat::Png,
    };
    let mut bytes = Cursor::new(Vec::new());
    to_preview(img, dynamic_range)
        .write_to(&mut bytes, format)
        .map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, bytes.into_inner())?;
    Ok(())
}

/// Writes `.png`/`.pgm` paths as 8-bit previews and anything else in the flat
/// float format.
pub fn write_image(path: &Path, img: &Image, dynamic_range: f64) -> Result<()> {
    match extension(path).as_deref() {
        Some("png") | Some("pgm") | Some("pnm") => write_preview(path, img, dynamic_range),
        _ => Ok(fs::write(path, encode_flat(img))?),
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}
