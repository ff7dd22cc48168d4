//! PSNR, SSIM and line profiles.
//!
//! Both metrics take an explicit dynamic range `L`. For images rescaled to a
//! peak value before corruption, `L` is that peak.

use std::io::{BufRead, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::image::Image;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    /// Decibels; `+inf` for identical images, serialized as `"inf"`.
    #[serde(serialize_with = "ser_db", deserialize_with = "de_db")]
    pub psnr_db: f64,
    pub ssim: f64,
    pub dynamic_range: f64,
}

impl QualityReport {
    pub fn compute(u: &Image, g: &Image, dynamic_range: f64) -> Result<Self> {
        Ok(Self {
            psnr_db: psnr(u, g, dynamic_range)?,
            ssim: ssim(u, g, dynamic_range)?,
            dynamic_range,
        })
    }
}

fn ser_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if *v == f64::INFINITY {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn de_db<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Db {
        Num(f64),
        Text(String),
    }
    match Db::deserialize(d)? {
        Db::Num(v) => Ok(v),
        Db::Text(t) if t == "inf" => Ok(f64::INFINITY),
        Db::Text(t) => Err(serde::de::Error::custom(format!("invalid psnr value {t:?}"))),
    }
}

fn check_range(dynamic_range: f64) -> Result<()> {
    if dynamic_range > 0.0 && dynamic_range.is_finite() {
        Ok(())
    } else {
        Err(Error::Format(format!(
            "dynamic range must be positive, got {dynamic_range}"
        )))
    }
}

pub fn mse(u: &Image, g: &Image) -> Result<f64> {
    g.ensure_same_shape(u)?;
    let sum: f64 = u
        .data()
        .iter()
        .zip(g.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / u.len() as f64)
}

/// `10 log10(L^2 / MSE)`, or `+inf` when the images are equal.
pub fn psnr(u: &Image, g: &Image, dynamic_range: f64) -> Result<f64> {
    check_range(dynamic_range)?;
    let err = mse(u, g)?;
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (dynamic_range * dynamic_range / err).log10())
}

pub(crate) fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let radius = (SSIM_WINDOW / 2) as isize;
    let mut w = [0.0; SSIM_WINDOW];
    for (k, slot) in w.iter_mut().enumerate() {
        let d = k as isize - radius;
        *slot = (-((d * d) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// Half-sample symmetric reflection: `-1 -> 0`, `n -> n - 1`.
#[inline]
pub(crate) fn reflect(idx: isize, len: usize) -> usize {
    let n = len as isize;
    let mut i = idx;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

fn blur(src: &[f64], rows: usize, cols: usize, w: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let radius = (SSIM_WINDOW / 2) as isize;
    let mut tmp = vec![0.0; src.len()];
    for i in 0..rows {
        let row = &src[i * cols..(i + 1) * cols];
        for j in 0..cols {
            let mut acc = 0.0;
            for (k, wk) in w.iter().enumerate() {
                acc += wk * row[reflect(j as isize + k as isize - radius, cols)];
            }
            tmp[i * cols + j] = acc;
        }
    }
    let mut out = vec![0.0; src.len()];
    for i in 0..rows {
        for j in 0..cols {
            let mut acc = 0.0;
            for (k, wk) in w.iter().enumerate() {
                acc += wk * tmp[reflect(i as isize + k as isize - radius, rows) * cols + j];
            }
            out[i * cols + j] = acc;
        }
    }
    out
}

/// Mean SSIM over all pixels with an 11x11 Gaussian window (std 1.5),
/// `C1 = (0.01 L)^2`, `C2 = (0.03 L)^2` and symmetric boundary extension.
pub fn ssim(u: &Image, g: &Image, dynamic_range: f64) -> Result<f64> {
    check_range(dynamic_range)?;
    g.ensure_same_shape(u)?;
    let (rows, cols) = u.shape();
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(Error::TooSmall {
            rows,
            cols,
            min: SSIM_WINDOW,
        });
    }
    let w = gaussian_window();
    let x = u.data();
    let y = g.data();
    let xx: Vec<f64> = x.iter().map(|a| a * a).collect();
    let yy: Vec<f64> = y.iter().map(|b| b * b).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();

    let mu_x = blur(x, rows, cols, &w);
    let mu_y = blur(y, rows, cols, &w);
    let e_xx = blur(&xx, rows, cols, &w);
    let e_yy = blur(&yy, rows, cols, &w);
    let e_xy = blur(&xy, rows, cols, &w);

    let c1 = (K1 * dynamic_range).powi(2);
    let c2 = (K2 * dynamic_range).powi(2);
    let mut total = 0.0;
    for k in 0..x.len() {
        total += ssim_pixel(mu_x[k], mu_y[k], e_xx[k], e_yy[k], e_xy[k], c1, c2);
    }
    Ok(total / x.len() as f64)
}

#[inline]
pub(crate) fn ssim_pixel(mx: f64, my: f64, exx: f64, eyy: f64, exy: f64, c1: f64, c2: f64) -> f64 {
    let sxx = exx - mx * mx;
    let syy = eyy - my * my;
    let sxy = exy - mx * my;
    let num = (2.0 * mx * my + c1) * (2.0 * sxy + c2);
    let den = (mx * mx + my * my + c1) * (sxx + syy + c2);
    num / den
}

/// Intensities of one row (0-based), in column order.
pub fn line_profile(u: &Image, row: usize) -> Result<Vec<f64>> {
    if row >= u.rows() {
        return Err(Error::RowOutOfRange {
            row,
            rows: u.rows(),
        });
    }
    Ok(u.row(row).to_vec())
}

/// One value per line, shortest round-trip decimal representation.
pub fn write_profile_csv<W: Write>(mut out: W, profile: &[f64]) -> Result<()> {
    for v in profile {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

pub fn read_profile_csv<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for line in input.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        values.push(
            t.parse::<f64>()
                .map_err(|e| Error::Format(format!("bad profile value {t:?}: {e}")))?,
        );
    }
    Ok(values)
}
