//! Peak rescaling and reproducible Poisson corruption.
//!
//! Every image row draws from its own ChaCha8 stream: the generator is seeded
//! with the 64-bit `seed` and row `i` uses stream number `i`. Rows are sampled
//! in parallel, and the output depends only on `(g, seed)`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Maximum of the clean image after rescaling.
    pub peak: f64,
    pub seed: u64,
}

/// Scales `g` so its maximum equals `peak`.
pub fn rescale_to_peak(g: &Image, peak: f64) -> Result<Image> {
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::InvalidConfig(format!("peak must be positive, got {peak}")));
    }
    let max = g.max();
    if max <= 0.0 {
        return Err(Error::AllZeroImage);
    }
    if max == peak {
        return Ok(g.clone());
    }
    let scale = peak / max;
    Ok(g.map(|v| v * scale))
}

/// Replaces every pixel by an independent Poisson draw with that pixel as
/// its mean.
pub fn poisson_corrupt(g: &Image, spec: &NoiseSpec) -> Result<Image> {
    if let Some(index) = g.data().iter().position(|&v| v < 0.0) {
        return Err(Error::NegativeMean {
            index,
            value: g.data()[index],
        });
    }
    let cols = g.cols();
    let mut out = vec![0.0; g.len()];
    out.par_chunks_mut(cols)
        .zip(g.data().par_chunks(cols))
        .enumerate()
        .for_each(|(row, (dst, src))| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(row as u64);
            for (d, &mean) in dst.iter_mut().zip(src) {
                *d = sample_poisson(&mut rng, mean) as f64;
            }
        });
    Image::new(g.rows(), g.cols(), out)
}

/// Rescales to `spec.peak`, then corrupts. Returns `(clean, noisy)`.
pub fn corrupt_at_peak(g: &Image, spec: &NoiseSpec) -> Result<(Image, Image)> {
    let clean = rescale_to_peak(g, spec.peak)?;
    let noisy = poisson_corrupt(&clean, spec)?;
    Ok((clean, noisy))
}

/// One Poisson variate. Multiplicative (Knuth) method below mean 10,
/// Hörmann's transformed rejection with squeeze (PTRS) above.
pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        0
    } else if mean < 10.0 {
        let limit = (-mean).exp();
        let mut count = 0;
        let mut product: f64 = rng.random();
        while product > limit {
            count += 1;
            product *= rng.random::<f64>();
        }
        count
    } else {
        ptrs(rng, mean)
    }
}

fn ptrs<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    let smu = mean.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    let log_mean = mean.ln();
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * log_mean - libm::lgamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}
