//! Closed-form proximal operators.
//!
//! [`prox_l1_minus_l2`] evaluates
//!
//! ```text
//! argmin_y  ||y||_1 - alpha ||y||_2 + ||x - y||_2^2 / (2 beta)
//! ```
//!
//! for `alpha` in `[0, 1]`, branching on `||x||_inf` against `beta` and
//! `(1 - alpha) beta`. [`shrink_isotropic`] is the group soft-threshold used by
//! the isotropic TV baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{GradField, Image};

/// Per-pixel proximal map applied by [`prox_field`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxFlavor {
    /// `l1 - alpha l2`
    Aitv,
    /// Euclidean group shrinkage.
    Isotropic,
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

pub fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidBeta(beta))
    }
}

/// Objective minimized by [`prox_l1_minus_l2`].
pub fn l1_minus_l2_objective(y: &[f64], x: &[f64], alpha: f64, beta: f64) -> f64 {
    let l1: f64 = y.iter().map(|v| v.abs()).sum();
    let l2 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dist: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    l1 - alpha * l2 + dist / (2.0 * beta)
}

/// Proximal operator of `||.||_1 - alpha ||.||_2` with step `beta`, for any
/// vector length. Ties in the 1-sparse case resolve to the smallest index.
pub fn prox_l1_minus_l2(x: &[f64], alpha: f64, beta: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    check_beta(beta)?;
    let mut imax = 0;
    let mut inf_norm = 0.0f64;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > inf_norm {
            inf_norm = v.abs();
            imax = i;
        }
    }

    if inf_norm > beta {
        let xi: Vec<f64> = x
            .iter()
            .map(|&v| sign(v) * (v.abs() - beta).max(0.0))
            .collect();
        let xi_norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(xi_norm > 0.0, "soft-thresholded vector vanished above threshold");
        let scale = (xi_norm + alpha * beta) / xi_norm;
        Ok(xi.into_iter().map(|v| v * scale).collect())
    } else if inf_norm > (1.0 - alpha) * beta {
        let mut out = vec![0.0; x.len()];
        out[imax] = (x[imax].abs() + (alpha - 1.0) * beta) * sign(x[imax]);
        Ok(out)
    } else {
        Ok(vec![0.0; x.len()])
    }
}

/// Two-component specialization of [`prox_l1_minus_l2`] without parameter
/// validation.
#[inline]
pub(crate) fn prox_l1_minus_l2_pair(x0: f64, x1: f64, alpha: f64, beta: f64) -> (f64, f64) {
    let (a0, a1) = (x0.abs(), x1.abs());
    let inf_norm = a0.max(a1);
    if inf_norm > beta {
        let xi0 = sign(x0) * (a0 - beta).max(0.0);
        let xi1 = sign(x1) * (a1 - beta).max(0.0);
        let xi_norm = (xi0 * xi0 + xi1 * xi1).sqrt();
        let scale = (xi_norm + alpha * beta) / xi_norm;
        (xi0 * scale, xi1 * scale)
    } else if inf_norm > (1.0 - alpha) * beta {
        if a1 > a0 {
            (0.0, (a1 + (alpha - 1.0) * beta) * sign(x1))
        } else {
            ((a0 + (alpha - 1.0) * beta) * sign(x0), 0.0)
        }
    } else {
        (0.0, 0.0)
    }
}

/// Group soft-threshold: minimizer of `t ||y||_2 + ||y - s||_2^2 / 2`.
pub fn shrink_isotropic(s: &[f64], t: f64) -> Vec<f64> {
    assert!(t >= 0.0, "threshold must be nonnegative");
    let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= t {
        vec![0.0; s.len()]
    } else {
        let scale = (norm - t) / norm;
        s.iter().map(|v| v * scale).collect()
    }
}

#[inline]
pub(crate) fn shrink_isotropic_pair(s0: f64, s1: f64, t: f64) -> (f64, f64) {
    let norm = s0.hypot(s1);
    if norm <= t {
        (0.0, 0.0)
    } else {
        let scale = (norm - t) / norm;
        (s0 * scale, s1 * scale)
    }
}

/// Applies the per-pixel prox to every gradient 2-vector of `s`, with step
/// (or threshold) `1 / beta` where `beta` is the ADMM penalty.
pub fn prox_field(s: &GradField, alpha: f64, beta: f64, flavor: ProxFlavor) -> Result<GradField> {
    check_alpha(alpha)?;
    check_beta(beta)?;
    let (m, n) = s.shape();
    let mut out = GradField::zeros(m, n);
    prox_field_into(s, alpha, beta, flavor, &mut out);
    Ok(out)
}

pub(crate) fn prox_field_into(
    s: &GradField,
    alpha: f64,
    beta: f64,
    flavor: ProxFlavor,
    out: &mut GradField,
) {
    let step = 1.0 / beta;
    let GradField { x: ox, y: oy } = out;
    let (ox, oy): (&mut Image, &mut Image) = (ox, oy);
    let pixels = ox.data_mut().iter_mut().zip(oy.data_mut().iter_mut());
    for ((wx, wy), (sx, sy)) in pixels.zip(s.pixels()) {
        let (a, b) = match flavor {
            ProxFlavor::Aitv => prox_l1_minus_l2_pair(sx, sy, alpha, step),
            ProxFlavor::Isotropic => shrink_isotropic_pair(sx, sy, step),
        };
        *wx = a;
        *wy = b;
    }
}
