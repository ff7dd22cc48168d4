//! Poisson image denoising with the weighted anisotropic-isotropic total
//! variation (`||grad u||_1 - alpha ||grad u||_{2,1}`), solved by ADMM with a
//! geometrically increasing penalty.
//!
//! ```no_run
//! use aitv_denoise::{admm_solve, corrupt_at_peak, psnr, Image, NoiseSpec, SolverConfig};
//!
//! let clean = Image::from_fn(64, 64, |i, j| if i + j < 64 { 10.0 } else { 200.0 });
//! let (clean, noisy) = corrupt_at_peak(&clean, &NoiseSpec { peak: 30.0, seed: 7 }).unwrap();
//! let result = admm_solve(&noisy, &SolverConfig::default()).unwrap();
//! println!("{:.2} dB", psnr(&result.u_star, &clean, 30.0).unwrap());
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod image;
pub mod io;
pub mod manifest;
pub mod metrics;
pub mod noise;
pub mod prox;
pub mod solver;
pub mod sweep;
pub mod transforms;

pub use crate::error::{Error, Result};
pub use crate::image::{
    grad, grad_adjoint, norm_l1, norm_l2, norm_l21, objective_aitv, objective_tv, GradField, Image,
};
pub use crate::metrics::{line_profile, psnr, ssim, QualityReport};
pub use crate::noise::{corrupt_at_peak, poisson_corrupt, rescale_to_peak, NoiseSpec};
pub use crate::prox::{prox_field, prox_l1_minus_l2, shrink_isotropic, ProxFlavor};
pub use crate::solver::{
    admm_solve, admm_solve_tv, update_v, Regularizer, SolverConfig, SolverResult,
};
pub use crate::transforms::{build_kernel, dft2, idft2, solve_u_step, SpectralKernel};
