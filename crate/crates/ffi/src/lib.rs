//! C ABI over `aitv-denoise`.
//!
//! Images and solver results are opaque heap handles owned by the caller and
//! released with their `*_free` function. Every fallible call returns an
//! [`AitvStatus`]; on failure a description is available from
//! [`aitv_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use aitv_denoise::{
    admm_solve, io, poisson_corrupt, prox_l1_minus_l2, psnr, rescale_to_peak, ssim, Error, Image,
    NoiseSpec, Regularizer, SolverConfig, SolverResult,
};

/// Opaque grayscale image.
pub struct AitvImage(Image);

/// Opaque solver output.
pub struct AitvResult {
    image: AitvImage,
    result: SolverResult,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AitvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    SolverFailure = 4,
    IoError = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AitvRegularizer {
    Aitv = 0,
    Tv = 1,
}

/// Plain-data mirror of the solver configuration.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AitvSolverConfig {
    pub lambda: f64,
    pub alpha: f64,
    pub beta0: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub max_iters: u32,
    /// One of the `AitvRegularizer` values.
    pub regularizer: u32,
    pub beta_cap: f64,
}

impl From<SolverConfig> for AitvSolverConfig {
    fn from(c: SolverConfig) -> Self {
        Self {
            lambda: c.lambda,
            alpha: c.alpha,
            beta0: c.beta0,
            sigma: c.sigma,
            epsilon: c.epsilon,
            max_iters: c.max_iters.min(u32::MAX as usize) as u32,
            regularizer: match c.regularizer {
                Regularizer::Aitv => AitvRegularizer::Aitv as u32,
                Regularizer::TvIsotropic => AitvRegularizer::Tv as u32,
            },
            beta_cap: c.beta_cap,
        }
    }
}

impl TryFrom<AitvSolverConfig> for SolverConfig {
    type Error = (AitvStatus, String);

    fn try_from(c: AitvSolverConfig) -> Result<Self, Self::Error> {
        let regularizer = match c.regularizer {
            0 => Regularizer::Aitv,
            1 => Regularizer::TvIsotropic,
            other => {
                return Err((AitvStatus::InvalidArgument, format!("unknown regularizer {other}")))
            }
        };
        Ok(Self {
            lambda: c.lambda,
            alpha: c.alpha,
            beta0: c.beta0,
            sigma: c.sigma,
            epsilon: c.epsilon,
            max_iters: c.max_iters as usize,
            regularizer,
            beta_cap: c.beta_cap,
        })
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> AitvStatus {
    match err {
        Error::ShapeMismatch { .. } => AitvStatus::ShapeMismatch,
        Error::NonFiniteIterate { .. } | Error::NonNegligibleImaginary { .. } => {
            AitvStatus::SolverFailure
        }
        Error::Io(_) => AitvStatus::IoError,
        _ => AitvStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guard(f: impl FnOnce() -> Result<(), (AitvStatus, String)>) -> AitvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AitvStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside aitv");
            AitvStatus::Panic
        }
    }
}

fn lift(err: Error) -> (AitvStatus, String) {
    (status_of(&err), err.to_string())
}

fn null() -> (AitvStatus, String) {
    (AitvStatus::NullPointer, "null pointer argument".into())
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a Path, (AitvStatus, String)> {
    if path.is_null() {
        return Err(null());
    }
    CStr::from_ptr(path)
        .to_str()
        .map(Path::new)
        .map_err(|_| (AitvStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

fn emit_image(out: *mut *mut AitvImage, img: Image) {
    // SAFETY: callers check `out` for null before computing `img`.
    unsafe { *out = Box::into_raw(Box::new(AitvImage(img))) };
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn aitv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn aitv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Fills `out` with the default configuration.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one `AitvSolverConfig`.
#[no_mangle]
pub unsafe extern "C" fn aitv_solver_config_default(out: *mut AitvSolverConfig) -> AitvStatus {
    if out.is_null() {
        set_last_error("null pointer argument");
        return AitvStatus::NullPointer;
    }
    *out = SolverConfig::default().into();
    AitvStatus::Ok
}

/// Copies `rows * cols` row-major values into a new image.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aitv_image_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut AitvImage,
) -> AitvStatus {
    guard(|| {
        if data.is_null() || out.is_null() {
            return Err(null());
        }
        let len = rows
            .checked_mul(cols)
            .ok_or((AitvStatus::InvalidArgument, "dimensions overflow".into()))?;
        let values = std::slice::from_raw_parts(data, len).to_vec();
        let img = Image::new(rows, cols, values).map_err(lift)?;
        emit_image(out, img);
        Ok(())
    })
}

/// Reads a grayscale PNG, binary PGM, or flat float file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aitv_image_read(path: *const c_char, out: *mut *mut AitvImage) -> AitvStatus {
    guard(|| {
        let path = path_arg(path)?;
        if out.is_null() {
            return Err(null());
        }
        let img = io::read_image(path).map_err(lift)?;
        emit_image(out, img);
        Ok(())
    })
}

/// Writes the image; `.png`/`.pgm` paths get an 8-bit preview scaled by
/// `255 / dynamic_range`, other paths the flat float format.
///
/// # Safety
/// `image` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn aitv_image_write(
    image: *const AitvImage,
    path: *const c_char,
    dynamic_range: f64,
) -> AitvStatus {
    guard(|| {
        let path = path_arg(path)?;
        let img = image.as_ref().ok_or_else(null)?;
        io::write_image(path, &img.0, dynamic_range).map_err(lift)
    })
}

/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aitv_image_rows(image: *const AitvImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.rows())
}

/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aitv_image_cols(image: *const AitvImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.cols())
}

/// Copies the row-major pixels into `out`, which holds `len` doubles.
///
/// # Safety
/// `image` must be a live handle and `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn aitv_image_copy_data(
    image: *const AitvImage,
    out: *mut f64,
    len: usize,
) -> AitvStatus {
    guard(|| {
        let img = image.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let data = img.0.data();
        if len < data.len() {
            return Err((
                AitvStatus::BufferTooSmall,
                format!("buffer holds {len} values, image has {}", data.len()),
            ));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), out, data.len());
        Ok(())
    })
}

/// # Safety
/// `image` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aitv_image_free(image: *mut AitvImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// # Safety
/// `image` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aitv_rescale_to_peak(
    image: *const AitvImage,
    peak: f64,
    out: *mut *mut AitvImage,
) -> AitvStatus {
    guard(|| {
        let img = image.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let scaled = rescale_to_peak(&img.0, peak).map_err(lift)?;
        emit_image(out, scaled);
        Ok(())
    })
}

/// Independent Poisson draw per pixel with the pixel as mean; reproducible
/// for a given `seed`.
///
/// # Safety
/// `mean` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aitv_poisson_corrupt(
    mean: *const AitvImage,
    seed: u64,
    out: *mut *mut AitvImage,
) -> AitvStatus {
    guard(|| {
        let img = mean.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let spec = NoiseSpec { peak: img.0.max().max(f64::MIN_POSITIVE), seed };
        let noisy = poisson_corrupt(&img.0, &spec).map_err(lift)?;
        emit_image(out, noisy);
        Ok(())
    })
}

/// Runs the ADMM solver on `noisy`. A NULL `config` selects the defaults.
///
/// # Safety
/// `noisy` must be a live handle, `config` NULL or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn aitv_denoise(
    noisy: *const AitvImage,
    config: *const AitvSolverConfig,
    out: *mut *mut AitvResult,
) -> AitvStatus {
    guard(|| {
        let f = noisy.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let cfg = match config.as_ref() {
            Some(c) => SolverConfig::try_from(*c)?,
            None => SolverConfig::default(),
        };
        let result = admm_solve(&f.0, &cfg).map_err(lift)?;
        let image = AitvImage(result.u_star.clone());
        *out = Box::into_raw(Box::new(AitvResult { image, result }));
        Ok(())
    })
}

/// Borrowed view of the denoised image, valid while `result` lives.
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aitv_result_image(result: *const AitvResult) -> *const AitvImage {
    result.as_ref().map_or(ptr::null(), |r| &r.image as *const AitvImage)
}

/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aitv_result_iterations(result: *const AitvResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.iterations)
}

/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aitv_result_converged(result: *const AitvResult) -> bool {
    result.as_ref().is_some_and(|r| r.result.converged)
}

/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aitv_result_wall_time_seconds(result: *const AitvResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.result.wall_time.as_secs_f64())
}

/// Copies the per-iteration relative change of `u`. Its length equals
/// `aitv_result_iterations`.
///
/// # Safety
/// `result` must be a live handle and `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn aitv_result_copy_rel_change_history(
    result: *const AitvResult,
    out: *mut f64,
    len: usize,
) -> AitvStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let h = &r.result.rel_change_history;
        if len < h.len() {
            return Err((
                AitvStatus::BufferTooSmall,
                format!("buffer holds {len} values, history has {}", h.len()),
            ));
        }
        ptr::copy_nonoverlapping(h.as_ptr(), out, h.len());
        Ok(())
    })
}

/// # Safety
/// `result` must be NULL or a handle not yet freed. Image views obtained from
/// it become dangling.
#[no_mangle]
pub unsafe extern "C" fn aitv_result_free(result: *mut AitvResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// PSNR in dB; `+inf` for identical images.
///
/// # Safety
/// `u` and `reference` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aitv_psnr(
    u: *const AitvImage,
    reference: *const AitvImage,
    dynamic_range: f64,
    out: *mut f64,
) -> AitvStatus {
    guard(|| {
        let (u, g) = (u.as_ref().ok_or_else(null)?, reference.as_ref().ok_or_else(null)?);
        if out.is_null() {
            return Err(null());
        }
        *out = psnr(&u.0, &g.0, dynamic_range).map_err(lift)?;
        Ok(())
    })
}

/// Mean SSIM with an 11x11 Gaussian window.
///
/// # Safety
/// `u` and `reference` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aitv_ssim(
    u: *const AitvImage,
    reference: *const AitvImage,
    dynamic_range: f64,
    out: *mut f64,
) -> AitvStatus {
    guard(|| {
        let (u, g) = (u.as_ref().ok_or_else(null)?, reference.as_ref().ok_or_else(null)?);
        if out.is_null() {
            return Err(null());
        }
        *out = ssim(&u.0, &g.0, dynamic_range).map_err(lift)?;
        Ok(())
    })
}

/// Proximal map of `||.||_1 - alpha ||.||_2` with step `beta` on a vector of
/// length `n`. `x` and `out` may alias.
///
/// # Safety
/// `x` and `out` must each point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn aitv_prox_l1_minus_l2(
    x: *const f64,
    n: usize,
    alpha: f64,
    beta: f64,
    out: *mut f64,
) -> AitvStatus {
    guard(|| {
        if x.is_null() || out.is_null() {
            return Err(null());
        }
        let input = std::slice::from_raw_parts(x, n).to_vec();
        let y = prox_l1_minus_l2(&input, alpha, beta).map_err(lift)?;
        ptr::copy(y.as_ptr(), out, n);
        Ok(())
    })
}
