use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("invalid dimensions {rows}x{cols}: {reason}")]
    InvalidDimensions {
        rows: usize,
        cols: usize,
        reason: &'static str,
    },
    #[error("non-finite pixel value at index {index}")]
    NonFinite { index: usize },
    #[error("intensity {value} at ({row}, {col}) must be positive where the observation is positive")]
    NonPositiveIntensity { row: usize, col: usize, value: f64 },
    #[error("inverse transform left an imaginary residue of {residue:e} (limit {limit:e})")]
    NonNegligibleImaginary { residue: f64, limit: f64 },
    #[error("observation {value} at index {index} is negative")]
    NegativeObservation { index: usize, value: f64 },
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("beta must be positive, got {0}")]
    InvalidBeta(f64),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("iterate became non-finite at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },
    #[error("image is identically zero; cannot rescale to a peak")]
    AllZeroImage,
    #[error("Poisson mean {value} at index {index} is negative")]
    NegativeMean { index: usize, value: f64 },
    #[error("image {rows}x{cols} is smaller than the {min}x{min} SSIM window")]
    TooSmall { rows: usize, cols: usize, min: usize },
    #[error("row {row} out of range for an image with {rows} rows")]
    RowOutOfRange { row: usize, rows: usize },
    #[error("color images are not supported ({0})")]
    ColorImage(String),
    #[error("unsupported or malformed image data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
