//! 2D DFT plumbing and the spectral solve of the u-subproblem.
//!
//! The forward transform is unnormalized and the inverse divides by `M * N`.
//! Under periodic boundaries the forward-difference operators are
//! convolutions, so their DFT symbols are
//!
//! ```text
//! sym_x(k, l) = exp(2 pi i l / N) - 1
//! sym_y(k, l) = exp(2 pi i k / M) - 1
//! ```
//!
//! and `I - Laplacian` has the real, strictly positive spectrum
//! `1 + |sym_x|^2 + |sym_y|^2`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::image::{GradField, Image};

/// Row-major complex grid, the spectral counterpart of [`Image`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_real(u: &Image) -> Self {
        Self {
            rows: u.rows(),
            cols: u.cols(),
            data: u.data().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }
}

/// Planned row and column transforms for one image size.
#[derive(Clone)]
pub struct Dft2Plan {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dft2Plan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft2Plan")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

impl Dft2Plan {
    pub fn new(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "transform dimensions must be positive");
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft(cols, FftDirection::Forward),
            row_inv: planner.plan_fft(cols, FftDirection::Inverse),
            col_fwd: planner.plan_fft(rows, FftDirection::Forward),
            col_inv: planner.plan_fft(rows, FftDirection::Inverse),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn process(&self, grid: &mut ComplexGrid, direction: FftDirection) {
        assert_eq!(grid.shape(), self.shape(), "grid does not match plan");
        let (row_fft, col_fft) = match direction {
            FftDirection::Forward => (&self.row_fwd, &self.col_fwd),
            FftDirection::Inverse => (&self.row_inv, &self.col_inv),
        };
        let (m, n) = self.shape();
        let mut scratch = vec![
            Complex64::default();
            row_fft
                .get_inplace_scratch_len()
                .max(col_fft.get_inplace_scratch_len())
        ];
        for row in grid.data.chunks_exact_mut(n) {
            row_fft.process_with_scratch(row, &mut scratch);
        }
        if m > 1 {
            let mut column = vec![Complex64::default(); m];
            for j in 0..n {
                for (i, c) in column.iter_mut().enumerate() {
                    *c = grid.data[i * n + j];
                }
                col_fft.process_with_scratch(&mut column, &mut scratch);
                for (i, c) in column.iter().enumerate() {
                    grid.data[i * n + j] = *c;
                }
            }
        }
    }

    pub fn forward(&self, u: &Image) -> ComplexGrid {
        let mut grid = ComplexGrid::from_real(u);
        self.process(&mut grid, FftDirection::Forward);
        grid
    }

    /// Inverse transform to a real image. The imaginary residue must stay
    /// below `1e-8 * (1 + max |re|)`, otherwise the spectrum did not come
    /// from a real grid.
    pub fn inverse(&self, spectrum: ComplexGrid) -> Result<Image> {
        let mut grid = spectrum;
        self.process(&mut grid, FftDirection::Inverse);
        let scale = 1.0 / (self.rows * self.cols) as f64;
        let mut residue = 0.0f64;
        let mut max_re = 0.0f64;
        let data: Vec<f64> = grid
            .data
            .iter()
            .map(|c| {
                residue = residue.max((c.im * scale).abs());
                max_re = max_re.max((c.re * scale).abs());
                c.re * scale
            })
            .collect();
        let limit = 1e-8 * (1.0 + max_re);
        if !(residue <= limit) {
            return Err(Error::NonNegligibleImaginary { residue, limit });
        }
        Image::new(self.rows, self.cols, data)
    }
}

/// Unnormalized forward 2D DFT.
pub fn dft2(u: &Image) -> ComplexGrid {
    Dft2Plan::new(u.rows(), u.cols()).forward(u)
}

/// Inverse 2D DFT (divides by `M * N`), discarding a negligible imaginary part.
pub fn idft2(spectrum: ComplexGrid) -> Result<Image> {
    let (m, n) = spectrum.shape();
    Dft2Plan::new(m, n).inverse(spectrum)
}

/// Spectral symbols of the periodic difference operators for one image size,
/// along with the transform plans that use them.
#[derive(Debug, Clone)]
pub struct SpectralKernel {
    rows: usize,
    cols: usize,
    sym_x: Vec<Complex64>,
    sym_y: Vec<Complex64>,
    denom: Vec<f64>,
    plan: Dft2Plan,
}

impl SpectralKernel {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn sym_x(&self) -> &[Complex64] {
        &self.sym_x
    }

    pub fn sym_y(&self) -> &[Complex64] {
        &self.sym_y
    }

    /// Spectrum of `I - Laplacian`.
    pub fn denom(&self) -> &[f64] {
        &self.denom
    }

    pub fn plan(&self) -> &Dft2Plan {
        &self.plan
    }

    fn check(&self, shape: (usize, usize)) -> Result<()> {
        if shape != self.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                actual: shape,
            });
        }
        Ok(())
    }
}

pub fn build_kernel(rows: usize, cols: usize) -> SpectralKernel {
    assert!(rows > 0 && cols > 0, "kernel dimensions must be positive");
    let col_sym: Vec<Complex64> = (0..cols)
        .map(|l| Complex64::from_polar(1.0, 2.0 * PI * l as f64 / cols as f64) - 1.0)
        .collect();
    let row_sym: Vec<Complex64> = (0..rows)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / rows as f64) - 1.0)
        .collect();
    let mut sym_x = Vec::with_capacity(rows * cols);
    let mut sym_y = Vec::with_capacity(rows * cols);
    let mut denom = Vec::with_capacity(rows * cols);
    for sy in &row_sym {
        for sx in &col_sym {
            sym_x.push(*sx);
            sym_y.push(*sy);
            denom.push(1.0 + sx.norm_sqr() + sy.norm_sqr());
        }
    }
    SpectralKernel {
        rows,
        cols,
        sym_x,
        sym_y,
        denom,
        plan: Dft2Plan::new(rows, cols),
    }
}

/// Solves `beta (I - Laplacian) u = beta v - y - grad^T (z - beta w)` exactly
/// by componentwise division in the Fourier domain.
pub fn solve_u_step(
    v: &Image,
    y: &Image,
    z: &GradField,
    w: &GradField,
    beta: f64,
    kernel: &SpectralKernel,
) -> Result<Image> {
    if !(beta > 0.0) {
        return Err(Error::InvalidBeta(beta));
    }
    kernel.check(v.shape())?;
    kernel.check(y.shape())?;
    kernel.check(z.shape())?;
    kernel.check(w.shape())?;

    let plan = &kernel.plan;
    let data_term = v.zip_map(y, |v, y| beta * v - y)?;
    let qx = z.x.zip_map(&w.x, |z, w| z - beta * w)?;
    let qy = z.y.zip_map(&w.y, |z, w| z - beta * w)?;
    let mut spectrum = plan.forward(&data_term);
    let qx_hat = plan.forward(&qx);
    let qy_hat = plan.forward(&qy);
    for (idx, s) in spectrum.data.iter_mut().enumerate() {
        let adjoint = kernel.sym_x[idx].conj() * qx_hat.data[idx]
            + kernel.sym_y[idx].conj() * qy_hat.data[idx];
        *s = (*s - adjoint) / (beta * kernel.denom[idx]);
    }
    plan.inverse(spectrum)
}
