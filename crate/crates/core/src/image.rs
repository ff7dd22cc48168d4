//! Dense grayscale images, gradient fields, and the periodic difference
//! operators that connect them.
//!
//! Pixels are addressed as `(row, col)` and stored row-major. The horizontal
//! component of a gradient field differences along columns, the vertical
//! component along rows. Both wrap periodically, so [`grad_adjoint`] is the
//! exact transpose of [`grad`] and the pair is diagonalized by the 2D DFT.

use crate::error::{Error, Result};

/// An `rows x cols` grid of real intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Image {
    /// Wraps row-major pixel data. Fails on zero dimensions, a length
    /// mismatch, or non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions {
                rows,
                cols,
                reason: "both dimensions must be positive",
            });
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidDimensions {
                rows,
                cols,
                reason: "data length does not equal rows * cols",
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!(rows > 0 && cols > 0, "image dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pixelwise combination of two equally shaped images.
    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Standard inner product on `R^{M x N}`.
    pub fn dot(&self, other: &Image) -> Result<f64> {
        self.ensure_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// Euclidean (Frobenius) norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Cyclic shift: the output at `(i, j)` is the input at
    /// `(i - di mod M, j - dj mod N)`.
    pub fn roll(&self, di: usize, dj: usize) -> Self {
        let (m, n) = self.shape();
        Self::from_fn(m, n, |i, j| self.get((i + m - di % m) % m, (j + n - dj % n) % n))
    }

    pub fn ensure_same_shape(&self, other: &Image) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                actual: other.shape(),
            });
        }
        Ok(())
    }
}

/// A pair of image-shaped grids: an element of the gradient space.
#[derive(Debug, Clone, PartialEq)]
pub struct GradField {
    /// Horizontal (column-direction) component.
    pub x: Image,
    /// Vertical (row-direction) component.
    pub y: Image,
}

impl GradField {
    pub fn new(x: Image, y: Image) -> Result<Self> {
        x.ensure_same_shape(&y)?;
        Ok(Self { x, y })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            x: Image::zeros(rows, cols),
            y: Image::zeros(rows, cols),
        }
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        self.x.shape()
    }

    pub fn dot(&self, other: &GradField) -> Result<f64> {
        Ok(self.x.dot(&other.x)? + self.y.dot(&other.y)?)
    }

    pub fn ensure_same_shape(&self, other: &GradField) -> Result<()> {
        self.x.ensure_same_shape(&other.x)
    }

    /// Iterates the per-pixel 2-vectors `(x, y)` in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.data().iter().copied().zip(self.y.data().iter().copied())
    }

    /// `sum |p1| + |p2|`
    pub fn norm_l1(&self) -> f64 {
        self.pixels().map(|(a, b)| a.abs() + b.abs()).sum()
    }

    /// `sqrt(sum p1^2 + p2^2)`
    pub fn norm_l2(&self) -> f64 {
        self.pixels().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt()
    }

    /// `sum sqrt(p1^2 + p2^2)`
    pub fn norm_l21(&self) -> f64 {
        self.pixels().map(|(a, b)| a.hypot(b)).sum()
    }
}

pub fn norm_l1(p: &GradField) -> f64 {
    p.norm_l1()
}

pub fn norm_l2(p: &GradField) -> f64 {
    p.norm_l2()
}

pub fn norm_l21(p: &GradField) -> f64 {
    p.norm_l21()
}

/// Forward differences with periodic wrap.
pub fn grad(u: &Image) -> GradField {
    let (m, n) = u.shape();
    let mut gx = Image::zeros(m, n);
    let mut gy = Image::zeros(m, n);
    grad_into(u, &mut gx, &mut gy);
    GradField { x: gx, y: gy }
}

pub(crate) fn grad_into(u: &Image, gx: &mut Image, gy: &mut Image) {
    let (m, n) = u.shape();
    let src = u.data();
    let dx = gx.data_mut();
    for i in 0..m {
        let row = &src[i * n..(i + 1) * n];
        let out = &mut dx[i * n..(i + 1) * n];
        for j in 0..n - 1 {
            out[j] = row[j + 1] - row[j];
        }
        out[n - 1] = row[0] - row[n - 1];
    }
    let dy = gy.data_mut();
    for i in 0..m {
        let next = if i + 1 == m { 0 } else { i + 1 };
        for j in 0..n {
            dy[i * n + j] = src[next * n + j] - src[i * n + j];
        }
    }
}

/// Transpose of [`grad`]: the negative periodic backward-difference divergence.
pub fn grad_adjoint(p: &GradField) -> Image {
    let (m, n) = p.shape();
    let mut out = Image::zeros(m, n);
    grad_adjoint_into(p, &mut out);
    out
}

pub(crate) fn grad_adjoint_into(p: &GradField, out: &mut Image) {
    let (m, n) = p.shape();
    let px = p.x.data();
    let py = p.y.data();
    let dst = out.data_mut();
    for i in 0..m {
        let prev = if i == 0 { m - 1 } else { i - 1 };
        for j in 0..n {
            let left = if j == 0 { n - 1 } else { j - 1 };
            dst[i * n + j] =
                px[i * n + left] - px[i * n + j] + py[prev * n + j] - py[i * n + j];
        }
    }
}

/// Poisson data term `sum u - f log u`, using `0 log u = 0` where `f = 0`.
pub fn poisson_fidelity(u: &Image, f: &Image) -> Result<f64> {
    u.ensure_same_shape(f)?;
    let n = u.cols();
    let mut total = 0.0;
    for (idx, (&uv, &fv)) in u.data().iter().zip(f.data()).enumerate() {
        if fv > 0.0 {
            if uv <= 0.0 {
                return Err(Error::NonPositiveIntensity {
                    row: idx / n,
                    col: idx % n,
                    value: uv,
                });
            }
            total += uv - fv * uv.ln();
        } else {
            total += uv;
        }
    }
    Ok(total)
}

/// `lambda <u - f log u, 1> + ||grad u||_1 - alpha ||grad u||_{2,1}`
pub fn objective_aitv(u: &Image, f: &Image, lambda: f64, alpha: f64) -> Result<f64> {
    let fidelity = poisson_fidelity(u, f)?;
    let g = grad(u);
    Ok(lambda * fidelity + g.norm_l1() - alpha * g.norm_l21())
}

/// `lambda <u - f log u, 1> + ||grad u||_{2,1}`, the isotropic TV model.
pub fn objective_tv(u: &Image, f: &Image, lambda: f64) -> Result<f64> {
    let fidelity = poisson_fidelity(u, f)?;
    Ok(lambda * fidelity + grad(u).norm_l21())
}
