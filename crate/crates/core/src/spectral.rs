//! Unitary 2-D DFT on square grids, diagonalization of circulant (BCCB)
//! operators and Hermitian-symmetric white noise in the Fourier domain.
//!
//! Conventions used throughout the crate:
//!
//! * images are square, stored row-major, index `(p, q)` maps to `p * side + q`;
//! * [`dft2`] and [`idft2`] are unitary (scaled by `1 / side` each way), so
//!   Euclidean norms are identical in both domains;
//! * an operator diagonal is the *un-normalized* DFT of the circularly embedded
//!   point response, so applying the operator is a per-frequency product.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative tolerance used by [`idft2`] for the Hermitian-symmetry check.
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-9;

/// A real square image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    side: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(side: usize, data: Vec<f64>) -> Result<Self> {
        if side < 2 {
            return Err(Error::InvalidImage(format!("side {side} is below 2")));
        }
        if data.len() != side * side {
            return Err(Error::InvalidImage(format!(
                "{} values for a {side}x{side} image",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!("non-finite value at pixel {i}")));
        }
        Ok(Self { side, data })
    }

    pub fn zeros(side: usize) -> Self {
        assert!(side >= 2, "image side must be at least 2");
        Self { side, data: vec![0.0; side * side] }
    }

    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(side * side);
        for p in 0..side {
            for q in 0..side {
                data.push(f(p, q));
            }
        }
        Self::new(side, data)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Total number of pixels.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.data[p * self.side + q]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Circular shift by `(dp, dq)` pixels.
    pub fn shifted(&self, dp: usize, dq: usize) -> Self {
        let n = self.side;
        Self::from_fn(n, |p, q| self.get((p + n - dp % n) % n, (q + n - dq % n) % n))
            .expect("shift preserves validity")
    }
}

/// DFT coefficients of an image, standard DFT order with the null frequency at
/// index `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    side: usize,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(side: usize, data: Vec<Complex64>) -> Result<Self> {
        if side < 2 || data.len() != side * side {
            return Err(Error::InvalidImage(format!(
                "{} coefficients for a {side}x{side} spectrum",
                data.len()
            )));
        }
        Ok(Self { side, data })
    }

    pub fn zeros(side: usize) -> Self {
        Self { side, data: vec![Complex64::new(0.0, 0.0); side * side] }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, p: usize, q: usize) -> Complex64 {
        self.data[p * self.side + q]
    }

    /// Null-frequency coefficient.
    pub fn dc(&self) -> Complex64 {
        self.data[0]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Largest `|f(n) - conj(f(-n))|` over the grid.
    pub fn hermitian_asymmetry(&self) -> f64 {
        hermitian_asymmetry(self.side, &self.data)
    }
}

/// Per-frequency values of a diagonalized circulant operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDiagonal {
    side: usize,
    values: Vec<Complex64>,
}

impl SpectralDiagonal {
    pub fn new(side: usize, values: Vec<Complex64>) -> Result<Self> {
        if side < 2 || values.len() != side * side {
            return Err(Error::InvalidImage(format!(
                "{} diagonal values for a {side}x{side} grid",
                values.len()
            )));
        }
        Ok(Self { side, values })
    }

    pub fn from_real(side: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(side, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn identity(side: usize) -> Self {
        Self { side, values: vec![Complex64::new(1.0, 0.0); side * side] }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn get(&self, p: usize, q: usize) -> Complex64 {
        self.values[p * self.side + q]
    }

    pub fn dc(&self) -> Complex64 {
        self.values[0]
    }

    /// `|value|^2` per frequency.
    pub fn power(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn hermitian_asymmetry(&self) -> f64 {
        hermitian_asymmetry(self.side, &self.values)
    }
}

fn hermitian_asymmetry(side: usize, data: &[Complex64]) -> f64 {
    let mut worst = 0.0f64;
    for p in 0..side {
        let mp = (side - p) % side;
        for q in 0..side {
            let mq = (side - q) % side;
            let d = data[p * side + q] - data[mp * side + mq].conj();
            worst = worst.max(d.norm());
        }
    }
    worst
}

/// Reduced frequency of DFT index `k` on a grid of `side`, wrapped to `[-0.5, 0.5)`.
pub fn reduced_frequency(k: usize, side: usize) -> f64 {
    let nu = k as f64 / side as f64;
    if nu >= 0.5 {
        nu - 1.0
    } else {
        nu
    }
}

/// Cached forward/inverse plans for one grid side.
#[derive(Clone)]
pub struct Fft2 {
    side: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("side", &self.side).finish()
    }
}

impl Fft2 {
    pub fn new(side: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            side,
            forward: planner.plan_fft_forward(side),
            inverse: planner.plan_fft_inverse(side),
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// In-place unitary transform of a row-major `side x side` buffer.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.forward);
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.inverse);
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.side;
        assert_eq!(buf.len(), n * n);
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        transpose_in_place(buf, n);
        plan.process_with_scratch(buf, &mut scratch);
        transpose_in_place(buf, n);
        let scale = 1.0 / n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    pub fn dft2(&self, img: &Image) -> SpectralField {
        assert_eq!(img.side(), self.side);
        let mut data: Vec<Complex64> =
            img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut data);
        SpectralField { side: self.side, data }
    }

    /// Inverse transform after a relative Hermitian-symmetry check.
    pub fn idft2_checked(&self, f: &SpectralField, rel_tol: f64) -> Result<Image> {
        assert_eq!(f.side(), self.side);
        let scale = f.data.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let asym = f.hermitian_asymmetry();
        let tolerance = rel_tol * scale;
        if asym > tolerance {
            return Err(Error::SymmetryViolation { asymmetry: asym, tolerance });
        }
        Ok(self.idft2_unchecked(f))
    }

    /// Inverse transform keeping only the real part.
    pub fn idft2_unchecked(&self, f: &SpectralField) -> Image {
        let mut data = f.data.clone();
        self.inverse_in_place(&mut data);
        Image { side: self.side, data: data.into_iter().map(|c| c.re).collect() }
    }
}

fn transpose_in_place(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Unitary DFT-2D of a real image.
pub fn dft2(img: &Image) -> SpectralField {
    Fft2::new(img.side()).dft2(img)
}

/// Unitary inverse DFT-2D; fails with [`Error::SymmetryViolation`] when the
/// input is not the spectrum of a real image.
pub fn idft2(f: &SpectralField) -> Result<Image> {
    idft2_with_tolerance(f, DEFAULT_SYMMETRY_TOL)
}

pub fn idft2_with_tolerance(f: &SpectralField, rel_tol: f64) -> Result<Image> {
    Fft2::new(f.side()).idft2_checked(f, rel_tol)
}

/// A small real convolution stencil with the position of its anchor (the
/// tap that lands on the output pixel).
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    rows: usize,
    cols: usize,
    taps: Vec<f64>,
    anchor: (usize, usize),
}

impl Stencil {
    pub fn new(rows: usize, cols: usize, taps: Vec<f64>, anchor: (usize, usize)) -> Result<Self> {
        if rows == 0 || cols == 0 || taps.len() != rows * cols {
            return Err(Error::DomainError(format!(
                "{} taps for a {rows}x{cols} stencil",
                taps.len()
            )));
        }
        if anchor.0 >= rows || anchor.1 >= cols {
            return Err(Error::DomainError(format!("anchor {anchor:?} outside stencil")));
        }
        Ok(Self { rows, cols, taps, anchor })
    }

    pub fn identity() -> Self {
        Self { rows: 1, cols: 1, taps: vec![1.0], anchor: (0, 0) }
    }

    /// The discrete Laplacian `[0 1 0; 1 -4 1; 0 1 0] / 8`.
    pub fn laplacian() -> Self {
        let taps = [0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0]
            .iter()
            .map(|v| v / 8.0)
            .collect();
        Self { rows: 3, cols: 3, taps, anchor: (1, 1) }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn anchor(&self) -> (usize, usize) {
        self.anchor
    }

    pub fn tap(&self, i: usize, j: usize) -> f64 {
        self.taps[i * self.cols + j]
    }

    /// Circular embedding in a `side x side` grid with the anchor at `(0, 0)`.
    pub fn embed(&self, side: usize) -> Result<Vec<f64>> {
        if self.rows > side || self.cols > side {
            return Err(Error::StencilTooLarge { rows: self.rows, cols: self.cols, side });
        }
        let mut grid = vec![0.0; side * side];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let p = (i + side - self.anchor.0) % side;
                let q = (j + side - self.anchor.1) % side;
                grid[p * side + q] += self.tap(i, j);
            }
        }
        Ok(grid)
    }
}

/// Eigenvalues of the circulant operator defined by `stencil`: the
/// un-normalized DFT of its circular embedding.
pub fn diagonalize_kernel(stencil: &Stencil, side: usize) -> Result<SpectralDiagonal> {
    let embedded = stencil.embed(side)?;
    let mut buf: Vec<Complex64> = embedded.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    Fft2::new(side).forward_in_place(&mut buf);
    let scale = side as f64;
    for c in buf.iter_mut() {
        *c *= scale;
    }
    Ok(SpectralDiagonal { side, values: buf })
}

/// Closed-form eigenvalue of a stencil at frequency `(u, v)`, evaluated by a
/// direct sum. Used to cross-check [`diagonalize_kernel`].
pub fn stencil_eigenvalue(stencil: &Stencil, side: usize, u: usize, v: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..stencil.rows() {
        for j in 0..stencil.cols() {
            let a = i as f64 - stencil.anchor.0 as f64;
            let b = j as f64 - stencil.anchor.1 as f64;
            let angle = -2.0 * PI * (u as f64 * a + v as f64 * b) / side as f64;
            acc += Complex64::from_polar(stencil.tap(i, j), angle);
        }
    }
    acc
}

/// DFT of an i.i.d. standard-normal real image: Hermitian-symmetric with unit
/// expected power per coefficient.
pub fn sample_white_spectral<R: Rng + ?Sized>(side: usize, rng: &mut R) -> SpectralField {
    let fft = Fft2::new(side);
    let mut data = vec![Complex64::new(0.0, 0.0); side * side];
    fill_white_spectral(&fft, rng, &mut data);
    SpectralField { side, data }
}

#[cfg(test)]
pub(crate) fn white_image<R: Rng + ?Sized>(side: usize, rng: &mut R) -> Image {
    let data = (0..side * side).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Image { side, data }
}

/// Same as [`sample_white_spectral`] using a cached plan, writing into `out`.
pub(crate) fn fill_white_spectral<R: Rng + ?Sized>(fft: &Fft2, rng: &mut R, out: &mut [Complex64]) {
    for c in out.iter_mut() {
        *c = Complex64::new(rng.sample::<f64, _>(StandardNormal), 0.0);
    }
    fft.forward_in_place(out);
    // The forward transform of real data is Hermitian up to rounding; make it exact.
    enforce_hermitian(fft.side(), out);
}

fn enforce_hermitian(side: usize, data: &mut [Complex64]) {
    for p in 0..side {
        let mp = (side - p) % side;
        for q in 0..side {
            let mq = (side - q) % side;
            let i = p * side + q;
            let j = mp * side + mq;
            if i < j {
                let avg = (data[i] + data[j].conj()) * 0.5;
                data[i] = avg;
                data[j] = avg.conj();
            } else if i == j {
                data[i].im = 0.0;
            }
        }
    }
}

/// Brute-force circular convolution of `img` with `stencil`.
pub fn circular_convolve(img: &Image, stencil: &Stencil) -> Result<Image> {
    let n = img.side();
    let k = stencil.embed(n)?;
    Image::from_fn(n, |p, q| {
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                let w = k[a * n + b];
                if w != 0.0 {
                    acc += w * img.get((p + n - a) % n, (q + n - b) % n);
                }
            }
        }
        acc
    })
}
