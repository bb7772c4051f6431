//! Parametric Gaussian PSF defined in the Fourier domain and the linear
//! observation model `y = H_w x + noise`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::spectral::{reduced_frequency, Fft2, Image, SpectralDiagonal, SpectralField};

/// Gaussian PSF parameters: two widths and a rotation angle in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsfParams {
    pub w_alpha: f64,
    pub w_beta: f64,
    pub phi: f64,
}

impl PsfParams {
    pub fn new(w_alpha: f64, w_beta: f64, phi: f64) -> Result<Self> {
        if !(w_alpha > 0.0 && w_alpha.is_finite() && w_beta > 0.0 && w_beta.is_finite()) {
            return Err(Error::DomainError(format!(
                "PSF widths must be positive, got ({w_alpha}, {w_beta})"
            )));
        }
        if !phi.is_finite() {
            return Err(Error::DomainError("PSF angle must be finite".into()));
        }
        Ok(Self { w_alpha, w_beta, phi })
    }

    /// Same PSF with the angle reduced to `[0, pi)`; the transfer function has
    /// period `pi` in the angle.
    pub fn canonical(self) -> Self {
        let phi = self.phi.rem_euclid(PI);
        Self { phi: if phi >= PI { 0.0 } else { phi }, ..self }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.w_alpha, self.w_beta, self.phi]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self { w_alpha: v[0], w_beta: v[1], phi: v[2] }
    }
}

/// Componentwise bounds of the uniform PSF prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsfBox {
    lower: PsfParams,
    upper: PsfParams,
}

impl PsfBox {
    pub fn new(lower: PsfParams, upper: PsfParams) -> Result<Self> {
        for (i, (lo, hi)) in lower.as_array().iter().zip(upper.as_array()).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && *lo < hi) {
                return Err(Error::InvalidBox(format!(
                    "component {i}: [{lo}, {hi}] has no positive width"
                )));
            }
        }
        if lower.w_alpha <= 0.0 || lower.w_beta <= 0.0 {
            return Err(Error::InvalidBox("width bounds must be positive".into()));
        }
        Ok(Self { lower, upper })
    }

    /// Box `[nominal - delta, nominal + delta]`.
    pub fn centered(nominal: PsfParams, delta: [f64; 3]) -> Result<Self> {
        let c = nominal.as_array();
        Self::new(
            PsfParams::from_array([c[0] - delta[0], c[1] - delta[1], c[2] - delta[2]]),
            PsfParams::from_array([c[0] + delta[0], c[1] + delta[1], c[2] + delta[2]]),
        )
    }

    pub fn lower(&self) -> PsfParams {
        self.lower
    }

    pub fn upper(&self) -> PsfParams {
        self.upper
    }

    pub fn center(&self) -> PsfParams {
        let (l, u) = (self.lower.as_array(), self.upper.as_array());
        PsfParams::from_array([0.5 * (l[0] + u[0]), 0.5 * (l[1] + u[1]), 0.5 * (l[2] + u[2])])
    }

    pub fn contains(&self, w: &PsfParams) -> bool {
        let (l, u, v) = (self.lower.as_array(), self.upper.as_array(), w.as_array());
        (0..3).all(|i| l[i] <= v[i] && v[i] <= u[i])
    }

    pub fn widths(&self) -> [f64; 3] {
        let (l, u) = (self.lower.as_array(), self.upper.as_array());
        [u[0] - l[0], u[1] - l[1], u[2] - l[2]]
    }
}

/// Precomputed reduced-frequency products for fast repeated evaluation of the
/// Gaussian transfer function on one grid.
///
/// On the Nyquist row/column of even grids the frequency `-0.5` aliases `+0.5`;
/// there the transfer value is averaged over both aliases, which keeps it
/// Hermitian-symmetric (the blur of a real image stays real).
#[derive(Debug, Clone)]
pub struct GaussianPsfGrid {
    side: usize,
    nu_a2: Vec<f64>,
    nu_b2: Vec<f64>,
    nu_ab: Vec<f64>,
    nyquist: Vec<bool>,
}

impl GaussianPsfGrid {
    pub fn new(side: usize) -> Self {
        let n = side * side;
        let mut grid = Self {
            side,
            nu_a2: Vec::with_capacity(n),
            nu_b2: Vec::with_capacity(n),
            nu_ab: Vec::with_capacity(n),
            nyquist: Vec::with_capacity(n),
        };
        let is_nyq = |k: usize| side.is_multiple_of(2) && k == side / 2;
        for p in 0..side {
            let a = reduced_frequency(p, side);
            for q in 0..side {
                let b = reduced_frequency(q, side);
                grid.nu_a2.push(a * a);
                grid.nu_b2.push(b * b);
                grid.nu_ab.push(a * b);
                grid.nyquist.push(is_nyq(p) || is_nyq(q));
            }
        }
        grid
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Real transfer values written into `out`.
    pub fn fill(&self, w: &PsfParams, out: &mut [f64]) {
        assert_eq!(out.len(), self.nu_a2.len());
        let (s, c) = w.phi.sin_cos();
        let ca = w.w_alpha * c * c + w.w_beta * s * s;
        let cb = w.w_alpha * s * s + w.w_beta * c * c;
        let cab = 2.0 * s * c * (w.w_alpha - w.w_beta);
        let k = 2.0 * PI * PI;
        for i in 0..out.len() {
            let even = self.nu_a2[i] * ca + self.nu_b2[i] * cb;
            let cross = self.nu_ab[i] * cab;
            out[i] = if self.nyquist[i] {
                (-k * even).exp() * (k * cross).cosh()
            } else {
                (-k * (even + cross)).exp()
            };
        }
    }

    pub fn transfer(&self, w: &PsfParams) -> SpectralDiagonal {
        let mut out = vec![0.0; self.side * self.side];
        self.fill(w, &mut out);
        SpectralDiagonal::from_real(self.side, out).expect("grid shape")
    }
}

/// Transfer function of the normalized Gaussian PSF on the reduced-frequency
/// grid. Real, positive and exactly 1 at the null frequency.
pub fn gaussian_psf_transfer(params: &PsfParams, side: usize) -> SpectralDiagonal {
    GaussianPsfGrid::new(side).transfer(params)
}

/// Direct evaluation of the Gaussian transfer at one reduced frequency.
pub fn gaussian_transfer_at(params: &PsfParams, nu_a: f64, nu_b: f64) -> f64 {
    let (s, c) = params.phi.sin_cos();
    let q = nu_a * nu_a * (params.w_alpha * c * c + params.w_beta * s * s)
        + nu_b * nu_b * (params.w_alpha * s * s + params.w_beta * c * c)
        + 2.0 * nu_a * nu_b * s * c * (params.w_alpha - params.w_beta);
    (-2.0 * PI * PI * q).exp()
}

/// Per-frequency product `h * xhat`.
pub fn apply_forward(h: &SpectralDiagonal, xhat: &SpectralField) -> Result<SpectralField> {
    if h.len() != xhat.len() {
        return Err(Error::ShapeMismatch { left: h.len(), right: xhat.len() });
    }
    let data: Vec<Complex64> = h.values().iter().zip(xhat.data()).map(|(a, b)| a * b).collect();
    SpectralField::new(xhat.side(), data)
}

/// Noise-free blurred image `H_w x`.
pub fn blur(x: &Image, h: &SpectralDiagonal) -> Result<Image> {
    let fft = Fft2::new(x.side());
    let blurred = apply_forward(h, &fft.dft2(x))?;
    fft.idft2_checked(&blurred, crate::spectral::DEFAULT_SYMMETRY_TOL)
}

/// Simulated observation `y = H_w x + e` with white Gaussian noise of
/// precision `gamma_eps`. Noise is drawn in the spatial domain, pixel by
/// pixel in row-major order.
pub fn simulate_data<R: Rng + ?Sized>(
    x: &Image,
    params: &PsfParams,
    gamma_eps: f64,
    rng: &mut R,
) -> Result<Image> {
    let h = gaussian_psf_transfer(params, x.side());
    simulate_with_transfer(x, &h, gamma_eps, rng)
}

pub fn simulate_with_transfer<R: Rng + ?Sized>(
    x: &Image,
    h: &SpectralDiagonal,
    gamma_eps: f64,
    rng: &mut R,
) -> Result<Image> {
    if !(gamma_eps > 0.0 && gamma_eps.is_finite()) {
        return Err(Error::DomainError(format!("noise precision {gamma_eps} must be positive")));
    }
    let clean = blur(x, h)?;
    let sd = gamma_eps.sqrt().recip();
    let data = clean
        .data()
        .iter()
        .map(|v| v + sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Image::new(x.side(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{dft2, idft2, Stencil};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn null_frequency_is_one() {
        for w in [(20.0, 7.0, 1.0), (0.3, 5.0, 2.9), (1.0, 1.0, 0.0)] {
            let p = PsfParams::new(w.0, w.1, w.2).unwrap();
            let h = gaussian_psf_transfer(&p, 16);
            assert_eq!(h.dc(), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn isotropic_psf_ignores_angle() {
        let a = gaussian_psf_transfer(&PsfParams::new(3.0, 3.0, 0.0).unwrap(), 8);
        let b = gaussian_psf_transfer(&PsfParams::new(3.0, 3.0, 1.1).unwrap(), 8);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn nyquist_value_for_unit_widths() {
        let p = PsfParams::new(1.0, 1.0, 0.0).unwrap();
        let h = gaussian_psf_transfer(&p, 8);
        let expected = (-PI * PI / 2.0).exp();
        assert!((h.get(4, 0).re - expected).abs() < 1e-15);
        assert!((expected - 7.192e-3).abs() < 1e-6);
    }

    #[test]
    fn matches_direct_formula_off_nyquist() {
        let p = PsfParams::new(4.0, 1.5, 0.7).unwrap();
        let h = gaussian_psf_transfer(&p, 9);
        for u in 0..9 {
            for v in 0..9 {
                let direct =
                    gaussian_transfer_at(&p, reduced_frequency(u, 9), reduced_frequency(v, 9));
                assert!((h.get(u, v).re - direct).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rotated_transfer_is_hermitian() {
        let p = PsfParams::new(0.8, 0.2, 0.6).unwrap();
        let h = gaussian_psf_transfer(&p, 8);
        assert!(h.hermitian_asymmetry() < 1e-15);
        assert!(h.values().iter().all(|c| c.re > 0.0 && c.im == 0.0));
    }

    #[test]
    fn wider_alpha_lowers_every_value() {
        let grid = GaussianPsfGrid::new(12);
        let lo = grid.transfer(&PsfParams::new(2.0, 1.0, 0.0).unwrap());
        let hi = grid.transfer(&PsfParams::new(2.5, 1.0, 0.0).unwrap());
        for (a, b) in lo.values().iter().zip(hi.values()) {
            assert!(b.re <= a.re);
        }
    }

    #[test]
    fn canonical_angle_range() {
        let p = PsfParams::new(1.0, 2.0, -0.5).unwrap().canonical();
        assert!((p.phi - (PI - 0.5)).abs() < 1e-12);
        let q = PsfParams::new(1.0, 2.0, 7.0).unwrap().canonical();
        assert!(q.phi >= 0.0 && q.phi < PI);
        let g = GaussianPsfGrid::new(8);
        let (a, b) = (g.transfer(&PsfParams::new(1.0, 2.0, 7.0).unwrap()), g.transfer(&q));
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_identity_and_shape_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = crate::spectral::white_image(6, &mut rng);
        let xhat = dft2(&x);
        let out = apply_forward(&SpectralDiagonal::identity(6), &xhat).unwrap();
        assert_eq!(out, xhat);
        let h = SpectralDiagonal::identity(4);
        assert!(matches!(apply_forward(&h, &xhat), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn forward_matches_spatial_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = crate::spectral::white_image(8, &mut rng);
        let s = Stencil::new(3, 2, vec![0.1, 0.4, -0.2, 0.9, 0.3, 0.05], (2, 1)).unwrap();
        let h = crate::spectral::diagonalize_kernel(&s, 8).unwrap();
        let y = idft2(&apply_forward(&h, &dft2(&x)).unwrap()).unwrap();
        let direct = crate::spectral::circular_convolve(&x, &s).unwrap();
        let err: f64 =
            y.data().iter().zip(direct.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-10 * direct.norm());
    }

    #[test]
    fn vanishing_noise_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = crate::spectral::white_image(16, &mut rng);
        let p = PsfParams::new(2.0, 1.0, 0.3).unwrap();
        let clean = blur(&x, &gaussian_psf_transfer(&p, 16)).unwrap();
        let y = simulate_data(&x, &p, 1e12, &mut rng).unwrap();
        let diff: f64 =
            y.data().iter().zip(clean.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(diff / clean.norm() < 1e-4);
    }

    #[test]
    fn noise_variance_matches_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Image::zeros(100);
        let p = PsfParams::new(2.0, 1.0, 0.3).unwrap();
        let y = simulate_data(&x, &p, 0.5, &mut rng).unwrap();
        let var = y.data().iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
        assert!((var - 2.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn invalid_inputs() {
        assert!(PsfParams::new(0.0, 1.0, 0.0).is_err());
        let p = PsfParams::new(1.0, 1.0, 0.0).unwrap();
        assert!(PsfBox::new(p, p).is_err());
        let x = Image::zeros(4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(simulate_data(&x, &p, 0.0, &mut rng).is_err());
    }
}
