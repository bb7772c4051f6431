//! Image prior with separated mean-level / smoothness precisions, Gamma
//! hyperpriors (including their improper limits) and the uniform PSF prior.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{PsfBox, PsfParams};
use crate::spectral::{Fft2, Image, SpectralDiagonal, SpectralField};

/// Gamma law with shape `alpha` and *scale* `beta` (mean `alpha * beta`).
///
/// `beta = +inf` encodes the improper limits (Jeffreys with `alpha = 0`,
/// uniform on the half-line with `alpha = 1`); `beta = 0` is a Dirac at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    pub shape: f64,
    pub scale: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape >= 0.0 && shape.is_finite()) || scale.is_nan() || scale < 0.0 {
            return Err(Error::DomainError(format!(
                "invalid Gamma parameters (shape {shape}, scale {scale})"
            )));
        }
        Ok(Self { shape, scale })
    }

    pub const fn jeffreys() -> Self {
        Self { shape: 0.0, scale: f64::INFINITY }
    }

    pub const fn uniform() -> Self {
        Self { shape: 1.0, scale: f64::INFINITY }
    }

    pub const fn dirac() -> Self {
        Self { shape: 1.0, scale: 0.0 }
    }

    pub fn is_dirac(&self) -> bool {
        self.scale == 0.0
    }

    pub fn is_proper(&self) -> bool {
        self.shape > 0.0 && self.scale > 0.0 && self.scale.is_finite()
    }

    /// Conjugate update after observing `count` Gaussian components whose
    /// weighted squared norm is `energy`: shape `+ count / 2`, inverse scale
    /// `+ energy / 2`.
    pub fn posterior(&self, count: f64, energy: f64) -> Result<GammaPrior> {
        if self.is_dirac() {
            return Ok(*self);
        }
        let shape = self.shape + 0.5 * count;
        let inv_scale = self.scale.recip() + 0.5 * energy;
        if inv_scale <= 0.0 {
            return Err(Error::DegenerateUpdate(format!(
                "zero energy with improper prior (shape {shape}) gives infinite scale"
            )));
        }
        if shape <= 0.0 {
            return Err(Error::DegenerateUpdate(format!("posterior shape {shape} is not positive")));
        }
        Ok(GammaPrior { shape, scale: inv_scale.recip() })
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }
}

/// Hyperpriors for the noise, mean-level and smoothness precisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub eps: GammaPrior,
    pub zero: GammaPrior,
    pub one: GammaPrior,
}

impl HyperParams {
    pub const fn jeffreys() -> Self {
        Self { eps: GammaPrior::jeffreys(), zero: GammaPrior::jeffreys(), one: GammaPrior::jeffreys() }
    }

    pub const fn uniform() -> Self {
        Self { eps: GammaPrior::uniform(), zero: GammaPrior::uniform(), one: GammaPrior::uniform() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("eps", self.eps), ("zero", self.zero), ("one", self.one)] {
            GammaPrior::new(g.shape, g.scale)?;
            if name != "zero" && g.is_dirac() {
                return Err(Error::DomainError(format!("precision {name} cannot have a Dirac prior")));
            }
        }
        Ok(())
    }
}

/// Current values of the three precisions (inverse variances).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionState {
    pub gamma_eps: f64,
    pub gamma_0: f64,
    pub gamma_1: f64,
}

impl PrecisionState {
    pub fn new(gamma_eps: f64, gamma_0: f64, gamma_1: f64) -> Result<Self> {
        if !(gamma_eps > 0.0 && gamma_1 > 0.0 && gamma_0 >= 0.0)
            || !(gamma_eps.is_finite() && gamma_0.is_finite() && gamma_1.is_finite())
        {
            return Err(Error::DomainError(format!(
                "invalid precisions ({gamma_eps}, {gamma_0}, {gamma_1})"
            )));
        }
        Ok(Self { gamma_eps, gamma_0, gamma_1 })
    }
}

/// How the mean-level precision is handled by the sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorMode {
    /// `gamma_0` is sampled from its conditional.
    Full,
    /// `gamma_0` is integrated out: fixed at 0 and never drawn. Only proper when
    /// the null frequency is observed.
    MarginalizedMeanLevel,
}

impl PriorMode {
    /// Marginalized mode, refused when the transfer function vanishes at the
    /// null frequency.
    pub fn marginalized(h: &SpectralDiagonal) -> Result<Self> {
        if h.dc().norm() == 0.0 {
            return Err(Error::SingularCovariance(0));
        }
        Ok(Self::MarginalizedMeanLevel)
    }
}

fn check_differential(d: &SpectralDiagonal) -> Result<()> {
    let scale = d.values().iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let dc = d.dc().norm();
    if dc > 1e-12 * scale.max(1.0) {
        return Err(Error::NonDifferentialOperator(dc));
    }
    Ok(())
}

/// Fourier-domain prior precision: `gamma_0` at the null frequency and
/// `gamma_1 |d_n|^2` elsewhere.
pub fn precision_diagonal(state: &PrecisionState, d: &SpectralDiagonal) -> Result<SpectralDiagonal> {
    check_differential(d)?;
    let mut values: Vec<f64> = d.values().iter().map(|c| state.gamma_1 * c.norm_sqr()).collect();
    values[0] = state.gamma_0;
    SpectralDiagonal::from_real(d.side(), values)
}

/// Energy-penalty alternative `gamma_0 + gamma_1 |d_n|^2` at every frequency.
/// Its log-determinant does not separate in the two precisions.
pub fn energy_precision_diagonal(state: &PrecisionState, d: &SpectralDiagonal) -> SpectralDiagonal {
    let values = d.values().iter().map(|c| state.gamma_0 + state.gamma_1 * c.norm_sqr()).collect();
    SpectralDiagonal::from_real(d.side(), values).expect("same grid")
}

/// Sum of the logs of a real diagonal, i.e. the log-determinant of the operator.
pub fn diagonal_log_det(diag: &SpectralDiagonal) -> f64 {
    diag.values().iter().map(|c| c.re.ln()).sum()
}

/// Separable log-determinant of [`precision_diagonal`]:
/// `log g0 + (N - 1) log g1 + sum_{n != 0} log |d_n|^2`.
pub fn separable_log_det(state: &PrecisionState, d: &SpectralDiagonal) -> Result<f64> {
    check_differential(d)?;
    let n = d.len() as f64;
    let mut acc = state.gamma_0.ln() + (n - 1.0) * state.gamma_1.ln();
    for c in &d.values()[1..] {
        let p = c.norm_sqr();
        if p == 0.0 {
            return Err(Error::SingularPrior("operator vanishes at a non-null frequency".into()));
        }
        acc += p.ln();
    }
    Ok(acc)
}

/// Log-density of the Gamma law (shape `alpha`, scale `beta`).
pub fn gamma_logpdf(g: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::DomainError(format!("Gamma density evaluated at {g}")));
    }
    if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
        return Err(Error::DomainError(format!("improper Gamma parameters ({alpha}, {beta})")));
    }
    Ok(-alpha * beta.ln() - ln_gamma(alpha) + (alpha - 1.0) * g.ln() - g / beta)
}

/// One draw from the Gamma law (shape `alpha`, scale `beta`).
pub fn gamma_sample<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
        return Err(Error::DomainError(format!("cannot sample Gamma({alpha}, {beta})")));
    }
    let dist = rand_distr::Gamma::new(alpha, beta)
        .map_err(|e| Error::DomainError(format!("Gamma({alpha}, {beta}): {e}")))?;
    Ok(rng.sample(dist))
}

/// Draw from a [`GammaPrior`]; a Dirac yields 0.
pub fn gamma_prior_sample<R: Rng + ?Sized>(law: &GammaPrior, rng: &mut R) -> Result<f64> {
    if law.is_dirac() {
        return Ok(0.0);
    }
    gamma_sample(law.shape, law.scale, rng)
}

/// Uniform draw on the PSF box, components drawn in the order
/// `(w_alpha, w_beta, phi)`.
pub fn psf_prior_sample<R: Rng + ?Sized>(b: &PsfBox, rng: &mut R) -> PsfParams {
    let (lo, width) = (b.lower().as_array(), b.widths());
    let mut v = [0.0; 3];
    for i in 0..3 {
        v[i] = lo[i] + width[i] * rng.random::<f64>();
    }
    PsfParams::from_array(v)
}

/// Prior image draw: white spectral noise shaped by the inverse square root of
/// [`precision_diagonal`], transformed back to the spatial domain.
pub fn sample_prior_image<R: Rng + ?Sized>(
    state: &PrecisionState,
    d: &SpectralDiagonal,
    rng: &mut R,
) -> Result<Image> {
    let prec = precision_diagonal(state, d)?;
    if let Some(i) = prec.values().iter().position(|c| c.re <= 0.0) {
        return Err(Error::SingularPrior(format!("zero prior precision at frequency {i}")));
    }
    let side = d.side();
    let fft = Fft2::new(side);
    let mut buf = vec![Complex64::new(0.0, 0.0); side * side];
    crate::spectral::fill_white_spectral(&fft, rng, &mut buf);
    for (c, p) in buf.iter_mut().zip(prec.values()) {
        *c *= p.re.sqrt().recip();
    }
    Ok(fft.idft2_unchecked(&SpectralField::new(side, buf)?))
}

/// Log-density of the circulant Gaussian image prior, partition function
/// included.
pub fn prior_image_logpdf(x: &Image, state: &PrecisionState, d: &SpectralDiagonal) -> Result<f64> {
    if !(state.gamma_0 > 0.0 && state.gamma_1 > 0.0) {
        return Err(Error::SingularPrior("both prior precisions must be positive".into()));
    }
    if x.side() != d.side() {
        return Err(Error::ShapeMismatch { left: x.len(), right: d.len() });
    }
    let log_det = separable_log_det(state, d)?;
    let xhat = Fft2::new(x.side()).dft2(x);
    let n = x.len() as f64;
    let mean_term = state.gamma_0 * xhat.dc().norm_sqr();
    let smooth: f64 = xhat
        .data()
        .iter()
        .zip(d.values())
        .map(|(a, b)| (a * b).norm_sqr())
        .sum();
    Ok(-0.5 * n * (2.0 * PI).ln() + 0.5 * log_det - 0.5 * mean_term - 0.5 * state.gamma_1 * smooth)
}

/// Log of the multivariate Student law obtained by integrating a Gaussian
/// with precision `gamma * Gamma_mat` against `gamma ~ Gamma(alpha, beta)`.
///
/// `quad_form` is `x^T Gamma_mat x`, `log_det` is `log det Gamma_mat`, `dim`
/// the dimension.
pub fn student_marginal_logpdf(quad_form: f64, log_det: f64, dim: usize, alpha: f64, beta: f64) -> f64 {
    let h = 0.5 * dim as f64;
    h * beta.ln() + 0.5 * log_det + ln_gamma(alpha + h)
        - h * (2.0 * PI).ln()
        - ln_gamma(alpha)
        - (alpha + h) * (1.0 + 0.5 * beta * quad_form).ln()
}
