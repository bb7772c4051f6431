//! Gibbs sampler for the joint posterior of the image, the precisions and the
//! PSF parameters.
//!
//! One iteration draws, in this order and from a single seeded stream:
//!
//! 1. the image spectrum from its Gaussian conditional (the Wiener-Hunt mean
//!    plus per-frequency white noise);
//! 2. `gamma_eps`, then `gamma_1`, then `gamma_0` (full mode only) from their
//!    conjugate Gamma conditionals;
//! 3. the PSF parameters by independent Metropolis-Hastings with the uniform
//!    prior as proposal (myopic mode only), one component at a time by
//!    default or the whole vector at once.
//!
//! The estimate is the empirical mean of the image draws; sampling stops when
//! the relative change of that running mean falls below a threshold.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{GaussianPsfGrid, PsfBox, PsfParams};
use crate::priors::{gamma_prior_sample, psf_prior_sample, GammaPrior, HyperParams, PrecisionState, PriorMode};
use crate::spectral::{
    diagonalize_kernel, fill_white_spectral, Fft2, Image, SpectralDiagonal, SpectralField, Stencil,
    DEFAULT_SYMMETRY_TOL,
};

/// How the PSF enters the sampler.
#[derive(Debug, Clone, PartialEq)]
pub enum PsfMode {
    /// Gaussian PSF with parameters sampled under a uniform prior on the box.
    Myopic(PsfBox),
    /// Gaussian PSF with known parameters; no Metropolis-Hastings step.
    Known(PsfParams),
    /// Arbitrary known transfer function.
    Transfer(SpectralDiagonal),
}

/// Proposal scheme of the PSF Metropolis-Hastings step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Proposal {
    /// The whole parameter vector is proposed at once with one accept/reject.
    Joint,
    /// One accept/reject per component, each proposing only that component.
    Componentwise,
}

/// Norm used to measure the change of the running mean between iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceNorm {
    /// `||m_k - m_{k-1}||_2 / ||m_k||_2` (identical in both domains).
    Euclidean,
    /// `sum |m_k - m_{k-1}| / sum |m_k|` over spectral coefficients (default).
    SpectralL1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub prior_mode: PriorMode,
    pub hyper: HyperParams,
    pub psf: PsfMode,
    pub proposal: Proposal,
    pub convergence_tol: f64,
    pub convergence_norm: ConvergenceNorm,
    pub max_iters: usize,
    pub burn_in_discard: usize,
    pub seed: u64,
    /// Starting precisions; `gamma_0` is ignored in marginalized mode.
    pub init: PrecisionState,
}

impl SamplerConfig {
    pub fn new(psf: PsfMode, seed: u64) -> Self {
        Self {
            prior_mode: PriorMode::MarginalizedMeanLevel,
            hyper: HyperParams::jeffreys(),
            psf,
            proposal: Proposal::Componentwise,
            convergence_tol: 1e-3,
            convergence_norm: ConvergenceNorm::SpectralL1,
            max_iters: 100_000,
            burn_in_discard: 0,
            seed,
            init: PrecisionState { gamma_eps: 1.0, gamma_0: 1.0, gamma_1: 1.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.convergence_tol > 0.0) {
            return Err(Error::Config(format!("convergence tolerance {} must be positive", self.convergence_tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if self.burn_in_discard >= self.max_iters {
            return Err(Error::Config("burn-in must be shorter than max_iters".into()));
        }
        self.hyper.validate()?;
        PrecisionState::new(self.init.gamma_eps, self.init.gamma_0, self.init.gamma_1)?;
        Ok(())
    }
}

/// Per-iteration record of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRecord {
    pub gamma_eps: Vec<f64>,
    pub gamma_0: Vec<f64>,
    pub gamma_1: Vec<f64>,
    /// PSF draws; empty when the PSF is known.
    pub w: Vec<PsfParams>,
    /// Acceptance flags per PSF component. Under a joint proposal the three
    /// flags of an iteration are equal.
    pub accepted: Vec<[bool; 3]>,
    pub proposal: Proposal,
    /// Relative change of the running mean, one entry from the second sample on.
    pub convergence: Vec<f64>,
    /// Running mean of the retained image spectra.
    pub mean: SpectralField,
    pub iterations: usize,
    pub converged: bool,
}

impl ChainRecord {
    pub fn len(&self) -> usize {
        self.gamma_eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma_eps.is_empty()
    }

    pub fn is_myopic(&self) -> bool {
        !self.w.is_empty()
    }

    /// Fraction of accepted proposals (joint flag, or per component).
    pub fn acceptance_rates(&self) -> Option<[f64; 3]> {
        if self.accepted.is_empty() {
            return None;
        }
        let n = self.accepted.len() as f64;
        let mut r = [0.0; 3];
        for a in &self.accepted {
            for i in 0..3 {
                if a[i] {
                    r[i] += 1.0;
                }
            }
        }
        Some(r.map(|v| v / n))
    }
}

#[derive(Debug, Clone)]
pub struct GibbsOutput {
    pub estimate: Image,
    /// Per-pixel empirical standard deviation of the retained image draws.
    pub posterior_std: Image,
    pub chains: ChainRecord,
}

/// Conditional posterior moments of the image spectrum: per-frequency variance
/// `1 / (g_eps |h|^2 + g_0 [n = 0] + g_1 |d|^2)` and the Wiener-Hunt mean
/// `g_eps * var * conj(h) * y`.
pub fn image_conditional_moments(
    yhat: &SpectralField,
    h: &SpectralDiagonal,
    state: &PrecisionState,
    lap: &SpectralDiagonal,
) -> Result<(SpectralField, SpectralDiagonal)> {
    check_len(yhat.len(), h.len())?;
    check_len(yhat.len(), lap.len())?;
    let n = yhat.len();
    let h2 = h.power();
    let d2 = lap.power();
    let mut mu = vec![Complex64::new(0.0, 0.0); n];
    let mut var = vec![0.0; n];
    conditional_moments_into(yhat.data(), h.values(), &h2, &d2, state, &mut mu, &mut var)?;
    Ok((SpectralField::new(yhat.side(), mu)?, SpectralDiagonal::from_real(yhat.side(), var)?))
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch { left: a, right: b });
    }
    Ok(())
}

fn conditional_moments_into(
    y: &[Complex64],
    h: &[Complex64],
    h2: &[f64],
    d2: &[f64],
    st: &PrecisionState,
    mu: &mut [Complex64],
    var: &mut [f64],
) -> Result<()> {
    for i in 0..y.len() {
        let mut prec = st.gamma_eps * h2[i] + st.gamma_1 * d2[i];
        if i == 0 {
            prec += st.gamma_0;
        }
        if !(prec > 0.0) {
            return Err(Error::SingularCovariance(i));
        }
        let v = prec.recip();
        var[i] = v;
        mu[i] = h[i].conj() * y[i] * (st.gamma_eps * v);
    }
    Ok(())
}

/// One draw `mu + sqrt(var) * white` of the image spectrum.
pub fn sample_image<R: Rng + ?Sized>(
    mu: &SpectralField,
    sigma2: &SpectralDiagonal,
    rng: &mut R,
) -> Result<SpectralField> {
    check_len(mu.len(), sigma2.len())?;
    if let Some(i) = sigma2.values().iter().position(|v| !(v.re > 0.0)) {
        return Err(Error::SingularCovariance(i));
    }
    let fft = Fft2::new(mu.side());
    let mut out = vec![Complex64::new(0.0, 0.0); mu.len()];
    fill_white_spectral(&fft, rng, &mut out);
    for ((o, m), v) in out.iter_mut().zip(mu.data()).zip(sigma2.values()) {
        *o = m + *o * v.re.sqrt();
    }
    SpectralField::new(mu.side(), out)
}

/// Conditional Gamma laws of the three precisions given an image draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionPosteriors {
    pub eps: GammaPrior,
    pub zero: GammaPrior,
    pub one: GammaPrior,
}

fn residual_energy(y: &[Complex64], h: &[Complex64], x: &[Complex64]) -> f64 {
    y.iter().zip(h).zip(x).map(|((y, h), x)| (y - h * x).norm_sqr()).sum()
}

fn real_residual_energy(y: &[Complex64], h: &[f64], x: &[Complex64]) -> f64 {
    y.iter().zip(h).zip(x).map(|((y, h), x)| (y - x * *h).norm_sqr()).sum()
}

fn smoothness_energy(d2: &[f64], x: &[Complex64]) -> f64 {
    d2.iter().zip(x).map(|(d, x)| d * x.norm_sqr()).sum()
}

/// Conjugate updates of the precision hyperpriors given the current image
/// spectrum and transfer function.
pub fn precision_updates(
    yhat: &SpectralField,
    h: &SpectralDiagonal,
    xhat: &SpectralField,
    lap: &SpectralDiagonal,
    hyper: &HyperParams,
) -> Result<PrecisionPosteriors> {
    check_len(yhat.len(), h.len())?;
    check_len(yhat.len(), xhat.len())?;
    check_len(yhat.len(), lap.len())?;
    let n = yhat.len() as f64;
    let res = residual_energy(yhat.data(), h.values(), xhat.data());
    let smooth = smoothness_energy(&lap.power(), xhat.data());
    Ok(PrecisionPosteriors {
        eps: hyper.eps.posterior(n, res)?,
        zero: hyper.zero.posterior(1.0, xhat.dc().norm_sqr())?,
        one: hyper.one.posterior(n - 1.0, smooth)?,
    })
}

/// Independent Metropolis-Hastings update of the PSF parameters with the
/// uniform box prior as proposal. Returns the next state and whether the
/// proposal was accepted.
pub fn mh_psf_step<R: Rng + ?Sized>(
    current: &PsfParams,
    xhat: &SpectralField,
    yhat: &SpectralField,
    gamma_eps: f64,
    psf_box: &PsfBox,
    rng: &mut R,
) -> Result<(PsfParams, bool)> {
    check_len(yhat.len(), xhat.len())?;
    let grid = GaussianPsfGrid::new(xhat.side());
    let mut h = vec![0.0; xhat.len()];
    grid.fill(current, &mut h);
    let current_energy = real_residual_energy(yhat.data(), &h, xhat.data());
    let proposal = psf_prior_sample(psf_box, rng);
    grid.fill(&proposal, &mut h);
    let proposal_energy = real_residual_energy(yhat.data(), &h, xhat.data());
    let accept = mh_accept(gamma_eps, current_energy, proposal_energy, rng);
    Ok(if accept { (proposal, true) } else { (*current, false) })
}

fn mh_accept<R: Rng + ?Sized>(gamma_eps: f64, current: f64, proposed: f64, rng: &mut R) -> bool {
    let criterion = 0.5 * gamma_eps * (current - proposed);
    let t: f64 = rng.random();
    t.ln() < criterion
}

/// Relative Euclidean change of the running mean.
pub fn convergence_metric(prev: &SpectralField, new: &SpectralField) -> f64 {
    convergence_metric_with(ConvergenceNorm::Euclidean, prev.data(), new.data())
}

pub fn convergence_metric_with(norm: ConvergenceNorm, prev: &[Complex64], new: &[Complex64]) -> f64 {
    let (num, den) = match norm {
        ConvergenceNorm::Euclidean => {
            let num: f64 = prev.iter().zip(new).map(|(a, b)| (b - a).norm_sqr()).sum();
            let den: f64 = new.iter().map(|b| b.norm_sqr()).sum();
            (num.sqrt(), den.sqrt())
        }
        ConvergenceNorm::SpectralL1 => {
            let num: f64 = prev.iter().zip(new).map(|(a, b)| (b - a).norm()).sum();
            let den: f64 = new.iter().map(|b| b.norm()).sum();
            (num, den)
        }
    };
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

struct TransferState {
    h: Vec<Complex64>,
    h_real: Option<Vec<f64>>,
    h2: Vec<f64>,
}

impl TransferState {
    fn from_real(h: Vec<f64>) -> Self {
        let h2 = h.iter().map(|v| v * v).collect();
        Self { h: h.iter().map(|&v| Complex64::new(v, 0.0)).collect(), h_real: Some(h), h2 }
    }

    fn from_complex(h: &SpectralDiagonal) -> Self {
        Self { h: h.values().to_vec(), h_real: None, h2: h.power() }
    }

    fn residual(&self, y: &[Complex64], x: &[Complex64]) -> f64 {
        match &self.h_real {
            Some(h) => real_residual_energy(y, h, x),
            None => residual_energy(y, &self.h, x),
        }
    }
}

/// Runs the sampler on data `y` with the prior built from `stencil`.
pub fn run_gibbs(cfg: &SamplerConfig, y: &Image, stencil: &Stencil) -> Result<GibbsOutput> {
    cfg.validate()?;
    let side = y.side();
    let n = y.len();
    let fft = Fft2::new(side);
    let yhat = fft.dft2(y);
    let lap = diagonalize_kernel(stencil, side)?;
    let d2 = lap.power();
    if d2[0] > 1e-24 {
        return Err(Error::NonDifferentialOperator(d2[0].sqrt()));
    }
    let grid = GaussianPsfGrid::new(side);

    let (mut transfer, mut w, psf_box) = match &cfg.psf {
        PsfMode::Myopic(b) => {
            let w0 = b.center();
            let mut h = vec![0.0; n];
            grid.fill(&w0, &mut h);
            (TransferState::from_real(h), Some(w0), Some(*b))
        }
        PsfMode::Known(p) => {
            let mut h = vec![0.0; n];
            grid.fill(p, &mut h);
            (TransferState::from_real(h), None, None)
        }
        PsfMode::Transfer(h) => {
            if h.side() != side {
                return Err(Error::ShapeMismatch { left: h.len(), right: n });
            }
            (TransferState::from_complex(h), None, None)
        }
    };

    let full = cfg.prior_mode == PriorMode::Full;
    if !full && transfer.h2[0] == 0.0 {
        return Err(Error::SingularCovariance(0));
    }

    let mut state = PrecisionState {
        gamma_eps: cfg.init.gamma_eps,
        gamma_0: if full { cfg.init.gamma_0 } else { 0.0 },
        gamma_1: cfg.init.gamma_1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut rec = ChainRecord {
        gamma_eps: Vec::new(),
        gamma_0: Vec::new(),
        gamma_1: Vec::new(),
        w: Vec::new(),
        accepted: Vec::new(),
        proposal: cfg.proposal,
        convergence: Vec::new(),
        mean: SpectralField::zeros(side),
        iterations: 0,
        converged: false,
    };

    let mut mu = vec![Complex64::new(0.0, 0.0); n];
    let mut var = vec![0.0; n];
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut spatial = vec![Complex64::new(0.0, 0.0); n];
    let mut prev_mean = vec![Complex64::new(0.0, 0.0); n];
    let mut pix_mean = vec![0.0; n];
    let mut pix_m2 = vec![0.0; n];
    let mut h_prop = vec![0.0; n];
    let mut kept = 0usize;

    for iter in 0..cfg.max_iters {
        // image
        conditional_moments_into(yhat.data(), &transfer.h, &transfer.h2, &d2, &state, &mut mu, &mut var)?;
        fill_white_spectral(&fft, &mut rng, &mut x);
        for i in 0..n {
            x[i] = mu[i] + x[i] * var[i].sqrt();
        }

        // precisions
        let mut residual = transfer.residual(yhat.data(), &x);
        let eps_law = cfg.hyper.eps.posterior(n as f64, residual)?;
        state.gamma_eps = gamma_prior_sample(&eps_law, &mut rng)?;
        let one_law = cfg.hyper.one.posterior((n - 1) as f64, smoothness_energy(&d2, &x))?;
        state.gamma_1 = gamma_prior_sample(&one_law, &mut rng)?;
        if full {
            let zero_law = cfg.hyper.zero.posterior(1.0, x[0].norm_sqr())?;
            state.gamma_0 = gamma_prior_sample(&zero_law, &mut rng)?;
        }

        // PSF
        if let (Some(cur), Some(b)) = (w.as_mut(), psf_box.as_ref()) {
            let flags = match cfg.proposal {
                Proposal::Joint => {
                    let prop = psf_prior_sample(b, &mut rng);
                    grid.fill(&prop, &mut h_prop);
                    let e = real_residual_energy(yhat.data(), &h_prop, &x);
                    let ok = mh_accept(state.gamma_eps, residual, e, &mut rng);
                    if ok {
                        *cur = prop;
                        transfer = TransferState::from_real(std::mem::take(&mut h_prop));
                        h_prop = vec![0.0; n];
                    }
                    [ok; 3]
                }
                Proposal::Componentwise => {
                    let mut flags = [false; 3];
                    let (lo, width) = (b.lower().as_array(), b.widths());
                    for c in 0..3 {
                        let mut v = cur.as_array();
                        v[c] = lo[c] + width[c] * rng.random::<f64>();
                        let prop = PsfParams::from_array(v);
                        grid.fill(&prop, &mut h_prop);
                        let e = real_residual_energy(yhat.data(), &h_prop, &x);
                        if mh_accept(state.gamma_eps, residual, e, &mut rng) {
                            *cur = prop;
                            transfer = TransferState::from_real(std::mem::take(&mut h_prop));
                            h_prop = vec![0.0; n];
                            residual = e;
                            flags[c] = true;
                        }
                    }
                    flags
                }
            };
            rec.w.push(*cur);
            rec.accepted.push(flags);
        }

        rec.gamma_eps.push(state.gamma_eps);
        rec.gamma_0.push(state.gamma_0);
        rec.gamma_1.push(state.gamma_1);
        rec.iterations = iter + 1;

        if iter < cfg.burn_in_discard {
            continue;
        }

        // running means
        kept += 1;
        let inv = 1.0 / kept as f64;
        let mean = rec.mean.data_mut();
        prev_mean.copy_from_slice(mean);
        for i in 0..n {
            mean[i] += (x[i] - mean[i]) * inv;
        }
        spatial.copy_from_slice(&x);
        fft.inverse_in_place(&mut spatial);
        for i in 0..n {
            let v = spatial[i].re;
            let delta = v - pix_mean[i];
            pix_mean[i] += delta * inv;
            pix_m2[i] += delta * (v - pix_mean[i]);
        }

        if kept >= 2 {
            let metric = convergence_metric_with(cfg.convergence_norm, &prev_mean, rec.mean.data());
            rec.convergence.push(metric);
            if metric <= cfg.convergence_tol {
                rec.converged = true;
                break;
            }
        }
    }

    let estimate = fft.idft2_checked(&rec.mean, DEFAULT_SYMMETRY_TOL)?;
    let denom = if kept > 1 { (kept - 1) as f64 } else { 1.0 };
    let posterior_std = Image::new(side, pix_m2.iter().map(|m| (m / denom).max(0.0).sqrt()).collect())?;
    Ok(GibbsOutput { estimate, posterior_std, chains: rec })
}
