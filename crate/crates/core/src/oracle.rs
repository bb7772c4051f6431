//! Dense-matrix reference computations on small grids.
//!
//! Everything here is built from explicit `N x N` matrices (N = side^2) and
//! generic dense factorizations, with no use of the FFT path, so it can be
//! used to cross-check the spectral shortcuts of the rest of the crate.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::priors::{prior_image_logpdf, separable_log_det, PrecisionState};
use crate::sampler::image_conditional_moments;
use crate::spectral::{circular_convolve, diagonalize_kernel, dft2, Image, Stencil};

/// Largest grid side handled by the dense routines.
pub const MAX_DENSE_SIDE: usize = 16;

fn check_side(side: usize) -> Result<()> {
    if side > MAX_DENSE_SIDE {
        return Err(Error::TooLarge { side, max: MAX_DENSE_SIDE });
    }
    Ok(())
}

/// Explicit BCCB matrix of circular convolution by `stencil`.
pub fn dense_operator(stencil: &Stencil, side: usize) -> Result<DMatrix<f64>> {
    check_side(side)?;
    let k = stencil.embed(side)?;
    let n = side * side;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let (p, q) = (i / side, i % side);
        let (a, b) = (j / side, j % side);
        k[((p + side - a) % side) * side + (q + side - b) % side]
    }))
}

/// Unitary 2-D DFT as an explicit matrix.
pub fn dense_dft_matrix(side: usize) -> Result<DMatrix<Complex64>> {
    check_side(side)?;
    let n = side * side;
    let s = side as f64;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let (u, v) = ((i / side) as f64, (i % side) as f64);
        let (p, q) = ((j / side) as f64, (j % side) as f64);
        Complex64::from_polar(1.0 / s, -2.0 * PI * (u * p + v * q) / s)
    }))
}

/// Projector on the null frequency, `F^H diag(1, 0, ..., 0) F` (every entry 1/N).
pub fn null_frequency_projector(side: usize) -> Result<DMatrix<f64>> {
    check_side(side)?;
    let f = dense_dft_matrix(side)?;
    let n = side * side;
    let row = f.row(0);
    Ok(DMatrix::from_fn(n, n, |i, j| (row[i].conj() * row[j]).re))
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// `F A F^H` for a real matrix `A`.
pub fn dense_similarity(a: &DMatrix<f64>, side: usize) -> Result<DMatrix<Complex64>> {
    let f = dense_dft_matrix(side)?;
    Ok(&f * to_complex(a) * f.adjoint())
}

fn posterior_precision(h: &DMatrix<f64>, d: &DMatrix<f64>, state: &PrecisionState, side: usize) -> Result<DMatrix<f64>> {
    let proj = null_frequency_projector(side)?;
    Ok(h.transpose() * h * state.gamma_eps + proj * state.gamma_0 + d.transpose() * d * state.gamma_1)
}

/// Gaussian conditional of the image given data `y`, with blur matrix `h`,
/// difference matrix `d` and precisions `state`: returns the spatial mean and
/// covariance.
pub fn dense_image_conditional(
    y: &Image,
    h: &DMatrix<f64>,
    d: &DMatrix<f64>,
    state: &PrecisionState,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let side = y.side();
    check_side(side)?;
    let q = posterior_precision(h, d, state, side)?;
    let chol = q.cholesky().ok_or(Error::SingularMatrix)?;
    let cov = chol.inverse();
    let yv = DVector::from_column_slice(y.data());
    let mean = &cov * (h.transpose() * yv) * state.gamma_eps;
    Ok((mean, cov))
}

/// Log-determinant of the dense prior precision `g0 P0 + g1 D^T D`.
pub fn dense_prior_log_det(d: &DMatrix<f64>, state: &PrecisionState, side: usize) -> Result<f64> {
    check_side(side)?;
    let p = null_frequency_projector(side)? * state.gamma_0 + d.transpose() * d * state.gamma_1;
    let chol = p.cholesky().ok_or(Error::SingularMatrix)?;
    Ok(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// Gaussian log-density of the image prior with dense precision.
pub fn dense_prior_logpdf(x: &Image, d: &DMatrix<f64>, state: &PrecisionState) -> Result<f64> {
    let side = x.side();
    check_side(side)?;
    if !(state.gamma_0 > 0.0 && state.gamma_1 > 0.0) {
        return Err(Error::SingularMatrix);
    }
    let p = null_frequency_projector(side)? * state.gamma_0 + d.transpose() * d * state.gamma_1;
    let log_det = dense_prior_log_det(d, state, side)?;
    let xv = DVector::from_column_slice(x.data());
    let quad = xv.dot(&(&p * &xv));
    let n = x.len() as f64;
    Ok(-0.5 * n * (2.0 * PI).ln() + 0.5 * log_det - 0.5 * quad)
}

/// Deliberate corruption of the spectral path, used to check that the
/// cross-checks do detect errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Scales one entry of the blur diagonal by 1.01.
    CorruptBlurDiagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub side: usize,
    pub instances: usize,
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(OracleCheck::passed)
    }
}

fn random_stencil<R: Rng>(rng: &mut R) -> Stencil {
    let taps = (0..9).map(|_| rng.random::<f64>()).collect::<Vec<_>>();
    let sum: f64 = taps.iter().sum();
    Stencil::new(3, 3, taps.into_iter().map(|t| t / sum).collect(), (1, 1)).expect("3x3 stencil")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Runs every dense/spectral cross-check on `instances` random problems of
/// the given side, starting from `seed`.
pub fn check_all(seed: u64, side: usize, instances: usize, fault: Option<Fault>) -> Result<OracleReport> {
    check_side(side)?;
    let lap_stencil = Stencil::laplacian();
    let lap = diagonalize_kernel(&lap_stencil, side)?;
    let d_dense = dense_operator(&lap_stencil, side)?;
    let n = side * side;

    let mut eig = 0.0f64;
    let mut offdiag = 0.0f64;
    let mut matvec = 0.0f64;
    let mut cond_mean = 0.0f64;
    let mut cond_cov = 0.0f64;
    let mut cov_offdiag = 0.0f64;
    let mut logpdf = 0.0f64;
    let mut logdet = 0.0f64;

    for k in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let blur = random_stencil(&mut rng);
        let h_dense = dense_operator(&blur, side)?;
        let mut h = diagonalize_kernel(&blur, side)?;
        if fault == Some(Fault::CorruptBlurDiagonal) {
            h.values_mut()[1] *= 1.01;
        }

        // eigen-structure of the BCCB operators
        for (dense, diag) in [(&h_dense, &h), (&d_dense, &lap)] {
            let sim = dense_similarity(dense, side)?;
            let scale = diag.values().iter().fold(1e-300f64, |m, c| m.max(c.norm()));
            for i in 0..n {
                for j in 0..n {
                    let v = sim[(i, j)];
                    if i == j {
                        eig = eig.max((v - diag.values()[i]).norm() / scale);
                    } else {
                        offdiag = offdiag.max(v.norm() / scale);
                    }
                }
            }
        }

        let x = Image::new(side, (0..n).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect())?;
        let conv = circular_convolve(&x, &blur)?;
        let prod = &h_dense * DVector::from_column_slice(x.data());
        let err = prod.iter().zip(conv.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        matvec = matvec.max(err / conv.norm());

        // conditional moments
        let state = PrecisionState::new(
            rng.random_range(0.5..2.0),
            rng.random_range(0.5..2.0),
            rng.random_range(0.5..4.0),
        )?;
        let y = Image::new(side, (0..n).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect())?;
        let (mean, cov) = dense_image_conditional(&y, &h_dense, &d_dense, &state)?;
        let (mu, sigma2) = image_conditional_moments(&dft2(&y), &h, &state, &lap)?;
        let mean_img = Image::new(side, mean.iter().copied().collect())?;
        let mean_hat = dft2(&mean_img);
        let diff: f64 = mean_hat.data().iter().zip(mu.data()).map(|(a, b)| (a - b).norm_sqr()).sum();
        cond_mean = cond_mean.max(diff.sqrt() / mean_hat.norm());
        let cov_hat = dense_similarity(&cov, side)?;
        let cscale = sigma2.values().iter().fold(0.0f64, |m, c| m.max(c.re));
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    cond_cov = cond_cov.max((cov_hat[(i, j)] - sigma2.values()[i]).norm() / cscale);
                } else {
                    cov_offdiag = cov_offdiag.max(cov_hat[(i, j)].norm() / cscale);
                }
            }
        }

        // prior density and its normalization
        let spectral = prior_image_logpdf(&x, &state, &lap)?;
        let dense = dense_prior_logpdf(&x, &d_dense, &state)?;
        logpdf = logpdf.max(rel(spectral, dense));
        let ld_dense = dense_prior_log_det(&d_dense, &state, side)?;
        logdet = logdet.max(rel(separable_log_det(&state, &lap)?, ld_dense));
    }

    let checks = vec![
        OracleCheck { name: "operator eigenvalues", worst: eig, tolerance: 1e-10 },
        OracleCheck { name: "operator diagonal in Fourier basis", worst: offdiag, tolerance: 1e-10 },
        OracleCheck { name: "dense product vs circular convolution", worst: matvec, tolerance: 1e-12 },
        OracleCheck { name: "conditional mean", worst: cond_mean, tolerance: 1e-10 },
        OracleCheck { name: "conditional variance", worst: cond_cov, tolerance: 1e-10 },
        OracleCheck { name: "conditional covariance diagonal in Fourier basis", worst: cov_offdiag, tolerance: 1e-10 },
        OracleCheck { name: "prior log-density", worst: logpdf, tolerance: 1e-8 },
        OracleCheck { name: "prior log-determinant", worst: logdet, tolerance: 1e-8 },
    ];
    Ok(OracleReport { side, instances, checks })
}
