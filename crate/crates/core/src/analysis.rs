//! Error index, radial spectra, chain summaries and one-parameter sweeps of
//! the Wiener-Hunt solution.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::model::{GaussianPsfGrid, PsfParams};
use crate::priors::PrecisionState;
use crate::sampler::{image_conditional_moments, ChainRecord};
use crate::spectral::{diagonalize_kernel, reduced_frequency, Fft2, Image, SpectralDiagonal, Stencil};

/// Normalized Euclidean distance `||x - x*|| / ||x*||`.
pub fn error_index(x: &Image, x_star: &Image) -> Result<f64> {
    if x.len() != x_star.len() {
        return Err(Error::ShapeMismatch { left: x.len(), right: x_star.len() });
    }
    let reference = x_star.norm();
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    let diff: f64 = x.data().iter().zip(x_star.data()).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(diff.sqrt() / reference)
}

/// Circular average of `|xhat|^2` over annuli of radial frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSpectrum {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub counts: Vec<usize>,
}

impl RadialSpectrum {
    /// Sum of `|xhat|^2` over every coefficient.
    pub fn total_power(&self) -> f64 {
        self.power.iter().zip(&self.counts).map(|(p, c)| p * *c as f64).sum()
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}

/// Radial spectrum with `n_bins` uniformly spaced centers on `[0, sqrt(2)/2]`;
/// every coefficient goes to the nearest center. Centers that receive no
/// coefficient (possible on small grids) are omitted.
pub fn radial_spectrum(x: &Image, n_bins: usize) -> Result<RadialSpectrum> {
    if n_bins < 2 {
        return Err(Error::DomainError(format!("{n_bins} radial bins; need at least 2")));
    }
    let side = x.side();
    let xhat = Fft2::new(side).dft2(x);
    let step = (SQRT_2 / 2.0) / (n_bins - 1) as f64;
    let mut sums = vec![0.0; n_bins];
    let mut counts = vec![0usize; n_bins];
    for p in 0..side {
        let a = reduced_frequency(p, side);
        for q in 0..side {
            let b = reduced_frequency(q, side);
            let f = (a * a + b * b).sqrt();
            let bin = ((f / step).round() as usize).min(n_bins - 1);
            sums[bin] += xhat.get(p, q).norm_sqr();
            counts[bin] += 1;
        }
    }
    let mut out = RadialSpectrum { frequencies: Vec::new(), power: Vec::new(), counts: Vec::new() };
    for i in 0..n_bins {
        if counts[i] > 0 {
            out.frequencies.push(i as f64 * step);
            out.power.push(sums[i] / counts[i] as f64);
            out.counts.push(counts[i]);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: &'static str,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2d {
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    /// Row-major, `counts[i * ny + j]` for x bin `i` and y bin `j`.
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub params: Vec<ParamSummary>,
    pub histograms: Vec<(&'static str, Histogram)>,
    pub joint_histograms: Vec<(&'static str, &'static str, Histogram2d)>,
    pub acceptance: Option<[f64; 3]>,
    pub samples: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Average of the per-pixel posterior standard deviation, when known.
    pub mean_image_std: Option<f64>,
}

impl PosteriorSummary {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }
}

pub const DEFAULT_HISTOGRAM_BINS: usize = 50;

/// Mean and standard deviation (`n - 1` denominator).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn edges(values: &[f64], bins: usize) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect()
}

fn bin_of(edges: &[f64], v: f64) -> usize {
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    (((v - lo) / (hi - lo) * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

/// Histogram over the sample range with `bins` equal-width bins.
pub fn histogram(values: &[f64], bins: usize) -> Histogram {
    let edges = edges(values, bins);
    let mut counts = vec![0; bins];
    for &v in values {
        counts[bin_of(&edges, v)] += 1;
    }
    Histogram { edges, counts }
}

pub fn histogram2d(xs: &[f64], ys: &[f64], bins: usize) -> Histogram2d {
    let (x_edges, y_edges) = (edges(xs, bins), edges(ys, bins));
    let mut counts = vec![0; bins * bins];
    for (&x, &y) in xs.iter().zip(ys) {
        counts[bin_of(&x_edges, x) * bins + bin_of(&y_edges, y)] += 1;
    }
    Histogram2d { x_edges, y_edges, counts }
}

/// Post-burn-in means, standard deviations and histograms of every sampled
/// parameter.
pub fn chain_summary(chains: &ChainRecord, burn_in: usize) -> Result<PosteriorSummary> {
    if chains.len() <= burn_in {
        return Err(Error::EmptyChain { burn_in });
    }
    let tail = |v: &[f64]| v[burn_in..].to_vec();
    let mut series: Vec<(&'static str, Vec<f64>)> = vec![
        ("gamma_eps", tail(&chains.gamma_eps)),
        ("gamma_1", tail(&chains.gamma_1)),
    ];
    if chains.gamma_0.iter().any(|g| *g != 0.0) {
        series.push(("gamma_0", tail(&chains.gamma_0)));
    }
    if chains.is_myopic() {
        let w = &chains.w[burn_in..];
        series.push(("w_alpha", w.iter().map(|p| p.w_alpha).collect()));
        series.push(("w_beta", w.iter().map(|p| p.w_beta).collect()));
        series.push(("phi", w.iter().map(|p| p.phi).collect()));
    }
    let params = series
        .iter()
        .map(|(name, v)| {
            let (mean, std) = mean_std(v);
            ParamSummary { name, mean, std }
        })
        .collect();
    let histograms =
        series.iter().map(|(name, v)| (*name, histogram(v, DEFAULT_HISTOGRAM_BINS))).collect();
    let mut joint_histograms = Vec::new();
    if chains.is_myopic() {
        let g1 = &series[1].1;
        for name in ["w_alpha", "w_beta"] {
            let other = &series.iter().find(|(n, _)| *n == name).expect("myopic series").1;
            joint_histograms.push(("gamma_1", name, histogram2d(g1, other, DEFAULT_HISTOGRAM_BINS)));
        }
    }
    let acceptance = if chains.accepted.len() > burn_in {
        let acc = &chains.accepted[burn_in..];
        let n = acc.len() as f64;
        let mut r = [0.0; 3];
        for a in acc {
            for i in 0..3 {
                r[i] += a[i] as u8 as f64;
            }
        }
        Some(r.map(|v| v / n))
    } else {
        None
    };
    Ok(PosteriorSummary {
        params,
        histograms,
        joint_histograms,
        acceptance,
        samples: chains.len() - burn_in,
        iterations: chains.iterations,
        converged: chains.converged,
        mean_image_std: None,
    })
}

/// Parameter varied by [`parameter_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    GammaEps,
    Gamma1,
    WAlpha,
    WBeta,
    Phi,
}

impl SweepParam {
    pub const ALL: [SweepParam; 5] =
        [Self::GammaEps, Self::Gamma1, Self::WAlpha, Self::WBeta, Self::Phi];

    pub fn name(self) -> &'static str {
        match self {
            Self::GammaEps => "gamma_eps",
            Self::Gamma1 => "gamma_1",
            Self::WAlpha => "w_alpha",
            Self::WBeta => "w_beta",
            Self::Phi => "phi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep parameter {s:?}")))
    }
}

/// Values of every parameter of the Wiener-Hunt solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub gamma_eps: f64,
    pub gamma_1: f64,
    pub w: PsfParams,
}

impl SweepPoint {
    pub fn with(mut self, param: SweepParam, value: f64) -> Self {
        match param {
            SweepParam::GammaEps => self.gamma_eps = value,
            SweepParam::Gamma1 => self.gamma_1 = value,
            SweepParam::WAlpha => self.w.w_alpha = value,
            SweepParam::WBeta => self.w.w_beta = value,
            SweepParam::Phi => self.w.phi = value,
        }
        self
    }

    pub fn value(&self, param: SweepParam) -> f64 {
        match param {
            SweepParam::GammaEps => self.gamma_eps,
            SweepParam::Gamma1 => self.gamma_1,
            SweepParam::WAlpha => self.w.w_alpha,
            SweepParam::WBeta => self.w.w_beta,
            SweepParam::Phi => self.w.phi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub best_index: usize,
}

impl SweepCurve {
    pub fn best_value(&self) -> f64 {
        self.values[self.best_index]
    }

    pub fn best_error(&self) -> f64 {
        self.errors[self.best_index]
    }

    /// Whether the minimum lies strictly inside the grid.
    pub fn has_interior_minimum(&self) -> bool {
        self.best_index > 0 && self.best_index + 1 < self.values.len()
    }
}

/// Wiener-Hunt solution (the conditional posterior mean with the mean level
/// left unpenalized) for fixed precisions and transfer function.
pub fn wiener_hunt(
    y: &Image,
    h: &SpectralDiagonal,
    gamma_eps: f64,
    gamma_1: f64,
    lap: &SpectralDiagonal,
) -> Result<Image> {
    let fft = Fft2::new(y.side());
    let state = PrecisionState { gamma_eps, gamma_0: 0.0, gamma_1 };
    let (mu, _) = image_conditional_moments(&fft.dft2(y), h, &state, lap)?;
    fft.idft2_checked(&mu, crate::spectral::DEFAULT_SYMMETRY_TOL)
}

/// Error of the Wiener-Hunt solution against `x_star` as one parameter runs
/// over `grid`, the others staying at `base`.
pub fn parameter_sweep(
    y: &Image,
    x_star: &Image,
    base: &SweepPoint,
    param: SweepParam,
    grid: &[f64],
    stencil: &Stencil,
) -> Result<SweepCurve> {
    if grid.is_empty() {
        return Err(Error::DomainError("empty sweep grid".into()));
    }
    let side = y.side();
    let lap = diagonalize_kernel(stencil, side)?;
    let psf = GaussianPsfGrid::new(side);
    let mut errors = Vec::with_capacity(grid.len());
    for &v in grid {
        let point = base.with(param, v);
        let h = psf.transfer(&point.w);
        let est = wiener_hunt(y, &h, point.gamma_eps, point.gamma_1, &lap)?;
        errors.push(error_index(&est, x_star)?);
    }
    let best_index = errors
        .iter()
        .enumerate()
        .fold(0, |best, (i, e)| if *e < errors[best] { i } else { best });
    Ok(SweepCurve { param, values: grid.to_vec(), errors, best_index })
}

/// `n` evenly spaced values on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` log-spaced values on `[lo, hi]`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}
