//! Flat `key = value` experiment configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Every key is optional
//! in a file; missing keys keep their default. [`ExperimentConfig::emit`]
//! writes every key, and `parse(emit(c)) == c` holds exactly.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{PsfBox, PsfParams};
use crate::priors::{HyperParams, PrecisionState, PriorMode};
use crate::sampler::{ConvergenceNorm, Proposal, PsfMode, SamplerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Myopic,
    NonMyopic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HyperChoice {
    Jeffreys,
    Uniform,
    Explicit(HyperParams),
}

impl HyperChoice {
    pub fn params(&self) -> HyperParams {
        match self {
            HyperChoice::Jeffreys => HyperParams::jeffreys(),
            HyperChoice::Uniform => HyperParams::uniform(),
            HyperChoice::Explicit(h) => *h,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub side: usize,
    pub truth: PrecisionState,
    pub psf: PsfParams,
    pub box_lower: PsfParams,
    pub box_upper: PsfParams,
    pub hyper: HyperChoice,
    pub prior_mode: PriorMode,
    pub mode: Mode,
    pub proposal: Proposal,
    pub convergence_norm: ConvergenceNorm,
    pub tol_myopic: f64,
    pub tol_non_myopic: f64,
    pub max_iters: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub spectrum_bins: usize,
    pub out_dir: PathBuf,
    /// Grayscale image blurred by `simulate` instead of a prior draw.
    pub input_image: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            side: 128,
            truth: PrecisionState { gamma_eps: 0.5, gamma_0: 1.0, gamma_1: 2.0 },
            psf: PsfParams { w_alpha: 20.0, w_beta: 7.0, phi: PI / 3.0 },
            box_lower: PsfParams { w_alpha: 19.0, w_beta: 6.0, phi: PI / 4.0 },
            box_upper: PsfParams { w_alpha: 21.0, w_beta: 8.0, phi: PI / 2.0 },
            hyper: HyperChoice::Jeffreys,
            prior_mode: PriorMode::MarginalizedMeanLevel,
            mode: Mode::Myopic,
            proposal: Proposal::Componentwise,
            convergence_norm: ConvergenceNorm::SpectralL1,
            tol_myopic: 5e-5,
            tol_non_myopic: 1e-3,
            max_iters: 100_000,
            burn_in: 0,
            seed: 7,
            spectrum_bins: 64,
            out_dir: PathBuf::from("out"),
            input_image: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn bad(key: &str, v: &str) -> Error {
    Error::Config(format!("{key}: unknown value {v:?}"))
}

const HYPER_KEYS: [&str; 6] = [
    "hyper_eps_shape",
    "hyper_eps_scale",
    "hyper_zero_shape",
    "hyper_zero_scale",
    "hyper_one_shape",
    "hyper_one_scale",
];

impl ExperimentConfig {
    /// Parses a configuration file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key. Used by the parser and by command-line overrides.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let mut w = self.psf;
        let (mut lo, mut hi) = (self.box_lower, self.box_upper);
        match key {
            "side" => self.side = parse_num(key, v)?,
            "gamma_eps" => self.truth.gamma_eps = parse_num(key, v)?,
            "gamma_0" => self.truth.gamma_0 = parse_num(key, v)?,
            "gamma_1" => self.truth.gamma_1 = parse_num(key, v)?,
            "w_alpha" => w.w_alpha = parse_num(key, v)?,
            "w_beta" => w.w_beta = parse_num(key, v)?,
            "phi" => w.phi = parse_num(key, v)?,
            "box_w_alpha_min" => lo.w_alpha = parse_num(key, v)?,
            "box_w_alpha_max" => hi.w_alpha = parse_num(key, v)?,
            "box_w_beta_min" => lo.w_beta = parse_num(key, v)?,
            "box_w_beta_max" => hi.w_beta = parse_num(key, v)?,
            "box_phi_min" => lo.phi = parse_num(key, v)?,
            "box_phi_max" => hi.phi = parse_num(key, v)?,
            "hyper" => {
                self.hyper = match v {
                    "jeffreys" => HyperChoice::Jeffreys,
                    "uniform" => HyperChoice::Uniform,
                    "explicit" => HyperChoice::Explicit(self.hyper.params()),
                    _ => return Err(bad(key, v)),
                }
            }
            k if HYPER_KEYS.contains(&k) => {
                let mut h = self.hyper.params();
                let x: f64 = parse_num(key, v)?;
                let law = match &k[6..k.rfind('_').expect("underscore")] {
                    "eps" => &mut h.eps,
                    "zero" => &mut h.zero,
                    _ => &mut h.one,
                };
                if k.ends_with("shape") {
                    law.shape = x;
                } else {
                    law.scale = x;
                }
                self.hyper = HyperChoice::Explicit(h);
            }
            "prior_mode" => {
                self.prior_mode = match v {
                    "marginalized" => PriorMode::MarginalizedMeanLevel,
                    "full" => PriorMode::Full,
                    _ => return Err(bad(key, v)),
                }
            }
            "mode" => {
                self.mode = match v {
                    "myopic" => Mode::Myopic,
                    "non-myopic" => Mode::NonMyopic,
                    _ => return Err(bad(key, v)),
                }
            }
            "proposal" => {
                self.proposal = match v {
                    "componentwise" => Proposal::Componentwise,
                    "joint" => Proposal::Joint,
                    _ => return Err(bad(key, v)),
                }
            }
            "convergence_norm" => {
                self.convergence_norm = match v {
                    "spectral-l1" => ConvergenceNorm::SpectralL1,
                    "euclidean" => ConvergenceNorm::Euclidean,
                    _ => return Err(bad(key, v)),
                }
            }
            "tol_myopic" => self.tol_myopic = parse_num(key, v)?,
            "tol_non_myopic" => self.tol_non_myopic = parse_num(key, v)?,
            "max_iters" => self.max_iters = parse_num(key, v)?,
            "burn_in" => self.burn_in = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "spectrum_bins" => self.spectrum_bins = parse_num(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "input_image" => self.input_image = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        self.psf = w;
        self.box_lower = lo;
        self.box_upper = hi;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.side < 2 {
            return Err(Error::Config(format!("side {} must be at least 2", self.side)));
        }
        let t = &self.truth;
        if !(t.gamma_eps > 0.0 && t.gamma_0 > 0.0 && t.gamma_1 > 0.0) || ![t.gamma_eps, t.gamma_0, t.gamma_1].iter().all(|v| v.is_finite()) {
            return Err(Error::Config("true precisions must be positive and finite".into()));
        }
        PsfParams::new(self.psf.w_alpha, self.psf.w_beta, self.psf.phi)?;
        self.psf_box()?;
        self.hyper.params().validate()?;
        if self.prior_mode == PriorMode::Full && self.hyper.params().zero.is_dirac() {
            return Err(Error::Config("full prior mode needs a non-Dirac law on gamma_0".into()));
        }
        if !(self.tol_myopic > 0.0 && self.tol_non_myopic > 0.0) {
            return Err(Error::Config("convergence tolerances must be positive".into()));
        }
        if self.max_iters == 0 || self.burn_in >= self.max_iters {
            return Err(Error::Config("need 0 <= burn_in < max_iters".into()));
        }
        if self.spectrum_bins < 2 {
            return Err(Error::Config("spectrum_bins must be at least 2".into()));
        }
        Ok(())
    }

    /// Writes every key, with short comments.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let b = (self.box_lower, self.box_upper);
        let hyper = match self.hyper {
            HyperChoice::Jeffreys => "jeffreys",
            HyperChoice::Uniform => "uniform",
            HyperChoice::Explicit(_) => "explicit",
        };
        let _ = writeln!(s, "# image side in pixels");
        let _ = writeln!(s, "side = {}", self.side);
        let _ = writeln!(s, "# true precisions (noise, mean level, smoothness)");
        let _ = writeln!(s, "gamma_eps = {}", self.truth.gamma_eps);
        let _ = writeln!(s, "gamma_0 = {}", self.truth.gamma_0);
        let _ = writeln!(s, "gamma_1 = {}", self.truth.gamma_1);
        let _ = writeln!(s, "# true PSF and the uniform prior box on it");
        let _ = writeln!(s, "w_alpha = {}", self.psf.w_alpha);
        let _ = writeln!(s, "w_beta = {}", self.psf.w_beta);
        let _ = writeln!(s, "phi = {}", self.psf.phi);
        let _ = writeln!(s, "box_w_alpha_min = {}", b.0.w_alpha);
        let _ = writeln!(s, "box_w_alpha_max = {}", b.1.w_alpha);
        let _ = writeln!(s, "box_w_beta_min = {}", b.0.w_beta);
        let _ = writeln!(s, "box_w_beta_max = {}", b.1.w_beta);
        let _ = writeln!(s, "box_phi_min = {}", b.0.phi);
        let _ = writeln!(s, "box_phi_max = {}", b.1.phi);
        let _ = writeln!(s, "# jeffreys | uniform | explicit");
        let _ = writeln!(s, "hyper = {hyper}");
        if let HyperChoice::Explicit(h) = self.hyper {
            for (k, v) in HYPER_KEYS.iter().zip([
                h.eps.shape,
                h.eps.scale,
                h.zero.shape,
                h.zero.scale,
                h.one.shape,
                h.one.scale,
            ]) {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        let _ = writeln!(s, "# marginalized | full");
        let _ = writeln!(
            s,
            "prior_mode = {}",
            match self.prior_mode {
                PriorMode::MarginalizedMeanLevel => "marginalized",
                PriorMode::Full => "full",
            }
        );
        let _ = writeln!(s, "# myopic | non-myopic");
        let _ = writeln!(
            s,
            "mode = {}",
            match self.mode {
                Mode::Myopic => "myopic",
                Mode::NonMyopic => "non-myopic",
            }
        );
        let _ = writeln!(s, "# componentwise | joint");
        let _ = writeln!(
            s,
            "proposal = {}",
            match self.proposal {
                Proposal::Componentwise => "componentwise",
                Proposal::Joint => "joint",
            }
        );
        let _ = writeln!(s, "# spectral-l1 | euclidean");
        let _ = writeln!(
            s,
            "convergence_norm = {}",
            match self.convergence_norm {
                ConvergenceNorm::SpectralL1 => "spectral-l1",
                ConvergenceNorm::Euclidean => "euclidean",
            }
        );
        let _ = writeln!(s, "tol_myopic = {}", self.tol_myopic);
        let _ = writeln!(s, "tol_non_myopic = {}", self.tol_non_myopic);
        let _ = writeln!(s, "max_iters = {}", self.max_iters);
        let _ = writeln!(s, "burn_in = {}", self.burn_in);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "spectrum_bins = {}", self.spectrum_bins);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(
            s,
            "input_image = {}",
            self.input_image.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
        );
        s
    }

    pub fn psf_box(&self) -> Result<PsfBox> {
        PsfBox::new(self.box_lower, self.box_upper)
    }

    pub fn is_myopic(&self) -> bool {
        self.mode == Mode::Myopic
    }

    /// Seed of the sampler stream; the simulation stream uses `seed` itself.
    pub fn sampler_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        let psf = match self.mode {
            Mode::Myopic => PsfMode::Myopic(self.psf_box()?),
            Mode::NonMyopic => PsfMode::Known(self.psf),
        };
        let mut s = SamplerConfig::new(psf, self.sampler_seed());
        s.prior_mode = self.prior_mode;
        s.hyper = self.hyper.params();
        s.proposal = self.proposal;
        s.convergence_norm = self.convergence_norm;
        s.convergence_tol = if self.is_myopic() { self.tol_myopic } else { self.tol_non_myopic };
        s.max_iters = self.max_iters;
        s.burn_in_discard = self.burn_in;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::GammaPrior;

    #[test]
    fn default_round_trips() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&c.emit()).unwrap(), c);
        assert_eq!(c.side, 128);
        assert_eq!(c.psf.phi, PI / 3.0);
    }

    #[test]
    fn explicit_hyper_round_trips() {
        let mut c = ExperimentConfig::default();
        c.hyper = HyperChoice::Explicit(HyperParams {
            eps: GammaPrior { shape: 2.0, scale: 0.25 },
            zero: GammaPrior { shape: 1.0, scale: 0.0 },
            one: GammaPrior { shape: 0.5, scale: 3.0 },
        });
        c.input_image = Some(PathBuf::from("img/a.pgm"));
        c.mode = Mode::NonMyopic;
        assert_eq!(ExperimentConfig::parse(&c.emit()).unwrap(), c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = ExperimentConfig::parse("# tiny\nside = 8\n\nmode = non-myopic\n").unwrap();
        assert_eq!(c.side, 8);
        assert_eq!(c.mode, Mode::NonMyopic);
        assert_eq!(c.truth, ExperimentConfig::default().truth);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("sid = 8").is_err());
        assert!(ExperimentConfig::parse("side").is_err());
        assert!(ExperimentConfig::parse("side = x").is_err());
        assert!(ExperimentConfig::parse("side = 1").is_err());
        assert!(ExperimentConfig::parse("mode = blind").is_err());
        assert!(ExperimentConfig::parse("box_phi_min = 2").is_err());
        assert!(ExperimentConfig::parse("gamma_eps = -1").is_err());
        assert!(ExperimentConfig::parse("prior_mode = full").is_ok());
        assert!(ExperimentConfig::parse("prior_mode = full\nhyper_zero_shape = 1\nhyper_zero_scale = 0").is_err());
    }

    #[test]
    fn sampler_config_follows_mode() {
        let mut c = ExperimentConfig::default();
        let s = c.sampler_config().unwrap();
        assert_eq!(s.convergence_tol, 5e-5);
        assert!(matches!(s.psf, PsfMode::Myopic(_)));
        c.mode = Mode::NonMyopic;
        let s = c.sampler_config().unwrap();
        assert_eq!(s.convergence_tol, 1e-3);
        assert_eq!(s.psf, PsfMode::Known(c.psf));
        assert_eq!(s.seed, 8);
    }
}
