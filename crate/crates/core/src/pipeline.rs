//! End-to-end commands: simulate, deconvolve, evaluate, sweep, oracle check.
//!
//! Each `cmd_*` function writes its outputs under the configured directory
//! and returns the in-memory results. The in-memory halves ([`simulate`],
//! [`deconvolve`], [`evaluate`]) are usable on their own.
//!
//! Files written:
//!
//! | command | files |
//! |---|---|
//! | simulate | `truth.img`, `truth.pgm`, `data.img`, `data.pgm`, `simulation.txt` |
//! | deconvolve | `estimate.img`, `estimate.pgm`, `std.img`, `chains.csv`, `histograms.csv`, `summary.txt` |
//! | evaluate | `evaluation.txt`, `spectra.csv` |
//! | sweep | `sweep_<param>.csv`, `sweep_<param>.txt` |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    chain_summary, error_index, parameter_sweep, radial_spectrum, PosteriorSummary, RadialSpectrum, SweepCurve,
    SweepParam, SweepPoint,
};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::io::{self, Record};
use crate::model::{simulate_data, PsfParams};
use crate::oracle::{check_all, OracleReport};
use crate::priors::sample_prior_image;
use crate::sampler::{run_gibbs, GibbsOutput};
use crate::spectral::{diagonalize_kernel, Image, Stencil};

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub truth: Image,
    pub data: Image,
}

/// Draws the phantom (or loads `input_image`) and blurs it, all from one
/// stream seeded with `cfg.seed`.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let truth = match &cfg.input_image {
        Some(path) => io::read_any_image(path)?,
        None => {
            let lap = diagonalize_kernel(&Stencil::laplacian(), cfg.side)?;
            sample_prior_image(&cfg.truth, &lap, &mut rng)?
        }
    };
    let data = simulate_data(&truth, &cfg.psf, cfg.truth.gamma_eps, &mut rng)?;
    Ok(Simulation { truth, data })
}

fn out_path(cfg: &ExperimentConfig, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out_dir)?;
    Ok(cfg.out_dir.join(name))
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Simulation> {
    let sim = simulate(cfg)?;
    io::write_image(&out_path(cfg, "truth.img")?, &sim.truth)?;
    io::write_pgm(&out_path(cfg, "truth.pgm")?, &sim.truth)?;
    io::write_image(&out_path(cfg, "data.img")?, &sim.data)?;
    io::write_pgm(&out_path(cfg, "data.pgm")?, &sim.data)?;
    let mut rec = Record::new();
    rec.push("seed", cfg.seed);
    rec.push("side", sim.truth.side());
    rec.push(
        "source",
        cfg.input_image.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "prior".into()),
    );
    rec.push("gamma_eps", cfg.truth.gamma_eps);
    rec.push("gamma_0", cfg.truth.gamma_0);
    rec.push("gamma_1", cfg.truth.gamma_1);
    rec.push("w_alpha", cfg.psf.w_alpha);
    rec.push("w_beta", cfg.psf.w_beta);
    rec.push("phi", cfg.psf.phi);
    rec.push("error_data", error_index(&sim.data, &sim.truth)?);
    rec.write(&out_path(cfg, "simulation.txt")?)?;
    Ok(sim)
}

pub fn deconvolve(cfg: &ExperimentConfig, data: &Image) -> Result<GibbsOutput> {
    cfg.validate()?;
    run_gibbs(&cfg.sampler_config()?, data, &Stencil::laplacian())
}

#[derive(Debug, Clone)]
pub struct Deconvolution {
    pub output: GibbsOutput,
    pub posterior: PosteriorSummary,
    pub summary: Record,
}

fn summary_record(cfg: &ExperimentConfig, out: &GibbsOutput, post: &PosteriorSummary, seconds: f64) -> Record {
    let mut rec = Record::new();
    rec.push("mode", if cfg.is_myopic() { "myopic" } else { "non-myopic" });
    rec.push("seed", cfg.sampler_seed());
    rec.push("iterations", out.chains.iterations);
    rec.push("converged", out.chains.converged);
    rec.push("burn_in", cfg.burn_in);
    for p in &post.params {
        rec.push(&format!("{}_mean", p.name), p.mean);
        rec.push(&format!("{}_std", p.name), p.std);
    }
    if let Some(a) = post.acceptance {
        rec.push("acceptance_w_alpha", a[0]);
        rec.push("acceptance_w_beta", a[1]);
        rec.push("acceptance_phi", a[2]);
    }
    if let Some(s) = post.mean_image_std {
        rec.push("mean_pixel_std", s);
    }
    rec.push("wall_time_s", format!("{seconds:.3}"));
    rec
}

fn histograms_csv(post: &PosteriorSummary) -> String {
    let mut s = String::from("parameter,lower,upper,count\n");
    for (name, h) in &post.histograms {
        for (i, c) in h.counts.iter().enumerate() {
            let _ = writeln!(s, "{name},{},{},{c}", h.edges[i], h.edges[i + 1]);
        }
    }
    s
}

/// Runs the sampler on the data file and writes estimate, per-pixel std,
/// chains and summary.
pub fn cmd_deconvolve(cfg: &ExperimentConfig, data_path: &Path) -> Result<Deconvolution> {
    let data = io::read_image(data_path)?;
    let start = Instant::now();
    let output = deconvolve(cfg, &data)?;
    let seconds = start.elapsed().as_secs_f64();
    let mut posterior = chain_summary(&output.chains, cfg.burn_in)?;
    posterior.mean_image_std = Some(output.posterior_std.data().iter().sum::<f64>() / output.posterior_std.len() as f64);
    let summary = summary_record(cfg, &output, &posterior, seconds);
    io::write_image(&out_path(cfg, "estimate.img")?, &output.estimate)?;
    io::write_pgm(&out_path(cfg, "estimate.pgm")?, &output.estimate)?;
    io::write_image(&out_path(cfg, "std.img")?, &output.posterior_std)?;
    fs::write(out_path(cfg, "chains.csv")?, io::chains_csv(&output.chains))?;
    fs::write(out_path(cfg, "histograms.csv")?, histograms_csv(&posterior))?;
    summary.write(&out_path(cfg, "summary.txt")?)?;
    Ok(Deconvolution { output, posterior, summary })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub error_data: f64,
    pub error_estimate: f64,
    pub truth: RadialSpectrum,
    pub data: RadialSpectrum,
    pub estimate: RadialSpectrum,
}

pub fn evaluate(estimate: &Image, truth: &Image, data: &Image, bins: usize) -> Result<Evaluation> {
    Ok(Evaluation {
        error_data: error_index(data, truth)?,
        error_estimate: error_index(estimate, truth)?,
        truth: radial_spectrum(truth, bins)?,
        data: radial_spectrum(data, bins)?,
        estimate: radial_spectrum(estimate, bins)?,
    })
}

pub fn cmd_evaluate(
    estimate_path: &Path,
    truth_path: &Path,
    data_path: &Path,
    bins: usize,
    out_dir: &Path,
) -> Result<Evaluation> {
    let ev = evaluate(
        &io::read_image(estimate_path)?,
        &io::read_image(truth_path)?,
        &io::read_image(data_path)?,
        bins,
    )?;
    fs::create_dir_all(out_dir)?;
    let mut rec = Record::new();
    rec.push("error_data", ev.error_data);
    rec.push("error_estimate", ev.error_estimate);
    rec.push("spectrum_bins", ev.truth.len());
    rec.write(&out_dir.join("evaluation.txt"))?;
    let csv = io::spectra_csv(&[("truth", &ev.truth), ("data", &ev.data), ("estimate", &ev.estimate)])?;
    fs::write(out_dir.join("spectra.csv"), csv)?;
    Ok(ev)
}

/// Parses `lo:hi:n` (linear), `log:lo:hi:n` (logarithmic) or a comma list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad grid value {s:?}")));
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [lo, hi, n] => crate::analysis::linspace(num(lo)?, num(hi)?, num(n)? as usize),
        ["log", lo, hi, n] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            if !(lo > 0.0 && hi > 0.0) {
                return Err(Error::Config("log grid bounds must be positive".into()));
            }
            crate::analysis::logspace(lo, hi, num(n)? as usize)
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::Config(format!("bad grid {spec:?}"))),
    };
    if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("grid {spec:?} is empty or not finite")));
    }
    Ok(grid)
}

/// Sweep base point: posterior means from a deconvolution summary when one
/// is given, true values otherwise. PSF means missing from the summary
/// (non-myopic runs) fall back to the configured PSF.
pub fn sweep_base(cfg: &ExperimentConfig, summary: Option<&Record>) -> Result<SweepPoint> {
    let Some(rec) = summary else {
        return Ok(SweepPoint { gamma_eps: cfg.truth.gamma_eps, gamma_1: cfg.truth.gamma_1, w: cfg.psf });
    };
    let or = |key: &str, default: f64| if rec.get(key).is_some() { rec.get_f64(key) } else { Ok(default) };
    Ok(SweepPoint {
        gamma_eps: rec.get_f64("gamma_eps_mean")?,
        gamma_1: rec.get_f64("gamma_1_mean")?,
        w: PsfParams {
            w_alpha: or("w_alpha_mean", cfg.psf.w_alpha)?,
            w_beta: or("w_beta_mean", cfg.psf.w_beta)?,
            phi: or("phi_mean", cfg.psf.phi)?,
        },
    })
}

pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    param: SweepParam,
    grid: &[f64],
    data_path: &Path,
    truth_path: &Path,
    summary_path: Option<&Path>,
) -> Result<SweepCurve> {
    let data = io::read_image(data_path)?;
    let truth = io::read_image(truth_path)?;
    let summary = summary_path.map(Record::read).transpose()?;
    let base = sweep_base(cfg, summary.as_ref())?;
    let curve = parameter_sweep(&data, &truth, &base, param, grid, &Stencil::laplacian())?;
    let name = param.name();
    fs::write(out_path(cfg, &format!("sweep_{name}.csv"))?, io::curve_csv(&curve))?;
    let mut rec = Record::new();
    rec.push("parameter", name);
    rec.push("base_value", base.value(param));
    rec.push("best_value", curve.best_value());
    rec.push("best_error", curve.best_error());
    rec.push("interior_minimum", curve.has_interior_minimum());
    rec.write(&out_path(cfg, &format!("sweep_{name}.txt"))?)?;
    Ok(curve)
}

pub fn cmd_oracle_check(seed: u64, side: usize, instances: usize) -> Result<OracleReport> {
    check_all(seed, side, instances, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::parse("side = 8\nw_alpha = 1\nw_beta = 0.5\nphi = 1\nbox_w_alpha_min = 0.5\nbox_w_alpha_max = 1.5\nbox_w_beta_min = 0.25\nbox_w_beta_max = 0.75\nbox_phi_min = 0.5\nbox_phi_max = 1.5\nmax_iters = 200").unwrap();
        cfg.out_dir = dir.to_path_buf();
        cfg
    }

    #[test]
    fn grid_specs() {
        assert_eq!(parse_grid("1:3:3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_grid("1,4, 2").unwrap(), vec![1.0, 4.0, 2.0]);
        let g = parse_grid("log:1:100:3").unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("log:0:1:3").is_err());
        assert!(parse_grid("1:2:0").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn simulate_is_deterministic_and_sized() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path());
        let a = cmd_simulate(&cfg).unwrap();
        let first = fs::read(dir.path().join("data.img")).unwrap();
        let b = cmd_simulate(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(fs::read(dir.path().join("data.img")).unwrap(), first);
        assert_eq!(a.truth.side(), 8);
        let meta = Record::read(&dir.path().join("simulation.txt")).unwrap();
        assert_eq!(meta.get("source"), Some("prior"));
    }

    #[test]
    fn small_pipeline_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path());
        cmd_simulate(&cfg).unwrap();
        let d = cmd_deconvolve(&cfg, &dir.path().join("data.img")).unwrap();
        assert!(d.summary.get("w_alpha_mean").is_some());
        for f in ["estimate.img", "std.img", "chains.csv", "summary.txt", "histograms.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let rows = fs::read_to_string(dir.path().join("chains.csv")).unwrap().lines().count();
        assert_eq!(rows, d.output.chains.len() + 1);
        let p = |f: &str| dir.path().join(f);
        let ev = cmd_evaluate(&p("truth.img"), &p("truth.img"), &p("data.img"), 6, dir.path()).unwrap();
        assert_eq!(ev.error_estimate, 0.0);
        let csv = fs::read_to_string(p("spectra.csv")).unwrap();
        assert_eq!(csv.lines().count(), ev.truth.len() + 1);
        let curve = cmd_sweep(&cfg, SweepParam::Gamma1, &[2.0], &p("data.img"), &p("truth.img"), Some(&p("summary.txt"))).unwrap();
        assert_eq!(curve.best_index, 0);
        assert_eq!(fs::read_to_string(p("sweep_gamma_1.csv")).unwrap().lines().count(), 2);
    }

    #[test]
    fn from_image_uses_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::from_fn(8, |p, q| ((p * 3 + q * 5) % 16) as f64).unwrap();
        let path = dir.path().join("in.pgm");
        io::write_pgm(&path, &img).unwrap();
        let mut cfg = small(dir.path());
        cfg.input_image = Some(path);
        let sim = simulate(&cfg).unwrap();
        assert_eq!(sim.truth, io::read_pgm(&dir.path().join("in.pgm")).unwrap());
    }

    #[test]
    fn oracle_command_limits_size() {
        assert!(matches!(cmd_oracle_check(0, 17, 1), Err(Error::TooLarge { .. })));
    }
}
