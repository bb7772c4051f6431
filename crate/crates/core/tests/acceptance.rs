//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use myopic_deconv::analysis::{chain_summary, error_index, logspace, parameter_sweep, SweepParam, SweepPoint};
use myopic_deconv::config::{ExperimentConfig, Mode};
use myopic_deconv::io;
use myopic_deconv::model::PsfParams;
use myopic_deconv::oracle::check_all;
use myopic_deconv::pipeline::{cmd_deconvolve, cmd_simulate, evaluate, Deconvolution};
use myopic_deconv::priors::{
    gamma_logpdf, gamma_sample, sample_prior_image, student_marginal_logpdf, GammaPrior, HyperParams,
    PrecisionState, PriorMode,
};
use myopic_deconv::sampler::{run_gibbs, PsfMode, SamplerConfig};
use myopic_deconv::spectral::{circular_convolve, diagonalize_kernel, Image, Stencil};
use myopic_deconv::Error;

struct Run {
    truth: Image,
    data: Image,
    myopic: Deconvolution,
    myopic_seconds: f64,
    non_myopic: Deconvolution,
}

fn run_default(dir: &Path) -> Run {
    let mut cfg = ExperimentConfig::default();
    cfg.out_dir = dir.to_path_buf();
    cmd_simulate(&cfg).expect("simulate");
    let start = Instant::now();
    let myopic = cmd_deconvolve(&cfg, &dir.join("data.img")).expect("myopic run");
    let myopic_seconds = start.elapsed().as_secs_f64();
    let mut nm = cfg.clone();
    nm.mode = Mode::NonMyopic;
    nm.out_dir = dir.join("non-myopic");
    let non_myopic = cmd_deconvolve(&nm, &dir.join("data.img")).expect("non-myopic run");
    Run {
        truth: io::read_image(&dir.join("truth.img")).unwrap(),
        data: io::read_image(&dir.join("data.img")).unwrap(),
        myopic,
        myopic_seconds,
        non_myopic,
    }
}

/// Collects the individual checks of one criterion.
struct Checks(Vec<(String, bool)>);

impl Checks {
    fn new() -> Self {
        Checks(Vec::new())
    }

    fn check(&mut self, ok: bool, what: String) {
        self.0.push((what, ok));
    }

    fn in_range(&mut self, name: &str, v: f64, lo: f64, hi: f64) {
        self.check(lo <= v && v <= hi, format!("{name} = {v:.5} in [{lo}, {hi}]"));
    }

    fn finish(self) -> (bool, String) {
        let ok = self.0.iter().all(|(_, ok)| *ok);
        let failed: Vec<&str> = self.0.iter().filter(|(_, ok)| !*ok).map(|(w, _)| w.as_str()).collect();
        let detail = if ok {
            self.0.iter().map(|(w, _)| w.as_str()).collect::<Vec<_>>().join("; ")
        } else {
            format!("failed: {}", failed.join("; "))
        };
        (ok, detail)
    }
}

fn criterion_1() -> (bool, String) {
    let report = check_all(1000, 8, 20, None).expect("oracle");
    let mut c = Checks::new();
    for k in &report.checks {
        c.check(k.passed(), format!("{} {:.1e} <= {:.0e}", k.name, k.worst, k.tolerance));
    }
    c.finish()
}

/// Simpson rule in `u = ln g` over `[lo, hi]`.
fn integrate_log_scale(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let u = lo + i as f64 * h;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(u.exp()) * u.exp();
    }
    acc * h / 3.0
}

fn criterion_2() -> (bool, String) {
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 1_000_000usize;
    for (alpha, beta) in [(0.5, 2.0), (3.0, 0.7), (8192.0, 1.0 / 16000.0)] {
        let draws: Vec<f64> = (0..n).map(|_| gamma_sample(alpha, beta, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let (m, v) = (alpha * beta, alpha * beta * beta);
        let se_mean = (v / n as f64).sqrt();
        let se_var = (v * v * (2.0 + 6.0 / alpha) / n as f64).sqrt();
        c.check((mean - m).abs() <= 3.0 * se_mean, format!("G({alpha},{beta:.3e}) mean z={:.2}", (mean - m) / se_mean));
        c.check((var - v).abs() <= 3.0 * se_var, format!("G({alpha},{beta:.3e}) var z={:.2}", (var - v) / se_var));
    }
    // Student marginal against quadrature over the precision
    let (dim, log_det) = (3usize, 0.7);
    let mut worst = 0.0f64;
    for (alpha, beta) in [(1.5, 2.0), (4.0, 0.3)] {
        for q in [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
            let dens = |g: f64| {
                let gauss = 0.5 * dim as f64 * (g.ln() - (2.0 * PI).ln()) + 0.5 * log_det - 0.5 * g * q;
                (gauss + gamma_logpdf(g, alpha, beta).unwrap()).exp()
            };
            let numeric = integrate_log_scale(dens, -30.0, 8.0, 40_000).ln();
            worst = worst.max((numeric - student_marginal_logpdf(q, log_det, dim, alpha, beta)).abs());
        }
    }
    c.check(worst <= 1e-6, format!("Student marginal worst log error {worst:.1e} <= 1e-6"));
    c.finish()
}

fn criterion_3(run: &Run) -> (bool, String) {
    let mut c = Checks::new();
    let e_data = error_index(&run.data, &run.truth).unwrap();
    let e_my = error_index(&run.myopic.output.estimate, &run.truth).unwrap();
    let e_nm = error_index(&run.non_myopic.output.estimate, &run.truth).unwrap();
    c.in_range("e_data", e_data, 0.08, 0.14);
    c.in_range("e_myopic", e_my, 0.05, 0.08);
    c.check(e_my < e_data, format!("e_myopic {e_my:.5} < e_data {e_data:.5}"));
    c.check(e_nm <= e_my + 0.005, format!("e_non_myopic {e_nm:.5} <= e_myopic + 0.005"));
    let post = &run.myopic.posterior;
    let g = |name: &str| post.get(name).unwrap_or_else(|| panic!("no {name} summary"));
    c.in_range("gamma_eps", g("gamma_eps").mean, 0.45, 0.55);
    c.in_range("gamma_1", g("gamma_1").mean, 1.3, 2.3);
    c.in_range("w_alpha", g("w_alpha").mean, 19.5, 20.6);
    c.in_range("w_beta", g("w_beta").mean, 6.5, 7.7);
    c.in_range("phi", g("phi").mean, 0.95, 1.12);
    let truth = [("gamma_eps", 0.5), ("gamma_1", 2.0), ("w_alpha", 20.0), ("w_beta", 7.0), ("phi", PI / 3.0)];
    for (label, summary) in [("myopic", post), ("non-myopic", &run.non_myopic.posterior)] {
        for (name, t) in truth {
            if let Some(p) = summary.get(name) {
                let z = (t - p.mean) / p.std;
                c.check(z.abs() <= 3.0, format!("{label} {name} truth at {z:+.2} sigma"));
            }
        }
    }
    let k_nm = run.non_myopic.output.chains.iterations;
    let k_my = run.myopic.output.chains.iterations;
    c.check(run.non_myopic.output.chains.converged && (200..=5000).contains(&k_nm), format!("K non-myopic = {k_nm} in [200, 5000]"));
    c.check(run.myopic.output.chains.converged && (5000..=100_000).contains(&k_my), format!("K myopic = {k_my} in [5000, 100000]"));
    c.check(run.myopic_seconds < 300.0, format!("myopic wall time {:.1}s < 300s", run.myopic_seconds));
    c.finish()
}

fn criterion_4(run: &Run) -> (bool, String) {
    let mut c = Checks::new();
    let ev = evaluate(&run.myopic.output.estimate, &run.truth, &run.data, 64).unwrap();
    let mut worst_ratio = 1.0f64;
    let mut low_bins = 0;
    let mut high_bins = 0;
    let mut high_ok = true;
    for (i, &f) in ev.truth.frequencies.iter().enumerate() {
        let (t, d, e) = (ev.truth.power[i], ev.data.power[i], ev.estimate.power[i]);
        if f == 0.0 {
            // the mean level is not regularized: estimate equals data there
            c.check(true, format!("f = 0 bin (mean level only) truth {t:.3} data {d:.3} estimate {e:.3}"));
        } else if f < 0.075 {
            low_bins += 1;
            let r = (e / t).max(t / e);
            worst_ratio = worst_ratio.max(r);
        } else if f > 0.15 {
            high_bins += 1;
            high_ok &= e < d;
        }
    }
    c.check(low_bins >= 3 && worst_ratio <= 2.0, format!("{low_bins} bins with 0 < f < 0.075, worst estimate/truth ratio {worst_ratio:.3} <= 2"));
    c.check(high_bins > 0 && high_ok, format!("estimate below data in all {high_bins} bins with f > 0.15"));
    c.finish()
}

fn criterion_5(run: &Run) -> (bool, String) {
    let mut c = Checks::new();
    let post = &run.myopic.posterior;
    let mean = |n: &str| post.get(n).unwrap().mean;
    let base = SweepPoint {
        gamma_eps: mean("gamma_eps"),
        gamma_1: mean("gamma_1"),
        w: PsfParams { w_alpha: mean("w_alpha"), w_beta: mean("w_beta"), phi: mean("phi") },
    };
    let e_mcmc = error_index(&run.myopic.output.estimate, &run.truth).unwrap();
    for param in [SweepParam::Gamma1, SweepParam::GammaEps] {
        let v = base.value(param);
        let grid = logspace(v / 8.0, v * 8.0, 61);
        let curve = parameter_sweep(&run.data, &run.truth, &base, param, &grid, &Stencil::laplacian()).unwrap();
        c.check(curve.has_interior_minimum(), format!("{} sweep minimum at {:.4} is interior", param.name(), curve.best_value()));
        let gap = e_mcmc - curve.best_error();
        c.check(gap < 0.002, format!("{} e_mcmc - e_best = {gap:.2e} < 0.002", param.name()));
    }
    c.finish()
}

fn criterion_6() -> (bool, String) {
    let mut c = Checks::new();
    let side = 32;
    // zero-sum kernel: its transfer vanishes at the null frequency
    let kernel = Stencil::new(3, 3, vec![1.0, 2.0, 1.0, 2.0, -12.0, 2.0, 1.0, 2.0, 1.0].into_iter().map(|v| v / 16.0).collect(), (1, 1)).unwrap();
    let h = diagonalize_kernel(&kernel, side).unwrap();
    c.check(h.dc().norm() < 1e-15, format!("test PSF |h_0| = {:.1e}", h.dc().norm()));
    let lap = diagonalize_kernel(&Stencil::laplacian(), side).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = sample_prior_image(&PrecisionState::new(2.0, 1.0, 2.0).unwrap(), &lap, &mut rng).unwrap();
    let blurred = circular_convolve(&x, &kernel).unwrap();
    let noise: Vec<f64> = (0..side * side).map(|_| rng.sample(StandardNormal)).collect();
    let y = Image::new(side, blurred.data().iter().zip(&noise).map(|(v, n)| v + 0.1 * n).collect()).unwrap();

    let mut cfg = SamplerConfig::new(PsfMode::Transfer(h.clone()), 60);
    cfg.max_iters = 400;
    let refused = run_gibbs(&cfg, &y, &Stencil::laplacian());
    c.check(matches!(refused, Err(Error::SingularCovariance(0))), format!("marginalized mode -> {:?}", refused.as_ref().err()));
    c.check(matches!(PriorMode::marginalized(&h), Err(Error::SingularCovariance(0))), "marginalized mode constructor refuses".into());

    cfg.prior_mode = PriorMode::Full;
    cfg.hyper = HyperParams { zero: GammaPrior::new(1.0, 1.0).unwrap(), ..HyperParams::jeffreys() };
    match run_gibbs(&cfg, &y, &Stencil::laplacian()) {
        Ok(out) => {
            let g0 = chain_summary(&out.chains, 0).unwrap();
            let ok = out.chains.iterations > 1 && out.chains.gamma_0.iter().all(|g| g.is_finite() && *g > 0.0);
            c.check(ok, format!(
                "full mode completed {} iterations, gamma_0 mean {:.3}",
                out.chains.iterations,
                g0.get("gamma_0").map(|p| p.mean).unwrap_or(f64::NAN)
            ));
        }
        Err(e) => c.check(false, format!("full mode failed: {e}")),
    }
    c.finish()
}

fn criterion_7(first: &Path, second: &Path) -> (bool, String) {
    let mut c = Checks::new();
    let mut cfg = ExperimentConfig::default();
    cfg.out_dir = second.to_path_buf();
    cmd_simulate(&cfg).unwrap();
    cmd_deconvolve(&cfg, &second.join("data.img")).unwrap();
    for f in ["truth.img", "data.img", "chains.csv", "estimate.img", "std.img"] {
        let same = fs::read(first.join(f)).unwrap() == fs::read(second.join(f)).unwrap();
        c.check(same, format!("{f} identical"));
    }
    c.finish()
}

fn guarded(f: impl FnOnce() -> (bool, String)) -> (bool, String) {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    }
}

fn main() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let mut results = Vec::new();
    results.push(("1 oracle equivalence", guarded(criterion_1)));
    results.push(("2 gamma machinery", guarded(criterion_2)));
    let run = panic::catch_unwind(AssertUnwindSafe(|| run_default(first.path())));
    match &run {
        Ok(run) => {
            results.push(("3 full reproduction", guarded(|| criterion_3(run))));
            results.push(("4 spectral equalization", guarded(|| criterion_4(run))));
            results.push(("5 sweep optimality", guarded(|| criterion_5(run))));
        }
        Err(_) => {
            for name in ["3 full reproduction", "4 spectral equalization", "5 sweep optimality"] {
                results.push((name, (false, "default run failed".into())));
            }
        }
    }
    results.push(("6 degeneracy guard", guarded(criterion_6)));
    results.push(("7 determinism", guarded(|| criterion_7(first.path(), second.path()))));

    let mut all = true;
    for (name, (ok, detail)) in &results {
        all &= ok;
        println!("{} criterion {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
    }
    if !all {
        std::process::exit(1);
    }
}
