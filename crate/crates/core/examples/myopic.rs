//! Myopic and unsupervised deconvolution: image, noise and smoothness
//! precisions and the three PSF parameters are all sampled.
//!
//! ```text
//! cargo run --release --example myopic -- [seed]
//! ```

use std::time::Instant;

use myopic_deconv::analysis::{chain_summary, error_index};
use myopic_deconv::config::ExperimentConfig;
use myopic_deconv::pipeline::{deconvolve, simulate};

fn main() -> myopic_deconv::Result<()> {
    let mut cfg = ExperimentConfig::default();
    if let Some(seed) = std::env::args().nth(1) {
        cfg.seed = seed.parse().expect("seed must be an integer");
    }
    let sim = simulate(&cfg)?;
    let start = Instant::now();
    let out = deconvolve(&cfg, &sim.data)?;
    let elapsed = start.elapsed();
    let summary = chain_summary(&out.chains, 0)?;

    println!("{} samples in {:.1}s", out.chains.iterations, elapsed.as_secs_f64());
    println!("error  data {:.4}  estimate {:.4}", error_index(&sim.data, &sim.truth)?, error_index(&out.estimate, &sim.truth)?);
    let truth = [
        ("gamma_eps", cfg.truth.gamma_eps),
        ("gamma_1", cfg.truth.gamma_1),
        ("w_alpha", cfg.psf.w_alpha),
        ("w_beta", cfg.psf.w_beta),
        ("phi", cfg.psf.phi),
    ];
    println!("{:>10} {:>8} {:>10} {:>8}", "", "true", "mean", "std");
    for (name, t) in truth {
        let p = summary.get(name).expect("myopic chains carry every parameter");
        println!("{name:>10} {t:>8.3} {:>10.4} {:>8.4}", p.mean, p.std);
    }
    if let Some(a) = summary.acceptance {
        println!("acceptance  w_alpha {:.1}%  w_beta {:.1}%  phi {:.1}%", 100.0 * a[0], 100.0 * a[1], 100.0 * a[2]);
    }
    Ok(())
}
