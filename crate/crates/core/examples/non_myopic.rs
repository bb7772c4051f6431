//! Unsupervised deconvolution with the PSF known: only the image and the
//! two precisions are sampled.
//!
//! ```text
//! cargo run --release --example non_myopic -- [seed]
//! ```

use myopic_deconv::analysis::{chain_summary, error_index};
use myopic_deconv::config::{ExperimentConfig, Mode};
use myopic_deconv::pipeline::{deconvolve, simulate};

fn main() -> myopic_deconv::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.mode = Mode::NonMyopic;
    if let Some(seed) = std::env::args().nth(1) {
        cfg.seed = seed.parse().expect("seed must be an integer");
    }
    let sim = simulate(&cfg)?;
    let out = deconvolve(&cfg, &sim.data)?;
    let summary = chain_summary(&out.chains, 0)?;

    println!("samples: {} (converged: {})", out.chains.iterations, out.chains.converged);
    println!("error  data {:.4}  estimate {:.4}", error_index(&sim.data, &sim.truth)?, error_index(&out.estimate, &sim.truth)?);
    for p in &summary.params {
        println!("{:>10} = {:.4} +- {:.4}", p.name, p.mean, p.std);
    }
    let avg_std = out.posterior_std.data().iter().sum::<f64>() / out.posterior_std.len() as f64;
    println!("average pixel std {avg_std:.3}");
    Ok(())
}
