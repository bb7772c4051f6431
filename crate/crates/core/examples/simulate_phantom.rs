//! Draws a 128x128 phantom from the smoothness prior, blurs it with the
//! anisotropic Gaussian PSF and adds white noise.
//!
//! ```text
//! cargo run --release --example simulate_phantom -- [out_dir] [seed]
//! ```

use std::path::PathBuf;

use myopic_deconv::analysis::error_index;
use myopic_deconv::config::ExperimentConfig;
use myopic_deconv::pipeline::cmd_simulate;

fn main() -> myopic_deconv::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = ExperimentConfig::default();
    cfg.out_dir = args.next().map(PathBuf::from).unwrap_or_else(|| "phantom".into());
    if let Some(seed) = args.next() {
        cfg.seed = seed.parse().expect("seed must be an integer");
    }

    let sim = cmd_simulate(&cfg)?;
    let (lo, hi) = sim.truth.min_max();
    println!("phantom {0}x{0}, values in [{lo:.1}, {hi:.1}]", sim.truth.side());
    println!("data error index {:.4}", error_index(&sim.data, &sim.truth)?);
    println!("wrote truth/data (.img and .pgm) to {}", cfg.out_dir.display());
    Ok(())
}
