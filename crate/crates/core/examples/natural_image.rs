//! Myopic deconvolution of a user-supplied square grayscale PGM, blurred with
//! the default PSF and corrupted by noise of precision 2. Without an argument
//! a synthetic 128x128 test card is used.
//!
//! ```text
//! cargo run --release --example natural_image -- [image.pgm] [out_dir]
//! ```

use std::path::PathBuf;

use myopic_deconv::analysis::{chain_summary, error_index};
use myopic_deconv::config::ExperimentConfig;
use myopic_deconv::io;
use myopic_deconv::pipeline::{deconvolve, simulate};
use myopic_deconv::spectral::Image;

fn test_card(side: usize) -> myopic_deconv::Result<Image> {
    let c = side as f64 / 2.0;
    Image::from_fn(side, |p, q| {
        let (y, x) = (p as f64 - c, q as f64 - c);
        let r = (x * x + y * y).sqrt();
        let disc = if r < side as f64 / 4.0 { 80.0 } else { 0.0 };
        let bars = if p > side * 3 / 4 && (q / 8) % 2 == 0 { 60.0 } else { 0.0 };
        disc + bars + 40.0 * (x / 9.0).sin() * (y / 13.0).cos()
    })
}

fn main() -> myopic_deconv::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = args.next().filter(|s| !s.is_empty()).map(PathBuf::from);
    let out_dir = args.next().map(PathBuf::from).unwrap_or_else(|| "natural".into());
    std::fs::create_dir_all(&out_dir)?;

    let mut cfg = ExperimentConfig::default();
    cfg.truth.gamma_eps = 2.0;
    cfg.input_image = Some(match input {
        Some(p) => p,
        None => {
            let p = out_dir.join("card.img");
            io::write_image(&p, &test_card(128)?)?;
            p
        }
    });

    let sim = simulate(&cfg)?;
    let out = deconvolve(&cfg, &sim.data)?;
    let summary = chain_summary(&out.chains, 0)?;
    io::write_pgm(&out_dir.join("truth.pgm"), &sim.truth)?;
    io::write_pgm(&out_dir.join("data.pgm"), &sim.data)?;
    io::write_pgm(&out_dir.join("estimate.pgm"), &out.estimate)?;

    println!("{} samples", out.chains.iterations);
    println!("error  data {:.4}  estimate {:.4}", error_index(&sim.data, &sim.truth)?, error_index(&out.estimate, &sim.truth)?);
    for (name, t) in [("gamma_eps", 2.0), ("w_alpha", cfg.psf.w_alpha), ("w_beta", cfg.psf.w_beta), ("phi", cfg.psf.phi)] {
        let p = summary.get(name).expect("myopic summary");
        println!("{name:>10}: true {t:.3}, estimate {:.3} +- {:.3}", p.mean, p.std);
    }
    println!("images written to {}", out_dir.display());
    Ok(())
}
