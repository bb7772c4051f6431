//! Radial power spectra of the truth, the data and the Wiener-Hunt
//! restoration at the true parameters.
//!
//! ```text
//! cargo run --release --example radial_spectrum
//! ```

use myopic_deconv::analysis::wiener_hunt;
use myopic_deconv::config::ExperimentConfig;
use myopic_deconv::model::gaussian_psf_transfer;
use myopic_deconv::pipeline::{evaluate, simulate};
use myopic_deconv::spectral::{diagonalize_kernel, Stencil};

fn main() -> myopic_deconv::Result<()> {
    let cfg = ExperimentConfig::default();
    let sim = simulate(&cfg)?;
    let h = gaussian_psf_transfer(&cfg.psf, cfg.side);
    let lap = diagonalize_kernel(&Stencil::laplacian(), cfg.side)?;
    let est = wiener_hunt(&sim.data, &h, cfg.truth.gamma_eps, cfg.truth.gamma_1, &lap)?;
    let ev = evaluate(&est, &sim.truth, &sim.data, cfg.spectrum_bins)?;

    println!("{:>8} {:>12} {:>12} {:>12}", "f", "truth", "data", "estimate");
    for i in 0..ev.truth.len() {
        let f = ev.truth.frequencies[i];
        if f > 0.3 {
            break;
        }
        println!("{f:>8.4} {:>12.4e} {:>12.4e} {:>12.4e}", ev.truth.power[i], ev.data.power[i], ev.estimate.power[i]);
    }
    Ok(())
}
