//! Error of the Wiener-Hunt restoration as each parameter is moved away from
//! its true value, the others held fixed.
//!
//! ```text
//! cargo run --release --example parameter_sweep
//! ```

use myopic_deconv::analysis::{linspace, logspace, parameter_sweep, SweepParam, SweepPoint};
use myopic_deconv::config::ExperimentConfig;
use myopic_deconv::pipeline::simulate;
use myopic_deconv::spectral::Stencil;

fn main() -> myopic_deconv::Result<()> {
    let cfg = ExperimentConfig::default();
    let sim = simulate(&cfg)?;
    let base = SweepPoint { gamma_eps: cfg.truth.gamma_eps, gamma_1: cfg.truth.gamma_1, w: cfg.psf };

    for param in SweepParam::ALL {
        let v = base.value(param);
        let grid = match param {
            SweepParam::GammaEps | SweepParam::Gamma1 => logspace(v / 10.0, v * 10.0, 41),
            _ => linspace(0.8 * v, 1.2 * v, 41),
        };
        let curve = parameter_sweep(&sim.data, &sim.truth, &base, param, &grid, &Stencil::laplacian())?;
        println!(
            "{:>10}: true {v:.4}, best {:.4} with error {:.5} (interior: {})",
            param.name(),
            curve.best_value(),
            curve.best_error(),
            curve.has_interior_minimum()
        );
    }
    Ok(())
}
