//! Compares the two Metropolis-Hastings schemes for the PSF parameters on the
//! default experiment: one joint proposal of the whole vector per iteration,
//! or one proposal per component.
//!
//! ```text
//! cargo run --release --example mh_proposals
//! ```

use myopic_deconv::analysis::chain_summary;
use myopic_deconv::config::ExperimentConfig;
use myopic_deconv::pipeline::{deconvolve, simulate};
use myopic_deconv::sampler::Proposal;

fn main() -> myopic_deconv::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.tol_myopic = 1e-4;
    let sim = simulate(&cfg)?;
    for proposal in [Proposal::Componentwise, Proposal::Joint] {
        cfg.proposal = proposal;
        let out = deconvolve(&cfg, &sim.data)?;
        let s = chain_summary(&out.chains, 0)?;
        let a = s.acceptance.expect("myopic run");
        println!("{proposal:?}: {} samples, acceptance {:.2}% / {:.2}% / {:.2}%", out.chains.iterations, 100.0 * a[0], 100.0 * a[1], 100.0 * a[2]);
        for name in ["w_alpha", "w_beta", "phi"] {
            let p = s.get(name).expect("myopic summary");
            println!("  {name:>8} {:.4} +- {:.4}", p.mean, p.std);
        }
    }
    Ok(())
}
