//! A PSF that does not see the mean level (zero transfer at the null
//! frequency) leaves the posterior improper when the mean-level precision is
//! integrated out. The sampler refuses that case; with a proper prior on the
//! mean-level precision it runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use myopic_deconv::priors::{sample_prior_image, GammaPrior, HyperParams, PrecisionState, PriorMode};
use myopic_deconv::sampler::{run_gibbs, PsfMode, SamplerConfig};
use myopic_deconv::spectral::{circular_convolve, diagonalize_kernel, Image, Stencil};

fn main() -> myopic_deconv::Result<()> {
    let side = 32;
    let taps = [1.0, 2.0, 1.0, 2.0, -12.0, 2.0, 1.0, 2.0, 1.0].map(|v| v / 16.0);
    let kernel = Stencil::new(3, 3, taps.to_vec(), (1, 1))?;
    let h = diagonalize_kernel(&kernel, side)?;
    println!("transfer at the null frequency: {:.1e}", h.dc().norm());

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lap = diagonalize_kernel(&Stencil::laplacian(), side)?;
    let x = sample_prior_image(&PrecisionState::new(1.0, 1.0, 2.0)?, &lap, &mut rng)?;
    let blurred = circular_convolve(&x, &kernel)?;
    let y = Image::new(side, blurred.data().iter().map(|v| v + 0.1 * rng.sample::<f64, _>(StandardNormal)).collect())?;

    let mut cfg = SamplerConfig::new(PsfMode::Transfer(h), 5);
    cfg.max_iters = 500;
    match run_gibbs(&cfg, &y, &Stencil::laplacian()) {
        Ok(_) => println!("marginalized mode: ran (unexpected)"),
        Err(e) => println!("marginalized mode: {e}"),
    }

    cfg.prior_mode = PriorMode::Full;
    cfg.hyper = HyperParams { zero: GammaPrior::new(1.0, 1.0)?, ..HyperParams::jeffreys() };
    let out = run_gibbs(&cfg, &y, &Stencil::laplacian())?;
    let g0 = out.chains.gamma_0.iter().sum::<f64>() / out.chains.len() as f64;
    println!("full mode: {} iterations, mean gamma_0 {g0:.3}", out.chains.iterations);
    Ok(())
}
