use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use proptest::prelude::*;

use myopic_deconv::analysis::{chain_summary, error_index, radial_spectrum};
use myopic_deconv::config::{ExperimentConfig, HyperChoice, Mode};
use myopic_deconv::io::{decode_image, encode_image};
use myopic_deconv::model::{gaussian_psf_transfer, PsfParams};
use myopic_deconv::priors::{GammaPrior, HyperParams};
use myopic_deconv::sampler::{ChainRecord, Proposal};
use myopic_deconv::spectral::{dft2, idft2, Image, SpectralField};

fn image() -> impl Strategy<Value = Image> {
    (2usize..10).prop_flat_map(|side| {
        prop::collection::vec(-100.0f64..100.0, side * side).prop_map(move |v| Image::new(side, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dft_is_unitary_and_invertible(x in image()) {
        let xh = dft2(&x);
        prop_assert!((xh.norm() - x.norm()).abs() <= 1e-10 * x.norm().max(1.0));
        let back = idft2(&xh).unwrap();
        for (a, b) in back.data().iter().zip(x.data()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn radial_spectrum_conserves_energy(x in image(), bins in 2usize..20) {
        let r = radial_spectrum(&x, bins).unwrap();
        let e = x.norm().powi(2);
        prop_assert!((r.total_power() - e).abs() <= 1e-10 * e.max(1.0));
    }

    #[test]
    fn error_index_of_scaled_truth(x in image(), c in -3.0f64..3.0) {
        prop_assume!(x.norm() > 0.0);
        let y = Image::new(x.side(), x.data().iter().map(|v| c * v).collect()).unwrap();
        prop_assert!((error_index(&y, &x).unwrap() - (c - 1.0).abs()).abs() < 1e-12);
    }

    #[test]
    fn float_image_round_trip_is_f32_exact(x in image()) {
        let back = decode_image(&encode_image(&x)).unwrap();
        for (a, b) in back.data().iter().zip(x.data()) {
            prop_assert_eq!(*a, *b as f32 as f64);
        }
    }

    #[test]
    fn transfer_is_hermitian_and_bounded(
        side in 2usize..24,
        wa in 0.1f64..30.0,
        wb in 0.1f64..30.0,
        phi in -PI..PI,
    ) {
        let h = gaussian_psf_transfer(&PsfParams::new(wa, wb, phi).unwrap(), side);
        prop_assert!(h.hermitian_asymmetry() < 1e-12);
        prop_assert!((h.dc().re - 1.0).abs() < 1e-15);
        prop_assert!(h.values().iter().all(|c| c.re >= 0.0 && c.re <= 1.0 + 1e-15 && c.im == 0.0));
    }

    #[test]
    fn config_round_trips(
        side in 2usize..512,
        ge in 1e-3f64..1e3,
        g1 in 1e-3f64..1e3,
        wa in 0.5f64..40.0,
        spread in 0.01f64..5.0,
        phi in 0.0f64..3.0,
        seed in any::<u64>(),
        explicit in any::<bool>(),
        shape in 0.0f64..10.0,
        myopic in any::<bool>(),
        joint in any::<bool>(),
        tol in 1e-8f64..1e-1,
        dir in "[a-z]{1,8}(/[a-z]{1,8})?",
    ) {
        let mut c = ExperimentConfig {
            side,
            seed,
            tol_myopic: tol,
            out_dir: PathBuf::from(dir),
            mode: if myopic { Mode::Myopic } else { Mode::NonMyopic },
            proposal: if joint { Proposal::Joint } else { Proposal::Componentwise },
            ..ExperimentConfig::default()
        };
        c.truth.gamma_eps = ge;
        c.truth.gamma_1 = g1;
        c.psf = PsfParams { w_alpha: wa, w_beta: wa / 2.0, phi };
        c.box_lower = PsfParams { w_alpha: wa, w_beta: wa / 4.0, phi: phi - spread };
        c.box_upper = PsfParams { w_alpha: wa + spread, w_beta: wa, phi: phi + spread };
        if explicit {
            c.hyper = HyperChoice::Explicit(HyperParams {
                eps: GammaPrior { shape, scale: f64::INFINITY },
                zero: GammaPrior { shape: 1.0, scale: 0.0 },
                one: GammaPrior { shape: shape + 1.0, scale: 1.0 / (shape + 1.0) },
            });
        }
        let text = c.emit();
        prop_assert_eq!(ExperimentConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn chain_summary_ignores_order(values in prop::collection::vec(0.01f64..10.0, 3..40), rot in 0usize..40) {
        let n = values.len();
        let record = |v: Vec<f64>| ChainRecord {
            gamma_eps: v.clone(),
            gamma_0: vec![0.0; n],
            gamma_1: v.iter().map(|g| g * 2.0).collect(),
            w: Vec::new(),
            accepted: Vec::new(),
            proposal: Proposal::Componentwise,
            convergence: Vec::new(),
            mean: SpectralField::new(2, vec![Complex64::new(0.0, 0.0); 4]).unwrap(),
            iterations: n,
            converged: false,
        };
        let mut rotated = values.clone();
        rotated.rotate_left(rot % n);
        let a = chain_summary(&record(values), 0).unwrap();
        let b = chain_summary(&record(rotated), 0).unwrap();
        for (p, q) in a.params.iter().zip(&b.params) {
            prop_assert!((p.mean - q.mean).abs() <= 1e-12 * p.mean.abs());
            prop_assert!((p.std - q.std).abs() <= 1e-9 * p.std.abs().max(1e-12));
        }
    }
}
