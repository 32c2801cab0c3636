mod support;

use morsemap_core::field::{self, Family, SynthParams};
use morsemap_core::morse::{morse_arcs, ArcMode};
use morsemap_core::nn::{
    load_model, save_model, train, Autoencoder, AutoencoderConfig, Layer, OptimizerState, TrainConfig,
};
use morsemap_core::raster::rasterize;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::nn_oracle::{self as oracle, central_difference, relative_error};

fn tiny_config(seed: u64) -> AutoencoderConfig {
    AutoencoderConfig { resolution: 8, latent_dim: 4, channels: vec![2, 4], seed }
}

fn random_model<T: morsemap_core::nn::Real>(config: AutoencoderConfig, seed: u64) -> Autoencoder<T> {
    let mut m = Autoencoder::new(config).unwrap();
    m.randomize(seed, true);
    m
}

fn binary_image(rng: &mut impl Rng, n: usize, density: f64) -> Vec<f64> {
    (0..n * n).map(|_| rng.gen_bool(density) as u8 as f64).collect()
}

/// A rasterized separatrix image from the synthetic families.
fn arc_image(n: usize, seed: u64) -> Vec<f32> {
    let f = field::generate(&SynthParams::sample(Family::Blobs, 96, 96, seed), 96, 96).unwrap();
    let s = morse_arcs(&f, 0.04, ArcMode::SaddleMax).unwrap();
    rasterize(&s.arcs, (96, 96), n).unwrap().to_f32()
}

#[test]
fn every_layer_type_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (kind, layer, shape) in oracle::layer_suite(&mut rng) {
        let err = oracle::check_layer(&layer, shape, &mut rng, 100);
        assert!(err < 1e-4, "{kind} {shape:?}: relative error {err:e}");
    }
}

#[test]
fn tiny_model_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let model: Autoencoder<f64> = random_model(tiny_config(1), 2);
    assert!(model.num_params() <= 5000, "{}", model.num_params());
    let image = binary_image(&mut rng, 8, 0.3);
    let (loss, grads) = model.backward(&image).unwrap();
    assert!((loss - oracle::bce(&oracle::model_forward(&model, &image), &image)).abs() < 1e-12);

    let sizes: Vec<usize> = grads.iter().map(Vec::len).collect();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let t = rng.gen_range(0..sizes.len());
        let j = rng.gen_range(0..sizes[t]);
        let mut v = model.params()[t].to_vec();
        let numeric = central_difference(&mut v, j, |v| {
            let mut probe = model.clone();
            probe.params_mut()[t].copy_from_slice(v);
            oracle::bce(&oracle::model_forward(&probe, &image), &image)
        });
        worst = worst.max(relative_error(grads[t][j], numeric, 1e-6));
    }
    assert!(worst < 1e-4, "relative error {worst:e}");
}

#[test]
fn forward_matches_direct_evaluator() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model: Autoencoder<f64> = random_model(AutoencoderConfig::new(16, 8, 4), 9);
    for density in [0.1, 0.5] {
        let image = binary_image(&mut rng, 16, density);
        let (recon, latent) = model.forward(&image).unwrap();
        let expect = oracle::model_forward(&model, &image);
        assert_eq!(latent.len(), 8);
        assert_eq!(recon.len(), 256);
        for (a, b) in recon.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            assert!(*a > 0.0 && *a < 1.0);
        }
    }
}

#[test]
fn zero_weights_give_half() {
    let model: Autoencoder<f32> = Autoencoder::zeros(AutoencoderConfig::new(16, 8, 0)).unwrap();
    let (recon, latent) = model.forward(&[1.0; 256]).unwrap();
    assert!(recon.iter().all(|&v| v == 0.5));
    assert!(latent.iter().all(|&v| v == 0.0));
}

#[test]
fn fresh_model_starts_at_ln2() {
    let images: Vec<Vec<f32>> = (0..16).map(|s| arc_image(32, s)).collect();
    let model = Autoencoder::<f32>::new(AutoencoderConfig::new(32, 16, 0)).unwrap();
    for img in &images {
        assert!((model.loss(img).unwrap() - std::f64::consts::LN_2).abs() < 1e-6);
    }
    let cfg = TrainConfig { epochs: 1, ..Default::default() };
    let (_, _, report) = train(model, &images, cfg, None).unwrap();
    assert!((report.epochs[0].train_bce - std::f64::consts::LN_2).abs() < 1e-3);
}

#[test]
fn unreachable_first_layer_taps_get_zero_gradient() {
    // A stride-2 pad-1 convolution reads rows 2y-1 and 2y+1 through its
    // outer kernel rows; an image lit only on even rows never reaches them.
    let model: Autoencoder<f64> = random_model(tiny_config(3), 4);
    let image: Vec<f64> = (0..64).map(|i| ((i / 8) % 2 == 0 && i % 3 != 0) as u8 as f64).collect();
    let (_, grads) = model.backward(&image).unwrap();
    let Layer::Conv2d(c) = &model.layers()[0] else { panic!("first layer is a convolution") };
    for oc in 0..c.out_c {
        for ky in 0..3 {
            for kx in 0..3 {
                let g = grads[0][(oc * 3 + ky) * 3 + kx];
                if ky != 1 {
                    assert_eq!(g, 0.0, "tap ({oc},{ky},{kx})");
                }
            }
        }
    }
    assert!(grads[0].iter().any(|&g| g != 0.0));
}

#[test]
fn gradients_are_deterministic() {
    let model: Autoencoder<f32> = random_model(AutoencoderConfig::new(16, 8, 0), 1);
    let image = arc_image(16, 2);
    let a = model.backward(&image).unwrap();
    let b = model.backward(&image).unwrap();
    assert_eq!(a.0.to_bits(), b.0.to_bits());
    assert_eq!(a.1, b.1);
}

#[test]
fn decode_of_encode_is_forward() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let model: Autoencoder<f32> = random_model(AutoencoderConfig::new(32, 16, 6), 7);
    for _ in 0..100 {
        let image: Vec<f32> = binary_image(&mut rng, 32, 0.2).iter().map(|&v| v as f32).collect();
        let latent = model.encode(&image).unwrap();
        assert_eq!(latent, model.encode(&image).unwrap());
        let (recon, fl) = model.forward(&image).unwrap();
        assert_eq!(latent, fl);
        assert_eq!(model.decode(&latent).unwrap(), recon);
    }
    assert!(model.encode(&[0.0; 10]).is_err());
    assert!(model.decode(&[0.0; 3]).is_err());
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let images: Vec<Vec<f32>> = (0..4).map(|s| arc_image(16, s)).collect();
    let model = Autoencoder::<f32>::new(AutoencoderConfig::new(16, 8, 2)).unwrap();
    let (model, state, _) = train(model, &images, TrainConfig { epochs: 2, batch_size: 2, ..Default::default() }, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.mcae");
    save_model(&model, Some(&state), &path).unwrap();
    let (back, back_state) = load_model(&path).unwrap();
    let back_state: OptimizerState = back_state.unwrap();
    assert_eq!(back_state, state);
    assert_eq!(back_state.m, state.m);
    assert_eq!(back_state.v, state.v);
    assert_eq!(back.iteration, model.iteration);
    for img in &images {
        let (a, la) = model.forward(img).unwrap();
        let (b, lb) = back.forward(img).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(la.iter().zip(&lb).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn one_image_is_memorized() {
    let image = arc_image(64, 11);
    let model = Autoencoder::<f32>::new(AutoencoderConfig::new(64, 64, 0)).unwrap();
    // An overfit check, so a step size well above the dataset default.
    let cfg = TrainConfig { epochs: 200, lr: 1e-3, ..Default::default() };
    let (model, _, report) = train(model, std::slice::from_ref(&image), cfg, None).unwrap();
    let loss = model.loss(&image).unwrap();
    assert!(loss < 0.05, "final BCE {loss}, trace {:?}", report.epochs.iter().map(|e| e.train_bce).collect::<Vec<_>>());
    let zeros = model.encode(&[0.0; 64 * 64]).unwrap();
    let ones = model.encode(&[1.0; 64 * 64]).unwrap();
    assert_ne!(zeros, ones);
}
