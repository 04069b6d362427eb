//! Network gradients against finite differences; KNN kept-set nesting.

mod common;

use common::{finite_difference_gradient, min_hidden_margin};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uc_screen_core::experiments::generate_dataset;
use uc_screen_core::netcase::bundled;
use uc_screen_core::pga::sample_region;
use uc_screen_core::{knn_screen, mlp_train, Dataset, KnnRule, LoadRegion, LoadVector, MlpModel, Sample, TrainConfig};

fn random_model(rng: &mut ChaCha8Rng, n: usize) -> MlpModel {
    let mut model = MlpModel::new(&[n, 50, 30, 30, 1], rng.gen()).unwrap();
    model.input_mean = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    model.input_std = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
    model.output_mean = rng.gen_range(-100.0..100.0);
    model.output_std = rng.gen_range(0.5..50.0);
    for layer in &mut model.layers {
        for b in &mut layer.biases {
            *b = rng.gen_range(-0.5..0.5);
        }
    }
    model
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    while checked < 50 {
        let n = rng.gen_range(1..=14);
        let model = random_model(&mut rng, n);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        if min_hidden_margin(&model, &x) < 1e-3 {
            continue;
        }
        let g = model.input_gradient(&x).unwrap();
        let fd = finite_difference_gradient(&model, &x, 1e-5);
        let err: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-8);
        assert!(err / scale <= 1e-5, "relative error {}", err / scale);
        checked += 1;
    }
}

#[test]
fn larger_k_keeps_a_superset() {
    let case = bundled::case14();
    let region = LoadRegion::around(case.nominal_load.clone(), 0.75).unwrap();
    let ds = generate_dataset(&case, &region, 150, 41).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..30 {
        let q = sample_region(&region, &mut rng).unwrap();
        let k5 = knn_screen(&ds, q.as_slice(), 5, KnnRule::Union).unwrap();
        let k10 = knn_screen(&ds, q.as_slice(), 10, KnnRule::Union).unwrap();
        assert!(k5.iter().zip(&k10).all(|(a, b)| !a || *b));
    }
}

#[test]
fn training_is_seed_deterministic() {
    let samples: Vec<Sample> = (0..60)
        .map(|i| {
            let a = i as f64 / 10.0;
            Sample {
                load: LoadVector::new(vec![a, 6.0 - a]).unwrap(),
                cost: 3.0 * a + 1.0,
                binding: vec![false; 2],
            }
        })
        .collect();
    let ds = Dataset::from_samples(samples);
    let cfg = TrainConfig {
        max_epochs: 30,
        seed: 5,
        ..Default::default()
    };
    let (m1, r1) = mlp_train(&ds, &cfg).unwrap();
    let (m2, r2) = mlp_train(&ds, &cfg).unwrap();
    assert_eq!(m1, m2);
    assert_eq!(r1, r2);
}
