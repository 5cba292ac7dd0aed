mod common;

use common::{fd_gradient, random_dict, random_matrix, rel_err};
use compfv::dataio::FeatureSet;
use compfv::supcode::{
    coder_loss_and_gradient, sparsify_top_k, sup_encode, train_sup_encoder, CoderParams, SupTrainConfig,
    SupervisedEncoder,
};
use compfv::synth::{rng_from_seed, GenModelI};
use ndarray::{array, Array1, Array2};
use proptest::prelude::*;

#[test]
fn encode_examples() {
    let e = SupervisedEncoder::new(Array2::zeros((3, 2)), array![-1.0, 2.0]).unwrap();
    assert_eq!(sup_encode(&e, array![5.0, -1.0, 2.0].view()).unwrap(), array![0.0, 2.0]);
    let e = SupervisedEncoder::new(random_matrix(3, 2, &mut rng_from_seed(1)), Array1::zeros(2)).unwrap();
    assert_eq!(sup_encode(&e, Array1::zeros(3).view()).unwrap(), Array1::<f64>::zeros(2));
    assert_eq!(sup_encode(&e, Array1::zeros(4).view()).unwrap_err().kind(), "dimension");
}

#[test]
fn sparsify_examples() {
    let c = array![3.0, 1.0, 2.0];
    assert_eq!(sparsify_top_k(c.view(), 2), array![3.0, 0.0, 2.0]);
    assert_eq!(sparsify_top_k(c.view(), 0), Array1::<f64>::zeros(3));
    assert_eq!(sparsify_top_k(c.view(), 3), c);
    // ties go to the lower index
    assert_eq!(sparsify_top_k(array![1.0, 2.0, 2.0].view(), 1), array![0.0, 2.0, 0.0]);
}

#[test]
fn loss_gradient_matches_finite_differences() {
    let mut rng = rng_from_seed(2);
    let mut params = CoderParams::init(4, 3, 2, 3);
    params.weights = random_matrix(2, 3, &mut rng);
    params.class_bias = array![0.1, -0.2];
    params.bias = array![0.3, 0.2, 0.4];
    let images = [random_matrix(3, 4, &mut rng), random_matrix(3, 4, &mut rng)];
    let refs: Vec<&Array2<f64>> = images.iter().collect();
    let targets = [0, 1];
    let l2 = 1e-3;
    let (_, grad) = coder_loss_and_gradient(&params, &refs, &targets, l2);

    let fd_p = fd_gradient(&params.projection, 1e-6, |p| {
        let trial = CoderParams { projection: p.clone(), ..params.clone() };
        coder_loss_and_gradient(&trial, &refs, &targets, l2).0
    });
    assert!(rel_err(&grad.projection, &fd_p, 1e-8) < 1e-4);
    let fd_w = fd_gradient(&params.weights, 1e-6, |w| {
        let trial = CoderParams { weights: w.clone(), ..params.clone() };
        coder_loss_and_gradient(&trial, &refs, &targets, l2).0
    });
    assert!(rel_err(&grad.weights, &fd_w, 1e-8) < 1e-4);
    let fd_b = common::fd_gradient_vec(&params.bias, 1e-6, |b| {
        let trial = CoderParams { bias: b.clone(), ..params.clone() };
        coder_loss_and_gradient(&trial, &refs, &targets, l2).0
    });
    let as2 = |v: &Array1<f64>| v.clone().insert_axis(ndarray::Axis(0));
    assert!(rel_err(&as2(&grad.bias), &as2(&fd_b), 1e-8) < 1e-4);
}

fn separable_images(per_class: usize, seed: u64) -> Vec<FeatureSet> {
    let mut rng = rng_from_seed(seed);
    let models = [
        GenModelI::new(random_dict(12, 4, seed + 1), 1.0, 0.05).unwrap(),
        GenModelI::new(random_dict(12, 4, seed + 2), 1.0, 0.05).unwrap(),
    ];
    (0..2 * per_class)
        .map(|i| {
            let label = (i % 2) as u32;
            let x = models[i % 2].sample_matrix(10, &mut rng);
            FeatureSet::new(x, format!("img-{i}"), Some(label)).unwrap()
        })
        .collect()
}

#[test]
fn separable_classes_are_learned() {
    let images = separable_images(30, 4);
    let fit = train_sup_encoder(&images, 32, &SupTrainConfig { epochs: 30, ..Default::default() }).unwrap();
    assert!(fit.train_accuracy >= 0.95, "accuracy {}", fit.train_accuracy);
    assert!(fit.loss_trace.last().unwrap() <= &fit.loss_trace[0]);
    assert_eq!(fit.encoder.codes(), 32);
}

#[test]
fn zero_learning_rate_keeps_initialization() {
    let images = separable_images(5, 5);
    let cfg = SupTrainConfig { lr: 0.0, epochs: 3, seed: 6, ..Default::default() };
    let fit = train_sup_encoder(&images, 4, &cfg).unwrap();
    let init = CoderParams::init(12, 4, 2, 6);
    assert_eq!(fit.encoder.projection, init.projection);
    assert_eq!(fit.encoder.bias, init.bias);
}

#[test]
fn single_class_is_rejected() {
    let images: Vec<FeatureSet> = separable_images(4, 7).into_iter().filter(|i| i.label == Some(0)).collect();
    assert_eq!(train_sup_encoder(&images, 4, &SupTrainConfig::default()).unwrap_err().kind(), "argument");
}

#[test]
fn training_is_deterministic() {
    let images = separable_images(6, 8);
    let cfg = SupTrainConfig { epochs: 4, seed: 9, ..Default::default() };
    let a = train_sup_encoder(&images, 5, &cfg).unwrap();
    let b = train_sup_encoder(&images, 5, &cfg).unwrap();
    assert_eq!(a.encoder, b.encoder);
    assert_eq!(a.loss_trace, b.loss_trace);
}

proptest! {
    #[test]
    fn encode_matches_scalar_loop(seed in any::<u64>(), d in 1usize..6, m in 1usize..6) {
        let mut rng = rng_from_seed(seed);
        let p = random_matrix(d, m, &mut rng);
        let b = random_matrix(1, m, &mut rng).row(0).to_owned();
        let x = random_matrix(1, d, &mut rng).row(0).to_owned();
        let e = SupervisedEncoder::new(p.clone(), b.clone()).unwrap();
        let c = sup_encode(&e, x.view()).unwrap();
        for j in 0..m {
            let mut a = b[j];
            for i in 0..d {
                a += p[[i, j]] * x[i];
            }
            prop_assert!((c[j] - a.max(0.0)).abs() < 1e-12);
            prop_assert!(c[j] >= 0.0);
        }
    }

    #[test]
    fn top_k_is_a_mask(values in prop::collection::vec(-5.0f64..5.0, 1..10), k in 0usize..12) {
        let c = Array1::from(values);
        let s = sparsify_top_k(c.view(), k);
        prop_assert!(s.iter().filter(|&&v| v != 0.0).count() <= k);
        for (a, b) in s.iter().zip(&c) {
            prop_assert!(*a == 0.0 || a == b);
        }
    }
}
