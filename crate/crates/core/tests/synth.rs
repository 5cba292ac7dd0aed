mod common;

use common::{covariance, random_dict};
use compfv::synth::{
    laplace_inverse_cdf, rng_from_seed, sample_feature_i, sample_feature_ii, sample_laplace, GenModelI, GenModelII,
};
use compfv::Dictionary;
use ndarray::{array, Array1, Array2};
use proptest::prelude::*;

#[test]
fn laplace_moments() {
    assert_eq!(laplace_inverse_cdf(0.0, 1.0), 0.0);
    let u = sample_laplace(1.0, 100_000, 3).unwrap();
    let mean = u.sum() / u.len() as f64;
    let mean_abs = u.mapv(f64::abs).sum() / u.len() as f64;
    assert!(mean.abs() < 0.02, "mean {mean}");
    assert!((mean_abs - 1.0).abs() < 0.02, "mean abs {mean_abs}");

    let u = sample_laplace(2.5, 100_000, 4).unwrap();
    let var = u.mapv(|v| v * v).sum() / u.len() as f64;
    // variance of Laplace(b) is 2 b^2
    assert!((var / (2.0 * 2.5 * 2.5) - 1.0).abs() < 0.05, "var {var}");
}

#[test]
fn laplace_rejects_bad_scale() {
    assert_eq!(sample_laplace(0.0, 3, 0).unwrap_err().kind(), "argument");
    assert!(sample_laplace(-1.0, 3, 0).is_err());
}

#[test]
fn noiseless_features_lie_on_the_bases() {
    let model = GenModelI::new(random_dict(10, 6, 1), 1.0, 1e-12).unwrap();
    for seed in 0..20 {
        let (x, u) = sample_feature_i(&model, seed);
        let r = &x - &model.bases.reconstruct(&u);
        assert!(r.dot(&r).sqrt() < 1e-9);
    }
}

#[test]
fn single_atom_marginal_variance() {
    let bases = Dictionary::new(array![[1.0], [0.0]]).unwrap();
    let sigma = 0.3;
    let model = GenModelI::new(bases, 1.0, sigma).unwrap();
    let x = model.sample_matrix(10_000, &mut rng_from_seed(5));
    let var = x.column(1).mapv(|v| v * v).sum() / 10_000.0;
    assert!((var / (sigma * sigma) - 1.0).abs() < 0.1, "var {var}");
}

#[test]
fn noise_covariance_is_isotropic() {
    let sigma = 0.5;
    let model = GenModelI::new(random_dict(4, 3, 2), 1.0, sigma).unwrap();
    let mut rng = rng_from_seed(6);
    let mut noise = Array2::zeros((10_000, 4));
    for mut row in noise.rows_mut() {
        let (x, u) = model.sample(&mut rng);
        row.assign(&(&x - &model.bases.reconstruct(&u)));
    }
    let cov = covariance(&noise);
    let s2 = sigma * sigma;
    for i in 0..4 {
        for j in 0..4 {
            let expected = if i == j { s2 } else { 0.0 };
            assert!((cov[[i, j]] - expected).abs() < 0.1 * s2, "cov[{i},{j}] = {}", cov[[i, j]]);
        }
    }
}

fn model_ii(c: Array1<f64>, lambdas: [f64; 3], noise: f64) -> GenModelII {
    let m1 = c.len();
    GenModelII::new(random_dict(8, m1, 10), random_dict(8, 3, 11), c, lambdas, noise).unwrap()
}

#[test]
fn tiny_fidelity_scale_pins_the_code() {
    let c = array![0.5, -1.0, 0.0, 2.0];
    let model = model_ii(c.clone(), [1.0, 0.5, 1e-6], 0.1);
    for seed in 0..20 {
        let (_, u_d, _) = sample_feature_ii(&model, seed);
        let gap = (&u_d - &c).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(gap < 1e-3, "gap {gap}");
    }
}

#[test]
fn zero_guidance_concentrates_near_zero() {
    let lambda2 = 0.5;
    let model = model_ii(Array1::zeros(4), [1.0, lambda2, 1e6], 0.1);
    let mut rng = rng_from_seed(12);
    let mut total = 0.0;
    let draws = 10_000;
    for _ in 0..draws {
        total += model.sample_prior_d(model.code_prior_c.view(), &mut rng).u_d.mapv(f64::abs).mean().unwrap();
    }
    assert!(total / (draws as f64) < 3.0 * lambda2);
}

#[test]
fn metropolis_acceptance_rate_is_moderate() {
    let model = model_ii(array![0.7, 0.0, 0.7, 0.0], [1.0, 0.5, 0.5], 0.1);
    let mut rng = rng_from_seed(13);
    let (mut accepted, mut steps) = (0, 0);
    for _ in 0..200 {
        let draw = model.sample_prior_d(model.code_prior_c.view(), &mut rng);
        accepted += draw.accepted;
        steps += draw.steps;
    }
    let rate = accepted as f64 / steps as f64;
    assert!((0.2..=0.8).contains(&rate), "acceptance {rate}");
}

#[test]
fn constructors_validate() {
    assert!(GenModelI::new(random_dict(3, 2, 0), 0.0, 0.1).is_err());
    assert!(GenModelI::new(random_dict(3, 2, 0), 1.0, -0.1).is_err());
    let bad = GenModelII::new(random_dict(3, 2, 0), random_dict(4, 2, 0), Array1::zeros(2), [1.0; 3], 0.1);
    assert_eq!(bad.unwrap_err().kind(), "dimension");
    assert!(GenModelII::new(random_dict(3, 2, 0), random_dict(3, 2, 0), Array1::zeros(2), [1.0, 0.0, 1.0], 0.1).is_err());
}

proptest! {
    #[test]
    fn samples_are_deterministic(seed in any::<u64>()) {
        let m1 = GenModelI::new(random_dict(5, 3, 7), 1.0, 0.1).unwrap();
        prop_assert_eq!(sample_feature_i(&m1, seed), sample_feature_i(&m1, seed));
        let m2 = model_ii(array![0.3, 0.0], [1.0, 0.5, 0.5], 0.1);
        let a = sample_feature_ii(&m2, seed);
        let b = sample_feature_ii(&m2, seed);
        prop_assert!(a.0 == b.0 && a.1 == b.1 && a.2 == b.2);
    }

    #[test]
    fn inverse_cdf_is_odd_and_monotone(v in -0.499f64..0.499, w in -0.499f64..0.499) {
        prop_assert_eq!(laplace_inverse_cdf(-v, 1.3), -laplace_inverse_cdf(v, 1.3));
        if v < w {
            prop_assert!(laplace_inverse_cdf(v, 1.3) < laplace_inverse_cdf(w, 1.3));
        }
    }
}
