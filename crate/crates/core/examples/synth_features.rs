//! Draw features from both generative models and check them against the
//! ground truth they were built from.
//!
//! ```bash
//! cargo run --release --example synth_features
//! ```

use compfv::synth::{rng_from_seed, GenModelI, GenModelII};
use compfv::Dictionary;
use ndarray::array;

fn main() -> compfv::Result<()> {
    let mut rng = rng_from_seed(7);

    let model = GenModelI::new(Dictionary::random(16, 8, &mut rng), 1.0, 0.05)?;
    let x = model.sample_matrix(2000, &mut rng);
    let energy = x.mapv(|v| v * v).sum() / x.nrows() as f64;
    // E||Bu||^2 = 2 lambda^2 M for unit columns, plus D sigma^2 of noise
    let expected = 2.0 * 8.0 + 16.0 * 0.05 * 0.05;
    println!("model I: mean ||x||^2 = {energy:.3} (expected about {expected:.3})");

    let c = array![0.7, 0.0, 0.7, 0.0, 0.0, 0.7];
    let hybrid = GenModelII::new(
        Dictionary::random(16, 6, &mut rng),
        Dictionary::random(16, 10, &mut rng),
        c.clone(),
        [1.0, 0.5, 0.5],
        0.1,
    )?;
    let mut accepted = 0;
    let mut gap = 0.0;
    for _ in 0..500 {
        let draw = hybrid.sample_prior_d(c.view(), &mut rng);
        accepted += draw.accepted;
        gap += (&draw.u_d - &c).mapv(f64::abs).sum() / c.len() as f64;
    }
    println!(
        "model II: Metropolis acceptance {:.2}, mean |u_d - c| {:.3}",
        accepted as f64 / (500 * hybrid.mcmc_steps) as f64,
        gap / 500.0
    );
    Ok(())
}
