//! Fit a diagonal GMM and encode one image with the GMM Fisher vector.
//!
//! ```bash
//! cargo run --release --example gmm_baseline
//! ```

use compfv::dataio::FeatureSet;
use compfv::fvc::{encode_image, Encoder, GmmFvcOptions};
use compfv::gmm::{fit_gmm, GmmConfig};
use compfv::synth::{rng_from_seed, GenModelI};
use compfv::Dictionary;

fn main() -> compfv::Result<()> {
    let mut rng = rng_from_seed(3);
    let model = GenModelI::new(Dictionary::random(10, 6, &mut rng), 1.0, 0.1)?;
    let train = model.sample_matrix(3000, &mut rng);

    let fit = fit_gmm(&train, 16, &GmmConfig { max_iters: 50, ..Default::default() })?;
    println!(
        "EM: {} evaluations, log-likelihood {:.1} -> {:.1}, {} re-seeded",
        fit.log_likelihood.len(),
        fit.log_likelihood[0],
        fit.log_likelihood.last().unwrap(),
        fit.reseeded
    );

    let encoder = Encoder::GmmFvc {
        model: fit.model,
        opts: GmmFvcOptions { include_variances: true },
    };
    let image = FeatureSet::new(model.sample_matrix(40, &mut rng), "example", None)?;
    let sig = encode_image(&image, &encoder)?;
    println!("signature length {} (encoder {})", sig.values.len(), sig.encoder_id);
    Ok(())
}
