//! Train the supervised coder on two classes and look at the sparse
//! guidance codes it produces.
//!
//! ```bash
//! cargo run --release --example train_supcoder
//! ```

use compfv::dataio::FeatureSet;
use compfv::supcode::{sparsify_top_k, sup_encode, train_sup_encoder, SupTrainConfig};
use compfv::synth::{rng_from_seed, GenModelI};
use compfv::Dictionary;

fn main() -> compfv::Result<()> {
    let mut rng = rng_from_seed(5);
    let classes = [
        GenModelI::new(Dictionary::random(12, 4, &mut rng), 1.0, 0.05)?,
        GenModelI::new(Dictionary::random(12, 4, &mut rng), 1.0, 0.05)?,
    ];
    let images: Vec<FeatureSet> = (0..60)
        .map(|i| FeatureSet::new(classes[i % 2].sample_matrix(20, &mut rng), format!("img-{i}"), Some((i % 2) as u32)))
        .collect::<compfv::Result<_>>()?;

    let fit = train_sup_encoder(&images, 16, &SupTrainConfig::default())?;
    println!(
        "loss {:.4} -> {:.4}, training accuracy {:.3}",
        fit.loss_trace[0],
        fit.loss_trace.last().unwrap(),
        fit.train_accuracy
    );
    for image in &images[..2] {
        let c = sup_encode(&fit.encoder, image.features().row(0))?;
        println!("class {:?}: guidance {:.2}", image.label, sparsify_top_k(c.view(), 3));
    }
    Ok(())
}
