//! Learn a dictionary, encode images with SCFVC and inspect the pieces:
//! the per-feature gradient, the pooled block and the final signature.
//!
//! ```bash
//! cargo run --release --example scfvc_pipeline
//! ```

use compfv::dataio::FeatureSet;
use compfv::dict_learn::{learn_dictionary, DictLearnConfig};
use compfv::fvc::{columns_unit_or_zero, encode_image, pooled_blocks, scfvc_encode, Encoder};
use compfv::sparse::MpConfig;
use compfv::synth::{rng_from_seed, GenModelI};
use compfv::Dictionary;

fn main() -> compfv::Result<()> {
    let mut rng = rng_from_seed(11);
    let truth = GenModelI::new(Dictionary::random(20, 12, &mut rng), 1.0, 0.05)?;
    let train = truth.sample_matrix(2000, &mut rng);

    let fit = learn_dictionary(&train, 12, &DictLearnConfig { k: 4, iters: 15, ..Default::default() })?;
    for (i, s) in fit.trace.iter().enumerate().step_by(5) {
        println!("iter {i:2}: mean squared residual {:.4} -> {:.4}", s.error_before, s.error_after_update);
    }

    let cfg = MpConfig { k: 4, ..Default::default() };
    let x = train.row(0);
    let g = scfvc_encode(&fit.dictionary, x, &cfg)?;
    println!("one feature: gradient block {:?}, {} nonzero columns", g.shape(), nonzero_columns(&g.gradient));

    let encoder = Encoder::Scfvc { dict: fit.dictionary, cfg };
    let image = FeatureSet::new(truth.sample_matrix(50, &mut rng), "img", Some(0))?;
    let pooled = pooled_blocks(&image, &encoder)?;
    println!("50 features pooled: {} nonzero columns", nonzero_columns(&pooled[0].gradient));
    let sig = encode_image(&image, &encoder)?;
    println!(
        "signature: {} values, columns unit or zero: {}",
        sig.values.len(),
        columns_unit_or_zero(&sig.values, 20, 1e-12)
    );
    Ok(())
}

fn nonzero_columns(g: &ndarray::Array2<f64>) -> usize {
    g.columns().into_iter().filter(|c| c.iter().any(|&v| v != 0.0)).count()
}
