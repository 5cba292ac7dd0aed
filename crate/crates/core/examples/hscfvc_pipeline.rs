//! Hybrid coding end to end: supervised coder, hybrid dictionaries, and the
//! two-block HSCFVC signature.
//!
//! ```bash
//! cargo run --release --example hscfvc_pipeline
//! ```

use compfv::bench::{class_dataset_ii, hscfvc_encoder, supervised_coder, HybridDataConfig, PipelineConfig};
use compfv::fvc::encode_image;

fn main() -> compfv::Result<()> {
    let split = class_dataset_ii(&HybridDataConfig {
        train_per_class: 20,
        test_per_class: 5,
        ..Default::default()
    })?;
    let cfg = PipelineConfig::default();

    let coder = supervised_coder(&split.train, &cfg)?;
    let encoder = hscfvc_encoder(&split.train, coder, &cfg)?;
    let sig = encode_image(&split.test[0], &encoder)?;
    let d = encoder.dim();
    let split_at = d * cfg.codes;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    println!("signature length {} = {d} x ({} + {})", sig.values.len(), cfg.codes, cfg.residual_atoms);
    println!(
        "discriminative block norm {:.3}, residual block norm {:.3}",
        norm(&sig.values.as_slice().unwrap()[..split_at]),
        norm(&sig.values.as_slice().unwrap()[split_at..])
    );
    Ok(())
}
