//! Synthetic classification benchmarks: SCFVC against GMM-FVC on class
//! dictionaries, then SCFVC, the supervised coder and HSCFVC on hybrid data.
//!
//! ```bash
//! cargo run --release --example classify_benchmark
//! ```

use compfv::bench::{
    class_dataset_i, class_dataset_ii, run_benchmark_i, run_benchmark_ii, scores_csv, ClassDataConfig,
    HybridDataConfig, PipelineConfig,
};

fn main() -> compfv::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = PipelineConfig { seed, ..Default::default() };

    let split = class_dataset_i(&ClassDataConfig { seed, ..Default::default() })?;
    print!("{}", scores_csv(&run_benchmark_i(&split, &cfg)?));

    let split = class_dataset_ii(&HybridDataConfig { seed, ..Default::default() })?;
    print!("{}", scores_csv(&run_benchmark_ii(&split, &cfg)?));
    Ok(())
}
