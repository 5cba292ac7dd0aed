//! A small version of the GMM versus dictionary resolution experiment.
//! The full-size settings live in `configs/resolution.cfg`.
//!
//! ```bash
//! cargo run --release --example bench_resolution
//! ```

use compfv::bench::{resolution_csv, run_resolution, ResolutionConfig};

fn main() -> compfv::Result<()> {
    let cfg = ResolutionConfig {
        dims: vec![50, 100],
        gmm_sizes: vec![25, 50, 100],
        basis_counts: vec![50],
        train_features: 2000,
        test_features: 200,
        ..Default::default()
    };
    print!("{}", resolution_csv(&run_resolution(&cfg)?));
    Ok(())
}
