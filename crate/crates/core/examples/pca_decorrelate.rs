//! Fit a whitening PCA on correlated features and show the output
//! covariance.
//!
//! ```bash
//! cargo run --release --example pca_decorrelate
//! ```

use compfv::dataio::fit_pca;
use compfv::synth::rng_from_seed;
use ndarray::{Array2, Axis};
use rand_distr::{Distribution, StandardNormal};

fn main() -> compfv::Result<()> {
    let mut rng = rng_from_seed(1);
    let mix = Array2::from_shape_simple_fn((6, 6), || StandardNormal.sample(&mut rng));
    let z: Array2<f64> = Array2::from_shape_simple_fn((1000, 6), || StandardNormal.sample(&mut rng));
    let x = z.dot(&mix);

    let pca = fit_pca(&x, 4, true)?;
    println!("eigenvalues: {:.3}", pca.eigenvalues);
    let y = pca.transform(&x)?;
    let centered = &y - &y.mean_axis(Axis(0)).unwrap();
    let cov = centered.t().dot(&centered) / (y.nrows() as f64 - 1.0);
    println!("whitened covariance:\n{cov:.3}");
    Ok(())
}
