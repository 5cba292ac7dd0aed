use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, Axis};

use super::features::FeatureSet;
use super::model::{tag, ModelFile, PayloadReader, PayloadWriter};
use crate::error::{check_dim, Error, Result};

/// Principal component projection of local features.
///
/// The covariance uses the unbiased `n - 1` denominator, so for the training
/// set the mean squared reconstruction error per sample equals
/// `(n - 1) / n` times the sum of the discarded eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaTransform {
    pub mean: Array1<f64>,
    /// `D x D'`, orthonormal columns, leading eigenvectors first.
    pub projection: Array2<f64>,
    /// Non-increasing, non-negative.
    pub eigenvalues: Array1<f64>,
    /// Divide each output coordinate by the square root of its eigenvalue.
    pub whiten: bool,
}

impl PcaTransform {
    pub fn input_dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.projection.ncols()
    }

    /// Projects an `N x D` matrix to `N x D'`.
    pub fn transform(&self, samples: &Array2<f64>) -> Result<Array2<f64>> {
        check_dim(self.input_dim(), samples.ncols())?;
        let centered = samples - &self.mean.view().insert_axis(Axis(0));
        let mut out = centered.dot(&self.projection);
        if self.whiten {
            let scale = self.eigenvalues.mapv(|e| 1.0 / e.max(f64::EPSILON).sqrt());
            out *= &scale.view().insert_axis(Axis(0));
        }
        Ok(out)
    }
}

/// Fits a PCA on the rows of `samples`, keeping the `target_dim` leading
/// components.
pub fn fit_pca(samples: &Array2<f64>, target_dim: usize, whiten: bool) -> Result<PcaTransform> {
    let (n, d) = samples.dim();
    if target_dim == 0 || target_dim > d {
        return Err(Error::arg(format!("target dimension {target_dim} must be in 1..={d}")));
    }
    if n < target_dim || n < 2 {
        return Err(Error::arg(format!(
            "{n} samples cannot support a {target_dim}-dimensional PCA"
        )));
    }
    let mean = samples.mean_axis(Axis(0)).expect("n >= 2");
    let centered = samples - &mean.view().insert_axis(Axis(0));
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);

    let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |i, j| cov[[i, j]]));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut projection = Array2::zeros((d, target_dim));
    let mut eigenvalues = Array1::zeros(target_dim);
    for (out, &src) in order.iter().take(target_dim).enumerate() {
        let column = eig.eigenvectors.column(src);
        // sign convention: the largest-magnitude entry is positive
        let pivot = column
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &v)| if v.abs() > best.1.abs() { (i, v) } else { best });
        let sign = if pivot.1 < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            projection[[i, out]] = sign * column[i];
        }
        eigenvalues[out] = eig.eigenvalues[src].max(0.0);
    }
    Ok(PcaTransform {
        mean,
        projection,
        eigenvalues,
        whiten,
    })
}

pub fn apply_pca(t: &PcaTransform, fs_: &FeatureSet) -> Result<FeatureSet> {
    let out = t.transform(fs_.features())?;
    FeatureSet::new(out, fs_.image_id.clone(), fs_.label)
}

/// Payload: `u32 D`, `u32 D'`, `u8 whiten`, `D` mean values, `D x D'`
/// projection (row-major), `D'` eigenvalues.
impl ModelFile for PcaTransform {
    const TAG: u8 = tag::PCA;

    fn write_payload(&self, w: &mut PayloadWriter) {
        w.u32(self.input_dim());
        w.u32(self.output_dim());
        w.u8(self.whiten as u8);
        w.f64s(self.mean.iter());
        w.matrix(&self.projection);
        w.f64s(self.eigenvalues.iter());
    }

    fn read_payload(r: &mut PayloadReader<'_>) -> Result<Self> {
        let d = r.u32()?;
        let out = r.u32()?;
        let whiten = r.u8()? != 0;
        Ok(Self {
            mean: r.vector(d)?,
            projection: r.matrix(d, out)?,
            eigenvalues: r.vector(out)?,
            whiten,
        })
    }
}
