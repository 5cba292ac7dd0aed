//! Basis matrices with unit-norm columns.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataio::model::{tag, ModelFile, PayloadReader, PayloadWriter};
use crate::error::{check_dim, Error, Result};

/// Column norms may deviate from one by at most this much.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// A `D x M` basis matrix with unit l2-norm columns, plus its cached Gram
/// matrix `B^T B`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    bases: Array2<f64>,
    gram: Array2<f64>,
}

impl Dictionary {
    /// Wraps `bases`, rejecting columns whose norm is not one.
    pub fn new(bases: Array2<f64>) -> Result<Self> {
        if bases.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("dictionary contains non-finite entries"));
        }
        for (j, col) in bases.columns().into_iter().enumerate() {
            let norm = col.dot(&col).sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::arg(format!("column {j} has norm {norm}, expected 1")));
            }
        }
        Ok(Self::from_checked(bases))
    }

    /// Scales every column to unit norm. Zero columns are an error.
    pub fn normalized(mut bases: Array2<f64>) -> Result<Self> {
        for (j, mut col) in bases.columns_mut().into_iter().enumerate() {
            let norm = col.dot(&col).sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::arg(format!("column {j} cannot be normalized")));
            }
            col /= norm;
        }
        Ok(Self::from_checked(bases))
    }

    fn from_checked(bases: Array2<f64>) -> Self {
        let gram = bases.t().dot(&bases);
        Self { bases, gram }
    }

    /// Gaussian random columns, normalized.
    pub fn random<R: Rng + ?Sized>(dim: usize, atoms: usize, rng: &mut R) -> Self {
        loop {
            let bases = Array2::from_shape_simple_fn((dim, atoms), || StandardNormal.sample(rng));
            if let Ok(dict) = Self::normalized(bases) {
                return dict;
            }
        }
    }

    pub fn bases(&self) -> &Array2<f64> {
        &self.bases
    }

    pub fn gram(&self) -> &Array2<f64> {
        &self.gram
    }

    pub fn dim(&self) -> usize {
        self.bases.nrows()
    }

    pub fn atoms(&self) -> usize {
        self.bases.ncols()
    }

    pub fn atom(&self, j: usize) -> ArrayView1<'_, f64> {
        self.bases.column(j)
    }

    /// `B u`.
    pub fn reconstruct(&self, code: &Array1<f64>) -> Array1<f64> {
        self.bases.dot(code)
    }
}

/// The discriminative / residual basis pair used by hybrid coding.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridDictionary {
    pub discriminative: Dictionary,
    pub residual: Dictionary,
}

impl HybridDictionary {
    pub fn new(discriminative: Dictionary, residual: Dictionary) -> Result<Self> {
        check_dim(discriminative.dim(), residual.dim())?;
        Ok(Self {
            discriminative,
            residual,
        })
    }

    pub fn dim(&self) -> usize {
        self.discriminative.dim()
    }

    /// `[B_d B_r]` as one `D x (M1 + M2)` matrix.
    pub fn concatenated(&self) -> Array2<f64> {
        ndarray::concatenate(
            Axis(1),
            &[self.discriminative.bases.view(), self.residual.bases.view()],
        )
        .expect("same row count")
    }
}

/// Payload: `u32 D`, `u32 M`, then the `D x M` bases column by column.
impl ModelFile for Dictionary {
    const TAG: u8 = tag::DICTIONARY;

    fn write_payload(&self, w: &mut PayloadWriter) {
        w.u32(self.dim());
        w.u32(self.atoms());
        w.f64s(self.bases.t().iter());
    }

    fn read_payload(r: &mut PayloadReader<'_>) -> Result<Self> {
        let d = r.u32()?;
        let m = r.u32()?;
        let offset = r.offset();
        let bases = r.matrix(m, d)?.reversed_axes();
        Dictionary::new(bases.as_standard_layout().to_owned())
            .map_err(|e| Error::format_at_byte(offset, e.to_string()))
    }
}

/// Payload: `u32 D`, `u32 M1`, `u32 M2`, then `B_d` and `B_r`, each column
/// by column.
impl ModelFile for HybridDictionary {
    const TAG: u8 = tag::HYBRID_DICTIONARY;

    fn write_payload(&self, w: &mut PayloadWriter) {
        w.u32(self.dim());
        w.u32(self.discriminative.atoms());
        w.u32(self.residual.atoms());
        w.f64s(self.discriminative.bases.t().iter());
        w.f64s(self.residual.bases.t().iter());
    }

    fn read_payload(r: &mut PayloadReader<'_>) -> Result<Self> {
        let d = r.u32()?;
        let m1 = r.u32()?;
        let m2 = r.u32()?;
        let offset = r.offset();
        let to_dict = |m: Array2<f64>| {
            Dictionary::new(m.reversed_axes().as_standard_layout().to_owned())
                .map_err(|e| Error::format_at_byte(offset, e.to_string()))
        };
        let bd = to_dict(r.matrix(m1, d)?)?;
        let br = to_dict(r.matrix(m2, d)?)?;
        HybridDictionary::new(bd, br)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::model::{model_bytes, parse_model};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_non_unit_columns() {
        assert!(Dictionary::new(array![[1.0, 0.0], [0.0, 1.1]]).is_err());
        assert!(Dictionary::new(array![[1.0, 0.0], [0.0, 1.0 + 1e-7]]).is_ok());
        assert!(Dictionary::normalized(array![[1.0, 0.0], [0.0, 0.0]]).is_err());
    }

    #[test]
    fn container_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = Dictionary::random(5, 3, &mut rng);
        let back: Dictionary = parse_model(&model_bytes(&d)).unwrap();
        assert_eq!(back, d);
        let h = HybridDictionary::new(d.clone(), Dictionary::random(5, 2, &mut rng)).unwrap();
        let back: HybridDictionary = parse_model(&model_bytes(&h)).unwrap();
        assert_eq!(back, h);
    }
}
