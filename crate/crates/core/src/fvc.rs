//! Fisher vector encoders, pooling and normalization.
//!
//! Every encoder maps one local feature to a `D x M` gradient block:
//!
//! * SCFVC: `(1/sigma2) (x - B u*) u*^T`, with `u*` from matching pursuit;
//! * HSCFVC: the same outer product against `u_d*` and `u_r*`, giving one
//!   block per basis;
//! * GMM-FVC: column `k` is `gamma_k(x) (x - mu_k) / sigma_k`, optionally
//!   followed by the log-scale gradients `gamma_k ((x - mu_k)^2 / sigma_k^2 - 1)`.
//!
//! An image signature is built as: encode every feature, sum-pool, apply
//! power normalization (alpha = 0.5), intra-normalize each column, then
//! flatten block by block, column by column.

use ndarray::{Array, Array1, Array2, ArrayView1, Axis, Dimension, Zip};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::dataio::model::model_bytes;
use crate::dataio::FeatureSet;
use crate::dictionary::{Dictionary, HybridDictionary};
use crate::error::{check_dim, Error, Result};
use crate::gmm::{responsibilities, GmmModel};
use crate::sparse::{hybrid_mp_encode, mp_encode, MpConfig};
use crate::supcode::{sparsify_top_k, sup_encode, SupervisedEncoder};

pub const DEFAULT_POWER: f64 = 0.5;

/// A gradient with respect to one basis matrix, one column per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherBlock {
    pub gradient: Array2<f64>,
}

impl FisherBlock {
    pub fn zeros(dim: usize, atoms: usize) -> Self {
        Self {
            gradient: Array2::zeros((dim, atoms)),
        }
    }

    /// `(1/sigma2) r u^T`.
    pub fn outer(residual: &Array1<f64>, code: &Array1<f64>, sigma2: f64) -> Self {
        let r = residual.view().insert_axis(Axis(1));
        let u = code.view().insert_axis(Axis(0));
        Self {
            gradient: r.dot(&u) / sigma2,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.gradient.dim()
    }
}

pub fn scfvc_encode(dict: &Dictionary, x: ArrayView1<'_, f64>, cfg: &MpConfig) -> Result<FisherBlock> {
    cfg.validate()?;
    let code = mp_encode(dict, x, cfg.k)?;
    Ok(FisherBlock::outer(&code.residual, &code.values, cfg.sigma2))
}

/// Returns `(G_Bd, G_Br)`.
pub fn hscfvc_encode(
    dicts: &HybridDictionary,
    x: ArrayView1<'_, f64>,
    c: ArrayView1<'_, f64>,
    cfg: &MpConfig,
) -> Result<(FisherBlock, FisherBlock)> {
    let code = hybrid_mp_encode(dicts, x, c, cfg)?;
    Ok((
        FisherBlock::outer(&code.residual, &code.u_d, cfg.sigma2),
        FisherBlock::outer(&code.residual, &code.u_r, cfg.sigma2),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GmmFvcOptions {
    /// Append `K` log-scale gradient columns after the mean columns.
    pub include_variances: bool,
}

pub fn gmmfvc_encode(
    model: &GmmModel,
    x: ArrayView1<'_, f64>,
    opts: &GmmFvcOptions,
) -> Result<FisherBlock> {
    let gamma = responsibilities(model, x)?;
    let (k, d) = (model.components(), model.dim());
    let width = if opts.include_variances { 2 * k } else { k };
    let mut block = FisherBlock::zeros(d, width);
    for c in 0..k {
        let g = gamma[c];
        let mean = model.means.row(c);
        let var = model.variances.row(c);
        for j in 0..d {
            let z = (x[j] - mean[j]) / var[j].sqrt();
            block.gradient[[j, c]] = g * z;
            if opts.include_variances {
                block.gradient[[j, k + c]] = g * (z * z - 1.0);
            }
        }
    }
    Ok(block)
}

/// Elementwise sum, in list order.
pub fn pool_sum(blocks: &[FisherBlock]) -> Result<FisherBlock> {
    let first = blocks.first().ok_or_else(|| Error::arg("nothing to pool"))?;
    let mut acc = first.clone();
    for b in &blocks[1..] {
        if b.shape() != acc.shape() {
            return Err(Error::arg(format!(
                "cannot pool blocks of shape {:?} and {:?}",
                acc.shape(),
                b.shape()
            )));
        }
        acc.gradient += &b.gradient;
    }
    Ok(acc)
}

/// `sign(z) |z|^alpha` elementwise, `0 < alpha <= 1`.
pub fn power_normalize<D: Dimension>(v: &Array<f64, D>, alpha: f64) -> Result<Array<f64, D>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::arg(format!("power exponent must be in (0, 1], got {alpha}")));
    }
    if alpha == 1.0 {
        return Ok(v.clone());
    }
    Ok(v.mapv(|z| z.signum() * z.abs().powf(alpha) * if z == 0.0 { 0.0 } else { 1.0 }))
}

/// Scales every column to unit l2 norm; zero columns stay zero.
pub fn intra_normalize(block: &FisherBlock) -> FisherBlock {
    let mut out = block.clone();
    for mut col in out.gradient.columns_mut() {
        let norm = col.dot(&col).sqrt();
        if norm > 0.0 {
            col /= norm;
        }
    }
    out
}

/// Unit l2 norm for the whole vector (zero stays zero).
pub fn l2_normalize(v: &Array1<f64>) -> Array1<f64> {
    let norm = v.dot(v).sqrt();
    if norm > 0.0 {
        v / norm
    } else {
        v.clone()
    }
}

/// A fitted encoder with everything needed to turn a feature set into a
/// signature.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Encoder {
    Scfvc {
        dict: Dictionary,
        cfg: MpConfig,
    },
    /// Guidance codes are `sparsify_top_k(sup_encode(x), k1)`.
    Hscfvc {
        dicts: HybridDictionary,
        coder: SupervisedEncoder,
        cfg: MpConfig,
    },
    GmmFvc {
        model: GmmModel,
        opts: GmmFvcOptions,
    },
}

impl Encoder {
    pub fn name(&self) -> &'static str {
        match self {
            Encoder::Scfvc { .. } => "scfvc",
            Encoder::Hscfvc { .. } => "hscfvc",
            Encoder::GmmFvc { .. } => "gmmfvc",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Encoder::Scfvc { dict, .. } => dict.dim(),
            Encoder::Hscfvc { dicts, .. } => dicts.dim(),
            Encoder::GmmFvc { model, .. } => model.dim(),
        }
    }

    /// Length of the flattened signature.
    pub fn signature_len(&self) -> usize {
        match self {
            Encoder::Scfvc { dict, .. } => dict.dim() * dict.atoms(),
            Encoder::Hscfvc { dicts, .. } => {
                dicts.dim() * (dicts.discriminative.atoms() + dicts.residual.atoms())
            }
            Encoder::GmmFvc { model, opts } => {
                model.dim() * model.components() * if opts.include_variances { 2 } else { 1 }
            }
        }
    }

    /// Encodes one feature into its gradient blocks.
    pub fn encode_feature(&self, x: ArrayView1<'_, f64>) -> Result<Vec<FisherBlock>> {
        match self {
            Encoder::Scfvc { dict, cfg } => Ok(vec![scfvc_encode(dict, x, cfg)?]),
            Encoder::Hscfvc { dicts, coder, cfg } => {
                let c = sparsify_top_k(sup_encode(coder, x)?.view(), cfg.k1);
                let (gd, gr) = hscfvc_encode(dicts, x, c.view(), cfg)?;
                Ok(vec![gd, gr])
            }
            Encoder::GmmFvc { model, opts } => Ok(vec![gmmfvc_encode(model, x, opts)?]),
        }
    }

    /// Short hex digest of the model parameters and settings.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.name().as_bytes());
        match self {
            Encoder::Scfvc { dict, cfg } => {
                hasher.update(model_bytes(dict));
                hash_cfg(&mut hasher, cfg);
            }
            Encoder::Hscfvc { dicts, coder, cfg } => {
                hasher.update(model_bytes(dicts));
                hasher.update(model_bytes(coder));
                hash_cfg(&mut hasher, cfg);
            }
            Encoder::GmmFvc { model, opts } => {
                hasher.update(model_bytes(model));
                hasher.update([opts.include_variances as u8]);
            }
        }
        hasher.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn hash_cfg(hasher: &mut Sha256, cfg: &MpConfig) {
    for v in [cfg.k as u64, cfg.k1 as u64, cfg.k2 as u64] {
        hasher.update(v.to_le_bytes());
    }
    hasher.update(cfg.lambda.to_le_bytes());
    hasher.update(cfg.sigma2.to_le_bytes());
}

/// Sum-pooled gradient blocks of an image, before any normalization.
pub fn pooled_blocks(fs: &FeatureSet, encoder: &Encoder) -> Result<Vec<FisherBlock>> {
    check_dim(encoder.dim(), fs.dim())?;
    let x = fs.features();
    let per_feature: Vec<Vec<FisherBlock>> = (0..x.nrows())
        .into_par_iter()
        .map(|i| encoder.encode_feature(x.row(i)))
        .collect::<Result<_>>()?;
    let blocks = per_feature[0].len();
    (0..blocks)
        .map(|b| {
            let column: Vec<FisherBlock> = per_feature.iter().map(|f| f[b].clone()).collect();
            pool_sum(&column)
        })
        .collect()
}

/// The final image representation.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSignature {
    pub values: Array1<f64>,
    pub encoder_id: String,
}

/// Power normalization then intra-normalization, flattened column by column.
pub fn finalize_blocks(blocks: &[FisherBlock], alpha: f64) -> Result<Array1<f64>> {
    let mut values = Vec::new();
    for block in blocks {
        let powered = FisherBlock {
            gradient: power_normalize(&block.gradient, alpha)?,
        };
        let normalized = intra_normalize(&powered);
        values.extend(normalized.gradient.t().iter());
    }
    Ok(Array1::from(values))
}

pub fn encode_image(fs: &FeatureSet, encoder: &Encoder) -> Result<ImageSignature> {
    let blocks = pooled_blocks(fs, encoder)?;
    Ok(ImageSignature {
        values: finalize_blocks(&blocks, DEFAULT_POWER)?,
        encoder_id: encoder.fingerprint(),
    })
}

/// Encodes a list of images into an `N x S` matrix, one signature per row.
pub fn encode_images(images: &[FeatureSet], encoder: &Encoder) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((images.len(), encoder.signature_len()));
    for (mut row, image) in out.rows_mut().into_iter().zip(images) {
        let blocks = pooled_blocks(image, encoder)?;
        row.assign(&finalize_blocks(&blocks, DEFAULT_POWER)?);
    }
    Ok(out)
}

/// Every column of every block has unit or zero norm.
pub fn columns_unit_or_zero(values: &Array1<f64>, dim: usize, tol: f64) -> bool {
    values
        .exact_chunks(dim)
        .into_iter()
        .all(|col| {
            let n = col.dot(&col).sqrt();
            n == 0.0 || (n - 1.0).abs() <= tol
        })
}

/// Elementwise check used by tests: `Zip` over two equally shaped blocks.
pub fn max_abs_diff(a: &FisherBlock, b: &FisherBlock) -> f64 {
    let mut m = 0.0f64;
    Zip::from(&a.gradient).and(&b.gradient).for_each(|x, y| m = m.max((x - y).abs()));
    m
}
