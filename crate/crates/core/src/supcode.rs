//! Supervised coder `c = max(0, P^T x + b)` that guides hybrid coding.
//!
//! Training pools the codes of an image by summation, applies power
//! normalization, and feeds the result to a softmax classifier. `P`, `b` and
//! the classifier are learned jointly with minibatch SGD on cross-entropy;
//! only `P` and `b` are kept.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use crate::dataio::model::{tag, ModelFile, PayloadReader, PayloadWriter};
use crate::dataio::FeatureSet;
use crate::error::{check_dim, Error, Result};
use crate::synth::rng_from_seed;

/// Smoothing inside the training-time square root, `sqrt(s + eps) - sqrt(eps)`,
/// which keeps the gradient finite at `s = 0`.
pub const POWER_EPS: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedEncoder {
    /// `D x M1`.
    pub projection: Array2<f64>,
    pub bias: Array1<f64>,
}

impl SupervisedEncoder {
    pub fn new(projection: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        check_dim(projection.ncols(), bias.len())?;
        if projection.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::arg("encoder parameters must be finite"));
        }
        Ok(Self { projection, bias })
    }

    pub fn dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn codes(&self) -> usize {
        self.projection.ncols()
    }

    /// Encodes every row of `x` (`T x D`) into a `T x M1` matrix.
    pub fn encode_rows(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        check_dim(self.dim(), x.ncols())?;
        let mut z = x.dot(&self.projection);
        z += &self.bias.view().insert_axis(Axis(0));
        z.mapv_inplace(|v| v.max(0.0));
        Ok(z)
    }
}

pub fn sup_encode(e: &SupervisedEncoder, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    check_dim(e.dim(), x.len())?;
    let mut z = e.projection.t().dot(&x);
    z += &e.bias;
    z.mapv_inplace(|v| v.max(0.0));
    Ok(z)
}

/// Keeps the `k` largest entries (ties to the lower index) and zeroes the
/// rest.
pub fn sparsify_top_k(c: ArrayView1<'_, f64>, k: usize) -> Array1<f64> {
    if k >= c.len() {
        return c.to_owned();
    }
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| c[b].total_cmp(&c[a]).then(a.cmp(&b)));
    let mut out = Array1::zeros(c.len());
    for &i in &order[..k] {
        out[i] = c[i];
    }
    out
}

/// Sum-pooled, square-rooted codes of one image: the coder's own image
/// representation.
pub fn sup_signature(e: &SupervisedEncoder, fs: &FeatureSet) -> Result<Array1<f64>> {
    let pooled = e.encode_rows(fs.features())?.sum_axis(Axis(0));
    Ok(pooled.mapv(f64::sqrt))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupTrainConfig {
    pub lr: f64,
    pub epochs: usize,
    /// Images per minibatch.
    pub batch: usize,
    pub seed: u64,
    /// Weight decay on `P` and the classifier weights.
    pub l2: f64,
}

impl Default for SupTrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.05,
            epochs: 30,
            batch: 8,
            seed: 0,
            l2: 1e-4,
        }
    }
}

/// All trainable parameters: the coder plus the softmax layer.
#[derive(Debug, Clone, PartialEq)]
pub struct CoderParams {
    pub projection: Array2<f64>,
    pub bias: Array1<f64>,
    /// `C x M1`.
    pub weights: Array2<f64>,
    pub class_bias: Array1<f64>,
}

impl CoderParams {
    /// `P ~ N(0, 1/D)`, everything else zero.
    pub fn init(dim: usize, codes: usize, classes: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let normal = Normal::new(0.0, (1.0 / dim as f64).sqrt()).expect("positive");
        Self {
            projection: Array2::from_shape_simple_fn((dim, codes), || normal.sample(&mut rng)),
            bias: Array1::zeros(codes),
            weights: Array2::zeros((classes, codes)),
            class_bias: Array1::zeros(classes),
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            projection: Array2::zeros(self.projection.raw_dim()),
            bias: Array1::zeros(self.bias.len()),
            weights: Array2::zeros(self.weights.raw_dim()),
            class_bias: Array1::zeros(self.class_bias.len()),
        }
    }

    fn add_scaled(&mut self, alpha: f64, other: &Self) {
        self.projection.scaled_add(alpha, &other.projection);
        self.bias.scaled_add(alpha, &other.bias);
        self.weights.scaled_add(alpha, &other.weights);
        self.class_bias.scaled_add(alpha, &other.class_bias);
    }

    /// Class probabilities for one image.
    pub fn posterior(&self, features: &Array2<f64>) -> Array1<f64> {
        self.forward(features).probs
    }
}

struct Forward {
    z: Array2<f64>,
    pooled: Array1<f64>,
    hidden: Array1<f64>,
    probs: Array1<f64>,
}

impl CoderParams {
    fn forward(&self, x: &Array2<f64>) -> Forward {
        let mut z = x.dot(&self.projection);
        z += &self.bias.view().insert_axis(Axis(0));
        let pooled = z.mapv(|v| v.max(0.0)).sum_axis(Axis(0));
        let root_eps = POWER_EPS.sqrt();
        let hidden = pooled.mapv(|s| (s + POWER_EPS).sqrt() - root_eps);
        let mut logits = self.weights.dot(&hidden);
        logits += &self.class_bias;
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs = logits.mapv(|v| (v - max).exp());
        let total = probs.sum();
        probs /= total;
        Forward {
            z,
            pooled,
            hidden,
            probs,
        }
    }
}

/// Mean cross-entropy over the images plus `l2 / 2 (|P|^2 + |W|^2)`, and its
/// gradient.
pub fn coder_loss_and_gradient(
    params: &CoderParams,
    images: &[&Array2<f64>],
    targets: &[usize],
    l2: f64,
) -> (f64, CoderParams) {
    let mut grad = params.zeros_like();
    let mut loss = 0.0;
    let n = images.len() as f64;
    for (x, &target) in images.iter().zip(targets) {
        let f = params.forward(x);
        loss -= f.probs[target].max(f64::MIN_POSITIVE).ln();
        let mut dlogits = f.probs.clone();
        dlogits[target] -= 1.0;
        grad.class_bias += &dlogits;
        grad.weights += &dlogits
            .view()
            .insert_axis(Axis(1))
            .dot(&f.hidden.view().insert_axis(Axis(0)));
        let dhidden = params.weights.t().dot(&dlogits);
        let dpooled = &dhidden * &f.pooled.mapv(|s| 0.5 / (s + POWER_EPS).sqrt());
        // relu gate per feature
        let mut dz = Array2::zeros(f.z.raw_dim());
        for (mut row, zrow) in dz.rows_mut().into_iter().zip(f.z.rows()) {
            for ((d, &zv), &g) in row.iter_mut().zip(zrow).zip(&dpooled) {
                if zv > 0.0 {
                    *d = g;
                }
            }
        }
        grad.projection += &x.t().dot(&dz);
        grad.bias += &dz.sum_axis(Axis(0));
    }
    loss /= n;
    grad.projection /= n;
    grad.bias /= n;
    grad.weights /= n;
    grad.class_bias /= n;
    loss += 0.5
        * l2
        * (params.projection.mapv(|v| v * v).sum() + params.weights.mapv(|v| v * v).sum());
    grad.projection.scaled_add(l2, &params.projection);
    grad.weights.scaled_add(l2, &params.weights);
    (loss, grad)
}

#[derive(Debug, Clone)]
pub struct SupTrainFit {
    pub encoder: SupervisedEncoder,
    /// Full training loss before the first epoch and after each epoch.
    pub loss_trace: Vec<f64>,
    /// Accuracy of the internal softmax layer on the training images.
    pub train_accuracy: f64,
    pub params: CoderParams,
    /// Sorted distinct labels; index `i` is softmax class `i`.
    pub classes: Vec<u32>,
}

/// Trains an `m1`-code supervised encoder on labeled images.
pub fn train_sup_encoder(images: &[FeatureSet], m1: usize, cfg: &SupTrainConfig) -> Result<SupTrainFit> {
    if images.is_empty() || m1 == 0 {
        return Err(Error::arg("need at least one image and one code"));
    }
    if cfg.batch == 0 || !(cfg.lr >= 0.0) || !(cfg.l2 >= 0.0) {
        return Err(Error::arg("batch must be positive; lr and l2 non-negative"));
    }
    let dim = images[0].dim();
    let mut labels = Vec::with_capacity(images.len());
    for image in images {
        check_dim(dim, image.dim())?;
        labels.push(image.label.ok_or_else(|| {
            Error::arg(format!("image {} has no label", image.image_id))
        })?);
    }
    let mut classes = labels.clone();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::arg("supervised coder training needs at least two classes"));
    }
    let targets: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("present"))
        .collect();
    let features: Vec<&Array2<f64>> = images.iter().map(|i| i.features()).collect();

    let mut params = CoderParams::init(dim, m1, classes.len(), cfg.seed);
    let mut rng = rng_from_seed(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..images.len()).collect();
    let mut loss_trace = vec![coder_loss_and_gradient(&params, &features, &targets, cfg.l2).0];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch) {
            let xs: Vec<&Array2<f64>> = chunk.iter().map(|&i| features[i]).collect();
            let ts: Vec<usize> = chunk.iter().map(|&i| targets[i]).collect();
            let (_, grad) = coder_loss_and_gradient(&params, &xs, &ts, cfg.l2);
            params.add_scaled(-cfg.lr, &grad);
        }
        loss_trace.push(coder_loss_and_gradient(&params, &features, &targets, cfg.l2).0);
    }
    let correct = features
        .iter()
        .zip(&targets)
        .filter(|(x, &t)| argmax(&params.posterior(x)) == t)
        .count();
    Ok(SupTrainFit {
        encoder: SupervisedEncoder::new(params.projection.clone(), params.bias.clone())?,
        loss_trace,
        train_accuracy: correct as f64 / images.len() as f64,
        params,
        classes,
    })
}

fn argmax(v: &Array1<f64>) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &x)| if x > b.1 { (i, x) } else { b })
        .0
}

/// Payload: `u32 D`, `u32 M1`, `D x M1` projection (row-major), `M1` bias.
impl ModelFile for SupervisedEncoder {
    const TAG: u8 = tag::SUPERVISED_ENCODER;

    fn write_payload(&self, w: &mut PayloadWriter) {
        w.u32(self.dim());
        w.u32(self.codes());
        w.matrix(&self.projection);
        w.f64s(self.bias.iter());
    }

    fn read_payload(r: &mut PayloadReader<'_>) -> Result<Self> {
        let d = r.u32()?;
        let m = r.u32()?;
        let projection = r.matrix(d, m)?;
        let bias = r.vector(m)?;
        SupervisedEncoder::new(projection, bias)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn bias_only_rectification() {
        let e = SupervisedEncoder::new(Array2::zeros((3, 2)), array![-1.0, 2.0]).unwrap();
        assert_eq!(sup_encode(&e, array![1.0, 2.0, 3.0].view()).unwrap(), array![0.0, 2.0]);
        let e = SupervisedEncoder::new(array![[1.0, -1.0]], Array1::zeros(2)).unwrap();
        assert_eq!(sup_encode(&e, array![0.0].view()).unwrap(), array![0.0, 0.0]);
        assert!(sup_encode(&e, array![0.0, 1.0].view()).is_err());
    }

    #[test]
    fn top_k() {
        let c = array![3.0, 1.0, 2.0];
        assert_eq!(sparsify_top_k(c.view(), 2), array![3.0, 0.0, 2.0]);
        assert_eq!(sparsify_top_k(c.view(), 0), array![0.0, 0.0, 0.0]);
        assert_eq!(sparsify_top_k(c.view(), 3), c);
        // ties keep the lower index
        assert_eq!(sparsify_top_k(array![1.0, 2.0, 2.0].view(), 1), array![0.0, 2.0, 0.0]);
    }

    fn toy_images() -> Vec<FeatureSet> {
        vec![
            FeatureSet::new(array![[1.0, 0.0], [0.9, 0.1]], "a", Some(0)).unwrap(),
            FeatureSet::new(array![[0.0, 1.0], [0.2, 0.8]], "b", Some(1)).unwrap(),
        ]
    }

    #[test]
    fn zero_learning_rate_keeps_init() {
        let cfg = SupTrainConfig { lr: 0.0, epochs: 3, ..Default::default() };
        let fit = train_sup_encoder(&toy_images(), 4, &cfg).unwrap();
        let init = CoderParams::init(2, 4, 2, cfg.seed);
        assert_eq!(fit.encoder.projection, init.projection);
        assert_eq!(fit.encoder.bias, init.bias);
    }

    #[test]
    fn single_class_is_rejected() {
        let mut images = toy_images();
        images[1].label = Some(0);
        assert!(train_sup_encoder(&images, 4, &SupTrainConfig::default()).is_err());
        images[1].label = None;
        assert!(train_sup_encoder(&images, 4, &SupTrainConfig::default()).is_err());
    }
}
