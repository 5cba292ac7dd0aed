//! Linear classification over image signatures.
//!
//! Training minimizes a one-vs-rest l2-regularized logistic objective with
//! plain SGD:
//!
//! ```text
//! J(W, b) = (1/N) sum_i sum_c log(1 + exp(-y_ic (w_c . s_i + b_c))) + (l2/2) |W|^2
//! ```
//!
//! with `y_ic = +1` when sample `i` belongs to class `c` and `-1` otherwise.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;

use crate::dataio::model::{tag, ModelFile, PayloadReader, PayloadWriter};
use crate::error::{check_dim, Error, Result};
use crate::synth::rng_from_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// `C x S`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    /// Sorted ascending; row `c` of `weights` scores `class_ids[c]`.
    pub class_ids: Vec<u32>,
}

impl LinearModel {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>, class_ids: Vec<u32>) -> Result<Self> {
        let c = weights.nrows();
        if c < 2 || bias.len() != c || class_ids.len() != c {
            return Err(Error::arg(format!(
                "need at least two classes with matching weights, bias and ids (got {c}, {}, {})",
                bias.len(),
                class_ids.len()
            )));
        }
        if !class_ids.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::arg("class ids must be strictly increasing"));
        }
        if !weights.iter().chain(bias.iter()).all(|v| v.is_finite()) {
            return Err(Error::arg("linear model has non-finite parameters"));
        }
        Ok(Self { weights, bias, class_ids })
    }

    pub fn zeros(classes: Vec<u32>, dim: usize) -> Result<Self> {
        let c = classes.len();
        Self::new(Array2::zeros((c, dim)), Array1::zeros(c), classes)
    }

    pub fn classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn scores(&self, s: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        check_dim(self.dim(), s.len())?;
        Ok(self.weights.dot(&s) + &self.bias)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConfig {
    pub l2: f64,
    pub epochs: usize,
    /// Base step size. The actual step is `lr / (1 + mean |s|^2)`, so the
    /// same setting works for signatures of any length.
    pub lr: f64,
    pub seed: u64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            epochs: 50,
            lr: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearFit {
    pub model: LinearModel,
    /// Training objective before the first epoch and after each epoch.
    pub objective: Vec<f64>,
}

/// Numerically stable `log(1 + exp(-m))`.
fn logistic_loss(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

/// `d/dm log(1 + exp(-m)) = -1 / (1 + exp(m))`.
fn logistic_slope(m: f64) -> f64 {
    if m > 0.0 {
        let e = (-m).exp();
        -e / (1.0 + e)
    } else {
        -1.0 / (1.0 + m.exp())
    }
}

/// Objective `J` over the given rows and its gradient `(dW, db)`.
/// `targets[i]` is the class index (row of `weights`) of sample `i`.
pub fn linear_objective_and_gradient(
    model: &LinearModel,
    signatures: &Array2<f64>,
    targets: &[usize],
    l2: f64,
) -> (f64, Array2<f64>, Array1<f64>) {
    let n = signatures.nrows() as f64;
    let scores = signatures.dot(&model.weights.t()) + &model.bias;
    let mut coef = Array2::zeros(scores.raw_dim());
    let mut loss = 0.0;
    for ((i, c), &score) in scores.indexed_iter() {
        let y = if targets[i] == c { 1.0 } else { -1.0 };
        loss += logistic_loss(y * score);
        coef[[i, c]] = y * logistic_slope(y * score) / n;
    }
    let mut gw = coef.t().dot(signatures);
    gw.scaled_add(l2, &model.weights);
    let gb = coef.sum_axis(Axis(0));
    let reg = 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
    (loss / n + reg, gw, gb)
}

fn class_targets(labels: &[u32], classes: &[u32]) -> Vec<usize> {
    labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label drawn from classes"))
        .collect()
}

/// Trains a one-vs-rest logistic model. Labels may be arbitrary ids; the
/// model's classes are their sorted distinct values.
pub fn train_linear(signatures: &Array2<f64>, labels: &[u32], cfg: &LinearConfig) -> Result<LinearFit> {
    if signatures.nrows() != labels.len() {
        return Err(Error::arg(format!(
            "{} signatures but {} labels",
            signatures.nrows(),
            labels.len()
        )));
    }
    if !(cfg.lr >= 0.0) || !(cfg.l2 >= 0.0) {
        return Err(Error::arg("lr and l2 must be non-negative"));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::arg("need at least two classes with one sample each"));
    }
    let targets = class_targets(labels, &classes);
    let mut model = LinearModel::zeros(classes, signatures.ncols())?;

    let n = signatures.nrows();
    let mean_sq = signatures.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let step = cfg.lr / (1.0 + mean_sq);
    let mut rng = rng_from_seed(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut objective = vec![linear_objective_and_gradient(&model, signatures, &targets, cfg.l2).0];
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let rate = step / (1.0 + epoch as f64 / 10.0);
        for &i in &order {
            let row = signatures.slice(ndarray::s![i..i + 1, ..]).to_owned();
            let (_, gw, gb) = linear_objective_and_gradient(&model, &row, &targets[i..i + 1], cfg.l2);
            model.weights.scaled_add(-rate, &gw);
            model.bias.scaled_add(-rate, &gb);
        }
        objective.push(linear_objective_and_gradient(&model, signatures, &targets, cfg.l2).0);
    }
    Ok(LinearFit { model, objective })
}

/// Highest-scoring class id and the full score vector. Ties go to the
/// lower class id.
pub fn predict(model: &LinearModel, signature: ArrayView1<'_, f64>) -> Result<(u32, Array1<f64>)> {
    let scores = model.scores(signature)?;
    let mut best = 0;
    for c in 1..scores.len() {
        if scores[c] > scores[best] {
            best = c;
        }
    }
    Ok((model.class_ids[best], scores))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub class_id: u32,
    /// Correct predictions of this class over all predictions of it; 0 when
    /// the class was never predicted.
    pub precision: f64,
    /// `None` when the evaluation set holds no sample of this class.
    pub average_precision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Mean over classes that have at least one positive sample.
    pub mean_average_precision: f64,
}

/// Rank-based average precision of `scores` against boolean relevance.
/// Ties in score keep the lower sample index first.
pub fn average_precision(scores: &[f64], relevant: &[bool]) -> Option<f64> {
    let positives = relevant.iter().filter(|&&r| r).count();
    if positives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if relevant[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Some(sum / positives as f64)
}

/// Samples whose label is not among the model's classes count as errors.
pub fn evaluate(model: &LinearModel, signatures: &Array2<f64>, labels: &[u32]) -> Result<Metrics> {
    if signatures.nrows() != labels.len() || labels.is_empty() {
        return Err(Error::arg("need a non-empty set with one label per signature"));
    }
    let mut predicted = Vec::with_capacity(labels.len());
    let mut scores = Array2::zeros((labels.len(), model.classes()));
    for (i, row) in signatures.rows().into_iter().enumerate() {
        let (id, s) = predict(model, row)?;
        predicted.push(id);
        scores.row_mut(i).assign(&s);
    }
    let correct = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
    let mut per_class = Vec::with_capacity(model.classes());
    let mut ap_sum = 0.0;
    let mut ap_count = 0;
    for (c, &id) in model.class_ids.iter().enumerate() {
        let predicted_here = predicted.iter().filter(|&&p| p == id).count();
        let right_here = predicted
            .iter()
            .zip(labels)
            .filter(|&(&p, &l)| p == id && l == id)
            .count();
        let relevant: Vec<bool> = labels.iter().map(|&l| l == id).collect();
        let column: Vec<f64> = scores.column(c).to_vec();
        let ap = average_precision(&column, &relevant);
        if let Some(v) = ap {
            ap_sum += v;
            ap_count += 1;
        }
        per_class.push(ClassMetrics {
            class_id: id,
            precision: if predicted_here == 0 {
                0.0
            } else {
                right_here as f64 / predicted_here as f64
            },
            average_precision: ap,
        });
    }
    Ok(Metrics {
        accuracy: correct as f64 / labels.len() as f64,
        per_class,
        mean_average_precision: if ap_count == 0 { 0.0 } else { ap_sum / ap_count as f64 },
    })
}

impl Metrics {
    /// `metric,class_id,value` rows; summary rows leave `class_id` empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,class_id,value\n");
        writeln!(out, "accuracy,,{}", self.accuracy).unwrap();
        writeln!(out, "mean_average_precision,,{}", self.mean_average_precision).unwrap();
        for c in &self.per_class {
            writeln!(out, "precision,{},{}", c.class_id, c.precision).unwrap();
            if let Some(ap) = c.average_precision {
                writeln!(out, "average_precision,{},{}", c.class_id, ap).unwrap();
            }
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:<8} {:>10} {:>10}\n", "class", "precision", "AP");
        for c in &self.per_class {
            let ap = c
                .average_precision
                .map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
            writeln!(out, "{:<8} {:>10.4} {:>10}", c.class_id, c.precision, ap).unwrap();
        }
        writeln!(out, "{:<8} {:>10.4}", "accuracy", self.accuracy).unwrap();
        writeln!(out, "{:<8} {:>10} {:>10.4}", "mAP", "", self.mean_average_precision).unwrap();
        out
    }
}

/// Payload: `u32 C`, `u32 S`, `C` class ids as `u32`, `C x S` weights
/// (row-major), `C` biases.
impl ModelFile for LinearModel {
    const TAG: u8 = tag::LINEAR_MODEL;

    fn write_payload(&self, w: &mut PayloadWriter) {
        w.u32(self.classes());
        w.u32(self.dim());
        for &id in &self.class_ids {
            w.u32(id as usize);
        }
        w.matrix(&self.weights);
        w.f64s(self.bias.iter());
    }

    fn read_payload(r: &mut PayloadReader<'_>) -> Result<Self> {
        let c = r.u32()?;
        let s = r.u32()?;
        let ids = (0..c).map(|_| r.u32().map(|v| v as u32)).collect::<Result<Vec<_>>>()?;
        let weights = r.matrix(c, s)?;
        let bias = r.vector(c)?;
        LinearModel::new(weights, bias, ids)
    }
}
