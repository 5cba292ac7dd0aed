//! Diagonal-covariance Gaussian mixtures fitted by EM.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1, Axis, Zip};
use rand::Rng;

use crate::dataio::model::{tag, ModelFile, PayloadReader, PayloadWriter};
use crate::error::{check_dim, Error, Result};
use crate::synth::rng_from_seed;

/// Problems with more than this many `N * K * D` terms use the matrix-product
/// expansion of the squared distances instead of the direct sum.
const DIRECT_WORK_LIMIT: usize = 1 << 26;

/// Components whose responsibility mass falls below this are re-seeded.
const EMPTY_COMPONENT_MASS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    /// Mixing weights, summing to one.
    pub weights: Array1<f64>,
    /// `K x D`.
    pub means: Array2<f64>,
    /// `K x D`, every entry at least the fitting floor.
    pub variances: Array2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmConfig {
    pub max_iters: usize,
    /// Stop once the relative log-likelihood improvement drops below this.
    pub tol: f64,
    pub seed: u64,
    pub var_floor: f64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-6,
            seed: 0,
            var_floor: 1e-6,
        }
    }
}

/// A fitted model together with its EM trace.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub model: GmmModel,
    /// Total log-likelihood of the training data before each M-step, plus
    /// the value for the returned model.
    pub log_likelihood: Vec<f64>,
    /// Number of empty components re-seeded along the way.
    pub reseeded: usize,
}

impl GmmModel {
    pub fn new(weights: Array1<f64>, means: Array2<f64>, variances: Array2<f64>) -> Result<Self> {
        let k = weights.len();
        check_dim(k, means.nrows())?;
        check_dim(k, variances.nrows())?;
        check_dim(means.ncols(), variances.ncols())?;
        if k == 0 {
            return Err(Error::arg("mixture needs at least one component"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || (weights.sum() - 1.0).abs() > 1e-10 {
            return Err(Error::arg("weights must be non-negative and sum to one"));
        }
        if variances.iter().any(|v| !(*v > 0.0) || !v.is_finite())
            || means.iter().any(|v| !v.is_finite())
        {
            return Err(Error::arg("means must be finite and variances positive"));
        }
        Ok(Self {
            weights,
            means,
            variances,
        })
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.ncols()
    }

    /// `log pi_k - 1/2 sum_d log(2 pi var_kd)` per component.
    fn log_norms(&self) -> Array1<f64> {
        Array1::from_shape_fn(self.components(), |k| {
            let log_det: f64 = self.variances.row(k).iter().map(|v| (2.0 * PI * v).ln()).sum();
            self.weights[k].ln() - 0.5 * log_det
        })
    }

    /// `log pi_k + log N(x; mu_k, var_k)` for every component.
    pub fn log_joint(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        let norms = self.log_norms();
        self.log_joint_with(x, &norms)
    }

    fn log_joint_with(&self, x: ArrayView1<'_, f64>, norms: &Array1<f64>) -> Array1<f64> {
        Array1::from_shape_fn(self.components(), |k| {
            let mut q = 0.0;
            for ((xi, m), v) in x.iter().zip(self.means.row(k)).zip(self.variances.row(k)) {
                let diff = xi - m;
                q += diff * diff / v;
            }
            norms[k] - 0.5 * q
        })
    }

    /// Per-feature log-likelihood `log sum_k pi_k N(x; mu_k, var_k)`.
    pub fn log_likelihood_one(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(log_sum_exp(&self.log_joint(x)))
    }

    /// Total log-likelihood of the rows of `data`.
    pub fn log_likelihood(&self, data: &Array2<f64>) -> Result<f64> {
        check_dim(self.dim(), data.ncols())?;
        Ok(self.e_step(data).0)
    }

    /// Returns the total log-likelihood and the `N x K` responsibilities.
    fn e_step(&self, data: &Array2<f64>) -> (f64, Array2<f64>) {
        let (n, d) = data.dim();
        let k = self.components();
        let norms = self.log_norms();
        let mut resp = if n * k * d <= DIRECT_WORK_LIMIT {
            let mut out = Array2::zeros((n, k));
            Zip::from(out.rows_mut())
                .and(data.rows())
                .par_for_each(|mut row, x| row.assign(&self.log_joint_with(x, &norms)));
            out
        } else {
            // sum_d (x - mu)^2 / v = x^2 . (1/v) - 2 x . (mu/v) + mu^2 . (1/v)
            let inv = self.variances.mapv(|v| 1.0 / v);
            let scaled_means = &self.means * &inv;
            let mean_terms = (&self.means * &scaled_means).sum_axis(Axis(1));
            let mut q = data.mapv(|v| v * v).dot(&inv.t());
            q -= &(data.dot(&scaled_means.t()) * 2.0);
            q += &mean_terms.view().insert_axis(Axis(0));
            q.mapv_inplace(|v| -0.5 * v);
            q += &norms.view().insert_axis(Axis(0));
            q
        };
        let mut row_ll = Array1::zeros(n);
        Zip::from(resp.rows_mut())
            .and(&mut row_ll)
            .par_for_each(|mut row, ll| {
                let lse = log_sum_exp_view(row.view());
                row.mapv_inplace(|v| (v - lse).exp());
                let total = row.sum();
                row /= total;
                *ll = lse;
            });
        // sequential sum keeps the result independent of the thread count
        let total = row_ll.iter().sum();
        (total, resp)
    }
}

fn log_sum_exp_view(v: ArrayView1<'_, f64>) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn log_sum_exp(v: &Array1<f64>) -> f64 {
    log_sum_exp_view(v.view())
}

/// Posterior component probabilities for one feature, computed in log space.
pub fn responsibilities(model: &GmmModel, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    check_dim(model.dim(), x.len())?;
    let joint = model.log_joint(x);
    let lse = log_sum_exp(&joint);
    let mut gamma = joint.mapv(|v| (v - lse).exp());
    let total = gamma.sum();
    gamma /= total;
    Ok(gamma)
}

fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Distance from `x` to the closest component mean.
pub fn nearest_prototype_distance(model: &GmmModel, x: ArrayView1<'_, f64>) -> Result<f64> {
    check_dim(model.dim(), x.len())?;
    Ok(model
        .means
        .rows()
        .into_iter()
        .map(|m| squared_distance(x, m))
        .fold(f64::INFINITY, f64::min)
        .sqrt())
}

/// Mean of [`nearest_prototype_distance`] over the rows of `data`.
pub fn mean_nearest_prototype_distance(model: &GmmModel, data: &Array2<f64>) -> Result<f64> {
    check_dim(model.dim(), data.ncols())?;
    let mut dists = Array1::zeros(data.nrows());
    Zip::from(&mut dists).and(data.rows()).par_for_each(|out, x| {
        *out = nearest_prototype_distance(model, x).expect("dimension checked");
    });
    Ok(dists.sum() / data.nrows() as f64)
}

/// k-means++ seeding: first center uniform, then proportional to the squared
/// distance to the closest chosen center.
fn kmeans_plus_plus<R: Rng + ?Sized>(data: &Array2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = data.nrows();
    let mut centers = Array2::zeros((k, data.ncols()));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&data.row(first));
    let mut nearest = Array1::from_shape_fn(n, |i| squared_distance(data.row(i), data.row(first)));
    for c in 1..k {
        let total: f64 = nearest.sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&data.row(pick));
        let center = centers.row(c);
        Zip::from(&mut nearest).and(data.rows()).par_for_each(|best, x| {
            *best = best.min(squared_distance(x, center));
        });
    }
    centers
}

fn floored_variance(data: &Array2<f64>, floor: f64) -> Array1<f64> {
    data.var_axis(Axis(0), 0.0).mapv(|v| v.max(floor))
}

/// Fits a `k`-component diagonal GMM by EM from a k-means++ start.
///
/// Components that lose all responsibility mass are re-seeded at the
/// training point farthest from its closest mean, with weight `1 / N` and the
/// global per-dimension variance.
pub fn fit_gmm(data: &Array2<f64>, k: usize, cfg: &GmmConfig) -> Result<GmmFit> {
    let (n, d) = data.dim();
    if k == 0 || n < k {
        return Err(Error::arg(format!("cannot fit {k} components to {n} samples")));
    }
    if d == 0 || data.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("training data must be finite and non-empty"));
    }
    if !(cfg.var_floor > 0.0) {
        return Err(Error::arg("variance floor must be positive"));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let global_var = floored_variance(data, cfg.var_floor);
    let means = kmeans_plus_plus(data, k, &mut rng);
    let variances = Array2::from_shape_fn((k, d), |(_, j)| global_var[j]);
    let mut model = GmmModel {
        weights: Array1::from_elem(k, 1.0 / k as f64),
        means,
        variances,
    };

    let mut trace = Vec::new();
    let mut reseeded = 0;
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let (ll, resp) = model.e_step(data);
        if let Some(&prev) = trace.last() {
            if (ll - prev) / f64::abs(prev).max(f64::MIN_POSITIVE) < cfg.tol {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        reseeded += m_step(&mut model, data, &resp, &global_var, cfg.var_floor);
    }
    if !converged {
        trace.push(model.e_step(data).0);
    }
    Ok(GmmFit {
        model,
        log_likelihood: trace,
        reseeded,
    })
}

fn m_step(
    model: &mut GmmModel,
    data: &Array2<f64>,
    resp: &Array2<f64>,
    global_var: &Array1<f64>,
    floor: f64,
) -> usize {
    let (n, d) = data.dim();
    let k = model.components();
    let mass = resp.sum_axis(Axis(0));
    let weighted_sum = resp.t().dot(data);
    let direct = n * k * d <= DIRECT_WORK_LIMIT;
    let second = if direct {
        None
    } else {
        Some(resp.t().dot(&data.mapv(|v| v * v)))
    };

    let mut empty = Vec::new();
    for c in 0..k {
        if mass[c] < EMPTY_COMPONENT_MASS {
            empty.push(c);
            continue;
        }
        let mean = weighted_sum.row(c).mapv(|v| v / mass[c]);
        let var = match &second {
            Some(sq) => Array1::from_shape_fn(d, |j| sq[[c, j]] / mass[c] - mean[j] * mean[j]),
            None => {
                let mut acc = Array1::<f64>::zeros(d);
                for (x, &r) in data.rows().into_iter().zip(resp.column(c)) {
                    if r > 0.0 {
                        Zip::from(&mut acc).and(&x).and(&mean).for_each(|a, &xi, &m| {
                            *a += r * (xi - m) * (xi - m);
                        });
                    }
                }
                acc / mass[c]
            }
        };
        model.means.row_mut(c).assign(&mean);
        model.variances.row_mut(c).assign(&var.mapv(|v| v.max(floor)));
        model.weights[c] = mass[c] / n as f64;
    }

    if !empty.is_empty() {
        let live: Vec<usize> = (0..k).filter(|c| !empty.contains(c)).collect();
        let mut nearest = Array1::from_shape_fn(n, |i| {
            live.iter()
                .map(|&c| squared_distance(data.row(i), model.means.row(c)))
                .fold(f64::INFINITY, f64::min)
        });
        for &c in &empty {
            let far = nearest
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
                .0;
            model.means.row_mut(c).assign(&data.row(far));
            model.variances.row_mut(c).assign(global_var);
            model.weights[c] = 1.0 / n as f64;
            for i in 0..n {
                nearest[i] = nearest[i].min(squared_distance(data.row(i), data.row(far)));
            }
        }
        let total = model.weights.sum();
        model.weights /= total;
    }
    empty.len()
}

/// Payload: `u32 K`, `u32 D`, `K` weights, `K x D` means and `K x D`
/// variances, both row-major.
impl ModelFile for GmmModel {
    const TAG: u8 = tag::GMM;

    fn write_payload(&self, w: &mut PayloadWriter) {
        w.u32(self.components());
        w.u32(self.dim());
        w.f64s(self.weights.iter());
        w.matrix(&self.means);
        w.matrix(&self.variances);
    }

    fn read_payload(r: &mut PayloadReader<'_>) -> Result<Self> {
        let k = r.u32()?;
        let d = r.u32()?;
        let offset = r.offset();
        let weights = r.vector(k)?;
        let means = r.matrix(k, d)?;
        let variances = r.matrix(k, d)?;
        GmmModel::new(weights, means, variances)
            .map_err(|e| Error::format_at_byte(offset, e.to_string()))
    }
}
