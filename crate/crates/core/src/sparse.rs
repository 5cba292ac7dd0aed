//! Greedy sparse inference.
//!
//! [`mp_encode`] is plain matching pursuit for the Laplace-coded model: each
//! step picks the atom and coefficient that most reduce the squared residual.
//! [`hybrid_mp_encode`] solves the l0-budgeted hybrid problem
//!
//! ```text
//! min ||x - B_d u_d - B_r u_r||^2 + lambda ||u_d - c||^2
//! s.t. ||u_d||_0 <= k1, ||u_r||_0 <= k2
//! ```
//!
//! by first running `k1` coordinate steps on `u_d` and then `k2` steps on
//! `u_r`. Every step also considers leaving the code unchanged, so the
//! budgets are upper bounds and the objective never increases.
//!
//! Correlations with the residual are maintained through the cached Gram
//! matrix, so a step costs `O(M + D)` after an initial `B^T x`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};

use crate::dictionary::{Dictionary, HybridDictionary};
use crate::error::{check_dim, Error, Result};

/// Inference settings shared by the SCFVC and HSCFVC encoders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpConfig {
    /// Sparsity budget for single-dictionary coding.
    pub k: usize,
    /// Budget on the discriminative code `u_d`.
    pub k1: usize,
    /// Budget on the residual code `u_r`.
    pub k2: usize,
    /// Weight of the `||u_d - c||^2` fidelity term.
    pub lambda: f64,
    /// Gaussian noise variance; scales Fisher gradients, inference uses 1.
    pub sigma2: f64,
}

impl Default for MpConfig {
    fn default() -> Self {
        Self {
            k: 10,
            k1: 10,
            k2: 10,
            lambda: 0.5,
            sigma2: 1.0,
        }
    }
}

impl MpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::arg(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::arg(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    pub values: Array1<f64>,
    /// Sorted indices selected at least once.
    pub support: Vec<usize>,
    /// `x - B u`.
    pub residual: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridCode {
    pub u_d: Array1<f64>,
    pub u_r: Array1<f64>,
    pub support_d: Vec<usize>,
    pub support_r: Vec<usize>,
    /// `x - B_d u_d - B_r u_r`.
    pub residual: Array1<f64>,
}

struct Selection {
    index: usize,
    step: f64,
}

/// Greedy coordinate steps on a plain least-squares term. `corr` holds
/// `B^T r` on entry and is kept in sync with `residual`.
fn residual_phase(
    dict: &Dictionary,
    steps: usize,
    corr: &mut Array1<f64>,
    residual: &mut Array1<f64>,
    code: &mut Array1<f64>,
    support: &mut Vec<usize>,
    mut on_step: impl FnMut(&Array1<f64>, &Array1<f64>),
) {
    let gram = dict.gram();
    for _ in 0..steps {
        let mut best: Option<Selection> = None;
        let mut best_gain = 0.0;
        for (j, &a) in corr.iter().enumerate() {
            let norm = gram[[j, j]];
            let gain = a * a / norm;
            if gain > best_gain {
                best_gain = gain;
                best = Some(Selection { index: j, step: a / norm });
            }
        }
        // the zero update wins; nothing will change on later steps either
        let Some(Selection { index, step }) = best else { break };
        code[index] += step;
        residual.scaled_add(-step, &dict.atom(index));
        corr.scaled_add(-step, &gram.column(index));
        support.push(index);
        on_step(residual, code);
    }
}

fn finish_support(mut support: Vec<usize>) -> Vec<usize> {
    support.sort_unstable();
    support.dedup();
    support
}

fn check_budget(name: &str, k: usize, atoms: usize) -> Result<()> {
    if k > atoms {
        return Err(Error::arg(format!("{name} = {k} exceeds the {atoms} available atoms")));
    }
    Ok(())
}

fn mp_encode_inner(
    dict: &Dictionary,
    x: ArrayView1<'_, f64>,
    k: usize,
    on_step: impl FnMut(&Array1<f64>, &Array1<f64>),
) -> Result<SparseCode> {
    check_dim(dict.dim(), x.len())?;
    check_budget("k", k, dict.atoms())?;
    let residual = x.to_owned();
    let corr = dict.bases().t().dot(&residual);
    mp_from_corr(dict, residual, corr, k, on_step)
}

fn mp_from_corr(
    dict: &Dictionary,
    mut residual: Array1<f64>,
    mut corr: Array1<f64>,
    k: usize,
    on_step: impl FnMut(&Array1<f64>, &Array1<f64>),
) -> Result<SparseCode> {
    let mut values = Array1::zeros(dict.atoms());
    let mut support = Vec::with_capacity(k);
    residual_phase(dict, k, &mut corr, &mut residual, &mut values, &mut support, on_step);
    Ok(SparseCode {
        values,
        support: finish_support(support),
        residual,
    })
}

/// Matching pursuit over many rows at once; the starting correlations come
/// from one matrix product, so values can differ from [`mp_encode`] in the
/// last bits.
pub fn mp_encode_rows(dict: &Dictionary, x: &Array2<f64>, k: usize) -> Result<Array2<f64>> {
    check_dim(dict.dim(), x.ncols())?;
    check_budget("k", k, dict.atoms())?;
    let corr = x.dot(dict.bases());
    let mut codes = Array2::zeros((x.nrows(), dict.atoms()));
    Zip::from(codes.rows_mut())
        .and(x.rows())
        .and(corr.rows())
        .par_for_each(|mut out, row, c| {
            let code = mp_from_corr(dict, row.to_owned(), c.to_owned(), k, |_, _| {})
                .expect("dimensions checked");
            out.assign(&code.values);
        });
    Ok(codes)
}

/// Matching pursuit with `k` greedy steps.
pub fn mp_encode(dict: &Dictionary, x: ArrayView1<'_, f64>, k: usize) -> Result<SparseCode> {
    mp_encode_inner(dict, x, k, |_, _| {})
}

/// [`mp_encode`] that also returns `||r||` before the first step and after
/// every step taken.
pub fn mp_encode_traced(
    dict: &Dictionary,
    x: ArrayView1<'_, f64>,
    k: usize,
) -> Result<(SparseCode, Vec<f64>)> {
    let mut trace = vec![x.dot(&x).sqrt()];
    let code = mp_encode_inner(dict, x, k, |r, _| trace.push(r.dot(r).sqrt()))?;
    Ok((code, trace))
}

fn hybrid_inner(
    dicts: &HybridDictionary,
    x: ArrayView1<'_, f64>,
    c: ArrayView1<'_, f64>,
    cfg: &MpConfig,
    mut on_step: impl FnMut(&Array1<f64>, &Array1<f64>, &Array1<f64>),
) -> Result<HybridCode> {
    cfg.validate()?;
    let bd = &dicts.discriminative;
    let br = &dicts.residual;
    check_dim(bd.dim(), x.len())?;
    check_dim(bd.atoms(), c.len())?;
    check_budget("k1", cfg.k1, bd.atoms())?;
    check_budget("k2", cfg.k2, br.atoms())?;
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("guidance code must be finite"));
    }

    let lambda = cfg.lambda;
    let gram = bd.gram();
    let mut residual = x.to_owned();
    let mut u_d = Array1::zeros(bd.atoms());
    let mut u_r = Array1::zeros(br.atoms());
    let mut support_d = Vec::with_capacity(cfg.k1);
    let mut support_r = Vec::with_capacity(cfg.k2);

    if cfg.k1 > 0 {
        let mut corr = bd.bases().t().dot(&residual);
        for _ in 0..cfg.k1 {
            let mut best: Option<Selection> = None;
            let mut best_gain = 0.0;
            for j in 0..bd.atoms() {
                // optimal step accounts for the value already at u_d[j]
                let numer = corr[j] + lambda * (c[j] - u_d[j]);
                let denom = gram[[j, j]] + lambda;
                let gain = numer * numer / denom;
                if gain > best_gain {
                    best_gain = gain;
                    best = Some(Selection { index: j, step: numer / denom });
                }
            }
            let Some(Selection { index, step }) = best else { break };
            u_d[index] += step;
            residual.scaled_add(-step, &bd.atom(index));
            corr.scaled_add(-step, &gram.column(index));
            support_d.push(index);
            on_step(&residual, &u_d, &u_r);
        }
    }

    let mut corr_r = br.bases().t().dot(&residual);
    let u_d_ref = &u_d;
    residual_phase(
        br,
        cfg.k2,
        &mut corr_r,
        &mut residual,
        &mut u_r,
        &mut support_r,
        |r, ur| on_step(r, u_d_ref, ur),
    );

    Ok(HybridCode {
        u_d,
        u_r,
        support_d: finish_support(support_d),
        support_r: finish_support(support_r),
        residual,
    })
}

/// Two-phase hybrid matching pursuit guided by the code `c`.
pub fn hybrid_mp_encode(
    dicts: &HybridDictionary,
    x: ArrayView1<'_, f64>,
    c: ArrayView1<'_, f64>,
    cfg: &MpConfig,
) -> Result<HybridCode> {
    hybrid_inner(dicts, x, c, cfg, |_, _, _| {})
}

/// [`hybrid_mp_encode`] plus the hybrid objective (with `sigma2 = 1`) before
/// the first step and after every step taken.
pub fn hybrid_mp_encode_traced(
    dicts: &HybridDictionary,
    x: ArrayView1<'_, f64>,
    c: ArrayView1<'_, f64>,
    cfg: &MpConfig,
) -> Result<(HybridCode, Vec<f64>)> {
    let lambda = cfg.lambda;
    let value = |r: &Array1<f64>, u_d: &Array1<f64>| {
        let fidelity: f64 = u_d.iter().zip(c.iter()).map(|(u, c)| (u - c) * (u - c)).sum();
        r.dot(r) + lambda * fidelity
    };
    let mut trace = vec![x.dot(&x) + lambda * c.dot(&c)];
    let code = hybrid_inner(dicts, x, c, cfg, |r, u_d, _| trace.push(value(r, u_d)))?;
    Ok((code, trace))
}

/// `(1/sigma2) ||x - B u||^2 + lambda_l1 ||u||_1`.
pub fn objective_i(
    bases: ArrayView2<'_, f64>,
    x: ArrayView1<'_, f64>,
    u: ArrayView1<'_, f64>,
    lambda_l1: f64,
    sigma2: f64,
) -> f64 {
    let r = &x - &bases.dot(&u);
    r.dot(&r) / sigma2 + lambda_l1 * u.iter().map(|v| v.abs()).sum::<f64>()
}

/// `(1/sigma2) ||x - B_d u_d - B_r u_r||^2 + lambda ||u_d - c||^2`.
#[allow(clippy::too_many_arguments)]
pub fn objective_ii(
    bases_d: ArrayView2<'_, f64>,
    bases_r: ArrayView2<'_, f64>,
    x: ArrayView1<'_, f64>,
    u_d: ArrayView1<'_, f64>,
    u_r: ArrayView1<'_, f64>,
    c: ArrayView1<'_, f64>,
    lambda: f64,
    sigma2: f64,
) -> f64 {
    let r = &(&x - &bases_d.dot(&u_d)) - &bases_r.dot(&u_r);
    let g = &u_d - &c;
    r.dot(&r) / sigma2 + lambda * g.dot(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::rng_from_seed;
    use ndarray::{array, Array2};

    fn random_pair(d: usize, m1: usize, m2: usize, seed: u64) -> HybridDictionary {
        let mut rng = rng_from_seed(seed);
        HybridDictionary::new(
            Dictionary::random(d, m1, &mut rng),
            Dictionary::random(d, m2, &mut rng),
        )
        .unwrap()
    }

    #[test]
    fn exact_atom_is_recovered() {
        let mut rng = rng_from_seed(1);
        let dict = Dictionary::random(8, 5, &mut rng);
        let x = dict.atom(3).to_owned();
        let code = mp_encode(&dict, x.view(), 1).unwrap();
        assert_eq!(code.support, vec![3]);
        assert!((code.values[3] - 1.0).abs() < 1e-12);
        assert!(code.residual.dot(&code.residual).sqrt() < 1e-12);
    }

    #[test]
    fn orthogonal_input_gives_zero_code() {
        let dict = Dictionary::new(array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
        let code = mp_encode(&dict, array![0.0, 0.0, 2.5].view(), 2).unwrap();
        assert!(code.values.iter().all(|&v| v == 0.0));
        assert!(code.support.is_empty());
    }

    #[test]
    fn budget_larger_than_atoms_is_rejected() {
        let dict = Dictionary::new(array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(mp_encode(&dict, array![1.0, 1.0].view(), 3).is_err());
        assert!(mp_encode(&dict, array![1.0].view(), 1).is_err());
    }

    #[test]
    fn residual_norm_never_grows() {
        let mut rng = rng_from_seed(7);
        let dict = Dictionary::random(10, 20, &mut rng);
        let xs = Array2::from_shape_fn((30, 10), |(i, j)| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        for x in xs.rows() {
            let (code, trace) = mp_encode_traced(&dict, x, 15).unwrap();
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
            assert!(code.support.len() <= 15);
            let direct = &x - &dict.reconstruct(&code.values);
            assert!((&direct - &code.residual).iter().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn no_discriminative_budget_reduces_to_plain_pursuit() {
        let dicts = random_pair(8, 4, 5, 3);
        let cfg = MpConfig { k1: 0, k2: 3, ..MpConfig::default() };
        let x = array![0.3, -1.0, 2.0, 0.5, 0.0, 1.5, -0.7, 0.2];
        let c = array![1.0, 0.0, 0.5, 0.0];
        let hybrid = hybrid_mp_encode(&dicts, x.view(), c.view(), &cfg).unwrap();
        let plain = mp_encode(&dicts.residual, x.view(), 3).unwrap();
        assert!(hybrid.u_d.iter().all(|&v| v == 0.0));
        assert_eq!(hybrid.u_r, plain.values);
        assert_eq!(hybrid.residual, plain.residual);
    }

    #[test]
    fn huge_lambda_pins_step_to_guidance() {
        let dicts = random_pair(6, 4, 4, 9);
        let cfg = MpConfig { k1: 1, k2: 0, lambda: 1e9, ..MpConfig::default() };
        let x = array![0.5, -0.2, 0.1, 0.9, -1.1, 0.4];
        let c = array![0.0, 2.0, 0.0, -0.5];
        let code = hybrid_mp_encode(&dicts, x.view(), c.view(), &cfg).unwrap();
        let j = code.support_d[0];
        assert!((code.u_d[j] - c[j]).abs() < 1e-6);
        // the largest guidance entry gives the biggest objective drop
        assert_eq!(j, 1);
    }

    #[test]
    fn hybrid_objective_never_grows() {
        let dicts = random_pair(12, 6, 6, 4);
        let cfg = MpConfig { k1: 4, k2: 4, lambda: 0.5, ..MpConfig::default() };
        let mut rng = rng_from_seed(2);
        for _ in 0..20 {
            let x = Dictionary::random(12, 1, &mut rng).bases().column(0).to_owned() * 3.0;
            let c = Dictionary::random(6, 1, &mut rng).bases().column(0).mapv(f64::abs);
            let (code, trace) = hybrid_mp_encode_traced(&dicts, x.view(), c.view(), &cfg).unwrap();
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9);
            }
            let last = *trace.last().unwrap();
            let direct = objective_ii(
                dicts.discriminative.bases().view(),
                dicts.residual.bases().view(),
                x.view(),
                code.u_d.view(),
                code.u_r.view(),
                c.view(),
                cfg.lambda,
                1.0,
            );
            assert!((last - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn objectives_trivial_cases() {
        let b = array![[1.0, 0.0], [0.0, 1.0]];
        let x = array![3.0, 4.0];
        let zero = Array1::zeros(2);
        assert_eq!(objective_i(b.view(), x.view(), zero.view(), 1.0, 2.0), 12.5);
        assert_eq!(objective_i(b.view(), x.view(), x.view(), 0.0, 1.0), 0.0);
        assert_eq!(
            objective_ii(b.view(), b.view(), x.view(), zero.view(), zero.view(), zero.view(), 0.5, 1.0),
            25.0
        );
        let c = array![1.0, 1.0];
        let u_r = array![2.0, 3.0];
        assert_eq!(
            objective_ii(b.view(), b.view(), x.view(), c.view(), u_r.view(), c.view(), 0.5, 1.0),
            0.0
        );
    }

    #[test]
    fn invalid_config_rejected() {
        let dicts = random_pair(4, 2, 2, 1);
        let x = Array1::zeros(4);
        let c = Array1::zeros(2);
        let bad = MpConfig { lambda: -1.0, ..MpConfig::default() };
        assert!(hybrid_mp_encode(&dicts, x.view(), c.view(), &bad).is_err());
        let bad = MpConfig { sigma2: 0.0, k1: 1, k2: 1, ..MpConfig::default() };
        assert!(hybrid_mp_encode(&dicts, x.view(), c.view(), &bad).is_err());
        let ok = MpConfig { k1: 1, k2: 1, ..MpConfig::default() };
        assert!(hybrid_mp_encode(&dicts, x.view(), Array1::zeros(3).view(), &ok).is_err());
    }
}
