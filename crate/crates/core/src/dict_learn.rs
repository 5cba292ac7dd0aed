//! Alternating dictionary learning.
//!
//! Each outer iteration infers codes with the current bases, then refits the
//! bases by ridge-regularized least squares against those codes (the MOD
//! update) and rescales every column to unit norm. Atoms that no feature
//! selected are replaced by the worst-reconstructed features.

use nalgebra::DMatrix;
use ndarray::{s, Array1, Array2, Axis, Zip};
use rand::seq::SliceRandom;

use crate::error::{check_dim, Error, Result};
use crate::sparse::{hybrid_mp_encode, mp_encode_rows, MpConfig};
use crate::synth::rng_from_seed;

pub use crate::dictionary::{Dictionary, HybridDictionary};

/// Ridge added to `U^T U` in the basis update.
pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Replacement atoms closer than this in |cosine| to an earlier replacement
/// are skipped.
const DUPLICATE_COSINE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DictLearnConfig {
    /// Matching pursuit budget used during training.
    pub k: usize,
    pub iters: usize,
    pub seed: u64,
    pub ridge: f64,
}

impl Default for DictLearnConfig {
    fn default() -> Self {
        Self {
            k: 10,
            iters: 20,
            seed: 0,
            ridge: DEFAULT_RIDGE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridLearnConfig {
    /// `k1`, `k2` and `lambda` drive inference; `k` is unused.
    pub mp: MpConfig,
    pub iters: usize,
    pub seed: u64,
    pub ridge: f64,
}

impl Default for HybridLearnConfig {
    fn default() -> Self {
        Self {
            mp: MpConfig::default(),
            iters: 20,
            seed: 0,
            ridge: DEFAULT_RIDGE,
        }
    }
}

/// Per-iteration statistics. Errors are mean squared residual norms over the
/// training rows; objectives add the mean guidance penalty (zero for plain
/// dictionaries).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterStats {
    /// With the codes inferred at the start of the iteration.
    pub error_before: f64,
    /// After the least-squares update, before renormalization.
    pub error_after_update: f64,
    pub objective_before: f64,
    pub objective_after_update: f64,
    pub dead_atoms: usize,
}

#[derive(Debug, Clone)]
pub struct DictLearnFit {
    pub dictionary: Dictionary,
    pub trace: Vec<IterStats>,
}

#[derive(Debug, Clone)]
pub struct HybridLearnFit {
    pub dictionaries: HybridDictionary,
    pub trace: Vec<IterStats>,
}

/// Normalized rows taken in a seeded random order, skipping zero rows.
/// The order does not depend on `count`, so a prefix of a larger draw equals
/// a smaller draw.
fn initial_bases(x: &Array2<f64>, count: usize, seed: u64) -> Result<Array2<f64>> {
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let mut bases = Array2::zeros((x.ncols(), count));
    let mut filled = 0;
    for i in order {
        if filled == count {
            break;
        }
        let row = x.row(i);
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            bases.column_mut(filled).assign(&(&row / norm));
            filled += 1;
        }
    }
    if filled < count {
        return Err(Error::arg(format!(
            "only {filled} non-zero features available to initialize {count} atoms"
        )));
    }
    Ok(bases)
}

/// `U^T X` skipping zero code entries.
fn sparse_codes_t_x(codes: &Array2<f64>, x: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((codes.ncols(), x.ncols()));
    for (xrow, urow) in x.rows().into_iter().zip(codes.rows()) {
        for (j, &u) in urow.iter().enumerate() {
            if u != 0.0 {
                out.row_mut(j).scaled_add(u, &xrow);
            }
        }
    }
    out
}

/// `X - U B^T` skipping zero code entries.
fn residuals(x: &Array2<f64>, codes: &Array2<f64>, bases: &Array2<f64>) -> Array2<f64> {
    let atoms = bases.t().as_standard_layout().into_owned();
    let mut out = x.clone();
    Zip::from(out.rows_mut()).and(codes.rows()).par_for_each(|mut row, urow| {
        for (j, &u) in urow.iter().enumerate() {
            if u != 0.0 {
                row.scaled_add(-u, &atoms.row(j));
            }
        }
    });
    out
}

fn mean_row_sq(r: &Array2<f64>) -> (Array1<f64>, f64) {
    let norms = r.map_axis(Axis(1), |row| row.dot(&row));
    let mean = norms.sum() / r.nrows() as f64;
    (norms, mean)
}

/// Solves `B_s (U_s^T U_s + ridge I) = X^T U_s` for the used atoms.
fn least_squares_update(
    x: &Array2<f64>,
    codes: &Array2<f64>,
    bases: &Array2<f64>,
    used: &[usize],
    ridge: f64,
) -> Array2<f64> {
    let mut next = bases.clone();
    if used.is_empty() {
        return next;
    }
    let sub = codes.select(Axis(1), used);
    let gram = sub.t().dot(&sub);
    let rhs = sparse_codes_t_x(&sub, x); // s x D
    let s = used.len();
    let a = DMatrix::from_fn(s, s, |i, j| gram[[i, j]] + if i == j { ridge } else { 0.0 });
    let b = DMatrix::from_fn(s, rhs.ncols(), |i, j| rhs[[i, j]]);
    let solved = match a.clone().cholesky() {
        Some(chol) => chol.solve(&b),
        None => a.lu().solve(&b).unwrap_or_else(|| DMatrix::zeros(s, rhs.ncols())),
    };
    for (col, &atom) in used.iter().enumerate() {
        for d in 0..rhs.ncols() {
            next[[d, atom]] = solved[(col, d)];
        }
    }
    next
}

/// Overwrites `dead` columns with the normalized features of largest
/// residual, skipping near-duplicates of earlier picks.
fn replace_dead(bases: &mut Array2<f64>, dead: &[usize], x: &Array2<f64>, residual_sq: &Array1<f64>) {
    if dead.is_empty() {
        return;
    }
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    order.sort_by(|&a, &b| residual_sq[b].total_cmp(&residual_sq[a]).then(a.cmp(&b)));
    let mut picks: Vec<Array1<f64>> = Vec::new();
    let mut candidates = order.into_iter();
    for &atom in dead {
        let pick = loop {
            let Some(i) = candidates.next() else { break None };
            let row = x.row(i);
            let norm = row.dot(&row).sqrt();
            if norm == 0.0 {
                continue;
            }
            let unit = &row / norm;
            if picks.iter().all(|p| p.dot(&unit).abs() < DUPLICATE_COSINE) {
                break Some(unit);
            }
        };
        match pick {
            Some(unit) => {
                bases.column_mut(atom).assign(&unit);
                picks.push(unit);
            }
            // every feature is spoken for; keep the previous atom direction
            None => break,
        }
    }
}

/// Shared alternating loop. `encode` returns the `N x M` code matrix and the
/// summed guidance penalty for the given normalized bases.
fn alternate<E>(
    x: &Array2<f64>,
    mut bases: Array2<f64>,
    iters: usize,
    ridge: f64,
    encode: E,
) -> Result<(Array2<f64>, Vec<IterStats>)>
where
    E: Fn(&Array2<f64>) -> Result<(Array2<f64>, f64)>,
{
    let n = x.nrows() as f64;
    let mut trace = Vec::with_capacity(iters);
    for _ in 0..iters {
        let (codes, penalty) = encode(&bases)?;
        let (_, error_before) = mean_row_sq(&residuals(x, &codes, &bases));

        let used: Vec<usize> = (0..bases.ncols())
            .filter(|&j| codes.column(j).iter().any(|&v| v != 0.0))
            .collect();
        let mut updated = least_squares_update(x, &codes, &bases, &used, ridge);
        let (residual_sq, error_after) = mean_row_sq(&residuals(x, &codes, &updated));

        let mut dead: Vec<usize> = (0..bases.ncols()).filter(|j| !used.contains(j)).collect();
        for (j, mut col) in updated.columns_mut().into_iter().enumerate() {
            let norm = col.dot(&col).sqrt();
            if norm > 0.0 && norm.is_finite() {
                col /= norm;
            } else if !dead.contains(&j) {
                dead.push(j);
            }
        }
        dead.sort_unstable();
        replace_dead(&mut updated, &dead, x, &residual_sq);
        // columns that could not be replaced fall back to the old direction
        for &j in &dead {
            let col = updated.column(j);
            if (col.dot(&col).sqrt() - 1.0).abs() > 1e-9 {
                updated.column_mut(j).assign(&bases.column(j));
            }
        }
        trace.push(IterStats {
            error_before,
            error_after_update: error_after,
            objective_before: error_before + penalty / n,
            objective_after_update: error_after + penalty / n,
            dead_atoms: dead.len(),
        });
        bases = updated;
    }
    Ok((bases, trace))
}

fn check_features(x: &Array2<f64>, atoms: usize) -> Result<()> {
    if x.nrows() < atoms {
        return Err(Error::arg(format!(
            "{} features cannot train {atoms} atoms",
            x.nrows()
        )));
    }
    if x.ncols() == 0 || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("training features must be finite and non-empty"));
    }
    Ok(())
}

fn encode_plain(x: &Array2<f64>, bases: &Array2<f64>, k: usize) -> Result<(Array2<f64>, f64)> {
    let dict = Dictionary::normalized(bases.clone())?;
    Ok((mp_encode_rows(&dict, x, k)?, 0.0))
}

/// Learns an `m`-atom dictionary for matching pursuit with budget `cfg.k`.
pub fn learn_dictionary(x: &Array2<f64>, m: usize, cfg: &DictLearnConfig) -> Result<DictLearnFit> {
    if m == 0 {
        return Err(Error::arg("dictionary needs at least one atom"));
    }
    check_features(x, m)?;
    if cfg.k > m {
        return Err(Error::arg(format!("k = {} exceeds {m} atoms", cfg.k)));
    }
    let init = initial_bases(x, m, cfg.seed)?;
    let (bases, trace) = alternate(x, init, cfg.iters, cfg.ridge, |b| encode_plain(x, b, cfg.k))?;
    Ok(DictLearnFit {
        dictionary: Dictionary::normalized(bases)?,
        trace,
    })
}

fn split(bases: &Array2<f64>, m1: usize) -> Result<HybridDictionary> {
    HybridDictionary::new(
        Dictionary::normalized(bases.slice(s![.., ..m1]).to_owned())?,
        Dictionary::normalized(bases.slice(s![.., m1..]).to_owned())?,
    )
}

/// Learns the discriminative / residual pair. Row `i` of `guidance` is the
/// guidance code for feature `i`.
pub fn learn_hybrid_dictionaries(
    x: &Array2<f64>,
    guidance: &Array2<f64>,
    m1: usize,
    m2: usize,
    cfg: &HybridLearnConfig,
) -> Result<HybridLearnFit> {
    if m1 + m2 == 0 {
        return Err(Error::arg("dictionaries need at least one atom"));
    }
    check_features(x, m1 + m2)?;
    check_dim(x.nrows(), guidance.nrows())?;
    check_dim(m1, guidance.ncols())?;
    cfg.mp.validate()?;
    if cfg.mp.k1 > m1 || cfg.mp.k2 > m2 {
        return Err(Error::arg("sparsity budgets exceed the atom counts"));
    }
    let init = initial_bases(x, m1 + m2, cfg.seed)?;
    let lambda = cfg.mp.lambda;
    let encode = |b: &Array2<f64>| -> Result<(Array2<f64>, f64)> {
        let dicts = split(b, m1)?;
        let mut codes = Array2::zeros((x.nrows(), m1 + m2));
        let mut penalties = Array1::zeros(x.nrows());
        let mut failure = None;
        Zip::from(codes.rows_mut())
            .and(&mut penalties)
            .and(x.rows())
            .and(guidance.rows())
            .for_each(|mut out, pen, row, c| match hybrid_mp_encode(&dicts, row, c, &cfg.mp) {
                Ok(code) => {
                    out.slice_mut(s![..m1]).assign(&code.u_d);
                    out.slice_mut(s![m1..]).assign(&code.u_r);
                    let g = &code.u_d - &c;
                    *pen = lambda * g.dot(&g);
                }
                Err(e) => failure = Some(e),
            });
        match failure {
            Some(e) => Err(e),
            None => Ok((codes, penalties.sum())),
        }
    };
    let (bases, trace) = alternate(x, init, cfg.iters, cfg.ridge, encode)?;
    Ok(HybridLearnFit {
        dictionaries: split(&bases, m1)?,
        trace,
    })
}

/// Mean squared residual of matching pursuit with budget `k` over the rows.
pub fn mean_reconstruction_error(dict: &Dictionary, x: &Array2<f64>, k: usize) -> Result<f64> {
    let (codes, _) = encode_plain(x, dict.bases(), k)?;
    Ok(mean_row_sq(&residuals(x, &codes, dict.bases())).1)
}

/// Mean squared residual of hybrid pursuit over the rows.
pub fn mean_hybrid_reconstruction_error(
    dicts: &HybridDictionary,
    x: &Array2<f64>,
    guidance: &Array2<f64>,
    cfg: &MpConfig,
) -> Result<f64> {
    check_dim(x.nrows(), guidance.nrows())?;
    let mut total = 0.0;
    for (row, c) in x.rows().into_iter().zip(guidance.rows()) {
        let code = hybrid_mp_encode(dicts, row, c, cfg)?;
        total += code.residual.dot(&code.residual);
    }
    Ok(total / x.nrows() as f64)
}
