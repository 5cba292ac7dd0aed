//! Independent reference implementations used by the integration tests.
//! Nothing here reuses the library's inference or gradient code.

#![allow(dead_code)]

use compfv::synth::rng_from_seed;
use compfv::Dictionary;
use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Minimizer and minimum of a 1-D quadratic known only through evaluations.
/// Fits a parabola through `f(-1)`, `f(0)`, `f(1)`.
pub fn parabola_min(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (a, b, c) = (f(-1.0), f(0.0), f(1.0));
    let curvature = a - 2.0 * b + c;
    if curvature <= 0.0 {
        return (0.0, b);
    }
    let t = (a - c) / (2.0 * curvature);
    (t, f(t))
}

fn sq_norm(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Greedy matching pursuit where every step tries every atom with the
/// scalar found by evaluating the explicit objective; the do-nothing move
/// is always allowed. Returns `||r||^2` after each step.
pub fn mp_step_oracle(bases: &Array2<f64>, x: ArrayView1<'_, f64>, k: usize) -> Vec<f64> {
    let mut r = x.to_owned();
    let mut out = Vec::new();
    for _ in 0..k {
        let current = sq_norm(&r);
        let mut best = (current, None);
        for j in 0..bases.ncols() {
            let b = bases.column(j);
            let (t, v) = parabola_min(|u| sq_norm(&(&r - &(&b * u))));
            if v < best.0 {
                best = (v, Some((j, t)));
            }
        }
        let Some((j, t)) = best.1 else { break };
        r = &r - &(&bases.column(j) * t);
        out.push(sq_norm(&r));
    }
    out
}

/// Per-step exhaustive search for the hybrid objective
/// `||x - B_d u_d - B_r u_r||^2 + lambda ||u_d - c||^2`.
/// Returns the objective after every step of both phases.
pub fn hybrid_step_oracle(
    bd: &Array2<f64>,
    br: &Array2<f64>,
    x: ArrayView1<'_, f64>,
    c: ArrayView1<'_, f64>,
    k1: usize,
    k2: usize,
    lambda: f64,
) -> Vec<f64> {
    let mut r = x.to_owned();
    let mut ud = Array1::<f64>::zeros(bd.ncols());
    let objective = |r: &Array1<f64>, ud: &Array1<f64>| sq_norm(r) + lambda * sq_norm(&(ud - &c));
    let mut out = Vec::new();
    for _ in 0..k1 {
        let mut best = (objective(&r, &ud), None);
        for j in 0..bd.ncols() {
            let b = bd.column(j);
            let (t, v) = parabola_min(|u| {
                let mut trial = ud.clone();
                trial[j] += u;
                objective(&(&r - &(&b * u)), &trial)
            });
            if v < best.0 {
                best = (v, Some((j, t)));
            }
        }
        let Some((j, t)) = best.1 else { break };
        r = &r - &(&bd.column(j) * t);
        ud[j] += t;
        out.push(objective(&r, &ud));
    }
    for _ in 0..k2 {
        let mut best = (objective(&r, &ud), None);
        for j in 0..br.ncols() {
            let b = br.column(j);
            let (t, v) = parabola_min(|u| objective(&(&r - &(&b * u)), &ud));
            if v < best.0 {
                best = (v, Some((j, t)));
            }
        }
        let Some((j, t)) = best.1 else { break };
        r = &r - &(&br.column(j) * t);
        out.push(objective(&r, &ud));
    }
    out
}

/// Central finite difference of `f` with respect to every entry of `p`.
pub fn fd_gradient(p: &Array2<f64>, h: f64, f: impl Fn(&Array2<f64>) -> f64) -> Array2<f64> {
    let mut g = Array2::zeros(p.raw_dim());
    for idx in ndarray::indices(p.raw_dim()) {
        let mut plus = p.clone();
        plus[idx] += h;
        let mut minus = p.clone();
        minus[idx] -= h;
        g[idx] = (f(&plus) - f(&minus)) / (2.0 * h);
    }
    g
}

pub fn fd_gradient_vec(p: &Array1<f64>, h: f64, f: impl Fn(&Array1<f64>) -> f64) -> Array1<f64> {
    Array1::from_shape_fn(p.len(), |i| {
        let mut plus = p.clone();
        plus[i] += h;
        let mut minus = p.clone();
        minus[i] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    })
}

/// `max |a - b| / max(max |b|, floor)`.
pub fn rel_err(a: &Array2<f64>, b: &Array2<f64>, floor: f64) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.abs()).fold(floor, f64::max);
    diff / scale
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues (unsorted) and eigenvectors as columns.
pub fn jacobi_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * m[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[[k, p]], m[[k, q]]);
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[[p, k]], m[[q, k]]);
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    (Array1::from_shape_fn(n, |i| m[[i, i]]), v)
}

/// Sample covariance with the `n - 1` denominator, by explicit loops.
pub fn covariance(x: &Array2<f64>) -> Array2<f64> {
    let (n, d) = x.dim();
    let mean: Vec<f64> = (0..d).map(|j| (0..n).map(|i| x[[i, j]]).sum::<f64>() / n as f64).collect();
    Array2::from_shape_fn((d, d), |(a, b)| {
        (0..n).map(|i| (x[[i, a]] - mean[a]) * (x[[i, b]] - mean[b])).sum::<f64>() / (n as f64 - 1.0)
    })
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Direct diagonal Gaussian density, as a product of 1-D densities.
pub fn gaussian_density(x: ArrayView1<'_, f64>, mean: ArrayView1<'_, f64>, var: ArrayView1<'_, f64>) -> f64 {
    x.iter()
        .zip(mean)
        .zip(var)
        .map(|((&xi, &m), &v)| (-(xi - m) * (xi - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt())
        .product()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

pub fn random_vector(n: usize, rng: &mut impl Rng) -> Array1<f64> {
    Array1::from_shape_simple_fn(n, || StandardNormal.sample(rng))
}

pub fn random_dict(dim: usize, atoms: usize, seed: u64) -> Dictionary {
    Dictionary::random(dim, atoms, &mut rng_from_seed(seed))
}
