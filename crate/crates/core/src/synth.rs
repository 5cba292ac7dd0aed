//! Exact samplers for the two compositional generative models.
//!
//! Model I draws a Laplace code `u` and emits `x = B u + noise`. Model II
//! splits the mean into a discriminative part `B_d u_d`, with `u_d` drawn
//! around a guidance code `c`, and a residual part `B_r u_r` with Laplace
//! `u_r`.

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dictionary::Dictionary;
use crate::error::{check_dim, Error, Result};

/// Seeded generator used throughout the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Inverse CDF of the zero-mean Laplace distribution with scale `scale`,
/// evaluated at `v` in `(-1/2, 1/2)`.
pub fn laplace_inverse_cdf(v: f64, scale: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    -scale * v.signum() * (1.0 - 2.0 * v.abs()).ln()
}

fn draw_laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    loop {
        let v = rng.random::<f64>() - 0.5;
        if v > -0.5 {
            return laplace_inverse_cdf(v, scale);
        }
    }
}

fn laplace_vector<R: Rng + ?Sized>(scale: f64, dim: usize, rng: &mut R) -> Array1<f64> {
    Array1::from_shape_fn(dim, |_| draw_laplace(scale, rng))
}

/// `dim` i.i.d. Laplace(0, `scale`) draws.
pub fn sample_laplace(scale: f64, dim: usize, seed: u64) -> Result<Array1<f64>> {
    if !(scale > 0.0) {
        return Err(Error::arg(format!("Laplace scale must be positive, got {scale}")));
    }
    Ok(laplace_vector(scale, dim, &mut rng_from_seed(seed)))
}

fn add_noise<R: Rng + ?Sized>(x: &mut Array1<f64>, std: f64, rng: &mut R) {
    if std > 0.0 {
        let normal = Normal::new(0.0, std).expect("positive std");
        x.mapv_inplace(|v| v + normal.sample(rng));
    }
}

fn check_scale(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::arg(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn check_noise(v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::arg(format!("noise std must be non-negative, got {v}")));
    }
    Ok(())
}

/// Laplace-coded compositional model.
#[derive(Debug, Clone)]
pub struct GenModelI {
    pub bases: Dictionary,
    pub laplace_scale: f64,
    pub noise_std: f64,
}

impl GenModelI {
    pub fn new(bases: Dictionary, laplace_scale: f64, noise_std: f64) -> Result<Self> {
        check_scale("laplace_scale", laplace_scale)?;
        check_noise(noise_std)?;
        Ok(Self {
            bases,
            laplace_scale,
            noise_std,
        })
    }

    /// Returns `(x, u_true)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Array1<f64>, Array1<f64>) {
        let u = laplace_vector(self.laplace_scale, self.bases.atoms(), rng);
        let mut x = self.bases.reconstruct(&u);
        add_noise(&mut x, self.noise_std, rng);
        (x, u)
    }

    /// `n` features stacked as rows.
    pub fn sample_matrix<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Array2<f64> {
        let mut out = Array2::zeros((n, self.bases.dim()));
        for mut row in out.rows_mut() {
            row.assign(&self.sample(rng).0);
        }
        out
    }
}

pub fn sample_feature_i(model: &GenModelI, seed: u64) -> (Array1<f64>, Array1<f64>) {
    model.sample(&mut rng_from_seed(seed))
}

/// Hybrid compositional model.
#[derive(Debug, Clone)]
pub struct GenModelII {
    pub bases_d: Dictionary,
    pub bases_r: Dictionary,
    pub code_prior_c: Array1<f64>,
    /// Laplace scale of `u_r`.
    pub lambda1: f64,
    /// Sparsity scale of `u_d`.
    pub lambda2: f64,
    /// Fidelity scale of `u_d` around `c`.
    pub lambda3: f64,
    pub noise_std: f64,
    /// Metropolis steps per `u_d` draw; the chain starts at `c`.
    pub mcmc_steps: usize,
}

/// Default Metropolis chain length per draw.
pub const DEFAULT_MCMC_STEPS: usize = 200;

/// Outcome of one `u_d` draw.
#[derive(Debug, Clone)]
pub struct PriorDraw {
    pub u_d: Array1<f64>,
    pub accepted: usize,
    pub steps: usize,
}

impl GenModelII {
    pub fn new(
        bases_d: Dictionary,
        bases_r: Dictionary,
        code_prior_c: Array1<f64>,
        lambdas: [f64; 3],
        noise_std: f64,
    ) -> Result<Self> {
        check_dim(bases_d.dim(), bases_r.dim())?;
        check_dim(bases_d.atoms(), code_prior_c.len())?;
        for (name, v) in ["lambda1", "lambda2", "lambda3"].iter().zip(lambdas) {
            check_scale(name, v)?;
        }
        check_noise(noise_std)?;
        if code_prior_c.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("guidance code must be finite"));
        }
        Ok(Self {
            bases_d,
            bases_r,
            code_prior_c,
            lambda1: lambdas[0],
            lambda2: lambdas[1],
            lambda3: lambdas[2],
            noise_std,
            mcmc_steps: DEFAULT_MCMC_STEPS,
        })
    }

    fn log_prior_d(&self, u: &Array1<f64>, c: ArrayView1<'_, f64>) -> f64 {
        let l1: f64 = u.iter().map(|v| v.abs()).sum();
        let dist: f64 = u
            .iter()
            .zip(c.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        -l1 / self.lambda2 - dist / self.lambda3
    }

    /// Random-walk Metropolis draw from `P(u_d | c)`, Gaussian proposals with
    /// per-coordinate scale `lambda2 / 2`.
    pub fn sample_prior_d<R: Rng + ?Sized>(&self, c: ArrayView1<'_, f64>, rng: &mut R) -> PriorDraw {
        let proposal = Normal::new(0.0, self.lambda2 / 2.0).expect("positive scale");
        let mut u = c.to_owned();
        let mut current = self.log_prior_d(&u, c);
        let mut accepted = 0;
        for _ in 0..self.mcmc_steps {
            let candidate = u.mapv(|v| v + proposal.sample(rng));
            let next = self.log_prior_d(&candidate, c);
            let threshold: f64 = rng.random::<f64>().ln();
            if threshold < next - current {
                u = candidate;
                current = next;
                accepted += 1;
            }
        }
        PriorDraw {
            u_d: u,
            accepted,
            steps: self.mcmc_steps,
        }
    }

    /// Returns `(x, u_d, u_r)` using the model's own guidance code.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Array1<f64>, Array1<f64>, Array1<f64>) {
        self.sample_with_prior(self.code_prior_c.view(), rng)
    }

    /// Same as [`GenModelII::sample`] with an explicit guidance code.
    pub fn sample_with_prior<R: Rng + ?Sized>(
        &self,
        c: ArrayView1<'_, f64>,
        rng: &mut R,
    ) -> (Array1<f64>, Array1<f64>, Array1<f64>) {
        let u_d = self.sample_prior_d(c, rng).u_d;
        let u_r = laplace_vector(self.lambda1, self.bases_r.atoms(), rng);
        let mut x = self.bases_d.reconstruct(&u_d) + self.bases_r.reconstruct(&u_r);
        add_noise(&mut x, self.noise_std, rng);
        (x, u_d, u_r)
    }
}

pub fn sample_feature_ii(
    model: &GenModelII,
    seed: u64,
) -> (Array1<f64>, Array1<f64>, Array1<f64>) {
    model.sample(&mut rng_from_seed(seed))
}
