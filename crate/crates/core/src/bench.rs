//! Synthetic experiments: the model-resolution comparison between GMMs and
//! learned dictionaries, and small end-to-end classification benchmarks.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, Axis};
use rand::seq::index::sample;
use rayon::prelude::*;

use crate::classify::{evaluate, train_linear, LinearConfig};
use crate::dataio::{stack_features, FeatureSet};
use crate::dict_learn::{learn_dictionary, learn_hybrid_dictionaries, DictLearnConfig, HybridLearnConfig};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::fvc::{encode_images, Encoder, GmmFvcOptions};
use crate::gmm::{fit_gmm, mean_nearest_prototype_distance, GmmConfig};
use crate::sparse::{mp_encode, MpConfig};
use crate::supcode::{sparsify_top_k, sup_signature, train_sup_encoder, SupTrainConfig, SupervisedEncoder};
use crate::synth::{rng_from_seed, GenModelI, GenModelII};

/// Mixes a base seed with a stream index so sub-experiments draw
/// independent streams.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionConfig {
    pub dims: Vec<usize>,
    pub gmm_sizes: Vec<usize>,
    pub basis_counts: Vec<usize>,
    /// Atoms of the hidden generating dictionary.
    pub true_atoms: usize,
    pub laplace_scale: f64,
    pub noise_std: f64,
    pub train_features: usize,
    pub test_features: usize,
    /// Matching pursuit budget for both dictionary training and testing.
    pub sparsity: usize,
    pub gmm_iters: usize,
    pub dict_iters: usize,
    pub seed: u64,
}

impl Default for ResolutionConfig {
    fn default() -> Self {
        Self {
            dims: vec![200, 500, 1000],
            gmm_sizes: vec![100, 200, 500],
            basis_counts: vec![100],
            true_atoms: 10,
            laplace_scale: 1.0,
            noise_std: 0.01,
            train_features: 10_000,
            test_features: 500,
            sparsity: 10,
            gmm_iters: 20,
            dict_iters: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Gmm,
    SparseCoding,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Gmm => "gmm",
            ModelKind::SparseCoding => "sc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionRow {
    pub model_kind: ModelKind,
    pub count: usize,
    pub dim: usize,
    pub mean_distance: f64,
}

pub const RESOLUTION_HEADER: &str = "model_kind,count,dim,mean_distance";

pub fn resolution_csv(rows: &[ResolutionRow]) -> String {
    let mut out = format!("{RESOLUTION_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.model_kind.as_str(), r.count, r.dim, r.mean_distance).unwrap();
    }
    out
}

/// Mean `|x - B u*|` over the rows, `u*` from matching pursuit.
pub fn mean_sparse_distance(dict: &Dictionary, x: &Array2<f64>, k: usize) -> Result<f64> {
    let norms = (0..x.nrows())
        .into_par_iter()
        .map(|i| mp_encode(dict, x.row(i), k).map(|c| c.residual.dot(&c.residual).sqrt()))
        .collect::<Result<Vec<_>>>()?;
    Ok(norms.iter().sum::<f64>() / norms.len() as f64)
}

/// For each dimensionality: draw a hidden dictionary, sample training and
/// held-out features from it, fit every GMM size and dictionary size on the
/// training features and report the mean nearest-prototype distance on the
/// held-out ones.
pub fn run_resolution(cfg: &ResolutionConfig) -> Result<Vec<ResolutionRow>> {
    if cfg.train_features == 0 || cfg.test_features == 0 {
        return Err(Error::arg("need training and test features"));
    }
    let mut rows = Vec::new();
    for (di, &dim) in cfg.dims.iter().enumerate() {
        let stream = derive_seed(cfg.seed, di as u64);
        let truth = Dictionary::random(dim, cfg.true_atoms, &mut rng_from_seed(derive_seed(stream, 1)));
        let model = GenModelI::new(truth, cfg.laplace_scale, cfg.noise_std)?;
        let train = model.sample_matrix(cfg.train_features, &mut rng_from_seed(derive_seed(stream, 2)));
        let test = model.sample_matrix(cfg.test_features, &mut rng_from_seed(derive_seed(stream, 3)));
        for &k in &cfg.gmm_sizes {
            let gmm_cfg = GmmConfig {
                max_iters: cfg.gmm_iters,
                seed: derive_seed(stream, 4),
                ..GmmConfig::default()
            };
            let fit = fit_gmm(&train, k, &gmm_cfg)?;
            rows.push(ResolutionRow {
                model_kind: ModelKind::Gmm,
                count: k,
                dim,
                mean_distance: mean_nearest_prototype_distance(&fit.model, &test)?,
            });
        }
        for &m in &cfg.basis_counts {
            let dict_cfg = DictLearnConfig {
                k: cfg.sparsity.min(m),
                iters: cfg.dict_iters,
                seed: derive_seed(stream, 5),
                ..DictLearnConfig::default()
            };
            let fit = learn_dictionary(&train, m, &dict_cfg)?;
            rows.push(ResolutionRow {
                model_kind: ModelKind::SparseCoding,
                count: m,
                dim,
                mean_distance: mean_sparse_distance(&fit.dictionary, &test, dict_cfg.k)?,
            });
        }
    }
    Ok(rows)
}

/// Labeled images split into training and test sets.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Vec<FeatureSet>,
    pub test: Vec<FeatureSet>,
}

/// Classes drawn from their own Laplace-coded dictionaries. Every class
/// dictionary holds the same `shared_atoms` columns plus `class_atoms`
/// columns of its own.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDataConfig {
    pub classes: usize,
    pub dim: usize,
    pub features_per_image: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub shared_atoms: usize,
    pub class_atoms: usize,
    pub laplace_scale: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for ClassDataConfig {
    fn default() -> Self {
        Self {
            classes: 3,
            dim: 100,
            features_per_image: 50,
            train_per_class: 60,
            test_per_class: 30,
            shared_atoms: 24,
            class_atoms: 4,
            laplace_scale: 1.0,
            noise_std: 0.1,
            seed: 0,
        }
    }
}

fn image_id(split: &str, class: usize, index: usize) -> String {
    format!("{split}-c{class}-{index:04}")
}

/// Draws train and test images per class with `draw(class, rng)` producing
/// one feature.
fn draw_split<F>(
    classes: usize,
    train_per_class: usize,
    test_per_class: usize,
    features_per_image: usize,
    dim: usize,
    seed: u64,
    draw: F,
) -> Result<Split>
where
    F: Fn(usize, &mut rand_chacha::ChaCha8Rng) -> Array1<f64> + Sync,
{
    let make = |name: &str, per_class: usize, stream: u64| -> Result<Vec<FeatureSet>> {
        let jobs: Vec<(usize, usize)> = (0..classes)
            .flat_map(|c| (0..per_class).map(move |i| (c, i)))
            .collect();
        jobs.par_iter()
            .map(|&(c, i)| {
                let mut rng = rng_from_seed(derive_seed(seed, stream * 1_000_003 + (c * per_class + i) as u64));
                let mut x = Array2::zeros((features_per_image, dim));
                for mut row in x.rows_mut() {
                    row.assign(&draw(c, &mut rng));
                }
                FeatureSet::new(x, image_id(name, c, i), Some(c as u32))
            })
            .collect()
    };
    Ok(Split {
        train: make("train", train_per_class, 1)?,
        test: make("test", test_per_class, 2)?,
    })
}

pub fn class_dataset_i(cfg: &ClassDataConfig) -> Result<Split> {
    if cfg.classes < 2 || cfg.features_per_image == 0 || cfg.train_per_class == 0 {
        return Err(Error::arg("need two classes and non-empty images"));
    }
    let mut rng = rng_from_seed(derive_seed(cfg.seed, 0));
    let shared = Dictionary::random(cfg.dim, cfg.shared_atoms, &mut rng);
    let models = (0..cfg.classes)
        .map(|_| {
            let own = Dictionary::random(cfg.dim, cfg.class_atoms, &mut rng);
            let bases = ndarray::concatenate![Axis(1), *shared.bases(), *own.bases()];
            GenModelI::new(Dictionary::new(bases)?, cfg.laplace_scale, cfg.noise_std)
        })
        .collect::<Result<Vec<_>>>()?;
    draw_split(
        cfg.classes,
        cfg.train_per_class,
        cfg.test_per_class,
        cfg.features_per_image,
        cfg.dim,
        cfg.seed,
        |c, rng| models[c].sample(rng).0,
    )
}

/// Classes share both bases of a hybrid model and differ only in the
/// guidance code around which `u_d` is drawn. Each class guidance code has
/// `active_codes` entries equal to `code_value`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridDataConfig {
    pub classes: usize,
    pub dim: usize,
    pub features_per_image: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub atoms_d: usize,
    pub atoms_r: usize,
    pub active_codes: usize,
    pub code_value: f64,
    /// `[lambda1, lambda2, lambda3]`.
    pub lambdas: [f64; 3],
    pub noise_std: f64,
    pub mcmc_steps: usize,
    pub seed: u64,
}

impl Default for HybridDataConfig {
    fn default() -> Self {
        Self {
            classes: 3,
            dim: 100,
            features_per_image: 50,
            train_per_class: 60,
            test_per_class: 30,
            atoms_d: 12,
            atoms_r: 16,
            active_codes: 3,
            code_value: 0.7,
            lambdas: [1.0, 0.5, 0.5],
            noise_std: 0.1,
            mcmc_steps: 50,
            seed: 0,
        }
    }
}

pub fn class_dataset_ii(cfg: &HybridDataConfig) -> Result<Split> {
    if cfg.classes < 2 || cfg.features_per_image == 0 || cfg.train_per_class == 0 {
        return Err(Error::arg("need two classes and non-empty images"));
    }
    if cfg.active_codes > cfg.atoms_d {
        return Err(Error::arg("more active guidance codes than discriminative atoms"));
    }
    let mut rng = rng_from_seed(derive_seed(cfg.seed, 0));
    let bases_d = Dictionary::random(cfg.dim, cfg.atoms_d, &mut rng);
    let bases_r = Dictionary::random(cfg.dim, cfg.atoms_r, &mut rng);
    let prototypes: Vec<Array1<f64>> = (0..cfg.classes)
        .map(|_| {
            let mut c = Array1::zeros(cfg.atoms_d);
            for j in sample(&mut rng, cfg.atoms_d, cfg.active_codes) {
                c[j] = cfg.code_value;
            }
            c
        })
        .collect();
    let mut model = GenModelII::new(bases_d, bases_r, prototypes[0].clone(), cfg.lambdas, cfg.noise_std)?;
    model.mcmc_steps = cfg.mcmc_steps;
    draw_split(
        cfg.classes,
        cfg.train_per_class,
        cfg.test_per_class,
        cfg.features_per_image,
        cfg.dim,
        cfg.seed,
        |c, rng| model.sample_with_prior(prototypes[c].view(), rng).0,
    )
}

/// Settings for the encoders and classifiers in the end-to-end runs.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Dictionary atoms for SCFVC and components for GMM-FVC.
    pub atoms: usize,
    pub k: usize,
    /// Supervised codes, equal to the discriminative atoms of HSCFVC.
    pub codes: usize,
    pub residual_atoms: usize,
    pub k1: usize,
    pub k2: usize,
    pub lambda: f64,
    pub dict_iters: usize,
    pub gmm_iters: usize,
    pub linear: LinearConfig,
    pub sup: SupTrainConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            atoms: 32,
            k: 5,
            codes: 16,
            residual_atoms: 16,
            k1: 3,
            k2: 3,
            lambda: 1.0,
            dict_iters: 10,
            gmm_iters: 30,
            linear: LinearConfig::default(),
            sup: SupTrainConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodScore {
    pub method: &'static str,
    pub signature_dim: usize,
    pub accuracy: f64,
    pub mean_average_precision: f64,
}

pub const SCORE_HEADER: &str = "method,signature_dim,accuracy,mean_average_precision";

pub fn scores_csv(scores: &[MethodScore]) -> String {
    let mut out = format!("{SCORE_HEADER}\n");
    for s in scores {
        writeln!(
            out,
            "{},{},{},{}",
            s.method, s.signature_dim, s.accuracy, s.mean_average_precision
        )
        .unwrap();
    }
    out
}

fn labels_of(images: &[FeatureSet]) -> Result<Vec<u32>> {
    images
        .iter()
        .map(|i| i.label.ok_or_else(|| Error::arg(format!("image {} has no label", i.image_id))))
        .collect()
}

/// Trains a linear classifier on the training signatures and scores the
/// test signatures.
pub fn score_signatures(
    method: &'static str,
    train: &Array2<f64>,
    train_labels: &[u32],
    test: &Array2<f64>,
    test_labels: &[u32],
    cfg: &LinearConfig,
) -> Result<MethodScore> {
    let fit = train_linear(train, train_labels, cfg)?;
    let m = evaluate(&fit.model, test, test_labels)?;
    Ok(MethodScore {
        method,
        signature_dim: train.ncols(),
        accuracy: m.accuracy,
        mean_average_precision: m.mean_average_precision,
    })
}

fn score_encoder(
    method: &'static str,
    encoder: &Encoder,
    split: &Split,
    cfg: &LinearConfig,
) -> Result<MethodScore> {
    score_signatures(
        method,
        &encode_images(&split.train, encoder)?,
        &labels_of(&split.train)?,
        &encode_images(&split.test, encoder)?,
        &labels_of(&split.test)?,
        cfg,
    )
}

pub fn scfvc_encoder(train: &[FeatureSet], cfg: &PipelineConfig) -> Result<Encoder> {
    let x = stack_features(train)?;
    let dict_cfg = DictLearnConfig {
        k: cfg.k,
        iters: cfg.dict_iters,
        seed: derive_seed(cfg.seed, 10),
        ..DictLearnConfig::default()
    };
    let fit = learn_dictionary(&x, cfg.atoms, &dict_cfg)?;
    Ok(Encoder::Scfvc {
        dict: fit.dictionary,
        cfg: MpConfig { k: cfg.k, ..MpConfig::default() },
    })
}

pub fn gmmfvc_encoder(train: &[FeatureSet], cfg: &PipelineConfig) -> Result<Encoder> {
    let x = stack_features(train)?;
    let gmm_cfg = GmmConfig {
        max_iters: cfg.gmm_iters,
        seed: derive_seed(cfg.seed, 11),
        ..GmmConfig::default()
    };
    Ok(Encoder::GmmFvc {
        model: fit_gmm(&x, cfg.atoms, &gmm_cfg)?.model,
        opts: GmmFvcOptions::default(),
    })
}

pub fn supervised_coder(train: &[FeatureSet], cfg: &PipelineConfig) -> Result<SupervisedEncoder> {
    let sup_cfg = SupTrainConfig {
        seed: derive_seed(cfg.seed, 12),
        ..cfg.sup
    };
    Ok(train_sup_encoder(train, cfg.codes, &sup_cfg)?.encoder)
}

/// Guidance codes for every stacked training feature.
pub fn guidance_codes(coder: &SupervisedEncoder, x: &Array2<f64>, k1: usize) -> Result<Array2<f64>> {
    let mut codes = coder.encode_rows(x)?;
    for mut row in codes.rows_mut() {
        let sparse = sparsify_top_k(row.view(), k1);
        row.assign(&sparse);
    }
    Ok(codes)
}

pub fn hscfvc_encoder(
    train: &[FeatureSet],
    coder: SupervisedEncoder,
    cfg: &PipelineConfig,
) -> Result<Encoder> {
    let x = stack_features(train)?;
    let mp = MpConfig {
        k1: cfg.k1,
        k2: cfg.k2,
        lambda: cfg.lambda,
        ..MpConfig::default()
    };
    let guidance = guidance_codes(&coder, &x, cfg.k1)?;
    let hybrid_cfg = HybridLearnConfig {
        mp,
        iters: cfg.dict_iters,
        seed: derive_seed(cfg.seed, 13),
        ..HybridLearnConfig::default()
    };
    let fit = learn_hybrid_dictionaries(&x, &guidance, coder.codes(), cfg.residual_atoms, &hybrid_cfg)?;
    Ok(Encoder::Hscfvc {
        dicts: fit.dictionaries,
        coder,
        cfg: mp,
    })
}

/// SCFVC against GMM-FVC at equal signature length.
pub fn run_benchmark_i(split: &Split, cfg: &PipelineConfig) -> Result<Vec<MethodScore>> {
    Ok(vec![
        score_encoder("scfvc", &scfvc_encoder(&split.train, cfg)?, split, &cfg.linear)?,
        score_encoder("gmmfvc", &gmmfvc_encoder(&split.train, cfg)?, split, &cfg.linear)?,
    ])
}

/// SCFVC, the supervised coder on its own, and HSCFVC.
pub fn run_benchmark_ii(split: &Split, cfg: &PipelineConfig) -> Result<Vec<MethodScore>> {
    let coder = supervised_coder(&split.train, cfg)?;
    let sup_rows = |images: &[FeatureSet]| -> Result<Array2<f64>> {
        let rows = images
            .iter()
            .map(|i| sup_signature(&coder, i))
            .collect::<Result<Vec<_>>>()?;
        let views: Vec<_> = rows.iter().map(|r| r.view()).collect();
        Ok(ndarray::stack(Axis(0), &views).expect("equal lengths"))
    };
    let supervised = score_signatures(
        "supcoder",
        &sup_rows(&split.train)?,
        &labels_of(&split.train)?,
        &sup_rows(&split.test)?,
        &labels_of(&split.test)?,
        &cfg.linear,
    )?;
    Ok(vec![
        score_encoder("scfvc", &scfvc_encoder(&split.train, cfg)?, split, &cfg.linear)?,
        supervised,
        score_encoder("hscfvc", &hscfvc_encoder(&split.train, coder, cfg)?, split, &cfg.linear)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_spread() {
        assert_ne!(derive_seed(0, 1), derive_seed(0, 2));
        assert_ne!(derive_seed(1, 1), derive_seed(0, 1));
        assert_eq!(derive_seed(5, 9), derive_seed(5, 9));
    }

    #[test]
    fn small_resolution_run() {
        let cfg = ResolutionConfig {
            dims: vec![12],
            gmm_sizes: vec![2, 4],
            basis_counts: vec![6],
            true_atoms: 3,
            train_features: 200,
            test_features: 20,
            sparsity: 3,
            gmm_iters: 5,
            dict_iters: 3,
            ..ResolutionConfig::default()
        };
        let rows = run_resolution(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.mean_distance >= 0.0));
        assert!(resolution_csv(&rows).starts_with("model_kind,count,dim,mean_distance\ngmm,2,12,"));
    }

    #[test]
    fn datasets_are_labeled_and_sized() {
        let cfg = ClassDataConfig {
            dim: 10,
            features_per_image: 4,
            train_per_class: 3,
            test_per_class: 2,
            shared_atoms: 4,
            class_atoms: 2,
            ..ClassDataConfig::default()
        };
        let split = class_dataset_i(&cfg).unwrap();
        assert_eq!(split.train.len(), 9);
        assert_eq!(split.test.len(), 6);
        assert_eq!(split.train[4].label, Some(1));
        assert_eq!(split.test[0].features().dim(), (4, 10));
        let again = class_dataset_i(&cfg).unwrap();
        assert_eq!(again.train[7].features(), split.train[7].features());

        let hcfg = HybridDataConfig {
            dim: 10,
            features_per_image: 3,
            train_per_class: 2,
            test_per_class: 1,
            atoms_d: 4,
            atoms_r: 3,
            active_codes: 2,
            mcmc_steps: 5,
            ..HybridDataConfig::default()
        };
        let split = class_dataset_ii(&hcfg).unwrap();
        assert_eq!(split.train.len(), 6);
        assert_eq!(split.test.len(), 3);
    }
}
