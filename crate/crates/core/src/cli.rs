//! The `compfv` command line.
//!
//! Every subcommand reads its settings from a `key = value` file given with
//! `--config` (see [`crate::config`]); `--seed` overrides the `seed` key and
//! `--out` names the primary output. Failures print a single line
//!
//! ```text
//! error kind=<format|argument|dimension|config|io|usage> msg="..."
//! ```
//!
//! to stderr and exit with status 2.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::bench::{
    class_dataset_i, class_dataset_ii, resolution_csv, run_benchmark_i, run_benchmark_ii, scores_csv,
    ClassDataConfig, HybridDataConfig, PipelineConfig, ResolutionConfig, Split,
};
use crate::classify::{evaluate, train_linear, LinearConfig, LinearModel};
use crate::config::{key, Kind, KeySpec, RunConfig};
use crate::dataio::{
    apply_pca, fit_pca, load_model, read_dataset, save_model, stack_features, write_dataset, FeatureFormat,
    FeatureSet, PcaTransform,
};
use crate::dict_learn::{learn_dictionary, learn_hybrid_dictionaries, DictLearnConfig, HybridLearnConfig};
use crate::dictionary::{Dictionary, HybridDictionary};
use crate::error::{Error, Result};
use crate::fvc::{encode_images, Encoder, GmmFvcOptions};
use crate::gmm::{fit_gmm, GmmConfig, GmmModel};
use crate::sparse::MpConfig;
use crate::supcode::{train_sup_encoder, SupTrainConfig, SupervisedEncoder};

#[derive(Debug, Parser)]
#[command(name = "compfv", version, about = "Compositional Fisher vector coding toolkit")]
struct Cli {
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for data-parallel loops.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Primary output path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Write a labeled synthetic dataset (train/ and test/ manifests).
    Synth,
    /// Fit a PCA transform on a dataset.
    FitPca,
    /// Apply a fitted PCA transform to a dataset.
    ApplyPca,
    /// Learn a dictionary for SCFVC.
    TrainDict,
    /// Learn the discriminative and residual dictionaries for HSCFVC.
    TrainHybridDict,
    /// Fit a diagonal GMM for the GMM-FVC baseline.
    TrainGmm,
    /// Train the supervised coder that guides HSCFVC.
    TrainSupcoder,
    /// Encode every image of a dataset into a signature.
    Encode,
    /// Train a linear classifier on labeled signatures.
    Classify,
    /// Score a linear classifier on labeled signatures.
    Evaluate,
    /// GMM versus dictionary resolution experiment.
    BenchResolution,
    /// Synthetic end-to-end classification benchmark.
    BenchClassify,
}

/// Runs the command line with explicit output streams; returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            report(stderr, "usage", first);
            return 2;
        }
    };
    match execute(&cli) {
        Ok(text) => {
            let _ = stdout.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            report(stderr, e.kind(), &e.to_string());
            2
        }
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}

fn report(stderr: &mut dyn Write, kind: &str, msg: &str) {
    let escaped = msg.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
    let _ = writeln!(stderr, "error kind={kind} msg=\"{escaped}\"");
}

fn execute(cli: &Cli) -> Result<String> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set("seed", seed.to_string());
    }
    let ctx = Ctx { cfg, out: cli.out.clone() };
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::arg(format!("cannot start {threads} threads: {e}")))?;
    pool.install(|| dispatch(cli.command, &ctx))
}

struct Ctx {
    cfg: RunConfig,
    out: Option<PathBuf>,
}

impl Ctx {
    fn validate(&self, schema: &[KeySpec]) -> Result<()> {
        self.cfg.validate(schema)
    }

    fn out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Config("this command needs --out".into()))
    }

    fn seed(&self) -> Result<u64> {
        self.cfg.u64_or("seed", 0)
    }

    fn dataset(&self, key: &str) -> Result<Vec<FeatureSet>> {
        let path = self.cfg.require_path(key)?;
        if !path.exists() {
            return Err(Error::Config(format!("{key}: no such file {}", path.display())));
        }
        read_dataset(&path)
    }

    fn model<M: crate::dataio::ModelFile>(&self, key: &str) -> Result<M> {
        let path = self.cfg.require_path(key)?;
        if !path.exists() {
            return Err(Error::Config(format!("{key}: no such file {}", path.display())));
        }
        load_model(&path)
    }

    fn format(&self) -> Result<FeatureFormat> {
        match self.cfg.str_or("format", "binary") {
            "binary" => Ok(FeatureFormat::Binary),
            "csv" => Ok(FeatureFormat::Csv),
            other => Err(Error::Config(format!("format must be binary or csv, got {other}"))),
        }
    }

    /// Writes `text` to `--out` when given; otherwise returns it for stdout.
    fn emit(&self, text: String) -> Result<String> {
        match &self.out {
            Some(path) => {
                fs::write(path, &text)?;
                Ok(String::new())
            }
            None => Ok(text),
        }
    }
}

const SEED: KeySpec = key("seed", Kind::U64);

fn dispatch(command: Command, ctx: &Ctx) -> Result<String> {
    match command {
        Command::Synth => cmd_synth(ctx),
        Command::FitPca => cmd_fit_pca(ctx),
        Command::ApplyPca => cmd_apply_pca(ctx),
        Command::TrainDict => cmd_train_dict(ctx),
        Command::TrainHybridDict => cmd_train_hybrid_dict(ctx),
        Command::TrainGmm => cmd_train_gmm(ctx),
        Command::TrainSupcoder => cmd_train_supcoder(ctx),
        Command::Encode => cmd_encode(ctx),
        Command::Classify => cmd_classify(ctx),
        Command::Evaluate => cmd_evaluate(ctx),
        Command::BenchResolution => cmd_bench_resolution(ctx),
        Command::BenchClassify => cmd_bench_classify(ctx),
    }
}

const DATA_KEYS: &[KeySpec] = &[
    key("model", Kind::Str),
    key("classes", Kind::Usize),
    key("dim", Kind::Usize),
    key("features_per_image", Kind::Usize),
    key("train_per_class", Kind::Usize),
    key("test_per_class", Kind::Usize),
    key("shared_atoms", Kind::Usize),
    key("class_atoms", Kind::Usize),
    key("laplace_scale", Kind::F64),
    key("noise_std", Kind::F64),
    key("atoms_d", Kind::Usize),
    key("atoms_r", Kind::Usize),
    key("active_codes", Kind::Usize),
    key("code_value", Kind::F64),
    key("lambda1", Kind::F64),
    key("lambda2", Kind::F64),
    key("lambda3", Kind::F64),
    key("mcmc_steps", Kind::Usize),
];

fn synthetic_split(cfg: &RunConfig, seed: u64) -> Result<Split> {
    match cfg.str_or("model", "i") {
        "i" => {
            let d = ClassDataConfig::default();
            class_dataset_i(&ClassDataConfig {
                classes: cfg.usize_or("classes", d.classes)?,
                dim: cfg.usize_or("dim", d.dim)?,
                features_per_image: cfg.usize_or("features_per_image", d.features_per_image)?,
                train_per_class: cfg.usize_or("train_per_class", d.train_per_class)?,
                test_per_class: cfg.usize_or("test_per_class", d.test_per_class)?,
                shared_atoms: cfg.usize_or("shared_atoms", d.shared_atoms)?,
                class_atoms: cfg.usize_or("class_atoms", d.class_atoms)?,
                laplace_scale: cfg.f64_or("laplace_scale", d.laplace_scale)?,
                noise_std: cfg.f64_or("noise_std", d.noise_std)?,
                seed,
            })
        }
        "ii" => {
            let d = HybridDataConfig::default();
            class_dataset_ii(&HybridDataConfig {
                classes: cfg.usize_or("classes", d.classes)?,
                dim: cfg.usize_or("dim", d.dim)?,
                features_per_image: cfg.usize_or("features_per_image", d.features_per_image)?,
                train_per_class: cfg.usize_or("train_per_class", d.train_per_class)?,
                test_per_class: cfg.usize_or("test_per_class", d.test_per_class)?,
                atoms_d: cfg.usize_or("atoms_d", d.atoms_d)?,
                atoms_r: cfg.usize_or("atoms_r", d.atoms_r)?,
                active_codes: cfg.usize_or("active_codes", d.active_codes)?,
                code_value: cfg.f64_or("code_value", d.code_value)?,
                lambdas: [
                    cfg.f64_or("lambda1", d.lambdas[0])?,
                    cfg.f64_or("lambda2", d.lambdas[1])?,
                    cfg.f64_or("lambda3", d.lambdas[2])?,
                ],
                noise_std: cfg.f64_or("noise_std", d.noise_std)?,
                mcmc_steps: cfg.usize_or("mcmc_steps", d.mcmc_steps)?,
                seed,
            })
        }
        other => Err(Error::Config(format!("model must be i or ii, got {other}"))),
    }
}

fn cmd_synth(ctx: &Ctx) -> Result<String> {
    let mut schema = DATA_KEYS.to_vec();
    schema.extend([SEED, key("format", Kind::Str)]);
    ctx.validate(&schema)?;
    let out = ctx.out()?;
    let split = synthetic_split(&ctx.cfg, ctx.seed()?)?;
    let format = ctx.format()?;
    let train = write_dataset(&out.join("train"), &split.train, format)?;
    let test = write_dataset(&out.join("test"), &split.test, format)?;
    Ok(format!(
        "wrote {} training images to {}\nwrote {} test images to {}\n",
        split.train.len(),
        train.display(),
        split.test.len(),
        test.display()
    ))
}

fn cmd_fit_pca(ctx: &Ctx) -> Result<String> {
    ctx.validate(&[
        key("features", Kind::Path),
        key("target_dim", Kind::Usize),
        key("whiten", Kind::Bool),
        SEED,
    ])?;
    let x = stack_features(&ctx.dataset("features")?)?;
    let target = ctx.cfg.usize_or("target_dim", x.ncols())?;
    let t = fit_pca(&x, target, ctx.cfg.bool_or("whiten", false)?)?;
    save_model(&t, ctx.out()?)?;
    Ok(format!(
        "pca {} -> {} dims, retained variance {:.6}\n",
        t.input_dim(),
        t.output_dim(),
        t.eigenvalues.sum()
    ))
}

fn cmd_apply_pca(ctx: &Ctx) -> Result<String> {
    ctx.validate(&[key("features", Kind::Path), key("pca", Kind::Path), key("format", Kind::Str), SEED])?;
    let t: PcaTransform = ctx.model("pca")?;
    let images = ctx
        .dataset("features")?
        .iter()
        .map(|fs| apply_pca(&t, fs))
        .collect::<Result<Vec<_>>>()?;
    let manifest = write_dataset(ctx.out()?, &images, ctx.format()?)?;
    Ok(format!("wrote {} images to {}\n", images.len(), manifest.display()))
}

fn cmd_train_dict(ctx: &Ctx) -> Result<String> {
    ctx.validate(&[
        key("features", Kind::Path),
        key("atoms", Kind::Usize),
        key("k", Kind::Usize),
        key("iters", Kind::Usize),
        SEED,
    ])?;
    let x = stack_features(&ctx.dataset("features")?)?;
    let d = DictLearnConfig::default();
    let cfg = DictLearnConfig {
        k: ctx.cfg.usize_or("k", d.k)?,
        iters: ctx.cfg.usize_or("iters", d.iters)?,
        seed: ctx.seed()?,
        ..d
    };
    let fit = learn_dictionary(&x, ctx.cfg.usize_or("atoms", 32)?, &cfg)?;
    save_model(&fit.dictionary, ctx.out()?)?;
    let mut text = String::new();
    for (i, s) in fit.trace.iter().enumerate() {
        writeln!(text, "iter {i}: error {:.6} -> {:.6}, dead atoms {}", s.error_before, s.error_after_update, s.dead_atoms).unwrap();
    }
    Ok(text)
}

fn mp_from_cfg(cfg: &RunConfig) -> Result<MpConfig> {
    let d = MpConfig::default();
    let mp = MpConfig {
        k: cfg.usize_or("k", d.k)?,
        k1: cfg.usize_or("k1", d.k1)?,
        k2: cfg.usize_or("k2", d.k2)?,
        lambda: cfg.f64_or("lambda", d.lambda)?,
        sigma2: d.sigma2,
    };
    mp.validate()?;
    Ok(mp)
}

fn cmd_train_hybrid_dict(ctx: &Ctx) -> Result<String> {
    ctx.validate(&[
        key("features", Kind::Path),
        key("supcoder", Kind::Path),
        key("residual_atoms", Kind::Usize),
        key("k1", Kind::Usize),
        key("k2", Kind::Usize),
        key("lambda", Kind::F64),
        key("iters", Kind::Usize),
        SEED,
    ])?;
    let coder: SupervisedEncoder = ctx.model("supcoder")?;
    let x = stack_features(&ctx.dataset("features")?)?;
    let mp = mp_from_cfg(&ctx.cfg)?;
    let guidance = crate::bench::guidance_codes(&coder, &x, mp.k1)?;
    let cfg = HybridLearnConfig {
        mp,
        iters: ctx.cfg.usize_or("iters", HybridLearnConfig::default().iters)?,
        seed: ctx.seed()?,
        ..HybridLearnConfig::default()
    };
    let fit = learn_hybrid_dictionaries(&x, &guidance, coder.codes(), ctx.cfg.usize_or("residual_atoms", 16)?, &cfg)?;
    save_model(&fit.dictionaries, ctx.out()?)?;
    let mut text = String::new();
    for (i, s) in fit.trace.iter().enumerate() {
        writeln!(text, "iter {i}: objective {:.6} -> {:.6}", s.objective_before, s.objective_after_update).unwrap();
    }
    Ok(text)
}

fn cmd_train_gmm(ctx: &Ctx) -> Result<String> {
    ctx.validate(&[
        key("features", Kind::Path),
        key("components", Kind::Usize),
        key("iters", Kind::Usize),
        key("tol", Kind::F64),
        key("var_floor", Kind::F64),
        SEED,
    ])?;
    let x = stack_features(&ctx.dataset("features")?)?;
    let d = GmmConfig::default();
    let cfg = GmmConfig {
        max_iters: ctx.cfg.usize_or("iters", d.max_iters)?,
        tol: ctx.cfg.f64_or("tol", d.tol)?,
        seed: ctx.seed()?,
        var_floor: ctx.cfg.f64_or("var_floor", d.var_floor)?,
    };
    let fit = fit_gmm(&x, ctx.cfg.usize_or("components", 32)?, &cfg)?;
    save_model(&fit.model, ctx.out()?)?;
    Ok(format!(
        "log-likelihood {:.6} after {} evaluations, {} re-seeded components\n",
        fit.log_likelihood.last().copied().unwrap_or(f64::NAN),
        fit.log_likelihood.len(),
        fit.reseeded
    ))
}

fn cmd_train_supcoder(ctx: &Ctx) -> Result<String> {
    ctx.validate(&[
        key("features", Kind::Path),
        key("codes", Kind::Usize),
        key("epochs", Kind::Usize),
        key("lr", Kind::F64),
        key("batch", Kind::Usize),
        key("l2", Kind::F64),
        SEED,
    ])?;
    let images = ctx.dataset("features")?;
    let d = SupTrainConfig::default();
    let cfg = SupTrainConfig {
        lr: ctx.cfg.f64_or("lr", d.lr)?,
        epochs: ctx.cfg.usize_or("epochs", d.epochs)?,
        batch: ctx.cfg.usize_or("batch", d.batch)?,
        seed: ctx.seed()?,
        l2: ctx.cfg.f64_or("l2", d.l2)?,
    };
    let fit = train_sup_encoder(&images, ctx.cfg.usize_or("codes", 16)?, &cfg)?;
    save_model(&fit.encoder, ctx.out()?)?;
    Ok(format!(
        "loss {:.6} -> {:.6}, training accuracy {:.4}\n",
        fit.loss_trace[0],
        fit.loss_trace.last().unwrap(),
        fit.train_accuracy
    ))
}

fn cmd_encode(ctx: &Ctx) -> Result<String> {
    ctx.validate(&[
        key("encoder", Kind::Str),
        key("features", Kind::Path),
        key("dictionary", Kind::Path),
        key("supcoder", Kind::Path),
        key("gmm", Kind::Path),
        key("k", Kind::Usize),
        key("k1", Kind::Usize),
        key("k2", Kind::Usize),
        key("lambda", Kind::F64),
        key("variance_gradients", Kind::Bool),
        key("format", Kind::Str),
        SEED,
    ])?;
    let encoder = match ctx.cfg.str_or("encoder", "scfvc") {
        "scfvc" => Encoder::Scfvc {
            dict: ctx.model::<Dictionary>("dictionary")?,
            cfg: mp_from_cfg(&ctx.cfg)?,
        },
        "hscfvc" => Encoder::Hscfvc {
            dicts: ctx.model::<HybridDictionary>("dictionary")?,
            coder: ctx.model("supcoder")?,
            cfg: mp_from_cfg(&ctx.cfg)?,
        },
        "gmmfvc" => Encoder::GmmFvc {
            model: ctx.model::<GmmModel>("gmm")?,
            opts: GmmFvcOptions {
                include_variances: ctx.cfg.bool_or("variance_gradients", false)?,
            },
        },
        other => return Err(Error::Config(format!("encoder must be scfvc, hscfvc or gmmfvc, got {other}"))),
    };
    let images = ctx.dataset("features")?;
    let signatures = encode_images(&images, &encoder)?;
    let out_images = images
        .iter()
        .zip(signatures.rows())
        .map(|(image, s)| FeatureSet::new(s.to_owned().insert_axis(ndarray::Axis(0)), image.image_id.clone(), image.label))
        .collect::<Result<Vec<_>>>()?;
    let manifest = write_dataset(ctx.out()?, &out_images, ctx.format()?)?;
    Ok(format!(
        "encoder {} ({}), {} signatures of length {} in {}\n",
        encoder.name(),
        encoder.fingerprint(),
        out_images.len(),
        encoder.signature_len(),
        manifest.display()
    ))
}

fn labeled_signatures(ctx: &Ctx, key: &str) -> Result<(ndarray::Array2<f64>, Vec<u32>)> {
    let images = ctx.dataset(key)?;
    let labels = images
        .iter()
        .map(|i| i.label.ok_or_else(|| Error::arg(format!("signature {} has no label", i.image_id))))
        .collect::<Result<Vec<_>>>()?;
    Ok((stack_features(&images)?, labels))
}

fn cmd_classify(ctx: &Ctx) -> Result<String> {
    ctx.validate(&[
        key("signatures", Kind::Path),
        key("l2", Kind::F64),
        key("epochs", Kind::Usize),
        key("lr", Kind::F64),
        SEED,
    ])?;
    let (x, labels) = labeled_signatures(ctx, "signatures")?;
    let d = LinearConfig::default();
    let cfg = LinearConfig {
        l2: ctx.cfg.f64_or("l2", d.l2)?,
        epochs: ctx.cfg.usize_or("epochs", d.epochs)?,
        lr: ctx.cfg.f64_or("lr", d.lr)?,
        seed: ctx.seed()?,
    };
    let fit = train_linear(&x, &labels, &cfg)?;
    save_model(&fit.model, ctx.out()?)?;
    let train = evaluate(&fit.model, &x, &labels)?;
    Ok(format!(
        "objective {:.6} -> {:.6}, training accuracy {:.4}\n",
        fit.objective[0],
        fit.objective.last().unwrap(),
        train.accuracy
    ))
}

fn cmd_evaluate(ctx: &Ctx) -> Result<String> {
    ctx.validate(&[key("model", Kind::Path), key("signatures", Kind::Path), SEED])?;
    let model: LinearModel = ctx.model("model")?;
    let (x, labels) = labeled_signatures(ctx, "signatures")?;
    let metrics = evaluate(&model, &x, &labels)?;
    fs::write(ctx.out()?, metrics.to_csv())?;
    Ok(metrics.to_table())
}

fn cmd_bench_resolution(ctx: &Ctx) -> Result<String> {
    ctx.validate(&[
        key("dims", Kind::UsizeList),
        key("gmm_sizes", Kind::UsizeList),
        key("basis_counts", Kind::UsizeList),
        key("true_atoms", Kind::Usize),
        key("laplace_scale", Kind::F64),
        key("noise_std", Kind::F64),
        key("train_features", Kind::Usize),
        key("test_features", Kind::Usize),
        key("sparsity", Kind::Usize),
        key("gmm_iters", Kind::Usize),
        key("dict_iters", Kind::Usize),
        SEED,
    ])?;
    let d = ResolutionConfig::default();
    let c = &ctx.cfg;
    let cfg = ResolutionConfig {
        dims: c.usize_list_or("dims", &d.dims)?,
        gmm_sizes: c.usize_list_or("gmm_sizes", &d.gmm_sizes)?,
        basis_counts: c.usize_list_or("basis_counts", &d.basis_counts)?,
        true_atoms: c.usize_or("true_atoms", d.true_atoms)?,
        laplace_scale: c.f64_or("laplace_scale", d.laplace_scale)?,
        noise_std: c.f64_or("noise_std", d.noise_std)?,
        train_features: c.usize_or("train_features", d.train_features)?,
        test_features: c.usize_or("test_features", d.test_features)?,
        sparsity: c.usize_or("sparsity", d.sparsity)?,
        gmm_iters: c.usize_or("gmm_iters", d.gmm_iters)?,
        dict_iters: c.usize_or("dict_iters", d.dict_iters)?,
        seed: ctx.seed()?,
    };
    ctx.emit(resolution_csv(&crate::bench::run_resolution(&cfg)?))
}

fn cmd_bench_classify(ctx: &Ctx) -> Result<String> {
    let mut schema = DATA_KEYS.to_vec();
    schema.extend([
        SEED,
        key("atoms", Kind::Usize),
        key("k", Kind::Usize),
        key("codes", Kind::Usize),
        key("residual_atoms", Kind::Usize),
        key("k1", Kind::Usize),
        key("k2", Kind::Usize),
        key("lambda", Kind::F64),
        key("dict_iters", Kind::Usize),
        key("gmm_iters", Kind::Usize),
    ]);
    ctx.validate(&schema)?;
    let seed = ctx.seed()?;
    let c = &ctx.cfg;
    let d = PipelineConfig::default();
    let pipeline = PipelineConfig {
        atoms: c.usize_or("atoms", d.atoms)?,
        k: c.usize_or("k", d.k)?,
        codes: c.usize_or("codes", d.codes)?,
        residual_atoms: c.usize_or("residual_atoms", d.residual_atoms)?,
        k1: c.usize_or("k1", d.k1)?,
        k2: c.usize_or("k2", d.k2)?,
        lambda: c.f64_or("lambda", d.lambda)?,
        dict_iters: c.usize_or("dict_iters", d.dict_iters)?,
        gmm_iters: c.usize_or("gmm_iters", d.gmm_iters)?,
        seed,
        ..d
    };
    let split = synthetic_split(c, seed)?;
    let scores = match c.str_or("model", "i") {
        "i" => run_benchmark_i(&split, &pipeline)?,
        _ => run_benchmark_ii(&split, &pipeline)?,
    };
    ctx.emit(scores_csv(&scores))
}
