//! File formats and feature preprocessing.
//!
//! Feature files come in two flavours:
//!
//! * binary `FVC1`: magic `b"FVC1"`, `u32` LE row count `T`, `u32` LE
//!   dimension `D`, then `T * D` little-endian `f32` values, row-major;
//! * CSV: one feature per line, comma separated decimals, no header.
//!
//! A dataset is a `manifest.csv` (`image_id,label,path`, paths relative to the
//! manifest) next to one feature file per image. Fitted models use the `FVCM`
//! container in [`model`].

mod features;
mod manifest;
pub mod model;
mod pca;

pub use features::{
    read_feature_set, read_features_binary, read_features_csv, write_feature_set, FeatureFormat,
    FeatureSet,
};
pub use manifest::{read_dataset, stack_features, write_dataset, ManifestEntry};
pub use model::{load_model, model_bytes, save_model, ModelFile};
pub use pca::{apply_pca, fit_pca, PcaTransform};
