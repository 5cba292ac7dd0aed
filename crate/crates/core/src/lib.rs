//! Compositional Fisher vector coding.
//!
//! Sparse-coding Fisher vectors (SCFVC), their hybrid variant guided by a
//! supervised coder (HSCFVC), and a GMM Fisher vector baseline, together with
//! the pieces needed to run them end to end: feature files, PCA, dictionary
//! and mixture training, linear classification and a small command line.
//!
//! ```
//! use compfv::{dictionary::Dictionary, fvc, sparse::MpConfig, synth::rng_from_seed};
//!
//! let mut rng = rng_from_seed(7);
//! let dict = Dictionary::random(16, 8, &mut rng);
//! let x = dict.atom(3).to_owned() * 2.0;
//! let block = fvc::scfvc_encode(&dict, x.view(), &MpConfig { k: 2, ..Default::default() }).unwrap();
//! assert_eq!(block.shape(), (16, 8));
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod classify;
pub mod cli;
pub mod config;
pub mod dataio;
pub mod dict_learn;
pub mod dictionary;
pub mod error;
pub mod fvc;
pub mod gmm;
pub mod sparse;
pub mod supcode;
pub mod synth;

pub use dictionary::{Dictionary, HybridDictionary};
pub use error::{Error, Result};
pub use fvc::{encode_image, Encoder, FisherBlock, ImageSignature};
