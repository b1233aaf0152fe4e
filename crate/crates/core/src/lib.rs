//! Label-distribution learning for multi-label texture semantics and a
//! perception-driven conditional GAN that renders textures from attribute vectors.
//!
//! The crate is organized bottom-up:
//!
//! - [`ldl`]: label distributions and the six distance/similarity measures.
//! - [`learn`]: maximum-entropy, k-nearest-neighbor and backprop-network learners.
//! - [`features`]: Gabor filter-bank texture features.
//! - [`synth`]: procedural textures with exactly known semantic vectors.
//! - [`autodiff`]: reverse-mode differentiation, dense layers and Adam.
//! - [`gan`]: perceptual regressor, conditional generator/discriminator and the
//!   joint and unconditional training loops.
//! - [`diagnostics`]: finite-difference gradient checks of ops and networks.
//! - [`io`]: checkpoints, dataset manifests, PPM images and vector files.

pub mod autodiff;
pub mod diagnostics;
pub mod error;
pub mod features;
pub mod gan;
pub mod io;
pub mod ldl;
pub mod learn;
pub mod synth;

pub use autodiff::{AdamConfig, Graph, ParamSet, Tensor};
pub use error::{Error, Result};
pub use ldl::{LabelDistribution, MeasureKind, MeasureReport};
pub use synth::{SemanticVector, TextureImage, TextureSpec};

