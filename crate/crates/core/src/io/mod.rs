//! File formats: checkpoints, dataset manifests, PPM images and TSV vector files.

pub mod atomic;
pub mod checkpoint;
pub mod manifest;
pub mod ppm;
pub mod vectors;

pub use atomic::write_atomic;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, ModelKind, OptimizerEntry};
pub use manifest::{DatasetManifest, ManifestRow, MANIFEST_FILE};
pub use ppm::{decode_ppm, encode_ppm, read_ppm, write_ppm};
pub use vectors::{format_vectors, parse_vectors, read_vectors, write_vectors};
