//! Procedural textures whose semantic attribute vectors are known by construction.

pub mod corpus;
pub mod image;
pub mod render;
pub mod semantics;
pub mod spec;

pub use corpus::{corpus_specs, generate_corpus, image_file_name, synthesize, Sample};
pub use image::{images_to_tensor, TextureImage};
pub use render::{render_texture, BRIGHTNESS_SCALE, DEFAULT_SIZE, SUPPORTED_SIZES};
pub use semantics::{label_index, label_name, SemanticVector, SEMANTIC_DIM};
pub use spec::{ground_truth_semantics, Family, TextureSpec};
