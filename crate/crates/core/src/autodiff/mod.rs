//! Minimal reverse-mode automatic differentiation, dense network layers and Adam.

mod adam;
mod gradcheck;
mod graph;
mod nn;
mod params;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{finite_difference_check, relative_error, GradCheckOptions, GradCheckReport};
pub use graph::{Gradients, Graph, Var, LEAKY_SLOPE};
pub use nn::{Activation, Mlp, OUTPUT_INIT_GAIN};
pub use params::ParamSet;
pub use tensor::{Scalar, Tensor};
