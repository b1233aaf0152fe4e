//! Perceptual regressor, conditional generator and discriminator, their losses
//! and training schedules, and evaluation of generated images.

mod data;
mod eval;
mod joint;
mod losses;
mod nets;
mod perceptual;

pub use data::GanDataset;
pub use eval::{brightness_order_rate, evaluate_generated, noise_from_seed, GeneratedReport, ResponseCurve, RESPONSE_SWEEPS};
pub use joint::{
    dcgan_train, format_trace, gan_adam, train, train_joint, write_trace, CheckpointPlan, DcganConfig, GanState,
    JointConfig, LossRecord, TRACE_HEADER,
};
pub use losses::{
    adversarial_loss_graph, bce_loss_graph, cosine_similarities, discriminator_loss, generator_loss,
    perceptual_loss, perceptual_loss_graph, quadratic_loss, quadratic_loss_graph, CosineMode, GeneratorLoss,
    PROB_CLAMP,
};
pub use nets::{image_dim, Capacity, DiscriminatorNet, GeneratorNet, PerceptualNet, DEFAULT_IMAGE_SIZE, DEFAULT_NOISE_DIM};
pub use perceptual::{perceptual_error, pretrain_perceptual, EpochRecord, PerceptualConfig, PretrainLog};
