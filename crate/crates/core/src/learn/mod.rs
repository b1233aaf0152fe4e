//! Label-distribution learners: maximum-entropy (quasi-Newton or gradient ascent),
//! k-nearest-neighbor averaging and a backprop network, plus target construction and
//! Pearson correlation.

pub mod bpnet;
pub mod knn;
pub mod maxent;
pub mod optim;
pub mod pearson;
pub mod persist;
pub mod targets;
pub mod training;

pub use bpnet::{bp_fit, bp_fit_traced, bp_mean_kl, bp_predict, kl_loss, BpConfig, BpNetModel};
pub use knn::{knn_predict, KnnModel, DEFAULT_K};
pub use maxent::{maxent_fit, maxent_fit_traced, maxent_predict, MaxEntConfig, MaxEntModel};
pub use optim::{minimize, Method, OptimOptions, OptimReport, StopReason};
pub use pearson::pearson_correlation;
pub use persist::LdlModel;
pub use targets::{target_from_label_set, target_from_single_label};
pub use training::TrainingSet;
