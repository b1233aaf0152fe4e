//! Gabor filter-bank texture statistics.

pub mod bank;
pub mod extract;

pub use bank::{make_gabor_bank, GaborBank, GaborFilter};
pub use extract::{extract_all, extract_gabor_features, filter_response, FeatureVector};
