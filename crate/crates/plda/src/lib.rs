//! PLDA: dual parameter-loss data augmentation for unsupervised time-series
//! anomaly detection under training-set contamination.
//!
//! The crate is organized bottom-up:
//! - [`nncore`]: hand-rolled MLP, analytic gradients, Hessian-vector products
//! - [`windows`]: sliding-window sample sets and the augmentation actions
//! - [`detector`]: autoencoder anomaly detector over windows
//! - [`behavior`]: parameter behavior |H^-1 grad L| and the dual reward
//! - [`agent`]: DQN agent with replay memory and target network
//! - [`trainer`]: the alternating train/augment pipeline
//! - [`evalgen`]: synthetic contaminated benchmarks and evaluation metrics
//! - [`io`]: CSV/JSON/TOML formats

// index loops over parallel arrays are the clearer form in the numeric kernels
#![allow(clippy::needless_range_loop)]

pub mod agent;
pub mod behavior;
pub mod detector;
pub mod error;
pub mod evalgen;
pub mod io;
pub mod nncore;
pub mod trainer;
pub mod validate;
pub mod windows;

pub use error::{Error, Result};
