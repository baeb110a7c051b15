//! Streaming conformal classification.
//!
//! A small fully connected network is trained with triplet loss and
//! batch-hard mining to embed feature vectors. Inductive conformal
//! prediction over that embedding, with a k-nearest-neighbor nonconformity
//! measure, turns each input into a set of candidate labels at a chosen
//! significance. A consensus loop consumes those sets frame by frame and
//! commits to a label only after it has been the sole candidate for
//! `k_consecutive` frames in a row.
//!
//! - [`embedding`]: embedder, triplet loss, mining, training, persistence.
//! - [`icp`]: k-NN index, calibration, p-values, prediction sets.
//! - [`decision`]: the consensus state machine and sequence replay.
//! - [`harness`]: synthetic data, dataset files, per-frame and sweep metrics.

pub mod data;
pub mod decision;
pub mod embedding;
mod error;
pub mod harness;
pub mod icp;

pub use data::{Label, LabeledExample};
pub use error::{Error, Result};
