//! CSI amplitude side-channel pipeline: ingestion, preprocessing, similarity
//! analytics, a contrastive autoencoder and the two-branch TS-Net classifier,
//! plus a synthetic data generator with known ground truth.

pub mod analysis;
pub mod autoencoder;
pub mod model;
pub mod neural;
pub mod preprocess;
pub mod synth;
pub mod tsnet;
