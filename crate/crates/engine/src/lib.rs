//! Std companion to `latent-chess-core`: model files, the training driver,
//! the UCI server, the match harness and analysis export.

pub mod dataset;
pub mod export;
pub mod harness;
pub mod model;
pub mod think;
pub mod train;
pub mod uci;
