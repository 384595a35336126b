//! Core of a latent-planning chess engine.
//!
//! Positions are tokenized into fixed-length sequences, embedded by a small
//! transformer encoder trained with a margin-masked supervised contrastive
//! loss, and moves are chosen by a bounded min-max search that ranks
//! children by their alignment with a single advantage direction in
//! embedding space.
//!
//! The crate is `no_std` (with `alloc`); file formats, processes and the
//! command line live in the companion `latent-chess` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod chess;
pub mod contrastive;
pub mod encoder;
pub mod pgn;
pub mod planner;
pub mod projection;
pub mod rating;
pub mod synthetic;
pub mod tokenizer;
pub mod training;

pub mod math;
