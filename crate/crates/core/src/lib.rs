//! Persistent homology convolutions of raster images.
//!
//! The pipeline conditions an image ([`imgprep`]), builds a filtered complex
//! per window ([`complex`]), computes extended or ordinary persistence
//! ([`persistence`]), turns the diagram into a persistence image
//! ([`vectorize`]) and stacks the per-window images into a tensor ([`phc`]).
//! [`dataset`] drives the pipeline over labelled slide directories and writes
//! `.npy` tensors ([`npy`]) plus a JSON manifest.

pub mod complex;
pub mod dataset;
pub mod error;
pub mod imgprep;
pub mod npy;
pub mod persistence;
pub mod phc;
pub mod synthetic;
pub mod vectorize;

pub use error::{Error, Result};
