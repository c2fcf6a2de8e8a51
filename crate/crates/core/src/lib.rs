//! Quantum depthwise-convolution text classification with multi-scale
//! feature fusion, simulated on exact statevectors.
//!
//! The crate is layered bottom-up:
//!
//! * [`statevector`] – dense simulation, `Ry`/CNOT gates, angle and amplitude
//!   encoding, Pauli-Z readout.
//! * [`gradient`] – parameter-shift gradients, adjoint embedding gradients
//!   and a finite-difference oracle.
//! * [`layers`] – BasicEntangler ansatz, quantum embeddings, quantum
//!   depthwise/standard convolutions, quantum fully connected layer.
//! * [`text`] – dataset loading, vocabulary, TF-IDF, padding.
//! * [`model`] – the fused network, its ablations and classical counterparts.
//! * [`train`] – Adam, the training loop, evaluation and run reports.

pub mod checkpoint;
pub mod datasets;
pub mod error;
pub mod gradient;
pub mod instrument;
pub mod layers;
pub mod model;
pub mod statevector;
pub mod text;
pub mod train;

pub use error::{Error, Result};
