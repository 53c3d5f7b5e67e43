//! Desk-scale laboratory for transfer learning of neural-network equalizers
//! on a simulated dual-polarization coherent fiber link.
//!
//! The pipeline runs [`txsig`] (QAM + RRC shaping) → [`fiberlink`] (split-step
//! Manakov propagation with EDFAs) → [`rxdsp`] (CDC, matched filter,
//! alignment, normalization) → [`dataset`] (windowing) → [`neuralnet`]
//! (CNN + biLSTM equalizer) → [`metrics`] (BER / Q). [`harness`] strings these
//! together into the reference curves and transfer-learning studies.

pub mod dataset;
pub mod error;
pub mod fiberlink;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod neuralnet;
pub mod rxdsp;
pub mod spectral;
pub mod txsig;

pub use error::{CheckpointError, Error, Result};
