//! Numerical toolkit for frequency-bin hybrid atom-photon entanglement:
//! exact gate-sequence simulation of the transcription and networking
//! protocols, an input-output model of the cavity conditional-phase gate,
//! decoherence channels, and two entanglement-witness constructions.

pub mod catalog;
pub mod cavity;
pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod noise;
pub mod protocol;
pub mod witness;

pub use error::{Error, Result};
pub use num_complex::Complex64;
