//! Pitchfork hologram synthesis and wave-optical simulation of electron
//! vortex beams.

pub mod beamline;
pub mod constants;
pub mod error;
pub mod format;
pub mod hologram;
pub mod netpbm;
pub mod oam;
pub mod waveopt;

pub use error::{Error, Result};
