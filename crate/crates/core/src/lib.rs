//! Worst-case robust multicell coordinated beamforming.
//!
//! * [`model`] — system configuration, channels with ellipsoidal CSI errors,
//!   SINR evaluation and a sampling oracle for the worst case.
//! * [`channel`] — Monte Carlo scenario generation (geometry, path loss,
//!   shadowing, Rayleigh fading).
//! * [`lmi`] — S-procedure LMIs for robust quadratic constraints and the
//!   complex-to-real embedding.
//! * [`problems`] — the four design problems, solved as SDPs, plus
//!   beamformer extraction.
//! * [`experiments`] — the Monte Carlo driver and aggregate tables.

pub mod channel;
mod error;
pub mod experiments;
pub mod linalg;
pub mod lmi;
pub mod model;
pub mod problems;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams derived from one seed.
#[derive(Clone, Copy)]
pub(crate) enum Stream {
    Layout = 1,
    Channels = 2,
    Errors = 3,
    Randomization = 4,
}

pub(crate) fn rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
