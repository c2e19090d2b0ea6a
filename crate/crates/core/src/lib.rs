//! Beamspace channel denoising for wideband massive-MIMO receivers.
//!
//! A lens or DFT front end concentrates the energy of a multipath channel
//! into a small number of beamspace bins, so the noisy observation of the
//! beamspace channel vector is well modelled as a sparse signal in white
//! complex Gaussian noise. This crate implements a denoiser that decides
//! per bin, via a binary hypothesis test, whether the bin carries signal
//! energy, together with everything needed to run and evaluate it:
//!
//! - [`numerics`]: unitary DFT, median selection, and reproducible
//!   counter-mode random streams.
//! - [`channel`]: synthetic-sparsity and geometric multipath channel
//!   generators, plus file import/export of channel vectors.
//! - [`blind`]: estimators for noise power, SNR, and activity rate that
//!   need nothing beyond the observed vector itself.
//! - [`denoiser`]: the detection threshold and the blind denoising
//!   pipeline built on it.
//! - [`theory`]: closed-form detection/false-alarm probabilities and the
//!   mean-square-error prediction they imply.
//! - [`baselines`]: least-squares, genie-aided detection, and genie-tuned
//!   soft thresholding for comparison.
//! - [`link`]: a 16-QAM multi-user uplink simulation measuring the bit
//!   error rate obtained with each channel estimator.
//!
//! All randomness flows through [`numerics::RngStream`], so every result
//! is reproducible from a master seed and a stream index regardless of
//! thread count or platform.

pub mod baselines;
pub mod blind;
pub mod channel;
pub mod denoiser;
mod error;
pub mod link;
pub mod numerics;
pub mod theory;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
