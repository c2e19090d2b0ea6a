//! Blind estimation of the sparse-channel mixture parameters.
//!
//! The observed beamspace vector is modelled per bin as complex Gaussian
//! noise of variance `e0`, plus (with probability `q`) an independent
//! complex Gaussian signal. Everything the detector needs — noise power,
//! SNR, activity rate — can be estimated from one observed vector with
//! O(M) work and no pilots beyond it:
//!
//! - **Noise power.** Squared magnitudes of noise-only bins are
//!   exponential with mean `e0`, whose median is `e0 * ln 2`. When the
//!   signal is sparse, most bins are noise-only, so the median of all
//!   squared magnitudes divided by `ln 2` is a robust noise-power
//!   estimate that a few strong signal bins barely move.
//! - **SNR.** The total received energy averages `M * e0 * (1 + snr)`,
//!   so energy over estimated noise energy, minus one, estimates the
//!   per-element SNR; it is clamped at zero.
//! - **Activity rate.** The fourth moment of a bin magnitude is
//!   `2*e0^2 * (1 + 2*snr + snr^2/q)`, so matching the sample fourth
//!   moment against the estimated noise power and SNR solves for `q`.
//!   The raw ratio is snapped to the feasible grid `{1/M, ..., M/M}`.
//!
//! Estimators degrade gracefully: combinations with no consistent sparse
//! interpretation (zero estimated SNR, or a non-positive moment excess)
//! are flagged degenerate, and the denoiser falls back to the identity.

use num_complex::Complex64;

use crate::numerics::median_squared_magnitude;
use crate::{Error, Result};

/// Everything the blind pipeline inferred from one observed vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlindEstimates {
    /// Estimated per-element noise variance.
    pub noise_power: f64,
    /// Estimated noise variance summed over all bins: exactly
    /// `noise_power` times the vector length. The energy-budget SNR
    /// estimator divides by this total, while the fourth-moment activity
    /// estimator divides by the per-element value; carrying both avoids
    /// mixing the two scales.
    pub total_noise_power: f64,
    /// Estimated per-element average SNR (linear, clamped at zero).
    pub snr: f64,
    /// Sample fourth moment of the bin magnitudes.
    pub fourth_moment: f64,
    /// Estimated activity rate, snapped to the grid `{1/M, ..., 1}`.
    pub activity_rate: f64,
    /// True when the estimates admit no sparse interpretation and the
    /// activity rate was pinned to one.
    pub degenerate: bool,
}

/// Estimates the noise power from the median squared magnitude.
///
/// Returns `(per_element, total)` where `per_element` is
/// `median(|obs|^2) / ln 2` and `total` is `M` times that.
///
/// # Panics
///
/// Panics on an empty input.
pub fn estimate_noise_power(obs: &[Complex64]) -> (f64, f64) {
    let per_element = median_squared_magnitude(obs) / std::f64::consts::LN_2;
    (per_element, per_element * obs.len() as f64)
}

/// Estimates the per-element average SNR from the energy budget:
/// `max(||obs||^2 / total_noise_power - 1, 0)`.
///
/// # Errors
///
/// Rejects a non-positive or non-finite `total_noise_power`.
pub fn estimate_snr(obs: &[Complex64], total_noise_power: f64) -> Result<f64> {
    if !total_noise_power.is_finite() || total_noise_power <= 0.0 {
        return Err(Error::invalid(format!(
            "total noise power must be finite and positive, got {total_noise_power}"
        )));
    }
    let energy: f64 = obs.iter().map(|v| v.norm_sqr()).sum();
    Ok((energy / total_noise_power - 1.0).max(0.0))
}

/// Sample fourth moment of the bin magnitudes: `mean(|obs|^4)`.
///
/// # Panics
///
/// Panics on an empty input.
pub fn sample_fourth_moment(obs: &[Complex64]) -> f64 {
    assert!(!obs.is_empty(), "fourth moment of an empty vector is undefined");
    obs.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() / obs.len() as f64
}

/// Solves the fourth-moment equation for the activity rate.
///
/// Under the mixture model, `mu4 = 2*e0^2*(1 + 2*snr) + 2*e0^2*snr^2/q`,
/// so `q = 2*snr^2 / (mu4/e0^2 - 2 - 4*snr)`. The raw solution is
/// snapped to the feasible grid: `round(q*m)` active bins, clamped to
/// `[1, m]`, with half-way values rounded up.
///
/// Returns `(activity_rate, degenerate)`. The estimate is degenerate —
/// pinned to one — when `snr == 0` or when the moment excess in the
/// denominator is non-positive; either way no sparse solution exists.
///
/// # Errors
///
/// Rejects `m == 0`, a non-finite or negative `mu4` or `snr`, and a
/// non-finite or non-positive `noise_power`.
pub fn estimate_activity_rate(
    mu4: f64,
    noise_power: f64,
    snr: f64,
    m: usize,
) -> Result<(f64, bool)> {
    if m == 0 {
        return Err(Error::invalid("activity rate needs at least one bin"));
    }
    if !mu4.is_finite() || mu4 < 0.0 {
        return Err(Error::invalid(format!("fourth moment must be finite and nonnegative, got {mu4}")));
    }
    if !noise_power.is_finite() || noise_power <= 0.0 {
        return Err(Error::invalid(format!("noise power must be finite and positive, got {noise_power}")));
    }
    if !snr.is_finite() || snr < 0.0 {
        return Err(Error::invalid(format!("snr must be finite and nonnegative, got {snr}")));
    }
    if snr == 0.0 {
        return Ok((1.0, true));
    }
    let excess = mu4 / noise_power.powi(2) - 2.0 - 4.0 * snr;
    if excess <= 0.0 {
        return Ok((1.0, true));
    }
    let raw = 2.0 * snr * snr / excess;
    Ok((quantize_activity(raw, m), false))
}

/// Snaps a raw activity rate onto the grid of feasible bin counts.
fn quantize_activity(raw: f64, m: usize) -> f64 {
    let bins = (raw * m as f64 + 0.5).floor();
    let bins = bins.clamp(1.0, m as f64);
    bins / m as f64
}

/// Runs the whole blind pipeline on one observed vector.
///
/// Noise power comes first, then SNR against the implied total noise
/// energy, then the activity rate from the fourth moment. A zero noise
/// estimate (at least half the bins exactly zero) short-circuits to a
/// degenerate result, since no mixture statistics can be formed.
///
/// # Panics
///
/// Panics on an empty input.
pub fn blind_estimates(obs: &[Complex64]) -> BlindEstimates {
    let (noise_power, total_noise_power) = estimate_noise_power(obs);
    let fourth_moment = sample_fourth_moment(obs);
    if noise_power <= 0.0 {
        return BlindEstimates {
            noise_power,
            total_noise_power,
            snr: 0.0,
            fourth_moment,
            activity_rate: 1.0,
            degenerate: true,
        };
    }
    let snr = estimate_snr(obs, total_noise_power)
        .expect("total noise power is positive here");
    let (activity_rate, degenerate) = estimate_activity_rate(fourth_moment, noise_power, snr, obs.len())
        .expect("inputs validated by construction");
    BlindEstimates { noise_power, total_noise_power, snr, fourth_moment, activity_rate, degenerate }
}
