//! The hypothesis-testing denoiser.
//!
//! Each beamspace bin is tested in isolation: is it noise only, or does
//! it also carry signal? Both hypotheses give exponentially distributed
//! squared magnitudes (means `e0` and `e0 + e0*snr/q`), so the Bayes-
//! optimal decision with a false-alarm cost `C` reduces to comparing
//! `|obs_m|^2` against a single scalar
//!
//! ```text
//! tau = e0 * (q/snr + 1) * ln( (1 + snr/q) * ((1-q)/q) * C )
//! ```
//!
//! Bins above `tau` are kept verbatim, the rest are zeroed. The
//! threshold can legitimately be negative — with a dense, strong signal
//! and a small cost the test prefers keeping everything.
//!
//! Three entry points differ only in where the mixture parameters come
//! from: [`denoise`] estimates all of them from the observation,
//! [`denoise_with_noise_power`] takes the noise power as given (the
//! common case when a hardware noise figure is trusted) and estimates
//! the rest, and [`denoise_with_params`] takes everything as given.
//! Whenever the estimated parameters admit no sparse interpretation the
//! blind paths bypass thresholding and return the observation unchanged
//! — a denoiser should never do harm when its model clearly does not
//! fit.

use num_complex::Complex64;

use crate::blind::{
    blind_estimates, estimate_activity_rate, estimate_noise_power, estimate_snr,
    sample_fourth_moment, BlindEstimates,
};
use crate::{Error, Result};

/// Tuning knobs of the denoiser.
#[derive(Debug, Clone, Copy)]
pub struct DenoiserConfig {
    /// Relative cost of a false alarm versus a missed detection in the
    /// per-bin test. Larger values raise the threshold.
    pub cost_c: f64,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        DenoiserConfig { cost_c: 5.0 }
    }
}

/// Output of one denoising pass.
#[derive(Debug, Clone)]
pub struct DenoiseResult {
    /// Denoised beamspace vector: `obs` on the detected support, zero
    /// elsewhere.
    pub estimate: Vec<Complex64>,
    /// Detected support mask.
    pub support: Vec<bool>,
    /// Decision threshold that was applied; negative infinity when the
    /// pass was bypassed.
    pub threshold: f64,
    /// Parameter estimates the threshold was built from, when any
    /// estimation happened on this path.
    pub estimates_used: Option<BlindEstimates>,
    /// True when thresholding was skipped and the observation returned
    /// unchanged.
    pub bypassed: bool,
}

/// Computes the detection threshold for known mixture parameters.
///
/// # Errors
///
/// Rejects non-finite inputs, `noise_power <= 0`, `snr <= 0`,
/// `q` outside the open interval `(0, 1)`, and `cost_c <= 0`; outside
/// those ranges the per-bin test is degenerate (see [`denoise`] for how
/// the blind pipeline handles that by bypassing).
pub fn detection_threshold(noise_power: f64, snr: f64, q: f64, cost_c: f64) -> Result<f64> {
    for (name, v) in [("noise_power", noise_power), ("snr", snr), ("cost_c", cost_c)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::invalid(format!("{name} must be finite and positive, got {v}")));
        }
    }
    if !q.is_finite() || !(0.0 < q && q < 1.0) {
        return Err(Error::invalid(format!("activity rate q must lie in (0, 1), got {q}")));
    }
    Ok(noise_power * (q / snr + 1.0) * ((1.0 + snr / q) * ((1.0 - q) / q) * cost_c).ln())
}

/// Keeps entries with `|obs_m|^2 > threshold` (strictly) and zeroes the
/// rest, returning the thresholded vector and the keep mask.
///
/// A threshold of negative infinity keeps everything; a bin exactly at
/// the threshold is zeroed.
pub fn hard_threshold(obs: &[Complex64], threshold: f64) -> (Vec<Complex64>, Vec<bool>) {
    let support: Vec<bool> = obs.iter().map(|v| v.norm_sqr() > threshold).collect();
    let estimate = obs
        .iter()
        .zip(&support)
        .map(|(&v, &keep)| if keep { v } else { Complex64::new(0.0, 0.0) })
        .collect();
    (estimate, support)
}

/// Denoises with every mixture parameter estimated from `obs` itself.
///
/// Equivalent to estimating the noise power first and then calling
/// [`denoise_with_noise_power`]; when even the noise power cannot be
/// estimated (at least half the bins exactly zero) the pass is
/// bypassed.
///
/// # Errors
///
/// Rejects an empty observation or non-finite entries.
pub fn denoise(obs: &[Complex64], config: &DenoiserConfig) -> Result<DenoiseResult> {
    validate_observation(obs)?;
    let (noise_power, _) = estimate_noise_power(obs);
    if noise_power <= 0.0 {
        return Ok(bypass(obs, Some(blind_estimates(obs))));
    }
    denoise_with_noise_power(obs, noise_power, config)
}

/// Denoises with a trusted noise power, estimating SNR and activity
/// rate from the observation.
///
/// This is also the entry point for studying noise-power mismatch: pass
/// a perturbed value and the error propagates through the SNR and
/// activity estimates into the threshold exactly as it would in a real
/// receiver with a miscalibrated noise figure.
///
/// # Errors
///
/// Rejects an empty observation, non-finite entries, and a non-positive
/// or non-finite `noise_power`.
pub fn denoise_with_noise_power(
    obs: &[Complex64],
    noise_power: f64,
    config: &DenoiserConfig,
) -> Result<DenoiseResult> {
    validate_observation(obs)?;
    if !noise_power.is_finite() || noise_power <= 0.0 {
        return Err(Error::invalid(format!(
            "noise power must be finite and positive, got {noise_power}"
        )));
    }
    let total_noise_power = noise_power * obs.len() as f64;
    let snr = estimate_snr(obs, total_noise_power)?;
    let fourth_moment = sample_fourth_moment(obs);
    let (activity_rate, degenerate) =
        estimate_activity_rate(fourth_moment, noise_power, snr, obs.len())?;
    let estimates =
        BlindEstimates { noise_power, total_noise_power, snr, fourth_moment, activity_rate, degenerate };

    if degenerate || activity_rate >= 1.0 {
        return Ok(bypass(obs, Some(estimates)));
    }
    let threshold = detection_threshold(noise_power, snr, activity_rate, config.cost_c)
        .expect("parameters validated above");
    let (estimate, support) = hard_threshold(obs, threshold);
    Ok(DenoiseResult { estimate, support, threshold, estimates_used: Some(estimates), bypassed: false })
}

/// Denoises with every mixture parameter supplied by the caller.
///
/// # Errors
///
/// Rejects an empty observation, non-finite entries, and any parameter
/// [`detection_threshold`] rejects.
pub fn denoise_with_params(
    obs: &[Complex64],
    noise_power: f64,
    snr: f64,
    q: f64,
    config: &DenoiserConfig,
) -> Result<DenoiseResult> {
    validate_observation(obs)?;
    let threshold = detection_threshold(noise_power, snr, q, config.cost_c)?;
    let (estimate, support) = hard_threshold(obs, threshold);
    Ok(DenoiseResult { estimate, support, threshold, estimates_used: None, bypassed: false })
}

fn validate_observation(obs: &[Complex64]) -> Result<()> {
    if obs.is_empty() {
        return Err(Error::invalid("observation must be nonempty"));
    }
    if obs.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::invalid("observation has non-finite entries"));
    }
    Ok(())
}

fn bypass(obs: &[Complex64], estimates_used: Option<BlindEstimates>) -> DenoiseResult {
    DenoiseResult {
        estimate: obs.to_vec(),
        support: vec![true; obs.len()],
        threshold: f64::NEG_INFINITY,
        estimates_used,
        bypassed: true,
    }
}
