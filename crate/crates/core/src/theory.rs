//! Closed-form performance predictions for the per-bin test.
//!
//! Squared magnitudes are exponential under both hypotheses — mean `e0`
//! for noise-only bins and `e0 + s` for active bins, where `s` is the
//! per-active-bin signal power — so tail probabilities of the
//! threshold test have elementary forms:
//!
//! ```text
//! p_fa = min(1, exp(-tau / e0))
//! p_d  = min(1, exp(-tau / (e0 + s)))
//! ```
//!
//! Eliminating `tau` gives the receiver operating characteristic
//! `p_d = p_fa^(e0 / (e0 + s))`, independent of how the threshold was
//! chosen. The mean-square error of keep-or-zero denoising is then
//! predicted by charging kept active bins the noise they retain, missed
//! active bins their signal power, and false alarms the noise they let
//! through:
//!
//! ```text
//! mse = q * (p_d * e0 + (1 - p_d) * s) + (1 - q) * p_fa * e0
//! ```
//!
//! This prediction treats the retained noise and the kept/zeroed events
//! as independent of the bin magnitudes. The thresholding events are in
//! fact correlated with the magnitudes, so the prediction is an upper
//! bound-flavored approximation, not an identity; the experiment suite
//! quantifies the gap against Monte Carlo.

use crate::denoiser::detection_threshold;
use crate::{Error, Result};

/// Everything the closed forms predict for one operating point.
#[derive(Debug, Clone, Copy)]
pub struct TheoryPrediction {
    /// Decision threshold implied by the parameters.
    pub threshold: f64,
    /// False-alarm probability of a noise-only bin.
    pub p_fa: f64,
    /// Detection probability of an active bin.
    pub p_d: f64,
    /// Predicted per-element mean-square error.
    pub mse: f64,
}

/// Probability that a noise-only bin exceeds the threshold.
///
/// # Errors
///
/// Rejects a non-positive or non-finite `noise_power`, or a NaN
/// `threshold`.
pub fn prob_false_alarm(threshold: f64, noise_power: f64) -> Result<f64> {
    if !noise_power.is_finite() || noise_power <= 0.0 {
        return Err(Error::invalid(format!(
            "noise power must be finite and positive, got {noise_power}"
        )));
    }
    if threshold.is_nan() {
        return Err(Error::invalid("threshold must not be NaN"));
    }
    Ok((-threshold / noise_power).exp().min(1.0))
}

/// Probability that an active bin (signal power `signal_power` on top
/// of the noise) exceeds the threshold.
///
/// # Errors
///
/// Rejects a non-positive or non-finite `noise_power`, a negative or
/// non-finite `signal_power`, or a NaN `threshold`.
pub fn prob_detection(threshold: f64, noise_power: f64, signal_power: f64) -> Result<f64> {
    if !signal_power.is_finite() || signal_power < 0.0 {
        return Err(Error::invalid(format!(
            "signal power must be finite and nonnegative, got {signal_power}"
        )));
    }
    prob_false_alarm(threshold, noise_power + signal_power)
}

/// Predicted per-element mean-square error of keep-or-zero denoising.
///
/// # Errors
///
/// Rejects arguments outside their ranges: `q`, `p_d`, `p_fa` must lie
/// in `[0, 1]`, `noise_power` and `signal_power` must be finite and
/// nonnegative.
pub fn theoretical_mse(
    q: f64,
    p_d: f64,
    p_fa: f64,
    noise_power: f64,
    signal_power: f64,
) -> Result<f64> {
    for (name, v) in [("q", q), ("p_d", p_d), ("p_fa", p_fa)] {
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    for (name, v) in [("noise_power", noise_power), ("signal_power", signal_power)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::invalid(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    Ok(q * (p_d * noise_power + (1.0 - p_d) * signal_power) + (1.0 - q) * p_fa * noise_power)
}

/// Runs the full closed-form chain for one operating point: threshold,
/// both tail probabilities, and the MSE prediction. The per-active-bin
/// signal power is `snr * noise_power / q`.
///
/// # Errors
///
/// Rejects whatever [`detection_threshold`] rejects.
pub fn predict(noise_power: f64, snr: f64, q: f64, cost_c: f64) -> Result<TheoryPrediction> {
    let threshold = detection_threshold(noise_power, snr, q, cost_c)?;
    let signal_power = snr * noise_power / q;
    let p_fa = prob_false_alarm(threshold, noise_power)?;
    let p_d = prob_detection(threshold, noise_power, signal_power)?;
    let mse = theoretical_mse(q, p_d, p_fa, noise_power, signal_power)?;
    Ok(TheoryPrediction { threshold, p_fa, p_d, mse })
}

/// Receiver operating characteristic as `points` pairs `(p_fa, p_d)`.
///
/// The threshold sweeps a log-spaced grid from the value giving
/// `p_fa = 1` down to the value giving `p_fa = 1e-6`, so the pairs come
/// out in descending order and trace `p_d = p_fa^(e0/(e0+s))`.
///
/// # Errors
///
/// Rejects `points < 2`, a non-positive or non-finite `noise_power`,
/// or a non-positive or non-finite `signal_power` (without signal there
/// is nothing to detect and the curve degenerates to the diagonal).
pub fn roc_curve(noise_power: f64, signal_power: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    if points < 2 {
        return Err(Error::invalid(format!("an ROC needs at least 2 points, got {points}")));
    }
    if !noise_power.is_finite() || noise_power <= 0.0 {
        return Err(Error::invalid(format!(
            "noise power must be finite and positive, got {noise_power}"
        )));
    }
    if !signal_power.is_finite() || signal_power <= 0.0 {
        return Err(Error::invalid(format!(
            "signal power must be finite and positive, got {signal_power}"
        )));
    }
    (0..points)
        .map(|k| {
            let exponent = -6.0 * k as f64 / (points - 1) as f64;
            let p_fa = 10f64.powf(exponent);
            let threshold = -noise_power * p_fa.ln();
            let p_d = prob_detection(threshold, noise_power, signal_power)?;
            Ok((p_fa, p_d))
        })
        .collect()
}

/// Predicted MSE-to-activity-rate slope `mse(q) / q` over a grid of
/// activity rates, at fixed noise power, SNR, and cost.
///
/// In the high-detection regime (strong, sparse signal) the predicted
/// MSE is nearly proportional to the activity rate, so the returned
/// slopes are nearly constant across the grid; at low SNR no such
/// flatness holds. Returns `(q, mse/q)` per grid point.
///
/// # Errors
///
/// Rejects grid points outside `(0, 1)` and whatever [`predict`]
/// rejects.
pub fn mse_slope_curve(
    noise_power: f64,
    snr: f64,
    q_grid: &[f64],
    cost_c: f64,
) -> Result<Vec<(f64, f64)>> {
    q_grid
        .iter()
        .map(|&q| {
            let pred = predict(noise_power, snr, q, cost_c)?;
            Ok((q, pred.mse / q))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected}, got {actual} (tol {tol})"
        );
    }

    #[test]
    fn false_alarm_at_log_two_threshold_is_half() {
        let e0 = 2.0;
        let p = prob_false_alarm(e0 * std::f64::consts::LN_2, e0).unwrap();
        assert_close(p, 0.5, 1e-15);
    }

    #[test]
    fn tail_probabilities_clamp_at_one() {
        assert_eq!(prob_false_alarm(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(prob_false_alarm(-3.0, 1.0).unwrap(), 1.0);
        assert_eq!(prob_detection(-1.0, 1.0, 4.0).unwrap(), 1.0);
    }

    #[test]
    fn detection_reduces_to_false_alarm_without_signal() {
        for tau in [0.1, 1.0, 7.5] {
            assert_eq!(
                prob_detection(tau, 1.3, 0.0).unwrap(),
                prob_false_alarm(tau, 1.3).unwrap()
            );
        }
    }

    #[test]
    fn probability_inputs_are_validated() {
        assert!(prob_false_alarm(1.0, 0.0).is_err());
        assert!(prob_false_alarm(f64::NAN, 1.0).is_err());
        assert!(prob_detection(1.0, 1.0, -0.1).is_err());
        assert!(theoretical_mse(1.5, 0.5, 0.5, 1.0, 1.0).is_err());
        assert!(theoretical_mse(0.5, -0.1, 0.5, 1.0, 1.0).is_err());
        assert!(theoretical_mse(0.5, 0.5, 0.5, -1.0, 1.0).is_err());
        assert!(roc_curve(1.0, 1.0, 1).is_err());
        assert!(roc_curve(0.0, 1.0, 8).is_err());
        assert!(roc_curve(1.0, 0.0, 8).is_err());
        assert!(roc_curve(1.0, -1.0, 8).is_err());
        assert!(mse_slope_curve(1.0, 10.0, &[0.5, 1.0], 5.0).is_err());
    }

    #[test]
    fn mse_of_fixed_point() {
        // q*(p_d*e0 + (1-p_d)*s) + (1-q)*p_fa*e0 with easy numbers:
        // 0.25*(0.9*1 + 0.1*4) + 0.75*0.1*1 = 0.4.
        let mse = theoretical_mse(0.25, 0.9, 0.1, 1.0, 4.0).unwrap();
        assert_close(mse, 0.4, 1e-15);
    }

    #[test]
    fn mse_limits_are_the_textbook_ones() {
        let (q, e0, s) = (0.125, 2.0, 30.0);
        // Perfect detection keeps exactly the active bins: only their
        // noise remains.
        assert_close(theoretical_mse(q, 1.0, 0.0, e0, s).unwrap(), q * e0, 1e-15);
        // Keeping everything reproduces the raw observation error.
        assert_close(theoretical_mse(q, 1.0, 1.0, e0, s).unwrap(), e0, 1e-12);
        // Zeroing everything loses exactly the signal energy.
        assert_close(theoretical_mse(q, 0.0, 0.0, e0, s).unwrap(), q * s, 1e-15);
    }

    #[test]
    fn predict_composes_the_closed_forms() {
        let (e0, snr, q, c) = (1.4, 8.0, 0.125, 5.0);
        let pred = predict(e0, snr, q, c).unwrap();
        let tau = detection_threshold(e0, snr, q, c).unwrap();
        let s = snr * e0 / q;
        assert_eq!(pred.threshold, tau);
        assert_eq!(pred.p_fa, prob_false_alarm(tau, e0).unwrap());
        assert_eq!(pred.p_d, prob_detection(tau, e0, s).unwrap());
        assert_eq!(pred.mse, theoretical_mse(q, pred.p_d, pred.p_fa, e0, s).unwrap());
        assert!(predict(e0, 0.0, q, c).is_err());
    }

    #[test]
    fn roc_spans_and_orders_correctly() {
        let points = 25;
        let curve = roc_curve(1.0, 4.0, points).unwrap();
        assert_eq!(curve.len(), points);
        // Sweep starts at p_fa = 1 (threshold 0) and descends to 1e-6.
        assert_close(curve[0].0, 1.0, 1e-12);
        assert_close(curve[0].1, 1.0, 1e-12);
        assert_close(curve[points - 1].0, 1e-6, 1e-18);
        for window in curve.windows(2) {
            assert!(window[0].0 > window[1].0);
            assert!(window[0].1 >= window[1].1);
        }
        // Detecting is never harder than false-alarming: the curve sits
        // on or above the diagonal.
        for (p_fa, p_d) in curve {
            assert!(p_d >= p_fa);
        }
    }

    #[test]
    fn roc_approaches_the_perfect_corner_for_strong_signal() {
        // points = 25 puts p_fa = 1e-2 exactly on the grid (k = 8).
        let curve = roc_curve(1.0, 400.0, 25).unwrap();
        let (p_fa, p_d) = curve[8];
        assert_close(p_fa, 1e-2, 1e-15);
        // Exact closed form: 0.01^(1/401) = 0.98858..., i.e. the curve
        // hugs the (0, 1) corner; stronger signal hugs it tighter.
        assert_close(p_d, 0.01f64.powf(1.0 / 401.0), 1e-12);
        assert!(p_d >= 0.988);
        let stronger = roc_curve(1.0, 1000.0, 25).unwrap();
        assert!(stronger[8].1 > p_d);
        assert!(stronger[8].1 >= 0.995);
    }

    #[test]
    fn roc_with_matched_powers_is_the_square_root_law() {
        // signal power = noise power makes the exponent exactly 1/2.
        for (p_fa, p_d) in roc_curve(3.0, 3.0, 13).unwrap() {
            assert_close(p_d, p_fa.sqrt(), 1e-12);
        }
    }

    #[test]
    fn mse_slope_is_flat_for_strong_sparse_signal() {
        // With snr = 100 and q well below 1, detection is nearly
        // perfect, so mse(q)/q stays within a tight band across the
        // grid.
        let q_grid = [1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0];
        let slopes = mse_slope_curve(1.0, 100.0, &q_grid, 5.0).unwrap();
        assert_eq!(slopes.len(), 3);
        for ((q, _), expected) in slopes.iter().zip(q_grid) {
            assert_close(*q, expected, 1e-15);
        }
        let max = slopes.iter().map(|&(_, s)| s).fold(f64::MIN, f64::max);
        let min = slopes.iter().map(|&(_, s)| s).fold(f64::MAX, f64::min);
        assert!(max / min <= 1.5, "slope spread {} exceeds 1.5", max / min);

        // At low SNR the proportionality hypothesis fails and no
        // flatness is claimed; the curve must still evaluate cleanly.
        let weak = mse_slope_curve(1.0, 0.1, &q_grid, 5.0).unwrap();
        assert!(weak.iter().all(|&(_, s)| s.is_finite() && s > 0.0));
    }

    #[test]
    fn mse_slope_in_the_perfect_detection_limit_is_the_noise_power() {
        // p_d = 1, p_fa = 0 collapses the prediction to q * e0, so the
        // slope is e0 regardless of q.
        let e0 = 1.7;
        for q in [0.03125, 0.125, 0.5] {
            let slope = theoretical_mse(q, 1.0, 0.0, e0, 40.0).unwrap() / q;
            assert_close(slope, e0, 1e-12);
        }
    }

    proptest! {
        #[test]
        fn roc_identity_holds(tau in -2.0f64..60.0, e0 in 0.5f64..10.0, s in 0.0f64..200.0) {
            // Eliminating tau between the two tails must give
            // p_d = p_fa^(e0/(e0+s)) wherever neither tail clamps.
            let p_fa = prob_false_alarm(tau, e0).unwrap();
            let p_d = prob_detection(tau, e0, s).unwrap();
            if tau > 0.0 {
                let implied = p_fa.powf(e0 / (e0 + s));
                prop_assert!((p_d - implied).abs() <= 1e-12);
            }
            // An active bin is never harder to detect than a noise bin.
            prop_assert!(p_d >= p_fa);
            prop_assert!((0.0..=1.0).contains(&p_fa));
            prop_assert!((0.0..=1.0).contains(&p_d));
        }

        #[test]
        fn roc_identity_holds_along_curve(s in 0.01f64..50.0, points in 2usize..40) {
            let curve = roc_curve(2.0, s, points).unwrap();
            for (p_fa, p_d) in curve {
                prop_assert!((p_d - p_fa.powf(2.0 / (2.0 + s))).abs() <= 1e-12);
            }
        }

        #[test]
        fn tails_shrink_as_the_threshold_grows(
            tau1 in -2.0f64..40.0,
            delta in 0.001f64..40.0,
            e0 in 0.5f64..10.0,
            s in 0.0f64..50.0,
        ) {
            let tau2 = tau1 + delta;
            prop_assert!(
                prob_false_alarm(tau2, e0).unwrap() <= prob_false_alarm(tau1, e0).unwrap()
            );
            prop_assert!(
                prob_detection(tau2, e0, s).unwrap() <= prob_detection(tau1, e0, s).unwrap()
            );
        }

        #[test]
        fn mse_orders_with_the_error_probabilities(
            q in 0.01f64..0.99,
            p_d in 0.0f64..1.0,
            p_fa in 0.0f64..0.99,
            bump in 0.001f64..0.01,
        ) {
            // More false alarms always hurt; more detections help
            // whenever an active bin carries more signal than noise.
            let (e0, s) = (1.0, 4.0);
            let base = theoretical_mse(q, p_d, p_fa, e0, s).unwrap();
            let worse_fa = theoretical_mse(q, p_d, p_fa + bump, e0, s).unwrap();
            prop_assert!(worse_fa >= base);
            if p_d + bump <= 1.0 {
                let better_d = theoretical_mse(q, p_d + bump, p_fa, e0, s).unwrap();
                prop_assert!(better_d <= base);
            }
        }
    }
}
