//! Reference denoisers the detector is measured against.
//!
//! Three baselines bracket the proposed pipeline from below and above:
//!
//! - [`ls_estimate`] does nothing. With orthonormal pilots the
//!   least-squares channel estimate *is* the observation, so its
//!   per-element error is exactly the noise power.
//! - [`perfect_detection_denoise`] is the proposed detector with a
//!   genie-supplied support mask: it shows how much of the gap to the
//!   noiseless channel is due to detection errors rather than to the
//!   keep-or-zero structure itself.
//! - [`genie_soft_threshold`] shrinks every element toward zero by a
//!   threshold chosen — again by a genie — to minimize the true squared
//!   error. It stands in for soft-threshold denoisers that tune their
//!   threshold from an unbiased risk estimate; giving the baseline the
//!   true risk makes it optimistic, so beating it is not required,
//!   while tracking it closely is meaningful.
//!
//! The genie threshold is searched over the candidate set `{0} ∪
//! {|obs_m|}`. Between consecutive observed magnitudes the kept set is
//! constant and the true risk is a parabola in the threshold, so the
//! candidate set's resolution — one point per observed magnitude — is
//! also the resolution limit of the search; a fine-grid sweep can land
//! at most one candidate gap away.

use num_complex::Complex64;

use crate::denoiser::DenoiseResult;
use crate::{Error, Result};

/// Ground truth handed to the oracle baselines.
#[derive(Debug, Clone, Copy)]
pub struct OracleInfo<'a> {
    /// True activity mask of the beamspace channel.
    pub true_support: &'a [bool],
    /// Noiseless beamspace channel.
    pub truth: &'a [Complex64],
}

/// Least-squares estimate: the observation itself.
pub fn ls_estimate(obs: &[Complex64]) -> Vec<Complex64> {
    obs.to_vec()
}

/// Keeps the observation exactly on the true support and zeroes the
/// rest.
///
/// The reported threshold is NaN: no scalar threshold produced the
/// mask, and NaN poisons any arithmetic that mistakenly consumes it.
///
/// # Errors
///
/// Rejects an oracle whose mask or truth length differs from the
/// observation.
pub fn perfect_detection_denoise(obs: &[Complex64], oracle: &OracleInfo) -> Result<DenoiseResult> {
    if oracle.true_support.len() != obs.len() || oracle.truth.len() != obs.len() {
        return Err(Error::invalid(format!(
            "oracle lengths (mask {}, truth {}) must match the observation length {}",
            oracle.true_support.len(),
            oracle.truth.len(),
            obs.len()
        )));
    }
    let estimate = obs
        .iter()
        .zip(oracle.true_support)
        .map(|(&v, &keep)| if keep { v } else { Complex64::new(0.0, 0.0) })
        .collect();
    Ok(DenoiseResult {
        estimate,
        support: oracle.true_support.to_vec(),
        threshold: f64::NAN,
        estimates_used: None,
        bypassed: false,
    })
}

/// Soft-thresholds the observation with the true-error-optimal
/// threshold, returning the denoised vector and the chosen threshold.
///
/// Each element shrinks toward zero by `tau` in magnitude:
/// `y * max(1 - tau/|y|, 0)`. The squared error against `truth` is
/// piecewise parabolic in `tau` with breakpoints at the observed
/// magnitudes, so the exact minimizer is a breakpoint, zero, or an
/// interior parabola vertex; all are enumerated, making the result the
/// global optimum over every `tau >= 0`. Ties go to the smallest
/// threshold (least shrinkage). Cost is O(M log M) — one sort plus a
/// constant-time risk evaluation per candidate via prefix sums.
///
/// # Errors
///
/// Rejects mismatched lengths and non-finite entries.
pub fn genie_soft_threshold(
    obs: &[Complex64],
    truth: &[Complex64],
) -> Result<(Vec<Complex64>, f64)> {
    if obs.len() != truth.len() {
        return Err(Error::invalid(format!(
            "observation length {} and truth length {} must match",
            obs.len(),
            truth.len()
        )));
    }
    if obs
        .iter()
        .chain(truth)
        .any(|v| !v.re.is_finite() || !v.im.is_finite())
    {
        return Err(Error::invalid("observation and truth must be finite"));
    }
    if obs.is_empty() {
        return Ok((Vec::new(), 0.0));
    }

    // Bins in order of decreasing observed magnitude: raising the
    // threshold past a magnitude moves that bin from "shrunk" to
    // "zeroed" and never the other way.
    let mut order: Vec<usize> = (0..obs.len()).collect();
    order.sort_by(|&a, &b| {
        obs[b]
            .norm_sqr()
            .partial_cmp(&obs[a].norm_sqr())
            .expect("magnitudes are finite")
            .then(a.cmp(&b))
    });

    // Squared error with the first `cnt` bins kept at threshold tau:
    //   sum_kept |d_m - tau*u_m|^2 + sum_zeroed |truth_m|^2
    // where d_m = obs_m - truth_m and u_m = obs_m / |obs_m|. Expanding
    // the kept term gives prefix sums of |d|^2 and Re(d * conj(u)) plus
    // cnt * tau^2; the zeroed term is a suffix sum of |truth|^2.
    let m = obs.len();
    let mut pre_d2 = vec![0.0; m + 1];
    let mut pre_ud = vec![0.0; m + 1];
    let mut suf_t2 = vec![0.0; m + 1];
    for (rank, &bin) in order.iter().enumerate() {
        let d = obs[bin] - truth[bin];
        let mag = obs[bin].norm();
        let u_dot_d = if mag > 0.0 { (d * obs[bin].conj()).re / mag } else { 0.0 };
        pre_d2[rank + 1] = pre_d2[rank] + d.norm_sqr();
        pre_ud[rank + 1] = pre_ud[rank] + u_dot_d;
    }
    for rank in (0..m).rev() {
        suf_t2[rank] = suf_t2[rank + 1] + truth[order[rank]].norm_sqr();
    }
    let error_at = |tau: f64, cnt: usize| -> f64 {
        pre_d2[cnt] - 2.0 * tau * pre_ud[cnt] + cnt as f64 * tau * tau + suf_t2[cnt]
    };

    // tau = 0 keeps every nonzero bin; zero-magnitude bins are zeroed
    // either way.
    let nonzero = order
        .iter()
        .take_while(|&&bin| obs[bin].norm_sqr() > 0.0)
        .count();

    // Runs of equal magnitude, largest first. A run's start index is
    // the number of bins strictly above it, i.e. the kept count when
    // tau equals that magnitude. A sentinel run at zero closes the
    // bottom segment when every bin is nonzero.
    let mut runs: Vec<(f64, usize)> = Vec::new();
    for rank in 0..m {
        let mag = obs[order[rank]].norm();
        if rank == 0 || mag != obs[order[rank - 1]].norm() {
            runs.push((mag, rank));
        }
    }
    if runs.last().is_some_and(|&(mag, _)| mag > 0.0) {
        runs.push((0.0, nonzero));
    }

    // Between two adjacent runs the kept set is fixed and the error is
    // a parabola in tau whose vertex can undercut both endpoints, so
    // the vertex competes alongside the run boundaries and zero.
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(2 * runs.len() + 1);
    candidates.push((0.0, nonzero));
    candidates.extend(runs.iter().copied());
    for pair in runs.windows(2) {
        let (upper, _) = pair[0];
        let (lower, cnt) = pair[1];
        let vertex = pre_ud[cnt] / cnt as f64;
        if vertex > lower && vertex < upper {
            candidates.push((vertex, cnt));
        }
    }

    let mut best_tau = f64::INFINITY;
    let mut best_error = f64::INFINITY;
    for &(tau, cnt) in &candidates {
        let err = error_at(tau, cnt);
        // Strict improvement only: on ties keep the smaller threshold.
        if err < best_error || (err == best_error && tau < best_tau) {
            best_error = err;
            best_tau = tau;
        }
    }

    let denoised = obs
        .iter()
        .map(|&v| {
            let mag = v.norm();
            if mag > best_tau {
                v * (1.0 - best_tau / mag)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok((denoised, best_tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_synthetic, SyntheticParams};
    use crate::numerics::{sample_complex_gaussian, RngStream};
    use proptest::prelude::*;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected}, got {actual} (tol {tol})"
        );
    }

    fn mse(estimate: &[Complex64], truth: &[Complex64]) -> f64 {
        estimate
            .iter()
            .zip(truth)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / truth.len() as f64
    }

    /// Oracle: apply the soft threshold literally and measure the error.
    fn direct_error(obs: &[Complex64], truth: &[Complex64], tau: f64) -> f64 {
        obs.iter()
            .zip(truth)
            .map(|(&y, &t)| {
                let mag = y.norm();
                let shrunk = if mag > tau { y * (1.0 - tau / mag) } else { Complex64::new(0.0, 0.0) };
                (shrunk - t).norm_sqr()
            })
            .sum()
    }

    #[test]
    fn ls_estimate_is_the_identity() {
        let mut stream = RngStream::new(301, 0);
        let obs = sample_complex_gaussian(&mut stream, 2.0, 64).unwrap();
        let est = ls_estimate(&obs);
        assert_eq!(est, obs);
        let norm_in: f64 = obs.iter().map(|v| v.norm_sqr()).sum();
        let norm_out: f64 = est.iter().map(|v| v.norm_sqr()).sum();
        assert_eq!(norm_in, norm_out);
    }

    #[test]
    fn ls_mse_is_the_noise_power() {
        let params = SyntheticParams { m: 256, q: 0.125, snr: 10.0, e0: 1.5 };
        let trials = 500;
        let mut acc = 0.0;
        for t in 0..trials {
            let mut stream = RngStream::new(302, t);
            let real = gen_synthetic(&params, &mut stream).unwrap();
            acc += mse(&ls_estimate(&real.observed), &real.truth);
        }
        let mean = acc / trials as f64;
        assert_close(mean, params.e0, 0.05 * params.e0);
    }

    #[test]
    fn perfect_detection_handles_degenerate_masks() {
        let obs = [Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.0)];
        let truth = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];

        let all = [true, true];
        let res = perfect_detection_denoise(&obs, &OracleInfo { true_support: &all, truth: &truth })
            .unwrap();
        assert_eq!(res.estimate, obs.to_vec());
        assert!(!res.bypassed);
        assert!(res.threshold.is_nan());
        assert!(res.estimates_used.is_none());

        let none = [false, false];
        let res = perfect_detection_denoise(&obs, &OracleInfo { true_support: &none, truth: &truth })
            .unwrap();
        assert!(res.estimate.iter().all(|v| v.norm_sqr() == 0.0));
        assert_eq!(res.support, vec![false, false]);
    }

    #[test]
    fn perfect_detection_rejects_mismatched_lengths() {
        let obs = [Complex64::new(1.0, 0.0); 4];
        let truth = [Complex64::new(0.0, 0.0); 4];
        let short_mask = [true; 3];
        assert!(perfect_detection_denoise(
            &obs,
            &OracleInfo { true_support: &short_mask, truth: &truth }
        )
        .is_err());
        let mask = [true; 4];
        let short_truth = [Complex64::new(0.0, 0.0); 3];
        assert!(perfect_detection_denoise(
            &obs,
            &OracleInfo { true_support: &mask, truth: &short_truth }
        )
        .is_err());
    }

    #[test]
    fn perfect_detection_mse_is_activity_times_noise() {
        // Keeping exactly the active bins leaves their noise and removes
        // everything else: MSE = q * E0 in expectation.
        let params = SyntheticParams { m: 256, q: 0.125, snr: 10.0, e0: 2.0 };
        let trials = 500;
        let mut acc = 0.0;
        for t in 0..trials {
            let mut stream = RngStream::new(303, t);
            let real = gen_synthetic(&params, &mut stream).unwrap();
            let oracle = OracleInfo { true_support: &real.support, truth: &real.truth };
            let res = perfect_detection_denoise(&real.observed, &oracle).unwrap();
            acc += mse(&res.estimate, &real.truth);
        }
        let mean = acc / trials as f64;
        let expected = params.q * params.e0;
        assert_close(mean, expected, 0.05 * expected);
        // Removing noise-only bins can only help: q * E0 < E0.
        assert!(mean < params.e0);
    }

    #[test]
    fn genie_on_noiseless_input_keeps_everything() {
        let mut stream = RngStream::new(304, 0);
        let truth = sample_complex_gaussian(&mut stream, 1.0, 32).unwrap();
        let (denoised, tau) = genie_soft_threshold(&truth, &truth).unwrap();
        assert_eq!(tau, 0.0);
        assert_eq!(denoised, truth);
    }

    #[test]
    fn genie_validates_input() {
        let a = [Complex64::new(1.0, 0.0); 3];
        let b = [Complex64::new(1.0, 0.0); 2];
        assert!(genie_soft_threshold(&a, &b).is_err());
        let nan = [Complex64::new(f64::NAN, 0.0); 3];
        assert!(genie_soft_threshold(&a, &nan).is_err());
        assert_eq!(genie_soft_threshold(&[], &[]).unwrap(), (Vec::new(), 0.0));
    }

    #[test]
    fn genie_never_loses_to_least_squares() {
        // tau = 0 reproduces the LS estimate, so the genie's error can
        // only be lower, realization by realization.
        let params = SyntheticParams { m: 128, q: 0.125, snr: 5.0, e0: 1.0 };
        for t in 0..50 {
            let mut stream = RngStream::new(305, t);
            let real = gen_synthetic(&params, &mut stream).unwrap();
            let (denoised, _) = genie_soft_threshold(&real.observed, &real.truth).unwrap();
            let genie = mse(&denoised, &real.truth);
            let ls = mse(&ls_estimate(&real.observed), &real.truth);
            assert!(genie <= ls + 1e-12, "genie {genie} should not exceed ls {ls}");
        }
    }

    #[test]
    fn genie_never_loses_to_any_breakpoint_threshold() {
        // Evaluate every breakpoint threshold by brute force; the
        // search may beat them with an interior vertex but must never
        // come out worse, and its returned estimate must realize the
        // error its threshold implies.
        let params = SyntheticParams { m: 64, q: 0.25, snr: 8.0, e0: 1.0 };
        for t in 0..25 {
            let mut stream = RngStream::new(306, t);
            let real = gen_synthetic(&params, &mut stream).unwrap();
            let (denoised, tau) = genie_soft_threshold(&real.observed, &real.truth).unwrap();
            let achieved = direct_error(&real.observed, &real.truth, tau);

            let mut candidates: Vec<f64> = real.observed.iter().map(|v| v.norm()).collect();
            candidates.push(0.0);
            for &c in &candidates {
                let err = direct_error(&real.observed, &real.truth, c);
                assert!(
                    achieved <= err + 1e-9 * err.max(1.0),
                    "breakpoint {c} gives {err}, below the genie's {achieved}"
                );
            }
            assert_close(
                denoised
                    .iter()
                    .zip(&real.truth)
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>(),
                achieved,
                1e-9 * achieved.max(1.0),
            );
        }
    }

    #[test]
    fn genie_finds_an_interior_vertex_when_it_beats_every_breakpoint() {
        // Hand-built case where shrinking partway helps: between the
        // magnitude-1 and magnitude-2 breakpoints the error is
        // 5*tau^2 - 5.6*tau + 5.06, minimized at tau = 0.56 with value
        // 3.492, while the best breakpoint (tau = 1) only reaches 4.46.
        let c = Complex64::new;
        let obs =
            vec![c(2.0, 0.0), c(0.0, 2.0), c(-2.0, 0.0), c(1.0, 0.0), c(0.0, -1.0), c(0.0, 0.0)];
        let truth =
            vec![c(2.1, 0.0), c(0.0, 1.9), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.2), c(0.0, 0.0)];
        let (_, tau) = genie_soft_threshold(&obs, &truth).unwrap();
        assert_close(tau, 0.56, 1e-12);
        assert_close(direct_error(&obs, &truth, tau), 3.492, 1e-12);
    }

    #[test]
    fn genie_error_matches_a_fine_grid_search() {
        // Two-sided check against a dense grid: the genie can never be
        // worse than any sampled threshold, and the grid minimum can
        // exceed the exact optimum only by the parabola curvature times
        // the squared step, which the tolerance comfortably covers.
        let params = SyntheticParams { m: 64, q: 0.25, snr: 8.0, e0: 1.0 };
        for t in 0..10 {
            let mut stream = RngStream::new(307, t);
            let real = gen_synthetic(&params, &mut stream).unwrap();
            let (_, tau) = genie_soft_threshold(&real.observed, &real.truth).unwrap();
            let achieved = direct_error(&real.observed, &real.truth, tau);

            let top = real.observed.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let grid_points = 10_000;
            let mut grid_err = f64::INFINITY;
            for g in 0..=grid_points {
                let c = top * g as f64 / grid_points as f64;
                grid_err = grid_err.min(direct_error(&real.observed, &real.truth, c));
            }

            assert!(
                achieved <= grid_err + 1e-9 * grid_err.max(1.0),
                "genie error {achieved} exceeds grid minimum {grid_err}"
            );
            let resolution = real.observed.len() as f64 * (top / grid_points as f64).powi(2);
            assert!(
                grid_err - achieved <= resolution.max(1e-9),
                "grid minimum {grid_err} undercuts the genie's {achieved} beyond resolution"
            );
        }
    }

    proptest! {
        #[test]
        fn genie_expands_to_identity_or_less(seed in 0u64..100) {
            // Shrinkage never increases any element's magnitude and
            // preserves phase on kept bins.
            let mut stream = RngStream::new(308, seed);
            let obs = sample_complex_gaussian(&mut stream, 1.0, 24).unwrap();
            let truth = sample_complex_gaussian(&mut stream, 1.0, 24).unwrap();
            let (denoised, tau) = genie_soft_threshold(&obs, &truth).unwrap();
            prop_assert!(tau >= 0.0);
            for (d, o) in denoised.iter().zip(&obs) {
                prop_assert!(d.norm() <= o.norm() + 1e-12);
                if d.norm_sqr() > 0.0 {
                    let cross = *d * o.conj();
                    prop_assert!(cross.im.abs() <= 1e-9 * cross.re.abs());
                    prop_assert!(cross.re >= 0.0);
                }
            }
        }
    }
}
