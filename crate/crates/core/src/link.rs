//! Uplink link-level simulation: how much does beamspace denoising
//! matter once the channel estimate is actually used?
//!
//! `K` single-antenna users transmit 16-QAM symbols to an `M`-antenna
//! base station. The receiver first estimates each user's channel from
//! a noisy beamspace observation (one pilot per user), using one of the
//! configured estimators, then combines the antenna signals with an
//! LMMSE equalizer built from those estimates and hard-demodulates.
//! The figure of merit is the uncoded bit error rate.
//!
//! Power conventions, per element and per user: each user's channel has
//! unit average power per receive element, and symbols have unit
//! average energy. The noise variance is the average received signal
//! power divided by the configured SNR — `1/snr` during the per-user
//! pilot phase and `K/snr` during the data phase, where all `K` users
//! transmit at once.

use num_complex::Complex64;
use rand::Rng;

use crate::baselines::{genie_soft_threshold, ls_estimate, perfect_detection_denoise, OracleInfo};
use crate::blind::{estimate_noise_power, estimate_snr};
use crate::channel::{gen_synthetic, ChannelRealization, SyntheticParams};
use crate::denoiser::{denoise, DenoiserConfig};
use crate::numerics::{inverse_unitary_dft, sample_complex_gaussian, RngStream};
use crate::{Error, Result};

/// How the receiver obtains its channel estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelEstimator {
    /// Blind hypothesis-test denoising of the pilot observation.
    Proposed,
    /// The raw pilot observation (least squares).
    Ls,
    /// Hard thresholding with the true support supplied by a genie.
    PerfectDetection,
    /// Soft thresholding with the true-error-optimal threshold.
    GenieSt,
    /// The true channel itself: no estimation error at all.
    PerfectCsi,
}

/// One uplink simulation setup.
#[derive(Debug, Clone, Copy)]
pub struct LinkConfig {
    /// Base-station antennas.
    pub m: usize,
    /// Single-antenna users.
    pub k: usize,
    /// Per-element average SNR, linear.
    pub snr: f64,
    /// Beamspace activity rate of each user's channel.
    pub q: f64,
    /// 16-QAM symbols per user in one simulated frame.
    pub n_symbols: usize,
    /// Channel estimator under test.
    pub estimator: ChannelEstimator,
    /// False-alarm cost for the proposed detector.
    pub cost_c: f64,
}

/// Antenna-domain channel matrix stored as its `K` user columns, each
/// of length `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub columns: Vec<Vec<Complex64>>,
}

impl ChannelMatrix {
    /// Wraps user columns after checking they are nonempty and of equal
    /// length.
    ///
    /// # Errors
    ///
    /// Rejects an empty column list and ragged column lengths.
    pub fn new(columns: Vec<Vec<Complex64>>) -> Result<Self> {
        let m = columns.first().map_or(0, Vec::len);
        if m == 0 {
            return Err(Error::invalid("channel matrix needs at least one nonempty column"));
        }
        if columns.iter().any(|c| c.len() != m) {
            return Err(Error::invalid("channel matrix columns must all have the same length"));
        }
        Ok(ChannelMatrix { columns })
    }

    /// Antennas per column.
    pub fn antennas(&self) -> usize {
        self.columns[0].len()
    }

    /// Number of user columns.
    pub fn users(&self) -> usize {
        self.columns.len()
    }
}

const QAM_LEVELS: f64 = 10.0;

/// Maps a bit pair to one Gray-coded 4-PAM axis level (unscaled).
fn axis_level(hi: u8, lo: u8) -> f64 {
    match (hi, lo) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        _ => 3.0, // (1, 0)
    }
}

/// Hard decision on one received axis value (unscaled domain), with the
/// inverse Gray map. Boundary values go to the smaller-magnitude level.
fn axis_bits(s: f64) -> (u8, u8) {
    if s < -2.0 {
        (0, 0)
    } else if s <= 0.0 {
        (0, 1)
    } else if s <= 2.0 {
        (1, 1)
    } else {
        (1, 0)
    }
}

/// Maps bits to 16-QAM symbols, four bits per symbol: the first pair
/// selects the in-phase level, the second the quadrature level, each
/// Gray coded (00 → −3, 01 → −1, 11 → +1, 10 → +3) and scaled by
/// `1/√10` for unit average symbol energy.
///
/// # Errors
///
/// Rejects a bit count not divisible by four and entries other than 0
/// or 1.
pub fn qam16_modulate(bits: &[u8]) -> Result<Vec<Complex64>> {
    if !bits.len().is_multiple_of(4) {
        return Err(Error::invalid(format!(
            "16-QAM needs a multiple of 4 bits, got {}",
            bits.len()
        )));
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(Error::invalid("bits must be 0 or 1"));
    }
    let scale = 1.0 / QAM_LEVELS.sqrt();
    Ok(bits
        .chunks_exact(4)
        .map(|b| Complex64::new(axis_level(b[0], b[1]) * scale, axis_level(b[2], b[3]) * scale))
        .collect())
}

/// Hard-demodulates 16-QAM symbols back to bits: per-axis
/// nearest-level decision (ties toward the smaller-magnitude level,
/// so an axis value of exactly 0 decides the −1 level), then the
/// inverse Gray map.
pub fn qam16_demodulate(symbols: &[Complex64]) -> Vec<u8> {
    let scale = QAM_LEVELS.sqrt();
    let mut bits = Vec::with_capacity(symbols.len() * 4);
    for s in symbols {
        let (i_hi, i_lo) = axis_bits(s.re * scale);
        let (q_hi, q_lo) = axis_bits(s.im * scale);
        bits.extend_from_slice(&[i_hi, i_lo, q_hi, q_lo]);
    }
    bits
}

/// LMMSE receive combiner for a channel estimate: the `K×M` operator
/// `(ĤᴴĤ + (1/snr)·I)⁻¹ Ĥᴴ`, returned as `K` rows of length `M`;
/// applying it to a received vector with [`apply_combiner`] yields the
/// symbol estimates.
///
/// The regularized Gram matrix is Hermitian positive definite for any
/// finite positive `snr`, so the solve goes through a Cholesky
/// factorization.
///
/// # Errors
///
/// Rejects a non-positive or non-finite `snr`, and a Gram matrix that
/// loses positive definiteness to rounding (untrusted input guard).
pub fn lmmse_matrix(h_hat: &ChannelMatrix, snr: f64) -> Result<Vec<Vec<Complex64>>> {
    if !snr.is_finite() || snr <= 0.0 {
        return Err(Error::invalid(format!("snr must be finite and positive, got {snr}")));
    }
    let k = h_hat.users();
    let m = h_hat.antennas();

    // A = Ĥᴴ Ĥ + (1/snr) I, Hermitian K×K.
    let mut gram = vec![vec![Complex64::new(0.0, 0.0); k]; k];
    for (i, row) in gram.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = h_hat.columns[i]
                .iter()
                .zip(&h_hat.columns[j])
                .map(|(a, b)| a.conj() * b)
                .sum();
        }
        row[i] += 1.0 / snr;
    }
    let chol = cholesky(&gram)?;

    // Solve A g_m = (Ĥᴴ)_{:,m} for every antenna index m; g_m is the
    // m-th column of the combiner.
    let solved_columns: Vec<Vec<Complex64>> = (0..m)
        .map(|antenna| {
            let rhs: Vec<Complex64> =
                h_hat.columns.iter().map(|col| col[antenna].conj()).collect();
            cholesky_solve(&chol, &rhs)
        })
        .collect();
    Ok((0..k)
        .map(|user| solved_columns.iter().map(|col| col[user]).collect())
        .collect())
}

/// Applies a `K×M` combiner to an `M`-vector of antenna samples.
///
/// # Panics
///
/// Panics if the lengths disagree; combiners only meet vectors of the
/// matching antenna count inside this module's callers.
pub fn apply_combiner(combiner: &[Vec<Complex64>], received: &[Complex64]) -> Vec<Complex64> {
    combiner
        .iter()
        .map(|row| {
            assert_eq!(row.len(), received.len(), "combiner width must match the antenna count");
            row.iter().zip(received).map(|(w, y)| w * y).sum()
        })
        .collect()
}

/// Lower-triangular Cholesky factor of a Hermitian positive definite
/// matrix.
fn cholesky(a: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
    let n = a.len();
    let mut l = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let dot: Complex64 = l[i][..j]
                .iter()
                .zip(&l[j][..j])
                .map(|(left, right)| left * right.conj())
                .sum();
            let acc = a[i][j] - dot;
            if i == j {
                let pivot = acc.re;
                if !pivot.is_finite() || pivot <= 0.0 || acc.im.abs() > 1e-9 * pivot.max(1.0) {
                    return Err(Error::invalid(
                        "regularized Gram matrix is not positive definite",
                    ));
                }
                l[i][j] = Complex64::new(pivot.sqrt(), 0.0);
            } else {
                l[i][j] = acc / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Solves `L Lᴴ x = b` by forward and back substitution.
fn cholesky_solve(l: &[Vec<Complex64>], b: &[Complex64]) -> Vec<Complex64> {
    let n = l.len();
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut acc = b[i];
        for p in 0..i {
            acc -= l[i][p] * y[p];
        }
        y[i] = acc / l[i][i];
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for p in i + 1..n {
            acc -= l[p][i].conj() * x[p];
        }
        x[i] = acc / l[i][i];
    }
    x
}

/// Produces one user's beamspace channel estimate from the pilot
/// observation, per the configured estimator. Pure per user: estimates
/// never mix information across users.
fn estimate_beam_column(
    estimator: ChannelEstimator,
    real: &ChannelRealization,
    cost_c: f64,
) -> Result<Vec<Complex64>> {
    match estimator {
        ChannelEstimator::Proposed => {
            Ok(denoise(&real.observed, &DenoiserConfig { cost_c })?.estimate)
        }
        ChannelEstimator::Ls => Ok(ls_estimate(&real.observed)),
        ChannelEstimator::PerfectDetection => {
            let oracle = OracleInfo { true_support: &real.support, truth: &real.truth };
            Ok(perfect_detection_denoise(&real.observed, &oracle)?.estimate)
        }
        ChannelEstimator::GenieSt => {
            Ok(genie_soft_threshold(&real.observed, &real.truth)?.0)
        }
        ChannelEstimator::PerfectCsi => Ok(real.truth.clone()),
    }
}

/// Simulates one uplink frame and returns the bit error rate together
/// with the number of bits it was measured over.
///
/// One frame: draw `K` sparse beamspace user channels, form the pilot
/// observation of each (noise variance `1/snr` per element), estimate
/// each column independently with the configured estimator, transform
/// the estimates to the antenna domain, build the LMMSE combiner, and
/// push `n_symbols` 16-QAM symbol vectors through the true channel with
/// data-phase noise of variance `K/snr` per element. The combiner's
/// regularizer uses the true SNR only for [`ChannelEstimator::PerfectCsi`];
/// every estimated run uses the blind SNR estimate averaged over users,
/// which is all a real receiver would have.
///
/// Everything is drawn from `stream`, so a frame is reproducible from
/// `(master seed, stream index)` alone.
///
/// # Errors
///
/// Rejects `k == 0`, `m < k`, `n_symbols == 0`, a non-positive `snr` or
/// `cost_c`, and an activity rate `q` that does not quantize onto the
/// `m`-bin grid.
pub fn simulate_ber(cfg: &LinkConfig, stream: &mut RngStream) -> Result<(f64, u64)> {
    if cfg.k == 0 {
        return Err(Error::invalid("link simulation needs at least one user"));
    }
    if cfg.m < cfg.k {
        return Err(Error::invalid(format!(
            "antenna count {} must be at least the user count {}",
            cfg.m, cfg.k
        )));
    }
    if cfg.n_symbols == 0 {
        return Err(Error::invalid("link simulation needs at least one symbol"));
    }
    if !cfg.snr.is_finite() || cfg.snr <= 0.0 {
        return Err(Error::invalid(format!("snr must be finite and positive, got {}", cfg.snr)));
    }

    // Pilot phase: per-user unit received power, so the observation
    // noise is 1/snr; gen_synthetic's gain variance snr*e0/q then equals
    // 1/q, the unit-power-per-element convention.
    let pilot_noise = 1.0 / cfg.snr;
    let params = SyntheticParams { m: cfg.m, q: cfg.q, snr: cfg.snr, e0: pilot_noise };
    let mut beam_estimates = Vec::with_capacity(cfg.k);
    let mut true_columns = Vec::with_capacity(cfg.k);
    let mut snr_estimates = Vec::with_capacity(cfg.k);
    for _ in 0..cfg.k {
        let real = gen_synthetic(&params, stream)?;
        let (_, total_noise) = estimate_noise_power(&real.observed);
        let blind_snr = if total_noise > 0.0 {
            estimate_snr(&real.observed, total_noise)?
        } else {
            0.0
        };
        snr_estimates.push(blind_snr);
        beam_estimates.push(estimate_beam_column(cfg.estimator, &real, cfg.cost_c)?);
        true_columns.push(inverse_unitary_dft(&real.truth));
    }

    let h_true = ChannelMatrix::new(true_columns)?;
    let h_hat = ChannelMatrix::new(
        beam_estimates.into_iter().map(|col| inverse_unitary_dft(&col)).collect(),
    )?;
    let regularizer_snr = match cfg.estimator {
        ChannelEstimator::PerfectCsi => cfg.snr,
        _ => (snr_estimates.iter().sum::<f64>() / cfg.k as f64).max(1e-6),
    };
    let combiner = lmmse_matrix(&h_hat, regularizer_snr)?;

    // Data phase: all users transmit at once, so each element receives
    // average power K and the calibrated noise variance is K/snr.
    let data_noise = cfg.k as f64 / cfg.snr;
    let total_bits = cfg.n_symbols * cfg.k * 4;
    let mut bits = Vec::with_capacity(total_bits);
    for _ in 0..total_bits {
        bits.push(u8::from(stream.random_range(0..2u32) == 1));
    }
    let symbols = qam16_modulate(&bits)?;

    let mut errors = 0u64;
    let mut received = vec![Complex64::new(0.0, 0.0); cfg.m];
    for t in 0..cfg.n_symbols {
        let tx = &symbols[t * cfg.k..(t + 1) * cfg.k];
        let noise = sample_complex_gaussian(stream, data_noise, cfg.m)?;
        for (antenna, slot) in received.iter_mut().enumerate() {
            let mut acc = noise[antenna];
            for (user, s) in tx.iter().enumerate() {
                acc += h_true.columns[user][antenna] * s;
            }
            *slot = acc;
        }
        let equalized = apply_combiner(&combiner, &received);
        let decided = qam16_demodulate(&equalized);
        let sent = &bits[t * cfg.k * 4..(t + 1) * cfg.k * 4];
        errors += decided.iter().zip(sent).filter(|(a, b)| a != b).count() as u64;
    }
    Ok((errors as f64 / total_bits as f64, total_bits as u64))
}
