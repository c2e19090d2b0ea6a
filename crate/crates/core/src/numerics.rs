//! Numeric primitives shared by every other module.
//!
//! Three things live here because everything downstream depends on them:
//!
//! - **Unitary DFT.** Beamspace and antenna space are related by the
//!   unitary DFT matrix, so both directions must preserve energy exactly
//!   (Parseval) and compose to the identity. Power-of-two lengths take a
//!   radix-2 in-place FFT; any other length falls back to the direct
//!   O(M^2) sum, which is plenty for the vector sizes used here.
//! - **Median of squared magnitudes.** The blind noise-power estimator is
//!   a scaled median, and it sits inside Monte Carlo loops, so it uses
//!   expected-linear-time selection rather than a full sort. Even lengths
//!   average the two central order statistics.
//! - **Seeded random streams.** Every stochastic routine draws from an
//!   [`RngStream`], a counter-mode generator addressed by (master seed,
//!   stream index). Distinct indices give statistically independent
//!   streams from the same seed, which is what makes multi-threaded
//!   experiment runs byte-reproducible: each Monte Carlo trial owns a
//!   stream derived from its coordinates, not from scheduling order.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Applies the unitary discrete Fourier transform.
///
/// Output element `k` is `sum_m x[m] * exp(-2*pi*i*k*m/M) / sqrt(M)`.
/// The `1/sqrt(M)` scaling makes the transform energy-preserving, so a
/// channel vector and its beamspace image always have the same norm.
///
/// # Panics
///
/// Panics on an empty input; a zero-length transform has no meaning.
pub fn unitary_dft(x: &[Complex64]) -> Vec<Complex64> {
    transform(x, false)
}

/// Applies the inverse of [`unitary_dft`].
///
/// Output element `m` is `sum_k x[k] * exp(+2*pi*i*k*m/M) / sqrt(M)`.
///
/// # Panics
///
/// Panics on an empty input.
pub fn inverse_unitary_dft(x: &[Complex64]) -> Vec<Complex64> {
    transform(x, true)
}

fn transform(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    assert!(!x.is_empty(), "DFT input must be nonempty");
    let m = x.len();
    let mut buf = x.to_vec();
    if m.is_power_of_two() {
        fft_radix2(&mut buf, inverse);
    } else {
        buf = dft_direct(x, inverse);
    }
    let scale = 1.0 / (m as f64).sqrt();
    for v in &mut buf {
        *v *= scale;
    }
    buf
}

/// Direct O(M^2) transform used for lengths that are not powers of two.
fn dft_direct(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let m = x.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let step = sign * std::f64::consts::TAU / m as f64;
    (0..m)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (idx, &v) in x.iter().enumerate() {
                // Reduce k*idx modulo M before forming the angle so the
                // argument stays small and the sin/cos stay accurate.
                let phase = step * ((k * idx) % m) as f64;
                acc += v * Complex64::new(phase.cos(), phase.sin());
            }
            acc
        })
        .collect()
}

/// Iterative in-place radix-2 FFT (no unitary scaling applied here).
fn fft_radix2(buf: &mut [Complex64], inverse: bool) {
    let m = buf.len();
    debug_assert!(m.is_power_of_two());
    if m == 1 {
        return;
    }

    // Bit-reversal permutation.
    let bits = m.trailing_zeros();
    for i in 0..m {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }

    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= m {
        let ang = sign * std::f64::consts::TAU / len as f64;
        let wlen = Complex64::new(ang.cos(), ang.sin());
        for start in (0..m).step_by(len) {
            let mut w = Complex64::new(1.0, 0.0);
            for j in 0..len / 2 {
                let a = buf[start + j];
                let b = buf[start + j + len / 2] * w;
                buf[start + j] = a + b;
                buf[start + j + len / 2] = a - b;
                w *= wlen;
            }
        }
        len <<= 1;
    }
}

/// Returns the median of `|x[m]|^2` in expected O(M) time.
///
/// For even lengths this is the average of the two central order
/// statistics. Selection is done with [`slice::select_nth_unstable_by`],
/// so no full sort is performed.
///
/// # Panics
///
/// Panics on an empty input, or if a squared magnitude is NaN.
pub fn median_squared_magnitude(x: &[Complex64]) -> f64 {
    assert!(!x.is_empty(), "median of an empty vector is undefined");
    let mut mags: Vec<f64> = x.iter().map(|v| v.norm_sqr()).collect();
    let n = mags.len();
    let cmp = |a: &f64, b: &f64| a.partial_cmp(b).expect("squared magnitudes must be comparable");
    let (below, upper, _) = mags.select_nth_unstable_by(n / 2, cmp);
    if n % 2 == 1 {
        *upper
    } else {
        // `below` holds the n/2 smallest values in arbitrary order; its
        // maximum is the lower of the two central order statistics.
        let lower = below.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + *upper)
    }
}

/// A reproducible random stream addressed by (master seed, stream index).
///
/// Built on ChaCha in counter mode: the master seed keys the cipher and
/// the stream index selects a disjoint keystream, so streams with
/// different indices never overlap and can be consumed in any order or
/// on any thread without affecting one another.
pub struct RngStream {
    rng: ChaCha8Rng,
    master_seed: u64,
    stream_index: u64,
}

impl RngStream {
    /// Opens the stream `stream_index` of the generator keyed by
    /// `master_seed`. The same pair always yields the same sequence.
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        RngStream { rng, master_seed, stream_index }
    }

    /// Master seed this stream was opened with.
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Index of this stream within its master seed's family.
    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

/// Draws `n` samples of a circularly symmetric complex Gaussian with the
/// given variance: real and imaginary parts are independent zero-mean
/// Gaussians, each with variance `variance / 2`, so `E|x|^2 = variance`.
///
/// # Errors
///
/// Rejects a negative or non-finite variance.
pub fn sample_complex_gaussian(
    stream: &mut RngStream,
    variance: f64,
    n: usize,
) -> Result<Vec<Complex64>> {
    if !variance.is_finite() || variance < 0.0 {
        return Err(Error::invalid(format!(
            "complex Gaussian variance must be finite and nonnegative, got {variance}"
        )));
    }
    let axis_sd = (0.5 * variance).sqrt();
    Ok((0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(stream);
            let im: f64 = StandardNormal.sample(stream);
            Complex64::new(axis_sd * re, axis_sd * im)
        })
        .collect())
}
