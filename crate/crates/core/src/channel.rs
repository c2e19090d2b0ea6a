//! Channel generators and channel-vector file formats.
//!
//! Two generators cover the evaluation space:
//!
//! - [`gen_synthetic`] draws the idealized sparse model the detector is
//!   derived from: exactly `q*M` beamspace bins are active, each active
//!   bin is complex Gaussian, and the rest are zero. Ground truth
//!   (support, noise power, per-active-bin signal power) is exact, which
//!   is what calibration experiments need.
//! - [`gen_geometric`] draws a physical multipath channel: a handful of
//!   plane-wave paths with random angles and per-path Gaussian gains,
//!   transformed to beamspace by the unitary DFT. Energy now leaks across
//!   bins, so "active" is defined by [`energy_activity_rate`]: the
//!   smallest set of strongest bins holding a fraction `eta` of the total
//!   energy.
//!
//! Externally supplied channels enter through [`load_channels`] /
//! [`save_channels`], which speak a small binary format (and a CSV
//! variant for interoperability). File vectors are antenna-domain;
//! callers move them to beamspace with [`crate::numerics::unitary_dft`].

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use crate::numerics::{sample_complex_gaussian, unitary_dft, RngStream};
use crate::{Error, Result};

/// Magic bytes opening the binary channel file format.
const FILE_MAGIC: [u8; 4] = *b"BMCH";
/// Version written by, and accepted by, this implementation.
const FILE_VERSION: u32 = 1;
/// Column header of the CSV channel file variant.
const CSV_HEADER: &str = "record,index,re,im";

/// Parameters of the idealized sparse beamspace model.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticParams {
    /// Number of beamspace bins (antenna count).
    pub m: usize,
    /// Activity rate: fraction of bins carrying signal. `q * m` must be
    /// an integer in `[1, m]`.
    pub q: f64,
    /// Per-element average SNR (linear): total signal energy over total
    /// noise energy across the vector.
    pub snr: f64,
    /// Per-element noise variance.
    pub e0: f64,
}

/// Parameters of the geometric multipath model.
#[derive(Debug, Clone, Copy)]
pub struct GeometricParams {
    /// Number of antennas / beamspace bins.
    pub m: usize,
    /// Number of plane-wave paths.
    pub paths: usize,
    /// Power ratio (linear) of the first path relative to each remaining
    /// path; `None` gives equal-power paths. Total path power is always
    /// normalized to one, so each antenna element sees unit average
    /// signal power regardless of this setting.
    pub los_boost: Option<f64>,
    /// Per-element noise variance.
    pub e0: f64,
    /// Energy fraction defining the ground-truth support, in `(0, 1]`.
    pub eta: f64,
}

/// One generated channel with its ground truth.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Noise-free beamspace channel vector.
    pub truth: Vec<Complex64>,
    /// `truth` plus white complex Gaussian noise.
    pub observed: Vec<Complex64>,
    /// Ground-truth activity mask over beamspace bins.
    pub support: Vec<bool>,
    /// Per-element noise variance the observation was drawn with.
    pub noise_power: f64,
    /// Average signal power of an active bin.
    pub signal_power: f64,
}

/// Plane-wave array response: element `m` is `exp(-i*2*pi*phi*m)`.
///
/// `phi` is the normalized spatial frequency; integer multiples of `1/m`
/// land exactly on a DFT bin. Every component has unit magnitude, so the
/// vector carries unit power per element.
pub fn steering_vector(m: usize, phi: f64) -> Vec<Complex64> {
    (0..m)
        .map(|idx| Complex64::from_polar(1.0, -std::f64::consts::TAU * phi * idx as f64))
        .collect()
}

/// Draws one realization of the idealized sparse model.
///
/// Exactly `round(q*m)` bins, chosen uniformly without replacement, are
/// active; each active bin is complex Gaussian with variance
/// `snr * e0 / q`, which makes `snr` the per-element average SNR of the
/// whole vector. White noise of variance `e0` is added everywhere.
///
/// # Errors
///
/// Rejects non-finite parameters, `q` outside `(0, 1]`, `q * m` farther
/// than 1e-6 from an integer, `snr < 0`, or `e0 < 0`.
pub fn gen_synthetic(params: &SyntheticParams, stream: &mut RngStream) -> Result<ChannelRealization> {
    let SyntheticParams { m, q, snr, e0 } = *params;
    if m == 0 {
        return Err(Error::invalid("synthetic channel needs at least one bin"));
    }
    for (name, v) in [("q", q), ("snr", snr), ("e0", e0)] {
        if !v.is_finite() {
            return Err(Error::invalid(format!("synthetic parameter {name} must be finite, got {v}")));
        }
    }
    if !(0.0 < q && q <= 1.0) {
        return Err(Error::invalid(format!("activity rate q must lie in (0, 1], got {q}")));
    }
    let active_f = q * m as f64;
    let active = active_f.round();
    if (active_f - active).abs() > 1e-6 {
        return Err(Error::invalid(format!(
            "q * m must be an integer number of active bins, got {active_f}"
        )));
    }
    let active = active as usize;
    if active < 1 || active > m {
        return Err(Error::invalid(format!(
            "active bin count {active} outside [1, {m}]"
        )));
    }
    if snr < 0.0 {
        return Err(Error::invalid(format!("snr must be nonnegative, got {snr}")));
    }
    if e0 < 0.0 {
        return Err(Error::invalid(format!("noise power e0 must be nonnegative, got {e0}")));
    }

    let signal_power = snr * e0 / q;

    // Draw the support, then fill gains in ascending bin order so the
    // realization depends only on the chosen set, not on the draw order.
    let mut chosen: Vec<usize> = rand::seq::index::sample(stream, m, active).into_vec();
    chosen.sort_unstable();
    let gains = sample_complex_gaussian(stream, signal_power, active)?;

    let mut truth = vec![Complex64::new(0.0, 0.0); m];
    let mut support = vec![false; m];
    for (&bin, gain) in chosen.iter().zip(gains) {
        truth[bin] = gain;
        support[bin] = true;
    }
    let observed = add_noise(&truth, e0, stream)?;

    Ok(ChannelRealization { truth, observed, support, noise_power: e0, signal_power })
}

/// Draws one realization of the geometric multipath model.
///
/// Each path has a spatial frequency uniform on `[-1, 1)` and a complex
/// Gaussian gain; path powers sum to one (with the first path boosted by
/// `los_boost` when set), so each antenna element sees unit average
/// signal power. The beamspace truth is the unitary DFT of the antenna
/// response. The support is the smallest set of strongest bins holding
/// the fraction `eta` of the energy, and the reported signal power is
/// the average bin power over that support.
///
/// # Errors
///
/// Rejects `m == 0`, `paths == 0`, non-finite or negative `e0`,
/// `eta` outside `(0, 1]`, or a non-positive `los_boost`.
pub fn gen_geometric(params: &GeometricParams, stream: &mut RngStream) -> Result<ChannelRealization> {
    let GeometricParams { m, paths, los_boost, e0, eta } = *params;
    if m == 0 {
        return Err(Error::invalid("geometric channel needs at least one antenna"));
    }
    if paths == 0 {
        return Err(Error::invalid("geometric channel needs at least one path"));
    }
    if !e0.is_finite() || e0 < 0.0 {
        return Err(Error::invalid(format!("noise power e0 must be finite and nonnegative, got {e0}")));
    }
    if !(0.0 < eta && eta <= 1.0) || !eta.is_finite() {
        return Err(Error::invalid(format!("energy fraction eta must lie in (0, 1], got {eta}")));
    }
    if let Some(boost) = los_boost {
        if !boost.is_finite() || boost <= 0.0 {
            return Err(Error::invalid(format!("los boost must be positive, got {boost}")));
        }
    }

    // Per-path powers, normalized to sum to one.
    let power_of = |path: usize| -> f64 {
        match los_boost {
            Some(boost) => {
                let other = 1.0 / (boost + (paths as f64 - 1.0));
                if path == 0 {
                    boost * other
                } else {
                    other
                }
            }
            None => 1.0 / paths as f64,
        }
    };

    let mut gains = Vec::with_capacity(paths);
    let mut angles = Vec::with_capacity(paths);
    for path in 0..paths {
        angles.push(stream.random_range(-1.0..1.0));
        gains.push(sample_complex_gaussian(stream, power_of(path), 1)?[0]);
    }

    let truth = geometric_truth(&gains, &angles, m)?;
    realize_from_truth(&truth, e0, eta, stream)
}

/// Wraps a fixed beamspace truth into a noisy realization.
///
/// The support is the smallest set of strongest bins holding the
/// fraction `eta` of the energy, the reported signal power is the
/// average bin power over that support, and white noise of variance
/// `e0` is added. This is how externally supplied channels (for
/// example, records loaded from a file) enter the same pipeline as the
/// generated ones.
///
/// # Errors
///
/// Rejects an empty or zero-energy truth, non-finite entries, `eta`
/// outside `(0, 1]`, and a negative or non-finite `e0`.
pub fn realize_from_truth(
    truth: &[Complex64],
    e0: f64,
    eta: f64,
    stream: &mut RngStream,
) -> Result<ChannelRealization> {
    let (active, _) = energy_activity_rate(truth, eta)?;
    let support = strongest_bins_mask(truth, active);
    let support_energy: f64 = truth
        .iter()
        .zip(&support)
        .filter(|(_, &s)| s)
        .map(|(v, _)| v.norm_sqr())
        .sum();
    let signal_power = support_energy / active as f64;
    let observed = add_noise(truth, e0, stream)?;

    Ok(ChannelRealization { truth: truth.to_vec(), observed, support, noise_power: e0, signal_power })
}

/// Beamspace response of a fixed multipath superposition: each path
/// contributes its complex gain times the steering vector of its
/// spatial frequency, and the antenna-domain sum is mapped to beamspace
/// by the unitary DFT.
///
/// # Errors
///
/// Rejects `m == 0`, an empty or length-mismatched path list, and
/// non-finite gains or angles.
pub fn geometric_truth(gains: &[Complex64], angles: &[f64], m: usize) -> Result<Vec<Complex64>> {
    if m == 0 {
        return Err(Error::invalid("geometric channel needs at least one antenna"));
    }
    if gains.is_empty() || gains.len() != angles.len() {
        return Err(Error::invalid(format!(
            "need one gain per angle and at least one path, got {} gains and {} angles",
            gains.len(),
            angles.len()
        )));
    }
    if gains.iter().any(|g| !g.re.is_finite() || !g.im.is_finite())
        || angles.iter().any(|a| !a.is_finite())
    {
        return Err(Error::invalid("path gains and angles must be finite"));
    }
    let mut antenna = vec![Complex64::new(0.0, 0.0); m];
    for (gain, &phi) in gains.iter().zip(angles) {
        for (acc, a) in antenna.iter_mut().zip(steering_vector(m, phi)) {
            *acc += gain * a;
        }
    }
    Ok(unitary_dft(&antenna))
}

/// Mask of the `count` largest-energy bins, ties broken toward lower
/// bin indices.
fn strongest_bins_mask(truth: &[Complex64], count: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..truth.len()).collect();
    order.sort_by(|&a, &b| {
        truth[b]
            .norm_sqr()
            .partial_cmp(&truth[a].norm_sqr())
            .expect("bin energies must be comparable")
            .then(a.cmp(&b))
    });
    let mut mask = vec![false; truth.len()];
    for &bin in order.iter().take(count) {
        mask[bin] = true;
    }
    mask
}

/// Smallest number of strongest bins whose energy reaches the fraction
/// `eta` of the total, returned together with that number divided by the
/// vector length (the effective activity rate).
///
/// # Errors
///
/// Rejects an empty vector, a zero-energy vector, non-finite entries,
/// and `eta` outside `(0, 1]`.
pub fn energy_activity_rate(truth: &[Complex64], eta: f64) -> Result<(usize, f64)> {
    if truth.is_empty() {
        return Err(Error::invalid("activity rate of an empty vector is undefined"));
    }
    if !(0.0 < eta && eta <= 1.0) || !eta.is_finite() {
        return Err(Error::invalid(format!("energy fraction eta must lie in (0, 1], got {eta}")));
    }
    let mut energies: Vec<f64> = truth.iter().map(|v| v.norm_sqr()).collect();
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("channel vector has non-finite entries"));
    }
    let total: f64 = energies.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("activity rate of a zero-energy vector is undefined"));
    }
    energies.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    for (taken, e) in energies.iter().enumerate() {
        acc += e;
        if acc >= eta * total {
            let count = taken + 1;
            return Ok((count, count as f64 / truth.len() as f64));
        }
    }
    // Rounding may leave the accumulated sum a hair short of the target
    // even after every bin; all bins are then the answer.
    Ok((truth.len(), 1.0))
}

/// Adds white circularly symmetric complex Gaussian noise of per-element
/// variance `noise_power`.
///
/// # Errors
///
/// Rejects a negative or non-finite `noise_power`.
pub fn add_noise(truth: &[Complex64], noise_power: f64, stream: &mut RngStream) -> Result<Vec<Complex64>> {
    let noise = sample_complex_gaussian(stream, noise_power, truth.len())?;
    Ok(truth.iter().zip(noise).map(|(t, n)| t + n).collect())
}

/// Writes channel vectors to `path`.
///
/// Paths ending in `.csv` (case-insensitive) get the CSV variant with
/// header `record,index,re,im`; anything else gets the binary format:
/// magic `BMCH`, then version, vector length, and record count as
/// little-endian u32, then each record's components as little-endian
/// f64 `(re, im)` pairs.
///
/// # Errors
///
/// Rejects an empty record set, records of differing or zero length,
/// non-finite components, and any underlying i/o failure.
pub fn save_channels(path: impl AsRef<Path>, records: &[Vec<Complex64>]) -> Result<()> {
    let path = path.as_ref();
    if records.is_empty() {
        return Err(Error::invalid("refusing to write a channel file with no records"));
    }
    let m = records[0].len();
    if m == 0 {
        return Err(Error::invalid("channel records must be nonempty"));
    }
    if m as u64 > u32::MAX as u64 || records.len() as u64 > u32::MAX as u64 {
        return Err(Error::invalid("channel file dimensions exceed the format's u32 fields"));
    }
    for (idx, rec) in records.iter().enumerate() {
        if rec.len() != m {
            return Err(Error::invalid(format!(
                "record {idx} has length {}, expected {m}",
                rec.len()
            )));
        }
        if rec.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid(format!("record {idx} has non-finite components")));
        }
    }

    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    if is_csv(path) {
        writeln!(w, "{CSV_HEADER}").map_err(io_err)?;
        for (rec_idx, rec) in records.iter().enumerate() {
            for (idx, v) in rec.iter().enumerate() {
                // Default f64 formatting is the shortest representation
                // that round-trips, so reading the file back is lossless.
                writeln!(w, "{rec_idx},{idx},{},{}", v.re, v.im).map_err(io_err)?;
            }
        }
    } else {
        w.write_all(&FILE_MAGIC).map_err(io_err)?;
        w.write_all(&FILE_VERSION.to_le_bytes()).map_err(io_err)?;
        w.write_all(&(m as u32).to_le_bytes()).map_err(io_err)?;
        w.write_all(&(records.len() as u32).to_le_bytes()).map_err(io_err)?;
        for rec in records {
            for v in rec {
                w.write_all(&v.re.to_le_bytes()).map_err(io_err)?;
                w.write_all(&v.im.to_le_bytes()).map_err(io_err)?;
            }
        }
    }
    w.flush().map_err(io_err)
}

/// Reads channel vectors written by [`save_channels`], dispatching on
/// the `.csv` extension exactly as the writer does.
///
/// # Errors
///
/// Besides i/o failures, rejects a bad magic, an unsupported version,
/// zero dimensions, truncated or trailing data (reporting the byte
/// offset), non-finite components (reporting the record), and malformed
/// CSV (reporting the line number).
pub fn load_channels(path: impl AsRef<Path>) -> Result<Vec<Vec<Complex64>>> {
    let path = path.as_ref();
    if is_csv(path) {
        load_csv(path)
    } else {
        load_binary(path)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false)
}

fn load_binary(path: &Path) -> Result<Vec<Vec<Complex64>>> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let bad = |detail: String| Error::FileFormat { path: path.to_path_buf(), detail };

    let mut bytes = Vec::new();
    File::open(path).map_err(io_err)?.read_to_end(&mut bytes).map_err(io_err)?;

    if bytes.len() < 16 {
        return Err(bad(format!("file holds {} bytes, shorter than the 16-byte header", bytes.len())));
    }
    if bytes[..4] != FILE_MAGIC {
        return Err(bad(format!("bad magic {:?}, expected {:?}", &bytes[..4], FILE_MAGIC)));
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != FILE_VERSION {
        return Err(bad(format!("unsupported version {version}, expected {FILE_VERSION}")));
    }
    let m = u32_at(8) as usize;
    let count = u32_at(12) as usize;
    if m == 0 || count == 0 {
        return Err(bad(format!("degenerate dimensions: length {m}, {count} records")));
    }
    let expected = 16 + 16 * m * count;
    if bytes.len() != expected {
        return Err(bad(format!(
            "expected {expected} bytes for {count} records of length {m}, found {} (mismatch at byte offset {})",
            bytes.len(),
            bytes.len().min(expected)
        )));
    }

    let mut records = Vec::with_capacity(count);
    let mut off = 16;
    for rec_idx in 0..count {
        let mut rec = Vec::with_capacity(m);
        for _ in 0..m {
            let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
            if !re.is_finite() || !im.is_finite() {
                return Err(bad(format!("record {rec_idx} has a non-finite component at byte offset {off}")));
            }
            rec.push(Complex64::new(re, im));
            off += 16;
        }
        records.push(rec);
    }
    Ok(records)
}

fn load_csv(path: &Path) -> Result<Vec<Vec<Complex64>>> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let bad = |line: usize, detail: String| Error::FileFormat {
        path: path.to_path_buf(),
        detail: format!("line {line}: {detail}"),
    };

    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, line)) => line.map_err(io_err)?,
        None => return Err(bad(1, "empty file, expected header".into())),
    };
    if header.trim_end() != CSV_HEADER {
        return Err(bad(1, format!("header {header:?}, expected {CSV_HEADER:?}")));
    }

    let mut records: Vec<Vec<Complex64>> = Vec::new();
    for (zero_idx, line) in lines {
        let line_no = zero_idx + 1;
        let line = line.map_err(io_err)?;
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(line_no, format!("expected 4 fields, found {}", fields.len())));
        }
        let rec: usize = fields[0]
            .parse()
            .map_err(|e| bad(line_no, format!("bad record index {:?}: {e}", fields[0])))?;
        let idx: usize = fields[1]
            .parse()
            .map_err(|e| bad(line_no, format!("bad element index {:?}: {e}", fields[1])))?;
        let re: f64 = fields[2]
            .parse()
            .map_err(|e| bad(line_no, format!("bad real part {:?}: {e}", fields[2])))?;
        let im: f64 = fields[3]
            .parse()
            .map_err(|e| bad(line_no, format!("bad imaginary part {:?}: {e}", fields[3])))?;
        if !re.is_finite() || !im.is_finite() {
            return Err(bad(line_no, "non-finite component".into()));
        }

        // Rows must arrive in order: record r element 0..m, then r+1.
        if rec == records.len() && idx == 0 {
            records.push(Vec::new());
        }
        if rec.checked_add(1) != Some(records.len()) {
            return Err(bad(line_no, format!("record index {rec} out of order")));
        }
        let current = records.last_mut().expect("record list is nonempty here");
        if idx != current.len() {
            return Err(bad(line_no, format!("element index {idx}, expected {}", current.len())));
        }
        current.push(Complex64::new(re, im));
    }

    if records.is_empty() {
        return Err(bad(1, "no records after header".into()));
    }
    let m = records[0].len();
    for (idx, rec) in records.iter().enumerate() {
        if rec.len() != m {
            return Err(Error::FileFormat {
                path: path.to_path_buf(),
                detail: format!("record {idx} has length {}, expected {m}", rec.len()),
            });
        }
    }
    Ok(records)
}
