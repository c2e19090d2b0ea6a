//! Deterministic Monte Carlo experiment sweeps.
//!
//! Every experiment follows the same recipe: a full-factorial sweep
//! over the parameter grids that affect it, trial-level parallelism
//! with one dedicated RNG stream per (grid cell, trial), and
//! aggregation in fixed trial order. Results are therefore
//! byte-identical for a given seed regardless of the worker count —
//! with the sole exception of the timing experiment, whose values are
//! wall-clock measurements (its row layout is still deterministic).
//!
//! Noise-power conventions per channel source: synthetic channels fix
//! `E0 = 1` so the SNR sweep scales the signal; geometric channels
//! carry unit average power per element, so `E0 = 1/snr`; file
//! channels use their measured mean per-element power divided by the
//! SNR. The `q` column reports the configured activity rate for
//! synthetic channels and zero for the other sources, where the rate
//! is emergent rather than configured.

use std::time::Instant;

use beamdenoise_core::baselines::{
    genie_soft_threshold, ls_estimate, perfect_detection_denoise, OracleInfo,
};
use beamdenoise_core::blind::blind_estimates;
use beamdenoise_core::channel::{
    gen_geometric, gen_synthetic, load_channels, realize_from_truth, ChannelRealization,
    GeometricParams, SyntheticParams,
};
use beamdenoise_core::denoiser::{denoise, denoise_with_noise_power, DenoiserConfig};
use beamdenoise_core::link::{simulate_ber, ChannelEstimator, LinkConfig};
use beamdenoise_core::numerics::{sample_complex_gaussian, unitary_dft, RngStream};
use beamdenoise_core::theory::roc_curve;
use beamdenoise_core::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{ChannelSource, ExperimentKind, ExperimentSpec};
use crate::csvout::ResultRow;

/// Estimator labels, in the order their rows are emitted.
const MSE_METHODS: [&str; 4] = ["proposed", "ls", "perfect_detection", "genie_st"];
const BER_METHODS: [(ChannelEstimator, &str); 5] = [
    (ChannelEstimator::Proposed, "proposed"),
    (ChannelEstimator::Ls, "ls"),
    (ChannelEstimator::PerfectDetection, "perfect_detection"),
    (ChannelEstimator::GenieSt, "genie_st"),
    (ChannelEstimator::PerfectCsi, "perfect_csi"),
];

/// Vector lengths and per-length repetitions of the timing experiment.
const TIMING_SIZES: [usize; 5] = [1 << 12, 1 << 13, 1 << 14, 1 << 15, 1 << 16];
const TIMING_REPEATS: usize = 25;

/// Converts a decibel value to the linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Runs the configured experiment on a dedicated worker pool and
/// returns its result rows in their stable order.
///
/// `threads` bounds the pool; `None` uses all available cores. The
/// rows are identical either way.
///
/// # Errors
///
/// Rejects an invalid spec, a kind/source combination the harness
/// cannot honor, and any generation or estimation failure underneath.
pub fn run_experiment(spec: &ExperimentSpec, threads: Option<usize>) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid(format!("cannot build the worker pool: {e}")))?;
    pool.install(|| match spec.kind {
        ExperimentKind::Activity => run_activity(spec),
        ExperimentKind::Mse | ExperimentKind::CostSweep | ExperimentKind::NoiseErrorSweep => {
            run_mse_family(spec)
        }
        ExperimentKind::Ber => run_ber(spec),
        ExperimentKind::Roc => run_roc(spec),
        ExperimentKind::Timing => run_timing(spec),
    })
}

/// Per-element squared error of an estimate against the truth.
fn squared_error(estimate: &[Complex64], truth: &[Complex64]) -> f64 {
    let sum: f64 = estimate.iter().zip(truth).map(|(a, b)| (a - b).norm_sqr()).sum();
    sum / truth.len() as f64
}

/// Loads the channel records up front when the source is a file.
/// Records are stored in the antenna domain, so each is moved to
/// beamspace here, once.
fn source_records(spec: &ExperimentSpec) -> Result<Option<Vec<Vec<Complex64>>>> {
    match &spec.channel_source {
        ChannelSource::File(path) => {
            let beamspace =
                load_channels(path)?.iter().map(|r| unitary_dft(r)).collect();
            Ok(Some(beamspace))
        }
        _ => Ok(None),
    }
}

/// Values of the CSV `q` column: the configured grid for synthetic
/// channels, a single zero for sources whose activity rate is
/// emergent.
fn q_labels(spec: &ExperimentSpec) -> Vec<f64> {
    match spec.channel_source {
        ChannelSource::Synthetic => spec.q_grid.clone(),
        _ => vec![0.0],
    }
}

/// Per-element noise variance for one SNR point (see the module doc
/// for the per-source conventions).
fn cell_noise_power(spec: &ExperimentSpec, snr: f64, records: Option<&[Vec<Complex64>]>) -> f64 {
    match &spec.channel_source {
        ChannelSource::Synthetic => 1.0,
        ChannelSource::GeometricLos | ChannelSource::GeometricNlos => 1.0 / snr,
        ChannelSource::File(_) => {
            let records = records.expect("file records preloaded");
            let total: f64 =
                records.iter().flat_map(|r| r.iter()).map(|v| v.norm_sqr()).sum();
            let elements: usize = records.iter().map(Vec::len).sum();
            total / elements as f64 / snr
        }
    }
}

/// Draws the trial's channel realization from the configured source.
fn draw_realization(
    spec: &ExperimentSpec,
    records: Option<&[Vec<Complex64>]>,
    snr: f64,
    q: f64,
    e0: f64,
    trial: usize,
    stream: &mut RngStream,
) -> Result<ChannelRealization> {
    match &spec.channel_source {
        ChannelSource::Synthetic => {
            gen_synthetic(&SyntheticParams { m: spec.m, q, snr, e0 }, stream)
        }
        ChannelSource::GeometricLos => gen_geometric(
            &GeometricParams {
                m: spec.m,
                paths: spec.paths,
                los_boost: Some(db_to_linear(spec.los_boost_db)),
                e0,
                eta: spec.eta,
            },
            stream,
        ),
        ChannelSource::GeometricNlos => gen_geometric(
            &GeometricParams { m: spec.m, paths: spec.paths, los_boost: None, e0, eta: spec.eta },
            stream,
        ),
        ChannelSource::File(_) => {
            let records = records.expect("file records preloaded");
            realize_from_truth(&records[trial % records.len()], e0, spec.eta, stream)
        }
    }
}

/// Sweep coordinates of one row. Coordinates an experiment does not
/// sweep stay at zero.
#[derive(Clone, Copy)]
struct Point {
    snr_db: f64,
    q: f64,
    cost_c: f64,
    noise_err: f64,
}

impl Point {
    fn new(snr_db: f64, q: f64) -> Self {
        Point { snr_db, q, cost_c: 0.0, noise_err: 0.0 }
    }
}

/// Builds a row carrying the experiment-wide constants.
fn row(
    spec: &ExperimentSpec,
    at: Point,
    method: &str,
    metric: impl Into<String>,
    value: f64,
) -> ResultRow {
    ResultRow {
        experiment: spec.kind.name().to_string(),
        snr_db: at.snr_db,
        q: at.q,
        cost_c: at.cost_c,
        noise_err: at.noise_err,
        method: method.to_string(),
        metric: metric.into(),
        value,
        trials: spec.trials as u64,
        seed: spec.seed,
    }
}

/// Linear-interpolation percentile of an ascending-sorted slice.
fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// The denoiser MSE family: the baseline comparison, the false-alarm
/// cost sweep, and the noise-power mismatch sweep. All three share the
/// trial structure — one channel draw per (cell, trial), evaluated
/// under every inner-sweep value so comparisons are paired.
fn run_mse_family(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let records = source_records(spec)?;
    let records = records.as_deref();
    let qs = q_labels(spec);
    let base_cost = spec.cost_grid[0];

    let mut rows = Vec::new();
    for (snr_idx, &snr_db) in spec.snr_grid_db.iter().enumerate() {
        let snr = db_to_linear(snr_db);
        for (q_idx, &q) in qs.iter().enumerate() {
            let e0 = cell_noise_power(spec, snr, records);
            let cell = (snr_idx * qs.len() + q_idx) as u64;
            let per_trial: Result<Vec<Vec<f64>>> = (0..spec.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut stream =
                        RngStream::new(spec.seed, cell * spec.trials as u64 + trial as u64);
                    let real =
                        draw_realization(spec, records, snr, q, e0, trial, &mut stream)?;
                    trial_errors(spec, &real, base_cost, e0)
                })
                .collect();
            let per_trial = per_trial?;

            let slots = per_trial[0].len();
            let mut means = vec![0.0; slots];
            for trial in &per_trial {
                for (mean, v) in means.iter_mut().zip(trial) {
                    *mean += v;
                }
            }
            for mean in &mut means {
                *mean /= spec.trials as f64;
            }

            let base = Point { cost_c: base_cost, ..Point::new(snr_db, q) };
            match spec.kind {
                ExperimentKind::Mse => {
                    for (method, &value) in MSE_METHODS.iter().zip(&means) {
                        rows.push(row(spec, base, method, "mse", value));
                    }
                }
                ExperimentKind::CostSweep => {
                    for (&cost, &value) in spec.cost_grid.iter().zip(&means) {
                        rows.push(row(spec, Point { cost_c: cost, ..base }, "proposed", "mse", value));
                    }
                }
                ExperimentKind::NoiseErrorSweep => {
                    for (&err, &value) in spec.noise_error_grid.iter().zip(&means) {
                        rows.push(row(spec, Point { noise_err: err, ..base }, "proposed", "mse", value));
                    }
                }
                _ => unreachable!("mse-family kinds only"),
            }
        }
    }
    Ok(rows)
}

/// Per-trial squared errors of one realization, one slot per emitted
/// row of the cell.
fn trial_errors(
    spec: &ExperimentSpec,
    real: &ChannelRealization,
    base_cost: f64,
    e0: f64,
) -> Result<Vec<f64>> {
    match spec.kind {
        ExperimentKind::Mse => {
            let config = DenoiserConfig { cost_c: base_cost };
            let proposed = denoise(&real.observed, &config)?;
            let oracle = OracleInfo { true_support: &real.support, truth: &real.truth };
            let detected = perfect_detection_denoise(&real.observed, &oracle)?;
            let (genie, _) = genie_soft_threshold(&real.observed, &real.truth)?;
            Ok(vec![
                squared_error(&proposed.estimate, &real.truth),
                squared_error(&ls_estimate(&real.observed), &real.truth),
                squared_error(&detected.estimate, &real.truth),
                squared_error(&genie, &real.truth),
            ])
        }
        ExperimentKind::CostSweep => spec
            .cost_grid
            .iter()
            .map(|&cost_c| {
                let result = denoise(&real.observed, &DenoiserConfig { cost_c })?;
                Ok(squared_error(&result.estimate, &real.truth))
            })
            .collect(),
        ExperimentKind::NoiseErrorSweep => spec
            .noise_error_grid
            .iter()
            .map(|&err| {
                let config = DenoiserConfig { cost_c: base_cost };
                let supplied = e0 * (1.0 + err);
                let result = denoise_with_noise_power(&real.observed, supplied, &config)?;
                Ok(squared_error(&result.estimate, &real.truth))
            })
            .collect(),
        _ => unreachable!("mse-family kinds only"),
    }
}

/// Accuracy of the blind activity-rate estimator: per-cell median and
/// interquartile range of the estimate, next to the mean true rate.
fn run_activity(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let records = source_records(spec)?;
    let records = records.as_deref();
    let qs = q_labels(spec);

    let mut rows = Vec::new();
    for (snr_idx, &snr_db) in spec.snr_grid_db.iter().enumerate() {
        let snr = db_to_linear(snr_db);
        for (q_idx, &q) in qs.iter().enumerate() {
            let e0 = cell_noise_power(spec, snr, records);
            let cell = (snr_idx * qs.len() + q_idx) as u64;
            let per_trial: Result<Vec<(f64, f64)>> = (0..spec.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut stream =
                        RngStream::new(spec.seed, cell * spec.trials as u64 + trial as u64);
                    let real =
                        draw_realization(spec, records, snr, q, e0, trial, &mut stream)?;
                    let estimated = blind_estimates(&real.observed).activity_rate;
                    let active = real.support.iter().filter(|&&s| s).count();
                    Ok((estimated, active as f64 / real.support.len() as f64))
                })
                .collect();
            let per_trial = per_trial?;

            let mut estimates: Vec<f64> = per_trial.iter().map(|&(e, _)| e).collect();
            let true_mean =
                per_trial.iter().map(|&(_, t)| t).sum::<f64>() / spec.trials as f64;
            estimates.sort_by(f64::total_cmp);
            let median = percentile_sorted(&estimates, 0.5);
            let iqr =
                percentile_sorted(&estimates, 0.75) - percentile_sorted(&estimates, 0.25);

            let at = Point::new(snr_db, q);
            rows.push(row(spec, at, "proposed", "q_hat_median", median));
            rows.push(row(spec, at, "proposed", "q_hat_iqr", iqr));
            rows.push(row(spec, at, "proposed", "q_true_mean", true_mean));
        }
    }
    Ok(rows)
}

/// Uplink bit error rate under each channel estimator. Every estimator
/// replays the same stream per trial, so the frames — channels, bits,
/// and noise — are identical across methods and the comparison is
/// paired.
fn run_ber(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    if spec.channel_source != ChannelSource::Synthetic {
        return Err(Error::invalid(
            "the ber experiment draws its own synthetic channels; set channel = synthetic",
        ));
    }
    let cost = spec.cost_grid[0];

    let mut rows = Vec::new();
    for (snr_idx, &snr_db) in spec.snr_grid_db.iter().enumerate() {
        let snr = db_to_linear(snr_db);
        for (q_idx, &q) in spec.q_grid.iter().enumerate() {
            let cell = (snr_idx * spec.q_grid.len() + q_idx) as u64;
            let per_trial: Result<Vec<[(u64, u64); BER_METHODS.len()]>> = (0..spec.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut counts = [(0u64, 0u64); BER_METHODS.len()];
                    for (slot, &(estimator, _)) in BER_METHODS.iter().enumerate() {
                        let mut stream = RngStream::new(
                            spec.seed,
                            cell * spec.trials as u64 + trial as u64,
                        );
                        let config = LinkConfig {
                            m: spec.m,
                            k: spec.k,
                            snr,
                            q,
                            n_symbols: spec.symbols,
                            estimator,
                            cost_c: cost,
                        };
                        let (rate, bits) = simulate_ber(&config, &mut stream)?;
                        counts[slot] = ((rate * bits as f64).round() as u64, bits);
                    }
                    Ok(counts)
                })
                .collect();
            let per_trial = per_trial?;

            for (slot, &(_, method)) in BER_METHODS.iter().enumerate() {
                let errors: u64 = per_trial.iter().map(|c| c[slot].0).sum();
                let bits: u64 = per_trial.iter().map(|c| c[slot].1).sum();
                let ber = errors as f64 / bits as f64;
                let at = Point { cost_c: cost, ..Point::new(snr_db, q) };
                rows.push(row(spec, at, method, "ber", ber));
            }
        }
    }
    Ok(rows)
}

/// Closed-form and empirical detector operating curves. Each curve
/// point contributes four rows — both coordinates of both curves — in
/// descending false-alarm order.
fn run_roc(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    if spec.channel_source != ChannelSource::Synthetic {
        return Err(Error::invalid(
            "the roc experiment studies the synthetic mixture; set channel = synthetic",
        ));
    }
    let e0 = 1.0;

    let mut rows = Vec::new();
    for (snr_idx, &snr_db) in spec.snr_grid_db.iter().enumerate() {
        let snr = db_to_linear(snr_db);
        for (q_idx, &q) in spec.q_grid.iter().enumerate() {
            let signal_power = snr * e0 / q;
            let theory = roc_curve(e0, signal_power, spec.points)?;

            let cell = (snr_idx * spec.q_grid.len() + q_idx) as u64;
            let mut stream = RngStream::new(spec.seed, cell);
            let noise_sq: Vec<f64> = sample_complex_gaussian(&mut stream, e0, spec.trials)?
                .iter()
                .map(|v| v.norm_sqr())
                .collect();
            let active_sq: Vec<f64> =
                sample_complex_gaussian(&mut stream, e0 + signal_power, spec.trials)?
                    .iter()
                    .map(|v| v.norm_sqr())
                    .collect();

            let exceed_rate = |draws: &[f64], tau: f64| {
                draws.iter().filter(|&&d| d > tau).count() as f64 / draws.len() as f64
            };
            let at = Point::new(snr_db, q);
            for &(p_fa, p_d) in &theory {
                // Invert the closed form to recover the sweep threshold.
                let tau = -e0 * p_fa.ln();
                rows.push(row(spec, at, "theory", "p_fa", p_fa));
                rows.push(row(spec, at, "theory", "p_d", p_d));
                rows.push(row(spec, at, "empirical", "p_fa", exceed_rate(&noise_sq, tau)));
                rows.push(row(spec, at, "empirical", "p_d", exceed_rate(&active_sq, tau)));
            }
        }
    }
    Ok(rows)
}

/// Wall-clock scaling of one blind denoising pass over already
/// beamspace inputs. Emits the median seconds per vector length plus
/// the fitted log-log slope; values are measurements, so this is the
/// one experiment whose numbers are not reproducible byte-for-byte.
fn run_timing(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    // A fixed mid-sweep operating point; the scaling in the vector
    // length is what matters here.
    let snr = 10.0;
    let q = 0.0625;
    let e0 = 1.0;
    let config = DenoiserConfig { cost_c: spec.cost_grid[0] };

    let mut rows = Vec::new();
    let mut log_points = Vec::with_capacity(TIMING_SIZES.len());
    for (idx, &m) in TIMING_SIZES.iter().enumerate() {
        let mut stream = RngStream::new(spec.seed, idx as u64);
        let real = gen_synthetic(&SyntheticParams { m, q, snr, e0 }, &mut stream)?;

        std::hint::black_box(denoise(&real.observed, &config)?); // warm-up
        let mut times = Vec::with_capacity(TIMING_REPEATS);
        for _ in 0..TIMING_REPEATS {
            let start = Instant::now();
            let result = denoise(std::hint::black_box(&real.observed), &config)?;
            times.push(start.elapsed().as_secs_f64());
            std::hint::black_box(result);
        }
        times.sort_by(f64::total_cmp);
        let median = percentile_sorted(&times, 0.5);
        log_points.push(((m as f64).ln(), median.max(f64::MIN_POSITIVE).ln()));

        let at = Point { cost_c: config.cost_c, ..Point::new(10.0 * snr.log10(), q) };
        rows.push(ResultRow {
            trials: TIMING_REPEATS as u64,
            ..row(spec, at, "proposed", format!("denoise_seconds_m{m}"), median)
        });
    }

    let slope = least_squares_slope(&log_points);
    let at = Point { cost_c: config.cost_c, ..Point::new(10.0 * snr.log10(), q) };
    rows.push(ResultRow {
        trials: TIMING_REPEATS as u64,
        ..row(spec, at, "proposed", "loglog_slope", slope)
    });
    Ok(rows)
}

/// Slope of the least-squares line through `(x, y)` points.
fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|&(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let cov: f64 = points.iter().map(|&(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let var: f64 = points.iter().map(|&(x, _)| (x - mean_x) * (x - mean_x)).sum();
    cov / var
}
