//! Plain-text `key = value` experiment configuration.
//!
//! Unknown keys are rejected rather than ignored, so a typo cannot
//! silently fall back to a default; missing keys take the documented
//! defaults. `#` starts a comment, blank lines are skipped, and every
//! diagnostic names the offending line.

use std::path::{Path, PathBuf};

use beamdenoise_core::{Error, Result};

/// Which experiment the harness runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Blind activity-rate estimation accuracy over the SNR grid.
    Activity,
    /// Channel-estimate MSE of the denoiser and its baselines.
    Mse,
    /// Uncoded uplink bit error rate after LMMSE combining.
    Ber,
    /// Denoiser MSE as a function of the false-alarm cost.
    CostSweep,
    /// Denoiser MSE under a miscalibrated noise power.
    NoiseErrorSweep,
    /// Closed-form and empirical detector operating curves.
    Roc,
    /// Wall-clock scaling of the denoiser core with the vector length.
    Timing,
}

/// Every kind, in the order used for documentation and diagnostics.
pub const ALL_KINDS: [ExperimentKind; 7] = [
    ExperimentKind::Activity,
    ExperimentKind::Mse,
    ExperimentKind::Ber,
    ExperimentKind::CostSweep,
    ExperimentKind::NoiseErrorSweep,
    ExperimentKind::Roc,
    ExperimentKind::Timing,
];

impl ExperimentKind {
    /// Stable name used in configs and in the CSV `experiment` column.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Activity => "activity",
            ExperimentKind::Mse => "mse",
            ExperimentKind::Ber => "ber",
            ExperimentKind::CostSweep => "cost_sweep",
            ExperimentKind::NoiseErrorSweep => "noise_error_sweep",
            ExperimentKind::Roc => "roc",
            ExperimentKind::Timing => "timing",
        }
    }

    fn parse(text: &str) -> Option<Self> {
        ALL_KINDS.iter().copied().find(|k| k.name() == text)
    }
}

/// Where channel realizations come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChannelSource {
    /// Exactly sparse Bernoulli-Gaussian beamspace vectors.
    Synthetic,
    /// Geometric multipath with a boosted first path.
    GeometricLos,
    /// Geometric multipath with equal-power paths.
    GeometricNlos,
    /// Beamspace vectors loaded from a channel file.
    File(PathBuf),
}

impl ChannelSource {
    /// Stable name used in configs.
    pub fn name(&self) -> String {
        match self {
            ChannelSource::Synthetic => "synthetic".to_string(),
            ChannelSource::GeometricLos => "geometric_los".to_string(),
            ChannelSource::GeometricNlos => "geometric_nlos".to_string(),
            ChannelSource::File(path) => format!("file:{}", path.display()),
        }
    }

    fn parse(text: &str) -> Option<Self> {
        match text {
            "synthetic" => Some(ChannelSource::Synthetic),
            "geometric_los" => Some(ChannelSource::GeometricLos),
            "geometric_nlos" => Some(ChannelSource::GeometricNlos),
            _ => text
                .strip_prefix("file:")
                .filter(|p| !p.is_empty())
                .map(|p| ChannelSource::File(PathBuf::from(p))),
        }
    }
}

/// One experiment description: everything the harness needs besides
/// the output path and the worker count.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Per-element average SNR grid, in dB.
    pub snr_grid_db: Vec<f64>,
    /// Activity-rate grid; drives synthetic-channel experiments only.
    pub q_grid: Vec<f64>,
    /// False-alarm cost grid; entries beyond the first matter only to
    /// the cost sweep.
    pub cost_grid: Vec<f64>,
    /// Relative noise-power error grid for the mismatch sweep: the
    /// denoiser is fed `(1 + error) * E0`.
    pub noise_error_grid: Vec<f64>,
    /// Beamspace bins / antennas. File sources take the length from
    /// their records instead.
    pub m: usize,
    /// Uplink users in the bit-error-rate experiment.
    pub k: usize,
    /// Monte Carlo trials per grid point.
    pub trials: usize,
    /// 16-QAM symbols per user in each bit-error-rate trial frame.
    pub symbols: usize,
    /// Operating points on each closed-form and empirical ROC curve.
    pub points: usize,
    /// Energy fraction defining the ground-truth support of channels
    /// that are not exactly sparse.
    pub eta: f64,
    /// Master seed; every (grid point, trial) derives its own stream.
    pub seed: u64,
    pub channel_source: ChannelSource,
    /// Multipath count for the geometric sources.
    pub paths: usize,
    /// First-path power boost (dB) for the line-of-sight source.
    pub los_boost_db: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::Mse,
            snr_grid_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0],
            q_grid: vec![0.0625, 0.125, 0.25],
            cost_grid: vec![5.0],
            noise_error_grid: vec![-0.5, -0.25, 0.0, 0.25, 0.5],
            m: 256,
            k: 16,
            trials: 10_000,
            symbols: 8,
            points: 25,
            eta: 0.99,
            seed: 1,
            channel_source: ChannelSource::Synthetic,
            paths: 3,
            los_boost_db: 10.0,
        }
    }
}

impl ExperimentSpec {
    /// Checks every field against its documented range.
    ///
    /// # Errors
    ///
    /// Returns a diagnostic naming the offending key.
    pub fn validate(&self) -> Result<()> {
        let grids: [(&str, &[f64]); 4] = [
            ("snr_db", &self.snr_grid_db),
            ("q", &self.q_grid),
            ("cost_c", &self.cost_grid),
            ("noise_error", &self.noise_error_grid),
        ];
        for (name, grid) in grids {
            if grid.is_empty() {
                return Err(Error::invalid(format!("{name} must list at least one value")));
            }
            if let Some(bad) = grid.iter().find(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("{name} entries must be finite, got {bad}")));
            }
        }
        if let Some(bad) = self.q_grid.iter().find(|&&q| !(0.0 < q && q <= 1.0)) {
            return Err(Error::invalid(format!("q entries must lie in (0, 1], got {bad}")));
        }
        if let Some(bad) = self.cost_grid.iter().find(|&&c| c <= 0.0) {
            return Err(Error::invalid(format!("cost_c entries must be positive, got {bad}")));
        }
        if let Some(bad) = self.noise_error_grid.iter().find(|&&e| e <= -1.0) {
            return Err(Error::invalid(format!(
                "noise_error entries must exceed -1 so the supplied noise power stays positive, got {bad}"
            )));
        }
        if self.m == 0 {
            return Err(Error::invalid("m must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.symbols == 0 {
            return Err(Error::invalid("symbols must be at least 1"));
        }
        if self.points < 2 {
            return Err(Error::invalid("points must be at least 2"));
        }
        if !self.eta.is_finite() || !(0.0 < self.eta && self.eta <= 1.0) {
            return Err(Error::invalid(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if self.paths == 0 {
            return Err(Error::invalid("paths must be at least 1"));
        }
        if !self.los_boost_db.is_finite() {
            return Err(Error::invalid(format!(
                "los_boost_db must be finite, got {}",
                self.los_boost_db
            )));
        }
        Ok(())
    }
}

/// Parses configuration text into a validated spec.
///
/// # Errors
///
/// Reports malformed lines, unknown or duplicate keys, and value
/// errors, each with its line number; then whatever
/// [`ExperimentSpec::validate`] rejects.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::default();
    let mut seen: Vec<&'static str> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::invalid(format!(
                "line {line_no}: expected `key = value`, got {line:?}"
            )));
        };
        apply_key(&mut spec, key.trim(), value.trim(), line_no, &mut seen)?;
    }
    spec.validate()?;
    Ok(spec)
}

/// Loads and parses a configuration file.
///
/// # Errors
///
/// I/O failures carry the path; parse and validation failures are
/// reported as file-format errors with the parser's line diagnostics.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_spec(&text).map_err(|e| match e {
        Error::InvalidParameter(detail) => {
            Error::FileFormat { path: path.to_path_buf(), detail }
        }
        other => other,
    })
}

/// Renders a spec as configuration text that parses back to an equal
/// spec.
pub fn to_config_string(spec: &ExperimentSpec) -> String {
    let list =
        |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
    format!(
        "kind = {}\n\
         snr_db = {}\n\
         q = {}\n\
         cost_c = {}\n\
         noise_error = {}\n\
         m = {}\n\
         k = {}\n\
         trials = {}\n\
         symbols = {}\n\
         points = {}\n\
         eta = {}\n\
         seed = {}\n\
         channel = {}\n\
         paths = {}\n\
         los_boost_db = {}\n",
        spec.kind.name(),
        list(&spec.snr_grid_db),
        list(&spec.q_grid),
        list(&spec.cost_grid),
        list(&spec.noise_error_grid),
        spec.m,
        spec.k,
        spec.trials,
        spec.symbols,
        spec.points,
        spec.eta,
        spec.seed,
        spec.channel_source.name(),
        spec.paths,
        spec.los_boost_db,
    )
}

fn apply_key(
    spec: &mut ExperimentSpec,
    key: &str,
    value: &str,
    line: usize,
    seen: &mut Vec<&'static str>,
) -> Result<()> {
    // Canonical key names double as the duplicate-detection registry.
    let canonical: &'static str = match key {
        "kind" => "kind",
        "snr_db" => "snr_db",
        "q" => "q",
        "cost_c" => "cost_c",
        "noise_error" => "noise_error",
        "m" => "m",
        "k" => "k",
        "trials" => "trials",
        "symbols" => "symbols",
        "points" => "points",
        "eta" => "eta",
        "seed" => "seed",
        "channel" => "channel",
        "paths" => "paths",
        "los_boost_db" => "los_boost_db",
        other => {
            return Err(Error::invalid(format!("line {line}: unknown key `{other}`")));
        }
    };
    if seen.contains(&canonical) {
        return Err(Error::invalid(format!("line {line}: duplicate key `{canonical}`")));
    }
    seen.push(canonical);

    match canonical {
        "kind" => {
            spec.kind = ExperimentKind::parse(value).ok_or_else(|| {
                let known: Vec<&str> = ALL_KINDS.iter().map(|k| k.name()).collect();
                Error::invalid(format!(
                    "line {line}: unknown experiment kind {value:?} (expected one of {})",
                    known.join(", ")
                ))
            })?;
        }
        "snr_db" => spec.snr_grid_db = parse_list(key, value, line)?,
        "q" => spec.q_grid = parse_list(key, value, line)?,
        "cost_c" => spec.cost_grid = parse_list(key, value, line)?,
        "noise_error" => spec.noise_error_grid = parse_list(key, value, line)?,
        "m" => spec.m = parse_int(key, value, line)?,
        "k" => spec.k = parse_int(key, value, line)?,
        "trials" => spec.trials = parse_int(key, value, line)?,
        "symbols" => spec.symbols = parse_int(key, value, line)?,
        "points" => spec.points = parse_int(key, value, line)?,
        "eta" => spec.eta = parse_real(key, value, line)?,
        "seed" => spec.seed = parse_int(key, value, line)?,
        "channel" => {
            spec.channel_source = ChannelSource::parse(value).ok_or_else(|| {
                Error::invalid(format!(
                    "line {line}: unknown channel source {value:?} (expected synthetic, \
                     geometric_los, geometric_nlos, or file:<path>)"
                ))
            })?;
        }
        "paths" => spec.paths = parse_int(key, value, line)?,
        "los_boost_db" => spec.los_boost_db = parse_real(key, value, line)?,
        _ => unreachable!("canonical keys are exhaustively matched"),
    }
    Ok(())
}

fn parse_real(key: &str, value: &str, line: usize) -> Result<f64> {
    value.parse().map_err(|_| {
        Error::invalid(format!("line {line}: key `{key}` expects a number, got {value:?}"))
    })
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| {
        Error::invalid(format!(
            "line {line}: key `{key}` expects an unsigned integer, got {value:?}"
        ))
    })
}

fn parse_list(key: &str, value: &str, line: usize) -> Result<Vec<f64>> {
    if value.is_empty() {
        return Err(Error::invalid(format!("line {line}: key `{key}` expects a list of numbers")));
    }
    value.split(',').map(|item| parse_real(key, item.trim(), line)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text_yields_the_documented_defaults() {
        let spec = parse_spec("").unwrap();
        assert_eq!(spec, ExperimentSpec::default());
        assert_eq!(spec.m, 256);
        assert_eq!(spec.k, 16);
        assert_eq!(spec.trials, 10_000);
        assert_eq!(spec.cost_grid, vec![5.0]);
        assert_eq!(spec.eta, 0.99);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let spec = parse_spec("# leading comment\n\n  kind = roc # trailing\n\n").unwrap();
        assert_eq!(spec.kind, ExperimentKind::Roc);
    }

    #[test]
    fn unknown_key_is_rejected_with_its_line() {
        let err = parse_spec("kind = mse\ntrails = 3\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(err.contains("unknown key `trails`"), "{err}");
    }

    #[test]
    fn duplicate_key_is_rejected_with_its_line() {
        let err = parse_spec("m = 64\nm = 128\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(err.contains("duplicate key `m`"), "{err}");
    }

    #[test]
    fn malformed_line_is_rejected() {
        let err = parse_spec("kind mse\n").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
        assert!(err.contains("key = value"), "{err}");
    }

    #[test]
    fn negative_cost_is_rejected_naming_the_key() {
        let err = parse_spec("cost_c = -1\n").unwrap_err().to_string();
        assert!(err.contains("cost_c"), "{err}");
        assert!(err.contains("positive"), "{err}");
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        assert!(parse_spec("q = 0\n").is_err());
        assert!(parse_spec("q = 1.5\n").is_err());
        assert!(parse_spec("noise_error = -1\n").is_err());
        assert!(parse_spec("eta = 0\n").is_err());
        assert!(parse_spec("eta = 1.01\n").is_err());
        assert!(parse_spec("trials = 0\n").is_err());
        assert!(parse_spec("points = 1\n").is_err());
        assert!(parse_spec("m = 0\n").is_err());
        assert!(parse_spec("snr_db =\n").is_err());
        assert!(parse_spec("snr_db = 1, bad\n").is_err());
        assert!(parse_spec("kind = unknown\n").is_err());
        assert!(parse_spec("channel = rayleigh\n").is_err());
        assert!(parse_spec("channel = file:\n").is_err());
    }

    #[test]
    fn every_documented_key_is_applied() {
        let text = "kind = ber\n\
                    snr_db = -3, 0, 3\n\
                    q = 0.125\n\
                    cost_c = 2, 4\n\
                    noise_error = -0.5, 0.5\n\
                    m = 64\n\
                    k = 4\n\
                    trials = 17\n\
                    symbols = 3\n\
                    points = 13\n\
                    eta = 0.9\n\
                    seed = 99\n\
                    channel = file:data/chan.bmch\n\
                    paths = 7\n\
                    los_boost_db = 6\n";
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec.kind, ExperimentKind::Ber);
        assert_eq!(spec.snr_grid_db, vec![-3.0, 0.0, 3.0]);
        assert_eq!(spec.q_grid, vec![0.125]);
        assert_eq!(spec.cost_grid, vec![2.0, 4.0]);
        assert_eq!(spec.noise_error_grid, vec![-0.5, 0.5]);
        assert_eq!(spec.m, 64);
        assert_eq!(spec.k, 4);
        assert_eq!(spec.trials, 17);
        assert_eq!(spec.symbols, 3);
        assert_eq!(spec.points, 13);
        assert_eq!(spec.eta, 0.9);
        assert_eq!(spec.seed, 99);
        assert_eq!(spec.channel_source, ChannelSource::File(PathBuf::from("data/chan.bmch")));
        assert_eq!(spec.paths, 7);
        assert_eq!(spec.los_boost_db, 6.0);
    }

    #[test]
    fn load_config_reports_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.cfg");
        std::fs::write(&path, "nonsense\n").unwrap();
        let err = load_config(&path).unwrap_err().to_string();
        assert!(err.contains("bad.cfg"), "{err}");
        assert!(err.contains("line 1"), "{err}");

        let missing = load_config(dir.path().join("absent.cfg")).unwrap_err().to_string();
        assert!(missing.contains("absent.cfg"), "{missing}");
    }

    prop_compose! {
        fn arb_source()(choice in 0usize..4, name in "[a-z][a-z0-9_./]{0,18}") -> ChannelSource {
            match choice {
                0 => ChannelSource::Synthetic,
                1 => ChannelSource::GeometricLos,
                2 => ChannelSource::GeometricNlos,
                _ => ChannelSource::File(PathBuf::from(name)),
            }
        }
    }

    prop_compose! {
        fn arb_spec()(
            kind_idx in 0usize..ALL_KINDS.len(),
            snr in prop::collection::vec(-40.0f64..40.0, 1..5),
            q in prop::collection::vec(0.001f64..1.0, 1..4),
            cost in prop::collection::vec(0.01f64..50.0, 1..4),
            noise_err in prop::collection::vec(-0.99f64..3.0, 1..4),
            m in 1usize..4096,
            k in 1usize..64,
            trials in 1usize..100_000,
            symbols in 1usize..64,
            points in 2usize..200,
            eta in 0.01f64..=1.0,
            seed in any::<u64>(),
            source in arb_source(),
            paths in 1usize..16,
            los_boost_db in -20.0f64..20.0,
        ) -> ExperimentSpec {
            ExperimentSpec {
                kind: ALL_KINDS[kind_idx],
                snr_grid_db: snr,
                q_grid: q,
                cost_grid: cost,
                noise_error_grid: noise_err,
                m, k, trials, symbols, points, eta, seed,
                channel_source: source,
                paths, los_boost_db,
            }
        }
    }

    proptest! {
        #[test]
        fn serializing_and_parsing_round_trips(spec in arb_spec()) {
            let text = to_config_string(&spec);
            let back = parse_spec(&text).unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
