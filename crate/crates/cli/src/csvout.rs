//! Stable CSV schema for experiment results.
//!
//! One row holds one metric of one method at one sweep point, so
//! downstream plotting never has to guess column meanings. Numbers are
//! written with nine significant digits, which round-trips every value
//! this harness produces well below its Monte Carlo resolution.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use beamdenoise_core::{Error, Result};

/// Column header of every results file.
pub const HEADER: &str = "experiment,snr_db,q,cost_c,noise_err,method,metric,value,trials,seed";

/// One aggregated measurement. Columns that do not apply to an
/// experiment (for example `q` for channels whose activity rate is
/// emergent rather than configured) hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub snr_db: f64,
    pub q: f64,
    pub cost_c: f64,
    pub noise_err: f64,
    pub method: String,
    pub metric: String,
    pub value: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Formats a float with nine significant digits: plain decimal where
/// the magnitude allows, scientific notation otherwise, and a bare `0`
/// for zero.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exponent = v.abs().log10().floor();
    if (-4.0..9.0).contains(&exponent) {
        format!("{:.*}", (8.0 - exponent) as usize, v)
    } else {
        format!("{:.8e}", v)
    }
}

/// Renders the header plus one line per row, in row order.
pub fn render_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.experiment,
            format_sig(r.snr_db),
            format_sig(r.q),
            format_sig(r.cost_c),
            format_sig(r.noise_err),
            r.method,
            r.metric,
            format_sig(r.value),
            r.trials,
            r.seed,
        ));
    }
    out
}

/// Writes [`render_csv`] output to `path`.
///
/// # Errors
///
/// Surfaces I/O failures with the path attached.
pub fn emit_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    w.write_all(render_csv(rows).as_bytes()).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// Parses text produced by [`render_csv`] back into rows.
///
/// # Errors
///
/// Rejects a wrong header, a wrong field count, and unparseable
/// numbers, each with the line number.
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == HEADER => {}
        other => {
            return Err(Error::invalid(format!("bad results header: {other:?}")));
        }
    }
    lines
        .enumerate()
        .map(|(idx, line)| {
            let line_no = idx + 2;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 10 {
                return Err(Error::invalid(format!(
                    "line {line_no}: expected 10 fields, found {}",
                    fields.len()
                )));
            }
            let real = |i: usize| -> Result<f64> {
                fields[i].parse().map_err(|_| {
                    Error::invalid(format!("line {line_no}: bad number {:?}", fields[i]))
                })
            };
            let int = |i: usize| -> Result<u64> {
                fields[i].parse().map_err(|_| {
                    Error::invalid(format!("line {line_no}: bad integer {:?}", fields[i]))
                })
            };
            Ok(ResultRow {
                experiment: fields[0].to_string(),
                snr_db: real(1)?,
                q: real(2)?,
                cost_c: real(3)?,
                noise_err: real(4)?,
                method: fields[5].to_string(),
                metric: fields[6].to_string(),
                value: real(7)?,
                trials: int(8)?,
                seed: int(9)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_row() -> ResultRow {
        ResultRow {
            experiment: "mse".to_string(),
            snr_db: -5.0,
            q: 0.0625,
            cost_c: 5.0,
            noise_err: 0.0,
            method: "proposed".to_string(),
            metric: "mse".to_string(),
            value: 0.123456789123,
            trials: 10_000,
            seed: 1,
        }
    }

    #[test]
    fn zero_rows_render_as_the_header_alone() {
        assert_eq!(render_csv(&[]), format!("{HEADER}\n"));
    }

    #[test]
    fn one_row_renders_as_exactly_two_lines() {
        let text = render_csv(&[sample_row()]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], HEADER);
        assert_eq!(lines[1], "mse,-5.00000000,0.0625000000,5.00000000,0,proposed,mse,0.123456789,10000,1");
    }

    #[test]
    fn nine_significant_digits_cover_common_magnitudes() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1.0), "1.00000000");
        assert_eq!(format_sig(-5.0), "-5.00000000");
        assert_eq!(format_sig(0.0625), "0.0625000000");
        assert_eq!(format_sig(123.456789123), "123.456789");
        assert_eq!(format_sig(1.23456789123e-7), "1.23456789e-7");
        assert_eq!(format_sig(9.87654321e12), "9.87654321e12");
    }

    #[test]
    fn emitted_file_parses_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let rows = vec![
            sample_row(),
            ResultRow { value: 3.9e-12, metric: "p_d".to_string(), ..sample_row() },
        ];
        emit_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let back = parse_csv(&text).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in back.iter().zip(&rows) {
            assert_eq!(a.experiment, b.experiment);
            assert_eq!(a.method, b.method);
            assert_eq!(a.metric, b.metric);
            assert_eq!(a.trials, b.trials);
            assert_eq!(a.seed, b.seed);
            assert!((a.value - b.value).abs() <= 1e-9 * b.value.abs());
        }
    }

    #[test]
    fn malformed_text_is_rejected_with_a_line_number() {
        assert!(parse_csv("nonsense\n").is_err());
        let text = format!("{HEADER}\nmse,0,0,5,0,proposed,mse,oops,10,1\n");
        let err = parse_csv(&text).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let short = format!("{HEADER}\nmse,0,0\n");
        assert!(parse_csv(&short).is_err());
    }

    proptest! {
        // Nine significant digits must reproduce any value to within
        // one part in 1e-9 after a write/read cycle.
        #[test]
        fn formatting_round_trips_to_nine_digits(
            mantissa in -1.0f64..1.0,
            exp in -30i32..30,
        ) {
            let v = mantissa * 10f64.powi(exp);
            let parsed: f64 = format_sig(v).parse().unwrap();
            let tol = 1e-8 * v.abs();
            prop_assert!((parsed - v).abs() <= tol.max(f64::MIN_POSITIVE));
        }
    }
}
