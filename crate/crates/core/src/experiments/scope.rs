//! Oscilloscope CSV exports: a header row, a time column, and one column per
//! channel. Lines starting with `#` are skipped.

use std::path::Path;

use crate::error::{Error, Result};
use crate::trace::SampledTrace;

/// Relative tolerance on the spacing of consecutive time stamps.
pub const UNIFORM_TOLERANCE: f64 = 1e-3;

const TIME_COLUMNS: [&str; 3] = ["time_s", "time", "t"];

/// Which columns to read.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ColumnSelection {
    /// Time column; defaults to the first of `time_s`, `time`, `t`, else the
    /// first column.
    pub time: Option<String>,
    /// Channel columns; defaults to the columns after the time column.
    pub channels: Vec<String>,
}

impl ColumnSelection {
    pub fn channels(names: &[&str]) -> Self {
        ColumnSelection {
            time: None,
            channels: names.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Reads `count` channels on a shared uniform time grid.
pub fn read_scope_csv(
    path: &Path,
    selection: &ColumnSelection,
    count: usize,
) -> Result<Vec<SampledTrace>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_scope_csv(file, path, selection, count)
}

/// Reads the first two channels of a scope export as (I1, I2).
pub fn ingest_scope_csv(
    path: &Path,
    selection: &ColumnSelection,
) -> Result<(SampledTrace, SampledTrace)> {
    let mut traces = read_scope_csv(path, selection, 2)?;
    let i2 = traces.pop().expect("two channels");
    let i1 = traces.pop().expect("two channels");
    Ok((i1, i2))
}

/// [`read_scope_csv`] over any reader; `path` only labels errors.
pub fn parse_scope_csv(
    input: impl std::io::Read,
    path: &Path,
    selection: &ColumnSelection,
    count: usize,
) -> Result<Vec<SampledTrace>> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);

    let headers = reader
        .headers()
        .map_err(|e| parse_err(csv_line(&e), e.to_string()))?
        .clone();
    let header_line = headers.position().map_or(1, |p| p.line());
    let names: Vec<&str> = headers.iter().collect();
    let find = |name: &str| names.iter().position(|h| *h == name);

    let time_index = match &selection.time {
        Some(name) => {
            find(name).ok_or_else(|| parse_err(header_line, format!("missing column '{name}'")))?
        }
        None => TIME_COLUMNS.iter().find_map(|n| find(n)).unwrap_or(0),
    };
    let channel_indices: Vec<usize> = if selection.channels.is_empty() {
        let rest: Vec<usize> = (0..names.len())
            .filter(|&i| i != time_index)
            .take(count)
            .collect();
        if rest.len() < count {
            return Err(parse_err(
                header_line,
                format!(
                    "expected {count} channel columns after '{}', found {}",
                    names[time_index],
                    rest.len()
                ),
            ));
        }
        rest
    } else {
        if selection.channels.len() != count {
            return Err(Error::Config(format!(
                "expected {count} channel names, got {}",
                selection.channels.len()
            )));
        }
        selection
            .channels
            .iter()
            .map(|name| {
                find(name).ok_or_else(|| parse_err(header_line, format!("missing column '{name}'")))
            })
            .collect::<Result<_>>()?
    };

    let mut times = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); count];
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(csv_line(&e), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let field = |index: usize| -> Result<f64> {
            let name = names.get(index).copied().unwrap_or("?");
            let text = record
                .get(index)
                .ok_or_else(|| parse_err(line, format!("missing value for column '{name}'")))?;
            let value: f64 = text.parse().map_err(|_| {
                parse_err(
                    line,
                    format!("column '{name}': cannot parse '{text}' as a number"),
                )
            })?;
            if value.is_finite() {
                Ok(value)
            } else {
                Err(parse_err(
                    line,
                    format!("column '{name}': non-finite value '{text}'"),
                ))
            }
        };
        times.push(field(time_index)?);
        for (column, &index) in columns.iter_mut().zip(&channel_indices) {
            column.push(field(index)?);
        }
    }

    let format_err = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let n = times.len();
    if n < 2 {
        return Err(format_err(format!("need at least 2 samples, found {n}")));
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(format_err("time column must increase".into()));
    }
    for (i, pair) in times.windows(2).enumerate() {
        let step = pair[1] - pair[0];
        if (step - dt).abs() > UNIFORM_TOLERANCE * dt {
            return Err(format_err(format!(
                "time step {step} between samples {i} and {} deviates from the mean spacing {dt} by more than {}%",
                i + 1,
                UNIFORM_TOLERANCE * 100.0
            )));
        }
    }
    columns
        .into_iter()
        .map(|samples| SampledTrace::new(times[0], dt, samples))
        .collect()
}

fn csv_line(e: &csv::Error) -> u64 {
    e.position().map_or(0, |p| p.line())
}
