//! Dataset ingestion: the embedded Newcomb measurements and headerless CSV.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{ElError, Result};
use crate::model::Sample;

/// Newcomb's 1882 passage-time measurements, day 1 (coded, n = 20).
pub const NEWCOMB_DAY1: [f64; 20] = [
    28.0, 26.0, 33.0, 24.0, 34.0, -44.0, 27.0, 16.0, 40.0, -2.0, 29.0, 22.0, 24.0, 21.0, 25.0, 30.0, 23.0, 29.0, 31.0,
    19.0,
];

/// Day 2 (n = 20).
pub const NEWCOMB_DAY2: [f64; 20] = [
    24.0, 20.0, 36.0, 32.0, 36.0, 28.0, 25.0, 21.0, 28.0, 29.0, 37.0, 25.0, 28.0, 26.0, 30.0, 32.0, 36.0, 26.0, 30.0,
    22.0,
];

/// Day 3 (n = 26).
pub const NEWCOMB_DAY3: [f64; 26] = [
    36.0, 23.0, 27.0, 27.0, 28.0, 27.0, 31.0, 27.0, 26.0, 33.0, 26.0, 32.0, 32.0, 24.0, 39.0, 28.0, 24.0, 25.0, 32.0,
    25.0, 29.0, 27.0, 28.0, 29.0, 16.0, 23.0,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Embedded,
    Csv,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub sample: Sample,
    pub source: DataSource,
}

/// The embedded sub-sample for `day1`, `day2`, `day3` or `all` (the three
/// days concatenated in order).
pub fn newcomb(part: &str) -> Option<Vec<f64>> {
    Some(match part {
        "day1" => NEWCOMB_DAY1.to_vec(),
        "day2" => NEWCOMB_DAY2.to_vec(),
        "day3" => NEWCOMB_DAY3.to_vec(),
        "all" => NEWCOMB_DAY1.iter().chain(&NEWCOMB_DAY2).chain(&NEWCOMB_DAY3).copied().collect(),
        _ => return None,
    })
}

/// Resolve `newcomb:<part>` or a CSV path.
pub fn load_dataset(spec: &str, header: bool) -> Result<Dataset> {
    if let Some(part) = spec.strip_prefix("newcomb:") {
        let xs = newcomb(part).ok_or_else(|| {
            ElError::Usage(format!("unknown Newcomb subset '{part}' (expected day1, day2, day3 or all)"))
        })?;
        return Ok(Dataset { name: spec.to_string(), sample: Sample::from_scalars(&xs)?, source: DataSource::Embedded });
    }
    if spec == "newcomb" {
        return Err(ElError::Usage("pick a Newcomb subset: newcomb:day1, newcomb:day2, newcomb:day3 or newcomb:all".into()));
    }
    load_csv(Path::new(spec), header)
}

/// Read a numeric CSV file, one observation per row.
pub fn load_csv(path: &Path, header: bool) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ElError::Usage(format!("cannot read '{}': {e}", path.display())))?;
    let sample = parse_csv(&text, header)?;
    Ok(Dataset { name: path.display().to_string(), sample, source: DataSource::Csv })
}

/// Parse CSV text. Rows and columns in errors are 1-based and count the
/// header line when there is one. Only `.` is accepted as the decimal mark.
pub fn parse_csv(text: &str, header: bool) -> Result<Sample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            ElError::ParseError { row, col: 0, msg: e.to_string() }
        })?;
        let row = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let mut values = Vec::with_capacity(record.len());
        for (j, field) in record.iter().enumerate() {
            values.push(parse_field(field).map_err(|msg| ElError::ParseError { row, col: j + 1, msg })?);
        }
        match width {
            None => width = Some(values.len()),
            Some(k) if k != values.len() => {
                return Err(ElError::ParseError {
                    row,
                    col: values.len().min(k) + 1,
                    msg: format!("expected {k} fields, found {}", values.len()),
                })
            }
            _ => {}
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(ElError::ParseError { row: 1, col: 1, msg: "no observations".into() });
    }
    Sample::from_rows(&rows)
}

fn parse_field(field: &str) -> std::result::Result<f64, String> {
    if field.is_empty() {
        return Err("empty field".into());
    }
    // Rust's float parser also accepts "inf" and "NaN", which are rejected
    // below; anything with a comma never reaches here as one field.
    let v: f64 = field.parse().map_err(|_| format!("'{field}' is not a number"))?;
    if !v.is_finite() {
        return Err(format!("'{field}' is not finite"));
    }
    Ok(v)
}

/// Write a sample as headerless CSV with shortest round-trip formatting.
pub fn write_csv(sample: &Sample, out: &mut impl Write) -> std::io::Result<()> {
    for i in 0..sample.n() {
        let line: Vec<String> = sample.row(i).iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
