//! Input parsing and output formatting shared by the subcommands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use maxcorr::ranks::PairedSample;

use crate::CliError;

/// Primary output sink: stdout by default, a file under `--out`.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) => {
            let file = File::create(p)
                .map_err(|e| CliError::Compute(format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(file)))
        }
    }
}

/// Formats to 12 significant digits, fixed-point near unit scale and
/// scientific far from it. With 12 digits the printed decimal maps back to
/// a unique f64, so emitted files reparse to exactly the printed value.
pub fn fmt12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if v.is_nan() {
        return "NaN".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    // round to 12 significant digits first; the notation choice must see
    // the post-rounding exponent (9.99...e11 carries into the next decade)
    let sci = format!("{v:.11e}");
    let (mantissa, exp_str) = sci.split_once('e').expect("e-format contains 'e'");
    let exp: i32 = exp_str.parse().expect("e-format exponent is an integer");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let rounded: f64 = sci.parse().expect("e-format reparses");
        trim_fraction(format!("{rounded:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_fraction(mantissa.to_string()))
    }
}

fn trim_fraction(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64, CliError> {
    let trimmed = raw.trim();
    let value: f64 = trimmed.parse().map_err(|_| {
        CliError::Input(format!(
            "row {row}, column {column}: cannot parse '{trimmed}' as a number"
        ))
    })?;
    if !value.is_finite() {
        return Err(CliError::Input(format!(
            "row {row}, column {column}: value '{trimmed}' is not finite"
        )));
    }
    Ok(value)
}

fn looks_numeric(cell: &str) -> bool {
    cell.trim().parse::<f64>().is_ok()
}

/// Two-column sample reader: header row required, first two columns are x
/// and y, extra columns ignored. Data row numbers in diagnostics are
/// 1-based and exclude the header.
pub fn read_paired_csv(path: &Path) -> Result<PairedSample, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        .clone();
    if headers.len() < 2 {
        return Err(CliError::Input(format!(
            "{}: need at least two columns, found {}",
            path.display(),
            headers.len()
        )));
    }
    if looks_numeric(&headers[0]) && looks_numeric(&headers[1]) {
        return Err(CliError::Input(format!(
            "{}: first row looks like data; a header row is required",
            path.display()
        )));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if record.len() < 2 {
            return Err(CliError::Input(format!(
                "row {row}: found {} columns, need at least 2",
                record.len()
            )));
        }
        x.push(parse_cell(&record[0], row, &headers[0])?);
        y.push(parse_cell(&record[1], row, &headers[1])?);
    }
    PairedSample::new(x, y).map_err(CliError::from)
}

/// A screening matrix: per-row ids, the shared x-vector, and one y-vector
/// per row.
pub struct ScreenInput {
    pub ids: Vec<String>,
    pub x: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
}

/// Matrix reader. The first column holds unique row ids; the header's
/// remaining cells are the numeric x-vector unless `x_file` overrides them.
pub fn read_screen_csv(path: &Path, x_file: Option<&Path>) -> Result<ScreenInput, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        .clone();
    if headers.len() < 3 {
        return Err(CliError::Input(format!(
            "{}: need an id column plus at least two condition columns, found {} columns",
            path.display(),
            headers.len()
        )));
    }
    let conditions = headers.len() - 1;
    let x = match x_file {
        Some(p) => read_x_file(p)?,
        None => {
            let mut values = Vec::with_capacity(conditions);
            for cell in headers.iter().skip(1) {
                let value: f64 = cell.trim().parse().map_err(|_| {
                    CliError::Input(format!(
                        "header cell '{cell}' is not numeric; name the conditions \
                         numerically or pass --x-file"
                    ))
                })?;
                values.push(value);
            }
            values
        }
    };
    if x.len() != conditions {
        return Err(CliError::Input(format!(
            "x-vector has {} values but the matrix has {conditions} condition columns",
            x.len()
        )));
    }

    let mut ids = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut matrix = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if record.len() != conditions + 1 {
            return Err(CliError::Input(format!(
                "row {row}: found {} values, expected {conditions}",
                record.len().saturating_sub(1)
            )));
        }
        let id = record[0].trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(CliError::Input(format!("row {row}: duplicate id '{id}'")));
        }
        let mut values = Vec::with_capacity(conditions);
        for (j, cell) in record.iter().skip(1).enumerate() {
            values.push(parse_cell(cell, row, &headers[j + 1])?);
        }
        ids.push(id);
        matrix.push(values);
    }
    if matrix.is_empty() {
        return Err(CliError::Input(format!(
            "{}: matrix has no data rows",
            path.display()
        )));
    }
    Ok(ScreenInput { ids, x, matrix })
}

/// Single-column CSV (with header) giving the x-vector explicitly.
fn read_x_file(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if record.is_empty() {
            continue;
        }
        values.push(parse_cell(&record[0], i + 1, "x")?);
    }
    if values.is_empty() {
        return Err(CliError::Input(format!(
            "{}: x-file has no values",
            path.display()
        )));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt12_basics() {
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(-0.0), "0");
        assert_eq!(fmt12(1.0), "1");
        assert_eq!(fmt12(-2.5), "-2.5");
        assert_eq!(fmt12(0.05), "0.05");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(1e-12), "1e-12");
        assert_eq!(fmt12(1.5e304), "1.5e304");
        assert_eq!(fmt12(123456789012345.0), "1.23456789012e14");
        assert_eq!(fmt12(f64::NAN), "NaN");
        assert_eq!(fmt12(f64::INFINITY), "inf");
    }

    #[test]
    fn fmt12_round_trips_and_is_idempotent() {
        let tricky = [
            1.0 / 3.0,
            0.1,
            2.0_f64.powi(-53),
            0.018551876090412,
            1.488235294117,
            -0.753495349534,
            6.220960574271784e-16,
            f64::MIN_POSITIVE,
            5e-324,
            1.7976931348623157e308,
            -9.999999999999e11,
            1.0000000000005,
        ];
        for &v in &tricky {
            let s = fmt12(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(fmt12(back), s, "not idempotent for {v:e}: '{s}'");
            // reparsing what we print must preserve 12 significant digits
            assert!(
                ((back - v) / v).abs() < 1e-11,
                "lost precision for {v:e}: '{s}'"
            );
        }
    }

    #[test]
    fn fmt12_notation_boundaries() {
        assert_eq!(fmt12(0.0001), "0.0001");
        assert_eq!(fmt12(0.00001), "0.00001");
        assert_eq!(fmt12(0.000001), "1e-6");
        assert_eq!(fmt12(99999999999.0), "99999999999");
        assert_eq!(fmt12(1e12), "1e12");
        // rounding that crosses a decade must switch notation with it
        assert_eq!(fmt12(-9.999999999999e11), "-1e12");
        assert_eq!(fmt12(9.999999999999999e-6), "0.00001");
    }
}
