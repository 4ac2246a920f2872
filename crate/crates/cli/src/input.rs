//! CSV observation files: comma separated, `.` decimal point, and an optional
//! header row recognised by having no numeric cell.

use std::path::Path;

use affinest::Sample;

use crate::CliError;

/// Parses CSV text into rows of finite numbers. Row and column positions in
/// errors are 1-based and count the header row when present.
pub fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| CliError::Parse(format!("row {line}: {e}")))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if idx == 0 && record.iter().all(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        let mut row = Vec::with_capacity(record.len());
        for (c, cell) in record.iter().enumerate() {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(CliError::Parse(format!(
                        "row {line}, column {}: '{cell}' is not a finite number",
                        c + 1
                    )))
                }
            }
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(CliError::Parse(format!(
                    "row {line}: expected {w} columns, found {}",
                    row.len()
                )))
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Parse("no observations found".into()));
    }
    Ok(rows)
}

pub fn read_sample(path: &Path) -> Result<Sample, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let rows = parse_rows(&text)?;
    Sample::from_rows(&rows).map_err(|e| CliError::Parse(e.to_string()))
}

/// Writes a sample in the format [`read_sample`] accepts, using the shortest
/// representation that parses back to the same `f64`.
pub fn write_sample_csv(sample: &Sample) -> String {
    let mut out = String::with_capacity(sample.n() * sample.p() * 20);
    out.push_str(
        &(1..=sample.p())
            .map(|j| format!("x{j}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    for row in sample.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
