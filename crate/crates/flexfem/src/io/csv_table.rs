//! Comma-separated tables with a string backing store and a strict numeric
//! view.

use super::IoError;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn push_row<S: Into<String>>(
        &mut self,
        cells: impl IntoIterator<Item = S>,
    ) -> Result<(), IoError> {
        let row: Vec<String> = cells.into_iter().map(Into::into).collect();
        if row.len() != self.headers.len() {
            return Err(IoError::RaggedRow {
                row: self.rows.len() + 1,
                expected: self.headers.len(),
                got: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    /// Formats the values as the canonical scientific form used by
    /// `csv_write`, so emitted files are stable under re-reading.
    pub fn push_numeric_row(
        &mut self,
        values: &[f64],
        precision: usize,
    ) -> Result<(), IoError> {
        let cells: Vec<String> = values
            .iter()
            .map(|v| format_numeric(*v, precision))
            .collect();
        self.push_row(cells)
    }

    /// Every cell parsed as f64; fails naming the first offending cell.
    pub fn numeric(&self) -> Result<Vec<Vec<f64>>, IoError> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, cell)| {
                        cell.trim().parse::<f64>().map_err(|_| IoError::NonNumericCell {
                            row: i + 1,
                            column: self.headers[j].clone(),
                            value: cell.clone(),
                        })
                    })
                    .collect()
            })
            .collect()
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, IoError> {
        let j = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IoError::UnknownColumn(name.to_string()))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row[j].trim().parse::<f64>().map_err(|_| IoError::NonNumericCell {
                    row: i + 1,
                    column: name.to_string(),
                    value: row[j].clone(),
                })
            })
            .collect()
    }
}

pub(crate) fn format_numeric(value: f64, precision: usize) -> String {
    format!("{value:.precision$e}")
}

pub fn csv_read(path: impl AsRef<Path>) -> Result<CsvTable, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut table = CsvTable::new(headers);
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let cells: Vec<String> = record.iter().map(str::to_string).collect();
        if cells.len() != table.headers.len() {
            return Err(IoError::RaggedRow {
                row: i + 1,
                expected: table.headers.len(),
                got: cells.len(),
            });
        }
        table.rows.push(cells);
    }
    Ok(table)
}

/// Numeric cells are normalized to scientific notation with `precision`
/// fractional digits; non-numeric cells pass through verbatim. Tables whose
/// numeric cells are already in that canonical form round-trip unchanged.
pub fn csv_write(
    path: impl AsRef<Path>,
    table: &CsvTable,
    precision: usize,
) -> Result<(), IoError> {
    let mut writer = csv::WriterBuilder::new().from_path(path.as_ref())?;
    writer.write_record(table.headers())?;
    for row in table.rows() {
        let formatted: Vec<String> = row
            .iter()
            .map(|cell| match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => format_numeric(v, precision),
                _ => cell.clone(),
            })
            .collect();
        writer.write_record(&formatted)?;
    }
    writer.flush().map_err(std::io::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;


    #[test]
    fn single_row_survives_a_round_trip() {
        let mut table = CsvTable::new(["t", "norm", "label"]);
        table
            .push_row(["1.000000e0", "2.500000e-1", "step"])
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roundtrip.csv");
        csv_write(&path, &table, 6).unwrap();
        let back = csv_read(&path).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn scientific_notation_parses_in_the_numeric_view() {
        let mut table = CsvTable::new(["x"]);
        table.push_row(["1e-3"]).unwrap();
        let numeric = table.numeric().unwrap();
        assert_eq!(numeric[0][0], 0.001);
    }

    #[test]
    fn ragged_rows_are_rejected_with_their_row_number() {
        let mut table = CsvTable::new(["a", "b"]);
        table.push_row(["1", "2"]).unwrap();
        let err = table.push_row(["3"]).unwrap_err();
        match err {
            IoError::RaggedRow { row, expected, got } => {
                assert_eq!((row, expected, got), (2, 2, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ragged_file_reports_the_offending_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        std::fs::write(&path, "a,b\n1,2\n3\n").unwrap();
        let err = csv_read(&path).unwrap_err();
        assert!(matches!(err, IoError::RaggedRow { row: 2, .. }));
    }

    #[test]
    fn non_numeric_cells_are_named_in_errors() {
        let mut table = CsvTable::new(["a", "b"]);
        table.push_row(["1.5", "oops"]).unwrap();
        let err = table.numeric().unwrap_err();
        match err {
            IoError::NonNumericCell { row, column, value } => {
                assert_eq!(row, 1);
                assert_eq!(column, "b");
                assert_eq!(value, "oops");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn written_values_keep_the_requested_precision() {
        let mut table = CsvTable::new(["x"]);
        table.push_row([std::f64::consts::PI.to_string()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pi.csv");
        csv_write(&path, &table, 12).unwrap();
        let back = csv_read(&path).unwrap();
        let value = back.numeric().unwrap()[0][0];
        assert!((value - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn column_extraction_respects_headers() {
        let mut table = CsvTable::new(["t", "u"]);
        table.push_numeric_row(&[0.0, 1.0], 6).unwrap();
        table.push_numeric_row(&[0.1, 0.5], 6).unwrap();
        assert_eq!(table.column("u").unwrap(), vec![1.0, 0.5]);
        assert!(matches!(
            table.column("missing"),
            Err(IoError::UnknownColumn(_))
        ));
    }
}
