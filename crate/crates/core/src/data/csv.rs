use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Column layout of an input CSV.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaMode {
    /// `Time,V1,...,V28,Amount,Class`: label in the `Class` column.
    #[default]
    KaggleCreditcard,
    /// Label in the last column.
    Generic,
}

impl std::str::FromStr for SchemaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kaggle_creditcard" | "kaggle" => Ok(SchemaMode::KaggleCreditcard),
            "generic" => Ok(SchemaMode::Generic),
            other => Err(Error::Config(format!("unknown schema mode {other:?}"))),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, mode: SchemaMode) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, mode)
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan")
}

fn csv_error(e: csv::Error) -> Error {
    Error::Schema(format!("malformed CSV: {e}"))
}

/// Parses CSV text. Empty, `NA` and `NaN` feature cells load as missing (NaN)
/// so that `inspect` can report them; labels must always be present.
pub fn parse_csv(text: &str, mode: SchemaMode) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(csv_error)?,
        None => return Err(Error::Schema("missing header row".into())),
    };
    let columns: Vec<String> = header.iter().map(str::to_string).collect();
    if columns.len() < 2 {
        return Err(Error::Schema(format!(
            "header needs at least one feature and one label column, got {columns:?}"
        )));
    }
    if columns.iter().any(|c| c.parse::<f64>().is_ok()) {
        return Err(Error::Schema(format!("first line looks like data, not a header: {columns:?}")));
    }
    let label_col = match mode {
        SchemaMode::KaggleCreditcard => columns
            .iter()
            .position(|c| c == "Class")
            .ok_or_else(|| Error::Schema("kaggle_creditcard schema requires a `Class` column".into()))?,
        SchemaMode::Generic => columns.len() - 1,
    };
    let feature_names: Vec<String> = columns
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_col)
        .map(|(_, c)| c.clone())
        .collect();
    let n_cols = feature_names.len();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let row = labels.len() + 1;
        if record.len() != columns.len() {
            let line = record.position().map_or(row as u64 + 1, |p| p.line());
            return Err(Error::Schema(format!(
                "line {line} has {} cells, header has {}",
                record.len(),
                columns.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            if j == label_col {
                let label = match cell.parse::<f64>() {
                    Ok(0.0) => 0,
                    Ok(1.0) => 1,
                    _ => {
                        return Err(Error::Label {
                            row,
                            value: cell.to_string(),
                        })
                    }
                };
                labels.push(label);
            } else if is_missing(cell) {
                features.push(f64::NAN);
            } else {
                let v = cell.parse::<f64>().map_err(|_| Error::Parse {
                    row,
                    col: j + 1,
                    column: columns[j].clone(),
                    value: cell.to_string(),
                })?;
                features.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(features, n_cols, labels, feature_names)
}

/// Writes `ds` in the CSV shape `load_csv` reads. Kaggle mode places the label in
/// a trailing `Class` column, which also satisfies generic mode. Each entry of
/// `extra` adds a trailing string column.
pub fn write_csv<W: Write>(ds: &Dataset, out: W, extra: &[(&str, &[&str])]) -> std::io::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut record: Vec<String> = ds.feature_names().to_vec();
    record.push("Class".into());
    for (name, values) in extra {
        assert_eq!(values.len(), ds.n_rows(), "extra column {name} has wrong length");
        record.push((*name).to_string());
    }
    writer.write_record(&record)?;
    for (i, row) in ds.rows().enumerate() {
        record.clear();
        record.extend(row.iter().map(|v| if v.is_finite() { v.to_string() } else { String::new() }));
        record.push(if ds.label(i) == 1 { "1" } else { "0" }.into());
        record.extend(extra.iter().map(|(_, values)| values[i].to_string()));
        writer.write_record(&record)?;
    }
    writer.flush()
}
