use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::DataSet;
use crate::error::{Error, Result};

/// Column roles for [`load_csv`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CsvOptions {
    pub label_column: Option<String>,
    pub id_column: Option<String>,
}

impl CsvOptions {
    pub fn labeled(label_column: impl Into<String>) -> Self {
        CsvOptions { label_column: Some(label_column.into()), id_column: None }
    }
}

/// Reads a headed CSV file. Every column other than the label and id columns
/// is a numeric feature.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<DataSet> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, options)
}

/// [`load_csv`] over any reader. Parse errors report the 1-based line number
/// in the input (the header is line 1).
pub fn read_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<DataSet> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &Option<String>| -> Result<Option<usize>> {
        match name {
            None => Ok(None),
            Some(n) => headers.iter().position(|h| h == n).map(Some).ok_or_else(|| Error::MissingColumn(n.clone())),
        }
    };
    let label_idx = find(&options.label_column)?;
    let id_idx = find(&options.id_column)?;
    let features: Vec<usize> = (0..headers.len()).filter(|&k| Some(k) != label_idx && Some(k) != id_idx).collect();
    if features.len() < 3 {
        return Err(Error::TooFewFeatures(features.len()));
    }

    let mut flat = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        for &k in &features {
            let cell = record.get(k).unwrap_or("");
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line,
                column: headers[k].clone(),
                message: if cell.is_empty() { "empty cell".to_string() } else { format!("'{cell}' is not a number") },
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row: line,
                    column: headers[k].clone(),
                    message: format!("'{cell}' is not finite"),
                });
            }
            flat.push(value);
        }
        if let Some(k) = label_idx {
            labels.push(record.get(k).unwrap_or("").to_string());
        }
        if let Some(k) = id_idx {
            ids.push(record.get(k).unwrap_or("").to_string());
        }
    }
    let p = features.len();
    let n = flat.len() / p;
    let values = DMatrix::from_row_slice(n, p, &flat);
    let names = features.iter().map(|&k| headers[k].clone()).collect();
    DataSet::new(values, names, label_idx.map(|_| labels), id_idx.map(|_| ids))
}

/// Writes `data` with a header; label and id columns come first when named.
/// Values use the shortest representation that parses back to the same
/// double.
pub fn write_csv<W: Write>(data: &DataSet, writer: W, options: &CsvOptions) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = Vec::new();
    if let Some(l) = &options.label_column {
        header.push(l);
    }
    if let Some(i) = &options.id_column {
        header.push(i);
    }
    header.extend(data.feature_names().iter().map(String::as_str));
    wtr.write_record(&header)?;
    for i in 0..data.n() {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        if options.label_column.is_some() {
            record.push(data.labels()[i].clone());
        }
        if options.id_column.is_some() {
            record.push(data.row_ids()[i].clone());
        }
        record.extend(data.values().row(i).iter().map(|v| v.to_string()));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes a numeric matrix with the given header, preceded by optional
/// string columns (one value per row each).
pub fn write_matrix_csv<W: Write>(
    writer: W,
    leading: &[(&str, &[String])],
    header: &[String],
    values: &DMatrix<f64>,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let head: Vec<&str> = leading.iter().map(|(h, _)| *h).chain(header.iter().map(String::as_str)).collect();
    wtr.write_record(&head)?;
    for i in 0..values.nrows() {
        let record: Vec<String> =
            leading.iter().map(|(_, col)| col[i].clone()).chain(values.row(i).iter().map(|v| v.to_string())).collect();
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}
