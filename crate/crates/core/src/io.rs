//! CSV ingest and export of datasets.
//!
//! Columns are `y,delta,z1..zq,w1..wJ`; the `z`/`w` split is read from the
//! header prefixes.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fit::Dataset;

enum Column {
    Y,
    Delta,
    Z,
    W,
}

fn classify(name: &str) -> Option<Column> {
    let lower = name.trim().to_ascii_lowercase();
    match lower.as_str() {
        "y" => Some(Column::Y),
        "delta" => Some(Column::Delta),
        s if s.starts_with('z') => Some(Column::Z),
        s if s.starts_with('w') => Some(Column::W),
        _ => None,
    }
}

pub fn read_dataset_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_dataset(file)
}

pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut kinds = Vec::with_capacity(headers.len());
    for name in headers.iter() {
        kinds.push(classify(name).ok_or_else(|| Error::Data {
            line: 1,
            msg: format!("unrecognized column {name:?}"),
        })?);
    }
    let count = |k: fn(&Column) -> bool| kinds.iter().filter(|c| k(c)).count();
    if count(|c| matches!(c, Column::Y)) != 1 || count(|c| matches!(c, Column::Delta)) != 1 {
        return Err(Error::Data {
            line: 1,
            msg: "header needs exactly one y and one delta column".into(),
        });
    }
    let z_names: Vec<String> = headers
        .iter()
        .zip(&kinds)
        .filter(|(_, k)| matches!(k, Column::Z))
        .map(|(h, _)| h.to_string())
        .collect();
    let w_names: Vec<String> = headers
        .iter()
        .zip(&kinds)
        .filter(|(_, k)| matches!(k, Column::W))
        .map(|(h, _)| h.to_string())
        .collect();

    let mut y = Vec::new();
    let mut delta = Vec::new();
    let mut z = Vec::new();
    let mut w = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| Error::Data {
            line,
            msg: e.to_string(),
        })?;
        if record.len() != kinds.len() {
            return Err(Error::Data {
                line,
                msg: format!("expected {} fields, found {}", kinds.len(), record.len()),
            });
        }
        for ((field, kind), name) in record.iter().zip(&kinds).zip(headers.iter()) {
            let value: f64 = field.parse().map_err(|_| Error::Data {
                line,
                msg: format!("column {name}: {field:?} is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Data {
                    line,
                    msg: format!("column {name}: non-finite value"),
                });
            }
            match kind {
                Column::Y => {
                    if value <= 0.0 {
                        return Err(Error::Data {
                            line,
                            msg: format!("observation time must be positive, got {value}"),
                        });
                    }
                    y.push(value)
                }
                Column::Delta => {
                    let d = if value == 0.0 {
                        false
                    } else if value == 1.0 {
                        true
                    } else {
                        return Err(Error::Data {
                            line,
                            msg: format!("delta must be 0 or 1, got {field}"),
                        });
                    };
                    delta.push(d)
                }
                Column::Z => z.push(value),
                Column::W => w.push(value),
            }
        }
    }
    let n = y.len();
    if n == 0 {
        return Err(Error::Data {
            line: 2,
            msg: "no data rows".into(),
        });
    }
    let z = DMatrix::from_row_slice(n, z_names.len(), &z);
    let w = DMatrix::from_row_slice(n, w_names.len(), &w);
    Dataset::with_names(y, delta, z, w, z_names, w_names)
}

pub fn write_dataset_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_dataset(data, file)
}

/// Writes with round-trip float formatting so a re-read is exact.
pub fn write_dataset<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["y".to_string(), "delta".to_string()];
    header.extend(data.z_names.iter().cloned());
    header.extend(data.w_names.iter().cloned());
    wtr.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec = vec![
            format!("{:?}", data.y[i]),
            (data.delta[i] as u8).to_string(),
        ];
        rec.extend(data.z.row(i).iter().map(|v| format!("{v:?}")));
        rec.extend(data.w.row(i).iter().map(|v| format!("{v:?}")));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}
