//! CSV input for datasets and number formatting shared by every writer.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{MdLassoError, Result};
use crate::model::Dataset;

/// Which CSV column holds the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseColumn {
    Name(String),
    Index(usize),
}

impl ResponseColumn {
    /// Header names win; a bare integer that matches no header is an index.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => ResponseColumn::Index(i),
            Err(_) => ResponseColumn::Name(s.to_string()),
        }
    }

    fn resolve(&self, headers: &[String]) -> Result<usize> {
        match self {
            ResponseColumn::Name(name) => headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| MdLassoError::MissingResponse(name.clone())),
            ResponseColumn::Index(i) => {
                if let Some(pos) = headers.iter().position(|h| *h == i.to_string()) {
                    return Ok(pos);
                }
                if *i < headers.len() {
                    Ok(*i)
                } else {
                    Err(MdLassoError::MissingResponse(i.to_string()))
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub data: Dataset,
    pub feature_names: Vec<String>,
    pub response_name: String,
}

pub fn load_csv(path: impl AsRef<Path>, response: &ResponseColumn) -> Result<LabeledDataset> {
    let file = File::open(path.as_ref())?;
    read_csv(file, response)
}

pub fn read_csv<R: Read>(reader: R, response: &ResponseColumn) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| MdLassoError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.len() < 2 {
        return Err(MdLassoError::Csv(
            "need a response column and at least one predictor column".into(),
        ));
    }
    let resp = response.resolve(&headers)?;
    let p = headers.len() - 1;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| MdLassoError::Csv(format!("row {row}: {e}")))?;
        if record.len() != headers.len() {
            return Err(MdLassoError::CsvCell {
                row,
                column: "*".into(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| MdLassoError::CsvCell {
                row,
                column: headers[j].clone(),
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(MdLassoError::CsvCell {
                    row,
                    column: headers[j].clone(),
                    message: format!("`{cell}` is not finite"),
                });
            }
            if j == resp {
                ys.push(v);
            } else {
                xs.push(v);
            }
        }
    }
    let n = ys.len();
    if n == 0 {
        return Err(MdLassoError::TooFewObservations {
            needed: 1,
            found: 0,
        });
    }
    let x = Array2::from_shape_vec((n, p), xs).map_err(|e| MdLassoError::Csv(e.to_string()))?;
    let feature_names = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != resp)
        .map(|(_, h)| h.clone())
        .collect();
    Ok(LabeledDataset {
        data: Dataset::new(x, Array1::from(ys))?,
        feature_names,
        response_name: headers[resp].clone(),
    })
}

/// Scientific notation with 17 significant digits; round-trips every f64.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}
