//! Datasets as CSV files with a header row.
//!
//! A column is numeric when every cell parses as a finite number, otherwise it
//! is categorical with levels in order of first appearance. Empty cells are
//! rejected.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use cwboost_core::data::{ColumnKind, Dataset, FeatureColumn};

use crate::error::IoError;

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<Table, IoError> {
    let file = File::open(path).map_err(|source| IoError::File { path: path.into(), source })?;
    read_table_from(file, path)
}

fn read_table_from(reader: impl Read, path: &Path) -> Result<Table, IoError> {
    let csv_err = |source| IoError::Csv { path: path.into(), source };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(IoError::Format { path: path.into(), message: "empty file".into() });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec.map_err(csv_err)?.iter().map(str::to_owned).collect::<Vec<_>>());
    }
    if rows.is_empty() {
        return Err(IoError::Format { path: path.into(), message: "no data rows".into() });
    }
    Ok(Table { header, rows })
}

fn column_values<'a>(table: &'a Table, col: usize, path: &Path) -> Result<Vec<&'a str>, IoError> {
    table
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let v = row[col].as_str();
            if v.is_empty() {
                Err(IoError::Format {
                    path: path.into(),
                    message: format!("missing value at line {}, column '{}'", i + 2, table.header[col]),
                })
            } else {
                Ok(v)
            }
        })
        .collect()
}

fn parse_numeric(values: &[&str]) -> Option<Vec<f64>> {
    values.iter().map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite())).collect()
}

fn to_dataset(table: Table, target: Option<&str>, categorical: &[String], path: &Path) -> Result<Dataset, IoError> {
    let target_idx = match target {
        Some(t) => table.header.iter().position(|h| h == t),
        None => None,
    };
    let mut columns = Vec::new();
    for (j, name) in table.header.iter().enumerate() {
        if Some(j) == target_idx {
            continue;
        }
        let values = column_values(&table, j, path)?;
        let numeric = if categorical.contains(name) { None } else { parse_numeric(&values) };
        columns.push(match numeric {
            Some(x) => FeatureColumn::numeric(name.clone(), x),
            None => FeatureColumn::from_labels(name.clone(), &values),
        });
    }
    let response = match target_idx {
        Some(j) => {
            let values = column_values(&table, j, path)?;
            values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| IoError::Format {
                        path: path.into(),
                        message: format!("non-numeric target '{v}' at line {}, column '{}'", i + 2, table.header[j]),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?
        }
        None => vec![0.0; table.rows.len()],
    };
    Ok(Dataset::new(columns, response, target.unwrap_or("y"))?)
}

/// Reads a training dataset; `target` must be a column. Columns named in
/// `categorical` are read as categorical even when they look numeric.
pub fn read_dataset(path: &Path, target: &str, categorical: &[String]) -> Result<Dataset, IoError> {
    let table = read_table(path)?;
    if !table.header.iter().any(|h| h == target) {
        return Err(IoError::MissingTarget(target.into()));
    }
    to_dataset(table, Some(target), categorical, path)
}

/// Reads rows for prediction. The target column is dropped when present;
/// the response of the returned dataset is zero otherwise.
pub fn read_features(path: &Path, target: Option<&str>, categorical: &[String]) -> Result<Dataset, IoError> {
    to_dataset(read_table(path)?, target, categorical, path)
}

/// Parses CSV text (used by tests and for in-memory data).
pub fn parse_dataset(text: &str, target: &str, categorical: &[String]) -> Result<Dataset, IoError> {
    let path = Path::new("<memory>");
    let table = read_table_from(text.as_bytes(), path)?;
    if !table.header.iter().any(|h| h == target) {
        return Err(IoError::MissingTarget(target.into()));
    }
    to_dataset(table, Some(target), categorical, path)
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Writes features followed by the target column.
pub fn write_dataset(data: &Dataset, path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(|source| IoError::File { path: path.into(), source })?;
    write_dataset_to(data, file, path)
}

fn write_dataset_to(data: &Dataset, out: impl Write, path: &Path) -> Result<(), IoError> {
    let csv_err = |source| IoError::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = data.columns().iter().map(|c| c.name.as_str()).collect();
    header.push(data.target());
    w.write_record(&header).map_err(csv_err)?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..data.n_rows() {
        row.clear();
        for c in data.columns() {
            row.push(match &c.kind {
                ColumnKind::Numeric(x) => fmt_f64(x[i]),
                ColumnKind::Categorical { levels, codes } => levels[codes[i] as usize - 1].clone(),
            });
        }
        row.push(fmt_f64(data.response()[i]));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| IoError::File { path: path.into(), source })?;
    Ok(())
}

/// CSV text of a dataset.
pub fn dataset_to_string(data: &Dataset) -> Result<String, IoError> {
    let mut buf = Vec::new();
    write_dataset_to(data, &mut buf, Path::new("<memory>"))?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_column_types() {
        let d = parse_dataset("a,b,y\n1,x,0\n2.5,z,1\n-3,x,1\n", "y", &[]).unwrap();
        assert_eq!(d.column("a").unwrap().as_numeric(), Some(&[1.0, 2.5, -3.0][..]));
        match &d.column("b").unwrap().kind {
            ColumnKind::Categorical { levels, codes } => {
                assert_eq!(levels, &["x", "z"]);
                assert_eq!(codes, &[1, 2, 1]);
            }
            _ => panic!("b should be categorical"),
        }
        assert_eq!(d.response(), &[0.0, 1.0, 1.0]);
    }

    #[test]
    fn forced_categorical() {
        let d = parse_dataset("a,y\n1,0\n2,1\n", "y", &["a".into()]).unwrap();
        assert!(matches!(d.column("a").unwrap().kind, ColumnKind::Categorical { .. }));
    }

    #[test]
    fn errors_name_the_cell() {
        let e = parse_dataset("a,y\n1,0\n,1\n", "y", &[]).unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("'a'"), "{e}");
        let e = parse_dataset("a,y\n1,0\n2,oops\n", "y", &[]).unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("'y'"), "{e}");
        assert!(matches!(parse_dataset("a,y\n1,0\n", "t", &[]), Err(IoError::MissingTarget(_))));
        assert!(parse_dataset("", "y", &[]).is_err());
        assert!(parse_dataset("a,y\n", "y", &[]).is_err());
        assert!(parse_dataset("a,y\n1,2,3\n", "y", &[]).is_err());
    }

    #[test]
    fn round_trip() {
        let d = parse_dataset("a,b,y\n0.1,x,1e-7\n1e300,\"q,r\",2\n", "y", &[]).unwrap();
        let text = dataset_to_string(&d).unwrap();
        assert_eq!(parse_dataset(&text, "y", &[]).unwrap(), d);
    }
}
