//! CSV input and output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use iforge_core::Dataset;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot open {}: {source}", path.display())]
    Open { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: no header or no data rows", path.display())]
    Empty { path: PathBuf },
    #[error("{}: no column named `{column}` (columns: {available})", path.display())]
    MissingColumn { path: PathBuf, column: String, available: String },
    #[error("{}: row {row} has {found} cells, expected {expected}", path.display())]
    Ragged { path: PathBuf, row: usize, expected: usize, found: usize },
    #[error("{}: row {row}, column `{column}`: {}", path.display(), describe(value))]
    NonNumeric { path: PathBuf, row: usize, column: String, value: String },
    #[error("{}: {source}", path.display())]
    Shape { path: PathBuf, source: iforge_core::Error },
}

fn describe(value: &str) -> String {
    if value.is_empty() {
        "blank cell".to_owned()
    } else {
        format!("`{value}` is not a finite number")
    }
}

/// A numeric CSV file. Rows are numbered from 1, header excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub path: PathBuf,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, LoadError> {
        let file = File::open(path).map_err(|source| LoadError::Open { path: path.to_owned(), source })?;
        let csv_err = |source| LoadError::Csv { path: path.to_owned(), source };
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(file);
        let columns: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
        if columns.is_empty() || columns.iter().all(String::is_empty) {
            return Err(LoadError::Empty { path: path.to_owned() });
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let row = i + 1;
            if record.len() != columns.len() {
                return Err(LoadError::Ragged {
                    path: path.to_owned(),
                    row,
                    expected: columns.len(),
                    found: record.len(),
                });
            }
            let values = record
                .iter()
                .zip(&columns)
                .map(|(cell, column)| match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(LoadError::NonNumeric {
                        path: path.to_owned(),
                        row,
                        column: column.clone(),
                        value: cell.to_owned(),
                    }),
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(values);
        }
        if rows.is_empty() {
            return Err(LoadError::Empty { path: path.to_owned() });
        }
        Ok(Self { path: path.to_owned(), columns, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize, LoadError> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| LoadError::MissingColumn {
            path: self.path.clone(),
            column: name.to_owned(),
            available: self.columns.join(", "),
        })
    }

    /// Split into features (every other column, file order) and `target`;
    /// `None` selects the last column.
    pub fn into_labelled(self, target: Option<&str>) -> Result<Labelled, LoadError> {
        let t = match target {
            Some(name) => self.column_index(name)?,
            None => self.columns.len() - 1,
        };
        if self.columns.len() < 2 {
            return Err(LoadError::Shape {
                path: self.path,
                source: iforge_core::Error::InvalidConfig("need at least one feature column".into()),
            });
        }
        let feature_names: Vec<String> =
            self.columns.iter().enumerate().filter(|&(j, _)| j != t).map(|(_, c)| c.clone()).collect();
        let targets: Vec<f64> = self.rows.iter().map(|r| r[t]).collect();
        let features: Vec<f64> =
            self.rows.iter().flat_map(|r| r.iter().enumerate().filter(|&(j, _)| j != t).map(|(_, v)| *v)).collect();
        let data = Dataset::new(features, targets, feature_names.len())
            .map_err(|source| LoadError::Shape { path: self.path.clone(), source })?;
        Ok(Labelled { data, feature_names, target_name: self.columns[t].clone() })
    }

    /// Select `names` in that order as features. Returns the targets too when
    /// `target` is a column of the file.
    pub fn select(&self, names: &[String], target: &str) -> Result<(Vec<f64>, Option<Vec<f64>>), LoadError> {
        let idx: Vec<usize> = names.iter().map(|n| self.column_index(n)).collect::<Result<_, _>>()?;
        let features = self.rows.iter().flat_map(|r| idx.iter().map(|&j| r[j])).collect();
        let targets = self.column_index(target).ok().map(|t| self.rows.iter().map(|r| r[t]).collect());
        Ok((features, targets))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Labelled {
    pub data: Dataset,
    pub feature_names: Vec<String>,
    pub target_name: String,
}

/// Read a regression dataset: features are all non-target columns in file
/// order. Warns when the file stem names a known benchmark whose shape
/// differs from the expected one.
pub fn load_csv(path: &Path, target: Option<&str>) -> Result<Labelled, LoadError> {
    let table = Table::read(path)?;
    if let Some(warning) = shape_warning(path, table.rows.len(), table.columns.len()) {
        log::warn!("{warning}");
    }
    table.into_labelled(target)
}

/// Expected `(rows, columns)` of the benchmark datasets, target included.
/// Files are matched by lower-case stem prefix.
pub const KNOWN_DATASETS: &[(&str, usize, usize)] = &[
    ("boston", 506, 14),
    ("concrete", 1030, 9),
    ("energy", 768, 9),
    ("kin8nm", 8192, 9),
    ("naval", 11934, 17),
    ("power", 9568, 5),
    ("protein", 45730, 10),
    ("wine", 1599, 12),
    ("yacht", 308, 7),
    ("year", 515345, 91),
    ("msd", 515345, 91),
];

pub fn known_dataset(path: &Path) -> Option<(&'static str, usize, usize)> {
    let stem = path.file_stem()?.to_str()?.to_ascii_lowercase();
    KNOWN_DATASETS.iter().copied().find(|(name, _, _)| stem.starts_with(name))
}

pub fn shape_warning(path: &Path, rows: usize, cols: usize) -> Option<String> {
    let (name, r, c) = known_dataset(path)?;
    (rows != r || cols != c).then(|| {
        format!("{}: {name} is expected to have {r} rows and {c} columns, found {rows} and {cols}", path.display())
    })
}

/// Full round-trip formatting: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Column label of a significance level: `0.05` becomes `95`.
pub fn level_label(alpha: f64) -> String {
    let pct = (1.0 - alpha) * 100.0;
    let rounded = (pct * 1e6).round() / 1e6;
    format!("{rounded}")
}

/// CSV writer whose first line records the manifest hash as a `#` comment.
pub fn create_csv(path: &Path, manifest_hash: &str) -> std::io::Result<csv::Writer<BufWriter<File>>> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# manifest {manifest_hash}")?;
    Ok(csv::Writer::from_writer(out))
}

/// Read a CSV written by [`create_csv`] back as strings.
pub fn read_artifact_csv(path: &Path) -> csv::Result<Vec<csv::StringRecord>> {
    csv::ReaderBuilder::new().comment(Some(b'#')).has_headers(false).from_path(path)?.records().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(contents: &str, name: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        std::fs::File::create(&path).unwrap().write_all(contents.as_bytes()).unwrap();
        (dir, path)
    }

    #[test]
    fn features_are_the_non_target_columns_in_order() {
        let (_d, path) = file("a,y,b\n1,10,2\n3,20,4\n5,30,6\n", "toy.csv");
        let l = load_csv(&path, Some("y")).unwrap();
        assert_eq!((l.data.len(), l.data.dim()), (3, 2));
        assert_eq!(l.feature_names, ["a", "b"]);
        assert_eq!(l.data.row(1), &[3.0, 4.0]);
        assert_eq!(l.data.targets(), &[10.0, 20.0, 30.0]);
        let last = load_csv(&path, None).unwrap();
        assert_eq!(last.target_name, "b");
    }

    #[test]
    fn bad_cells_name_their_row() {
        let (_d, path) = file("a,b,y\n1,2,3\n4,,6\n", "blank.csv");
        let err = load_csv(&path, Some("y")).unwrap_err();
        assert!(matches!(&err, LoadError::NonNumeric { row: 2, column, .. } if column == "b"), "{err}");
        assert!(err.to_string().contains("row 2"));
        assert!(err.to_string().contains("blank cell"));

        let (_d, path) = file("a,y\n1,2\nx,3\n", "text.csv");
        assert!(matches!(load_csv(&path, None), Err(LoadError::NonNumeric { row: 2, .. })));
        let (_d, path) = file("a,y\n1,2\n1\n", "ragged.csv");
        assert!(matches!(load_csv(&path, None), Err(LoadError::Ragged { row: 2, found: 1, .. })));
    }

    #[test]
    fn missing_target_and_empty_files_are_errors() {
        let (_d, path) = file("a,b\n1,2\n", "t.csv");
        let err = load_csv(&path, Some("y")).unwrap_err();
        assert!(matches!(err, LoadError::MissingColumn { .. }));
        assert!(err.to_string().contains("a, b"));
        let (_d, path) = file("", "empty.csv");
        assert!(matches!(load_csv(&path, None), Err(LoadError::Empty { .. })));
        let (_d, path) = file("a,y\n", "header_only.csv");
        assert!(matches!(load_csv(&path, None), Err(LoadError::Empty { .. })));
        assert!(matches!(load_csv(Path::new("/nonexistent/x.csv"), None), Err(LoadError::Open { .. })));
    }

    #[test]
    fn known_shapes_warn_on_mismatch() {
        assert_eq!(known_dataset(Path::new("data/Boston.csv")).map(|k| k.0), Some("boston"));
        assert!(shape_warning(Path::new("boston.csv"), 506, 14).is_none());
        assert!(shape_warning(Path::new("boston.csv"), 505, 14).unwrap().contains("506"));
        assert!(shape_warning(Path::new("mine.csv"), 3, 3).is_none());
    }

    #[test]
    fn formatting_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.12345679, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_opt(None), "");
        assert_eq!(level_label(0.01), "99");
        assert_eq!(level_label(0.05), "95");
        assert_eq!(level_label(0.10), "90");
        assert_eq!(level_label(0.025), "97.5");
    }
}
