//! Delimited-text loading and declarative dataset recipes.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use pu_core::numkit::Matrix;
use pu_core::Dataset;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column:?}: non-numeric feature value {value:?}")]
    NonNumericFeature {
        line: u64,
        column: String,
        value: String,
    },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("no data rows in {0}")]
    Empty(PathBuf),
    #[error("invalid recipe {path}: {message}")]
    Recipe { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] pu_core::Error),
}

pub type Result<T, E = IngestError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub delimiter: u8,
    /// Column names for files without a header row.
    pub columns: Option<Vec<String>>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: b',',
            columns: None,
        }
    }
}

/// Source file, label and per-column treatment for one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecipe {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Relative paths resolve against the recipe's directory.
    pub source: PathBuf,
    pub label_column: String,
    pub positive_value: String,
    #[serde(default)]
    pub one_hot: Vec<String>,
    #[serde(default)]
    pub drop: Vec<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
}

fn default_delimiter() -> char {
    ','
}

struct Table {
    header: Vec<String>,
    rows: Vec<(u64, Vec<String>)>,
}

fn read_table(path: &Path, opts: &CsvOptions) -> Result<Table> {
    let file = fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(opts.columns.is_none())
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = match &opts.columns {
        Some(cols) => cols.clone(),
        None => reader
            .headers()
            .map_err(csv_error)?
            .iter()
            .map(str::to_owned)
            .collect(),
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(IngestError::Parse {
                line,
                column: record.len().min(header.len()) + 1,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        rows.push((line, record.iter().map(str::to_owned).collect()));
    }
    if rows.is_empty() {
        return Err(IngestError::Empty(path.to_path_buf()));
    }
    Ok(Table { header, rows })
}

fn csv_error(e: csv::Error) -> IngestError {
    let line = e.position().map_or(0, |p| p.line());
    let (column, message) = match e.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => (
            (*len).min(*expected_len) as usize + 1,
            format!("expected {expected_len} fields, found {len}"),
        ),
        csv::ErrorKind::Utf8 { err, .. } => (err.field() + 1, "invalid UTF-8".to_owned()),
        _ => (0, e.to_string()),
    };
    IngestError::Parse {
        line,
        column,
        message,
    }
}

fn parse_number(line: u64, column: &str, cell: &str) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IngestError::NonNumericFeature {
            line,
            column: column.to_owned(),
            value: cell.to_owned(),
        }),
    }
}

fn column_index(header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| IngestError::MissingColumn(name.to_owned()))
}

fn build(
    name: &str,
    table: Table,
    label: &str,
    positive: &str,
    one_hot: &[String],
    drop: &[String],
) -> Result<Dataset> {
    let label_idx = column_index(&table.header, label)?;
    for col in one_hot.iter().chain(drop) {
        column_index(&table.header, col)?;
    }

    // (source column, one-hot level) per output feature
    let mut plan: Vec<(usize, Option<String>)> = Vec::new();
    let mut names = Vec::new();
    for (j, h) in table.header.iter().enumerate() {
        if j == label_idx || drop.contains(h) {
            continue;
        }
        if one_hot.contains(h) {
            let levels: BTreeSet<&str> = table.rows.iter().map(|(_, r)| r[j].as_str()).collect();
            for level in levels {
                names.push(format!("{h}={level}"));
                plan.push((j, Some(level.to_owned())));
            }
        } else {
            names.push(h.clone());
            plan.push((j, None));
        }
    }

    let n = table.rows.len();
    let mut data = Vec::with_capacity(n * plan.len());
    let mut y = Vec::with_capacity(n);
    for (line, row) in &table.rows {
        for (j, level) in &plan {
            data.push(match level {
                Some(level) => f64::from(u8::from(row[*j] == *level)),
                None => parse_number(*line, &table.header[*j], &row[*j])?,
            });
        }
        y.push(u8::from(row[label_idx] == positive));
    }
    let features = Matrix::new(n, plan.len(), data)?;
    Ok(Dataset::new(name, features, y.clone(), Some(y))?.with_feature_names(names)?)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "data".to_owned(), |s| s.to_string_lossy().into_owned())
}

/// Loads a headered comma-separated file. Every column other than the label
/// must be numeric; `y = 1` where the label cell equals `positive_value`, and
/// `s` starts out equal to `y`.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    positive_value: &str,
) -> Result<Dataset> {
    load_csv_with(path, label_column, positive_value, &CsvOptions::default())
}

pub fn load_csv_with(
    path: impl AsRef<Path>,
    label_column: &str,
    positive_value: &str,
    opts: &CsvOptions,
) -> Result<Dataset> {
    let path = path.as_ref();
    let table = read_table(path, opts)?;
    build(&stem(path), table, label_column, positive_value, &[], &[])
}

impl DatasetRecipe {
    pub fn from_toml(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut recipe: DatasetRecipe = toml::from_str(&text).map_err(|e| IngestError::Recipe {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if !recipe.delimiter.is_ascii() {
            return Err(IngestError::Recipe {
                path: path.to_path_buf(),
                message: "delimiter must be a single ASCII character".into(),
            });
        }
        if recipe.source.is_relative() {
            if let Some(dir) = path.parent() {
                recipe.source = dir.join(&recipe.source);
            }
        }
        Ok(recipe)
    }

    pub fn load(&self) -> Result<Dataset> {
        self.load_from(&self.source)
    }

    /// Applies the recipe to a file other than `source`.
    pub fn load_from(&self, path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let opts = CsvOptions {
            delimiter: self.delimiter as u8,
            columns: self.columns.clone(),
        };
        let table = read_table(path, &opts)?;
        let name = self.name.clone().unwrap_or_else(|| stem(path));
        build(
            &name,
            table,
            &self.label_column,
            &self.positive_value,
            &self.one_hot,
            &self.drop,
        )
    }
}
