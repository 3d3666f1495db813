//! CSV ingestion of share tables.

use std::fmt;
use std::path::Path;

use simplex_kde::simplex::validate_full_composition;
use simplex_kde::{KdeError, ShareTable, ValidationMode};

/// Which columns of the input hold what.
#[derive(Debug, Clone, Default)]
pub struct ColumnSpec {
    /// Date column name; the first column when absent.
    pub date: Option<String>,
    /// Share columns in order; every non-date column when absent.
    pub shares: Option<Vec<String>>,
}

#[derive(Debug)]
pub enum InputError {
    Io(String),
    MissingColumn(String),
    UnparsableRow { row: usize, reason: String },
    Data(KdeError),
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputError::Io(msg) => write!(f, "{msg}"),
            InputError::MissingColumn(name) => write!(f, "missing column '{name}'"),
            InputError::UnparsableRow { row, reason } => {
                write!(f, "unparsable row {row}: {reason}")
            }
            InputError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for InputError {}

/// A validated share table with its date column.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub table: ShareTable,
    pub dates: Vec<String>,
    /// Rows that renormalize mode had to clip or rescale.
    pub renormalized: usize,
}

impl Ingested {
    pub fn d(&self) -> usize {
        self.table.components() - 1
    }

    /// `(min, max)` of each share column.
    pub fn ranges(&self) -> Vec<(f64, f64)> {
        (0..self.table.components())
            .map(|k| {
                self.table.rows().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r[k]), hi.max(r[k]))
                })
            })
            .collect()
    }
}

/// Reads a comma-separated table with a header row. Lines starting with
/// `#` are skipped, so files written by `simulate` can be read back. Row
/// numbers in errors count data rows from 1.
pub fn read_shares(path: &Path, spec: &ColumnSpec, mode: ValidationMode) -> Result<Ingested, InputError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| InputError::Io(format!("{}: {e}", path.display())))?;
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(InputError::Io(format!("{}: {e}", path.display()))),
    };
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(InputError::Data(KdeError::EmptyData));
    }
    let find = |name: &str| -> Result<usize, InputError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| InputError::MissingColumn(name.to_string()))
    };
    let date_idx = match &spec.date {
        Some(name) => find(name)?,
        None => 0,
    };
    let share_idx: Vec<usize> = match &spec.shares {
        Some(names) => names.iter().map(|n| find(n)).collect::<Result<_, _>>()?,
        None => (0..headers.len()).filter(|&k| k != date_idx).collect(),
    };
    if share_idx.len() < 2 {
        return Err(InputError::Data(KdeError::InvalidConfig(
            "at least two share columns are required".into(),
        )));
    }
    let labels: Vec<String> = share_idx.iter().map(|&k| headers[k].to_string()).collect();

    let mut rows = Vec::new();
    let mut dates = Vec::new();
    let mut renormalized = 0;
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| InputError::UnparsableRow {
            row,
            reason: e.to_string(),
        })?;
        let parts = share_idx
            .iter()
            .map(|&c| {
                let field = record.get(c).unwrap_or("");
                field.parse::<f64>().map_err(|_| InputError::UnparsableRow {
                    row,
                    reason: format!("column '{}': '{field}' is not a number", headers[c].to_string()),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let (_, rescaled) = validate_full_composition(&parts, mode).map_err(|e| {
            InputError::UnparsableRow {
                row,
                reason: match e {
                    KdeError::RowNotNormalized { sum, .. } => format!("shares sum to {sum}, not 1"),
                    other => other.to_string(),
                },
            }
        })?;
        let stored = if rescaled {
            renormalized += 1;
            let clipped: Vec<f64> = parts.iter().map(|p| p.max(0.0)).collect();
            let sum: f64 = clipped.iter().sum();
            clipped.iter().map(|p| p / sum).collect()
        } else {
            parts
        };
        rows.push(stored);
        dates.push(record.get(date_idx).unwrap_or("").to_string());
    }
    let table = ShareTable::new(rows, labels).map_err(InputError::Data)?;
    Ok(Ingested {
        table,
        dates,
        renormalized,
    })
}
