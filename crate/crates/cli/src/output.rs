//! Output files with a provenance header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

/// Comment lines written at the top of every output file.
#[derive(Debug, Clone)]
pub struct Stamp {
    pub command_line: String,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub b: Option<f64>,
    /// Additional `key: value` lines.
    pub extra: Vec<(String, String)>,
}

impl Stamp {
    pub fn new(command_line: &str) -> Self {
        Stamp {
            command_line: command_line.to_string(),
            seed: None,
            n: None,
            b: None,
            extra: Vec::new(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn b(mut self, b: f64) -> Self {
        self.b = Some(b);
        self
    }

    pub fn extra(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("# simplex-kde {}", env!("CARGO_PKG_VERSION")),
            format!("# command: {}", self.command_line),
        ];
        if let Some(s) = self.seed {
            out.push(format!("# seed: {s}"));
        }
        if let Some(n) = self.n {
            out.push(format!("# n: {n}"));
        }
        if let Some(b) = self.b {
            out.push(format!("# b: {b}"));
        }
        for (k, v) in &self.extra {
            out.push(format!("# {k}: {v}"));
        }
        out
    }
}

/// Opens `path`, writes the header, and returns the buffered writer.
pub fn create(path: &Path, stamp: &Stamp) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for line in stamp.lines() {
        writeln!(w, "{line}")?;
    }
    Ok(w)
}

/// Writes a CSV file: header comments, a column row, then `rows`.
pub fn write_csv<I, R>(path: &Path, stamp: &Stamp, columns: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let w = create(path, stamp)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(columns)?;
    for row in rows {
        csv.write_record(row)?;
    }
    csv.flush()?;
    Ok(())
}
