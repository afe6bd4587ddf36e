//! CSV emission with versioned schemas, byte-deterministic for a fixed
//! `(config, seed)`.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};

pub const SCHEMA_VERSION: u32 = 1;

/// Versioned CSV table: a schema comment line, a header row, then data rows.
pub struct CsvTable {
    schema: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(kind: &str, header: &[&str]) -> Self {
        Self {
            schema: format!("# schema volterra/{kind} v{SCHEMA_VERSION}"),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.header.len(), "row width mismatch");
        self.rows.push(cells);
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let mut out = std::io::BufWriter::new(
            std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?,
        );
        writeln!(out, "{}", self.schema)?;
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Deterministic float formatting used in every table.
pub fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.12e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Validate a table on read-back: schema line matches the kind and version,
/// header has the expected columns, all rows parse as floats where expected.
pub fn validate_csv(path: &Path, kind: &str, expected_header: &[&str]) -> anyhow::Result<usize> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let schema = lines.next().context("missing schema line")?;
    let expected_schema = format!("# schema volterra/{kind} v{SCHEMA_VERSION}");
    if schema != expected_schema {
        bail!("schema mismatch in {}: `{schema}` vs `{expected_schema}`", path.display());
    }
    let header = lines.next().context("missing header")?;
    if header != expected_header.join(",") {
        bail!("header mismatch in {}: `{header}`", path.display());
    }
    let mut count = 0;
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != expected_header.len() {
            bail!("row {i} of {} has {} cells", path.display(), cells.len());
        }
        count += 1;
    }
    Ok(count)
}
