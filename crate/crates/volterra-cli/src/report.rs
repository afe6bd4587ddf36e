//! Aggregate manifests into one pass/fail table keyed by check id.

use std::path::Path;

use crate::manifest::Manifest;

pub struct ReportRow {
    pub id: String,
    pub kind: String,
    pub passed: bool,
    pub detail: String,
}

pub fn collect(paths: &[std::path::PathBuf]) -> anyhow::Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for path in paths {
        let manifest = Manifest::from_path(Path::new(path))
            .map_err(|e| anyhow::anyhow!("manifest {}: {e}", path.display()))?;
        for check in &manifest.checks {
            rows.push(ReportRow {
                id: check.id.clone(),
                kind: manifest.kind.clone(),
                passed: check.passed,
                detail: check.detail.clone(),
            });
        }
    }
    Ok(rows)
}

/// Render the table; returns true when every criterion passed.
pub fn render(rows: &[ReportRow], out: &mut impl std::io::Write) -> anyhow::Result<bool> {
    let width = rows.iter().map(|r| r.id.len()).max().unwrap_or(8).max(8);
    writeln!(out, "{:<width$}  {:<10}  {:<6}  detail", "criterion", "kind", "status")?;
    let mut all = true;
    for row in rows {
        all &= row.passed;
        writeln!(
            out,
            "{:<width$}  {:<10}  {:<6}  {}",
            row.id,
            row.kind,
            if row.passed { "PASS" } else { "FAIL" },
            row.detail
        )?;
    }
    if rows.is_empty() {
        writeln!(out, "(no criteria)")?;
    }
    Ok(all)
}
