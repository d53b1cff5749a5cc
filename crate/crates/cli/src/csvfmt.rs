//! CSV helpers: full round-trip float formatting and strict re-parsing.

use anyhow::{anyhow, bail, Result};

/// 17-significant-digit scientific notation with a '.' separator; parses back
/// to the identical f64 bit pattern.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV document from a header and rows, with a trailing newline.
pub fn document(header: &str, rows: &[String]) -> String {
    let mut out = String::with_capacity(header.len() + rows.iter().map(|r| r.len() + 1).sum::<usize>() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}

/// Parse a CSV document produced by [`document`], checking the header.
pub fn parse_document(text: &str, expect_header: &str) -> Result<Vec<Vec<String>>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty CSV"))?;
    if header != expect_header {
        bail!("header mismatch: expected `{expect_header}`, got `{header}`");
    }
    let cols = expect_header.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != cols {
            bail!("row {}: expected {cols} fields, got {}", i + 2, fields.len());
        }
        rows.push(fields);
    }
    Ok(rows)
}

pub fn parse_f64(field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|e| anyhow!("bad float `{field}`: {e}"))
}
