//! Reading a numeric column from a CSV file.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

/// Reads one numeric column. With a header row the column is chosen by
/// `column` (name or 0-based index) and defaults to the last one, so a
/// `date,value` file works unchanged; a file whose first row is numeric
/// is read without a header.
pub fn read_column(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut records = rd.records();
    let first = records.next().ok_or_else(|| anyhow!("{} is empty", path.display()))??;
    let headerless = first.iter().all(|f| f.parse::<f64>().is_ok());
    let width = first.len();
    let idx = match column {
        None => width - 1,
        Some(c) => match c.parse::<usize>() {
            Ok(i) if i < width => i,
            _ if !headerless => first
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| anyhow!("column '{c}' not found in {}", path.display()))?,
            _ => bail!("column '{c}' out of range ({width} columns)"),
        },
    };
    let mut out = Vec::new();
    let parse = |rec: &csv::StringRecord, line: u64| -> Result<f64> {
        let f = rec.get(idx).ok_or_else(|| anyhow!("line {line}: missing column {idx}"))?;
        f.parse::<f64>().map_err(|_| anyhow!("line {line}: '{f}' is not a number"))
    };
    if headerless {
        out.push(parse(&first, 1)?);
    }
    for (k, rec) in records.enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push(parse(&rec, k as u64 + 2)?);
    }
    if out.is_empty() {
        bail!("{} has no observations", path.display());
    }
    Ok(out)
}
