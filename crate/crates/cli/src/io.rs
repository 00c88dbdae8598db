use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use relu_pwl::{Dataset, Error};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// The `"format"` tag of a JSON artifact.
pub fn format_of(text: &str) -> Result<String> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(Error::from)?;
    v.get("format")
        .and_then(|f| f.as_str())
        .map(str::to_owned)
        .ok_or_else(|| Error::Parse("missing \"format\" field".into()).into())
}

/// Rows `x1,..,xn,y`. A first row that does not parse as numbers is taken
/// as a header.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("{} row {}: {e}", path.display(), i + 1)).into()),
        };
        if row.len() < 2 {
            return Err(Error::Parse(format!("{} row {}: need at least one x column and a y column", path.display(), i + 1)).into());
        }
        let (y, x) = row.split_last().expect("non-empty");
        xs.push(x.to_vec());
        ys.push(*y);
    }
    Ok(Dataset::new(xs, ys)?)
}
