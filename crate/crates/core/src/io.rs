//! File helpers: atomic writes and a small numeric CSV reader.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `contents` to a temporary file next to `path`, then renames it over
/// `path`, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Columns of a numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl NumericTable {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Parses comma- or whitespace-separated numbers. Blank lines and lines starting
/// with `#` are skipped. A first line that does not parse as numbers is taken
/// as the header; otherwise columns are named `c1..cd`.
pub fn parse_numeric_csv(text: &str) -> Result<NumericTable> {
    let mut header: Option<Vec<String>> = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_fields(line);
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(values) => {
                if columns.is_empty() {
                    columns = vec![Vec::new(); values.len()];
                    if header.is_none() {
                        header = Some((1..=values.len()).map(|i| format!("c{i}")).collect());
                    }
                }
                if values.len() != columns.len() {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("expected {} fields, found {}", columns.len(), values.len()),
                    });
                }
                for (c, v) in columns.iter_mut().zip(values) {
                    c.push(v);
                }
            }
            Err(e) => {
                if header.is_none() && columns.is_empty() {
                    header = Some(fields.iter().map(|s| s.to_string()).collect());
                } else {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: e.to_string(),
                    });
                }
            }
        }
    }
    let header = header.ok_or(Error::Parse {
        line: 0,
        message: "empty input".into(),
    })?;
    if columns.is_empty() {
        columns = vec![Vec::new(); header.len()];
    }
    if header.len() != columns.len() {
        return Err(Error::Parse {
            line: 1,
            message: format!("header has {} names for {} columns", header.len(), columns.len()),
        });
    }
    Ok(NumericTable { header, columns })
}

pub fn read_numeric_csv(path: &Path) -> Result<NumericTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_numeric_csv(&text)
}
