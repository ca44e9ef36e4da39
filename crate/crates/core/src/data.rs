//! Single-column CSV ingestion: one value per line, an optional header, LF or
//! CRLF line endings.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

fn read_column<R: Read, T>(
    reader: R,
    origin: &str,
    header: &str,
    parse: impl Fn(&str) -> Option<T>,
    expected: &str,
) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| Error::Parse {
            path: origin.to_string(),
            line,
            message: e.to_string(),
        })?;
        if record.len() != 1 {
            return Err(Error::Parse {
                path: origin.to_string(),
                line,
                message: format!("expected one column, found {}", record.len()),
            });
        }
        let field = record[0].trim_start_matches('\u{feff}');
        if field.is_empty() {
            continue;
        }
        if line == 1 && field.eq_ignore_ascii_case(header) {
            continue;
        }
        match parse(field) {
            Some(v) => out.push(v),
            None => {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line,
                    message: format!("expected {expected}, found {field:?}"),
                })
            }
        }
    }
    Ok(out)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn parse_real(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_flag(s: &str) -> Option<bool> {
    match s {
        "1" | "true" | "TRUE" | "True" => Some(true),
        "0" | "false" | "FALSE" | "False" => Some(false),
        _ => None,
    }
}

/// Parse counters from any reader. `origin` names the source in errors.
pub fn parse_counters<R: Read>(reader: R, origin: &str) -> Result<Vec<f64>> {
    read_column(reader, origin, "value", parse_real, "a finite real number")
}

/// Read counters from a file, optional header `value`.
pub fn read_counters(path: &Path) -> Result<Vec<f64>> {
    parse_counters(open(path)?, &path.display().to_string())
}

/// Parse privacy flags (`1`/`0` or `true`/`false`), optional header `ldp`.
pub fn parse_flags<R: Read>(reader: R, origin: &str) -> Result<Vec<bool>> {
    read_column(reader, origin, "ldp", parse_flag, "0, 1, true or false")
}

pub fn read_flags(path: &Path) -> Result<Vec<bool>> {
    parse_flags(open(path)?, &path.display().to_string())
}
