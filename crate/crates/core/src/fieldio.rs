//! Text field files.
//!
//! ```text
//! wallscale-field v1 L=<half width> n1=<> n3=<> t=<thickness>
//! # optional comment lines
//! m1 m2 m3            (n1 * n3 lines, x3 outer, x1 inner)
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Result, WallError};
use crate::fields::{MagnetizationField, StripGrid};

const MAGIC: &str = "wallscale-field";

/// Serializes `field` with the given comment lines (written after `# `).
pub fn format_field(field: &MagnetizationField, comments: &[String]) -> String {
    let g = field.grid();
    let mut s = String::with_capacity(64 * g.len());
    let _ = writeln!(
        s,
        "{MAGIC} v1 L={:e} n1={} n3={} t={:e}",
        g.half_width(),
        g.n1(),
        g.n3(),
        g.thickness()
    );
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(s, "# {line}");
        }
    }
    for v in field.values() {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", v[0], v[1], v[2]);
    }
    s
}

pub fn write_field(path: &Path, field: &MagnetizationField, comments: &[String]) -> Result<()> {
    fs::write(path, format_field(field, comments)).map_err(|e| WallError::io(path, e))
}

pub fn read_field(path: &Path) -> Result<MagnetizationField> {
    let text = fs::read_to_string(path).map_err(|e| WallError::io(path, e))?;
    parse_field(&text, path)
}

fn header_value<'a>(tokens: &[&'a str], key: &str) -> Option<&'a str> {
    tokens.iter().find_map(|t| t.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

pub fn parse_field(text: &str, path: &Path) -> Result<MagnetizationField> {
    let err = |line: usize, msg: String| WallError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.first() != Some(&MAGIC) || tokens.get(1) != Some(&"v1") {
        return Err(err(1, format!("expected header '{MAGIC} v1 ...', found '{header}'")));
    }
    let get = |key: &str| -> Result<&str> {
        header_value(&tokens, key).ok_or_else(|| err(1, format!("header lacks {key}=")))
    };
    let half: f64 = get("L")?.parse().map_err(|e| err(1, format!("L: {e}")))?;
    let thick: f64 = get("t")?.parse().map_err(|e| err(1, format!("t: {e}")))?;
    let n1: usize = get("n1")?.parse().map_err(|e| err(1, format!("n1: {e}")))?;
    let n3: usize = get("n3")?.parse().map_err(|e| err(1, format!("n3: {e}")))?;
    let grid = StripGrid::new(half, thick, n1, n3).map_err(|e| err(1, e.to_string()))?;
    let mut values = Vec::with_capacity(grid.len());
    let mut last = 1;
    for (no, line) in lines {
        last = no;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if values.len() == grid.len() {
            return Err(err(no, format!("more than n1*n3 = {} data lines", grid.len())));
        }
        let mut v = [0.0; 3];
        let mut parts = trimmed.split_whitespace();
        for (c, slot) in v.iter_mut().enumerate() {
            let tok = parts
                .next()
                .ok_or_else(|| err(no, format!("expected 3 numbers, found {c}")))?;
            *slot = tok
                .parse()
                .map_err(|e| err(no, format!("column {}: '{tok}': {e}", c + 1)))?;
        }
        if parts.next().is_some() {
            return Err(err(no, "expected 3 numbers, found more".into()));
        }
        values.push(v);
    }
    if values.len() != grid.len() {
        return Err(err(
            last,
            format!("truncated: {} of {} data lines", values.len(), grid.len()),
        ));
    }
    MagnetizationField::from_values(grid, values).map_err(|e| err(last, e.to_string()))
}
