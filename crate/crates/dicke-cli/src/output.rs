//! Deterministic output formatting: CSV tables and flat key-value records,
//! floats at 12 significant digits so identical runs are byte-identical
//! across platforms.

use std::fs;
use std::io::Write;
use std::path::Path;

/// 12 significant digits in scientific notation.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut buf = String::new();
    buf.push_str(&header.join(","));
    buf.push('\n');
    for row in rows {
        buf.push_str(&row.join(","));
        buf.push('\n');
    }
    atomic_write(path, buf.as_bytes())
}

/// Flat `key = value` record (TOML-compatible).
pub fn write_flat(path: &Path, pairs: &[(&str, String)]) -> std::io::Result<()> {
    let mut buf = String::new();
    for (key, value) in pairs {
        buf.push_str(key);
        buf.push_str(" = ");
        buf.push_str(value);
        buf.push('\n');
    }
    atomic_write(path, buf.as_bytes())
}

fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    f.flush()
}
