//! On-disk zero cache.
//!
//! One file per `(q, nu)`: a header line `#qbf-zeros v1 q=<12dp> nu=<12dp>` followed by
//! `k<TAB>value<TAB>eps<TAB>alpha<TAB>certified` rows with 17 significant digits, which
//! round-trips binary64 exactly. Files with a foreign header or malformed rows are
//! ignored and rewritten.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

pub const ENV_VAR: &str = "QBF_CACHE_DIR";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroRow {
    pub k: usize,
    pub value: f64,
    pub eps: f64,
    pub alpha: Option<f64>,
    pub certified: bool,
}

/// `--cache` beats `QBF_CACHE_DIR`, which beats the user cache directory.
pub fn cache_dir(flag: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = flag {
        return Some(p.to_path_buf());
    }
    if let Some(p) = std::env::var_os(ENV_VAR).filter(|v| !v.is_empty()) {
        return Some(PathBuf::from(p));
    }
    if let Some(p) = std::env::var_os("XDG_CACHE_HOME").filter(|v| !v.is_empty()) {
        return Some(PathBuf::from(p).join("qbf"));
    }
    std::env::var_os("HOME").filter(|v| !v.is_empty()).map(|h| PathBuf::from(h).join(".cache").join("qbf"))
}

pub fn header(q: f64, nu: f64) -> String {
    format!("#qbf-zeros v1 q={q:.12} nu={nu:.12}")
}

pub fn file_path(dir: &Path, q: f64, nu: f64) -> PathBuf {
    dir.join(format!("zeros-q{q:.12}-nu{nu:.12}.tsv"))
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_row(line: &str) -> Option<ZeroRow> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != 5 {
        return None;
    }
    Some(ZeroRow {
        k: f[0].parse().ok()?,
        value: f[1].parse().ok()?,
        eps: f[2].parse().ok()?,
        alpha: if f[3] == "-" { None } else { Some(f[3].parse().ok()?) },
        certified: f[4].parse().ok()?,
    })
}

/// Rows of a valid cache file; empty when the file is missing or does not match.
pub fn load(path: &Path, q: f64, nu: f64) -> BTreeMap<usize, ZeroRow> {
    let Ok(text) = fs::read_to_string(path) else {
        return BTreeMap::new();
    };
    let mut lines = text.lines();
    if lines.next() != Some(header(q, nu).as_str()) {
        return BTreeMap::new();
    }
    let mut rows = BTreeMap::new();
    for line in lines.filter(|l| !l.is_empty()) {
        match parse_row(line) {
            Some(r) => {
                rows.insert(r.k, r);
            }
            None => return BTreeMap::new(),
        }
    }
    rows
}

pub fn render(q: f64, nu: f64, rows: &BTreeMap<usize, ZeroRow>) -> String {
    let mut s = header(q, nu);
    s.push('\n');
    for r in rows.values() {
        let alpha = r.alpha.map_or_else(|| "-".to_string(), fmt);
        s.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", r.k, fmt(r.value), fmt(r.eps), alpha, r.certified));
    }
    s
}

/// Writes through a temporary file in the same directory, then renames.
pub fn store(path: &Path, q: f64, nu: f64, rows: &BTreeMap<usize, ZeroRow>) -> anyhow::Result<()> {
    let dir = path.parent().context("cache path has no parent directory")?;
    fs::create_dir_all(dir).with_context(|| format!("creating cache directory {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(render(q, nu, rows).as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> BTreeMap<usize, ZeroRow> {
        let mut m = BTreeMap::new();
        m.insert(1, ZeroRow { k: 1, value: 1.916_728_395_850_936, eps: 0.061_354_081, alpha: None, certified: false });
        m.insert(3, ZeroRow { k: 3, value: 7.999_999_513_450_252, eps: 8.774e-8, alpha: Some(0.09), certified: true });
        m
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = file_path(dir.path(), 0.5, 1.0);
        store(&path, 0.5, 1.0, &rows()).unwrap();
        assert_eq!(load(&path, 0.5, 1.0), rows());
    }

    #[test]
    fn foreign_header_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = file_path(dir.path(), 0.5, 1.0);
        store(&path, 0.5, 1.0, &rows()).unwrap();
        assert!(load(&path, 0.5, 2.0).is_empty());
    }

    #[test]
    fn malformed_rows_invalidate_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = file_path(dir.path(), 0.5, 1.0);
        fs::write(&path, format!("{}\n1\tx\t0\t-\ttrue\n", header(0.5, 1.0))).unwrap();
        assert!(load(&path, 0.5, 1.0).is_empty());
    }

    #[test]
    fn header_format() {
        assert_eq!(header(0.5, 1.0), "#qbf-zeros v1 q=0.500000000000 nu=1.000000000000");
    }
}
