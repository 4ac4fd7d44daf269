//! Atomic CSV, SVG and JSON-lines writers.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Writes `contents` to `dir/name` through a temporary file in the same
/// directory, so a failed write leaves no partial file behind.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory `{}`", dir.display()))?;
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in `{}`", dir.display()))?;
    tmp.write_all(contents)
        .and_then(|_| tmp.flush())
        .with_context(|| format!("cannot write `{}`", target.display()))?;
    tmp.persist(&target)
        .with_context(|| format!("cannot move output into `{}`", target.display()))?;
    Ok(target)
}

/// Shortest decimal string that parses back to the same value.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// A CSV table with a single `#` metadata line above the column header.
pub struct Table {
    metadata: String,
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(metadata: &str, columns: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(columns)?;
        Ok(Self {
            metadata: metadata.to_string(),
            writer,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn into_bytes(self) -> Result<Vec<u8>> {
        let body = self.writer.into_inner().map_err(|e| e.into_error())?;
        let mut out = format!("# {}\n", self.metadata).into_bytes();
        out.extend(body);
        Ok(out)
    }

    pub fn write(self, dir: &Path, name: &str) -> Result<PathBuf> {
        write_atomic(dir, name, &self.into_bytes()?)
    }
}

/// Serializes each item as one JSON object per line.
pub fn json_lines<T: serde::Serialize>(items: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item)?;
        out.push(b'\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-20, 123456.789, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.0), "1");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new("arbsim test seed=1", &["a", "b"]).unwrap();
        t.row([num(1.5), num(2.0)]).unwrap();
        let text = String::from_utf8(t.into_bytes().unwrap()).unwrap();
        assert_eq!(text, "# arbsim test seed=1\na,b\n1.5,2\n");
    }

    #[test]
    fn atomic_write_replaces_target() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "x.csv", b"one").unwrap();
        let p = write_atomic(dir.path(), "x.csv", b"two").unwrap();
        assert_eq!(std::fs::read(p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
