use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// CSV table with a header row and `\n` line endings.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Table { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(OutputDir { root: root.to_path_buf() })
    }

    /// Writes through a temporary file in the same directory, then renames.
    pub fn write(&self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.root.join(name)).map_err(|e| e.error)?;
        Ok(())
    }

    pub fn write_table(&self, name: &str, table: Table) -> std::io::Result<()> {
        self.write(name, &table.into_bytes())
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> std::io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }
}

/// Run metadata. The timestamp comes from `SOURCE_DATE_EPOCH` only, so
/// repeated runs stay byte-identical.
pub fn run_metadata(command: &str, cfg: &RunConfig) -> Value {
    let timestamp = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse::<u64>().ok());
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": timestamp,
        "config": cfg,
    })
}

pub fn complex(z: parallel_spectra::C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0, -2.5e-12, 1.0 / 3.0, 6.02e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.0), "1.0");
    }

    #[test]
    fn table_uses_newlines() {
        let mut t = Table::new(&["a", "b"]);
        t.row(["1", "x"]);
        assert_eq!(String::from_utf8(t.into_bytes()).unwrap(), "a,b\n1,x\n");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir::create(dir.path()).unwrap();
        out.write("f.txt", b"one").unwrap();
        out.write("f.txt", b"two").unwrap();
        assert_eq!(std::fs::read(dir.path().join("f.txt")).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
