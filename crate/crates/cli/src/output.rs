//! Deterministic artifacts: CSV tables with a provenance line, pretty JSON,
//! a manifest of hashes, and wall-clock timings kept in their own file.

use crate::RunError;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

pub const MANIFEST: &str = "manifest.json";
pub const TIMINGS: &str = "timings.json";

/// A CSV table whose first line is `# provenance: ...`.
pub struct Table {
    provenance: String,
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(provenance: &str, header: &[&str]) -> Table {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Table {
            provenance: provenance.to_string(),
            writer,
        }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        let body = self.writer.into_inner().expect("in-memory flush");
        let mut out = format!("# provenance: {}\n", self.provenance).into_bytes();
        out.extend(body);
        out
    }
}

pub fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("serializable");
    b.push(b'\n');
    b
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files produced by one run, keyed by file name.
#[derive(Default)]
pub struct Artifacts {
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.insert(name.to_string(), bytes);
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, v: &T) {
        self.add(name, json_bytes(v));
    }

    /// Merges another run's files under a subdirectory prefix.
    pub fn nest(&mut self, prefix: &str, other: Artifacts) {
        for (k, v) in other.files {
            self.files.insert(format!("{prefix}/{k}"), v);
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    kind: &'a str,
    seed: u64,
    config_sha256: String,
    passed: bool,
    files: BTreeMap<&'a str, String>,
}

#[derive(Serialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub stages: BTreeMap<String, f64>,
}

/// Writes every artifact, then `manifest.json` and `timings.json`.
#[allow(clippy::too_many_arguments)]
pub fn write_all(
    dir: &Path,
    kind: &str,
    seed: u64,
    config_hash: &str,
    passed: bool,
    art: &Artifacts,
    timings: &Timings,
) -> Result<(), RunError> {
    let io = |e: std::io::Error, p: &Path| RunError::Output(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
    for (name, bytes) in &art.files {
        let p = dir.join(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io(e, parent))?;
        }
        std::fs::write(&p, bytes).map_err(|e| io(e, &p))?;
    }
    let manifest = Manifest {
        tool: "hitlab",
        version: env!("CARGO_PKG_VERSION"),
        kind,
        seed,
        config_sha256: config_hash.to_string(),
        passed,
        files: art.files.iter().map(|(k, v)| (k.as_str(), sha256_hex(v))).collect(),
    };
    let p = dir.join(MANIFEST);
    std::fs::write(&p, json_bytes(&manifest)).map_err(|e| io(e, &p))?;
    let p = dir.join(TIMINGS);
    std::fs::write(&p, json_bytes(timings)).map_err(|e| io(e, &p))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_starts_with_provenance() {
        let mut t = Table::new("exact", &["a", "b"]);
        t.row(["1/2", "x,y"]);
        let s = String::from_utf8(t.into_bytes()).unwrap();
        assert_eq!(s, "# provenance: exact\na,b\n1/2,\"x,y\"\n");
    }
}
