use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::Failure;

/// Provenance stamped into every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub config_hash: String,
    pub seed: u64,
    pub version: &'static str,
}

impl Meta {
    /// SHA-256 of the canonical (key-sorted) JSON of the effective inputs.
    pub fn new(inputs: &Value, seed: u64) -> Self {
        let bytes = serde_json::to_vec(inputs).expect("JSON values always serialize");
        Self {
            config_hash: hex::encode(Sha256::digest(&bytes)),
            seed,
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

pub struct Sink {
    pub dir: PathBuf,
    pub meta: Meta,
}

fn io(e: impl std::fmt::Display, path: &Path) -> Failure {
    Failure::Schema(vec![format!("{}: {e}", path.display())])
}

impl Sink {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `body` with a `meta` key merged into the top-level object.
    pub fn json<T: Serialize>(&self, name: &str, body: &T) -> Result<(), Failure> {
        let mut v = serde_json::to_value(body).map_err(|e| Failure::Numeric(e.to_string()))?;
        if let Value::Object(map) = &mut v {
            map.insert("meta".into(), json!(self.meta));
        } else {
            v = json!({ "meta": self.meta, "data": v });
        }
        let path = self.path(name);
        let mut text =
            serde_json::to_string_pretty(&v).map_err(|e| Failure::Numeric(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io(e, &path))
    }

    /// CSV with a leading `#` comment line carrying the metadata.
    pub fn csv(
        &self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<(), Failure> {
        let path = self.path(name);
        let mut f = BufWriter::new(File::create(&path).map_err(|e| io(e, &path))?);
        writeln!(
            f,
            "# config_hash={} seed={} version={}",
            self.meta.config_hash, self.meta.seed, self.meta.version
        )
        .map_err(|e| io(e, &path))?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header).map_err(|e| io(e, &path))?;
        for r in rows {
            w.write_record(&r).map_err(|e| io(e, &path))?;
        }
        w.flush().map_err(|e| io(e, &path))
    }

    /// JSON lines; the first line holds the metadata.
    pub fn jsonl<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<(), Failure> {
        let path = self.path(name);
        let mut f = BufWriter::new(File::create(&path).map_err(|e| io(e, &path))?);
        let mut line = |v: String| writeln!(f, "{v}").map_err(|e| io(e, &path));
        line(json!({ "meta": self.meta }).to_string())?;
        for r in rows {
            line(serde_json::to_string(r).map_err(|e| Failure::Numeric(e.to_string()))?)?;
        }
        f.flush().map_err(|e| io(e, &path))
    }
}

/// Shortest round-trip decimal form, so equal numbers print identically.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
