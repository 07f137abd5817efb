//! Report emission: JSON lines and CSV with 17 significant digits, and a
//! manifest per run. Only the manifest carries a timestamp.

use std::fs;
use std::io;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{ExperimentConfig, Verdict};
use crate::Result;

/// `x` with 17 significant digits (`nan`, `inf`, `-inf` otherwise).
pub fn fmt17(x: f64) -> String {
    if x.is_finite() { format!("{x:.16e}") } else if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() }
}

/// JSON number formatting with 17 significant digits.
#[derive(Clone, Copy, Default)]
struct Sig17;

impl serde_json::ser::Formatter for Sig17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt17(v).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
}

/// One JSON document with 17-digit floats (non-finite values become null).
pub fn to_json17<T: Serialize + ?Sized>(v: &T) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    v.serialize(&mut ser)?;
    Ok(buf)
}

#[derive(Serialize)]
struct Line<'a, T> {
    config_hash: &'a str,
    #[serde(flatten)]
    report: &'a T,
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    sha256: Option<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: &'a str,
    config: &'a str,
    verdict: &'a str,
    files: Vec<FileEntry>,
    written_at_unix: u64,
}

/// The output directory of one command.
pub struct Output {
    dir: PathBuf,
    hash: String,
    files: Vec<String>,
}

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Output {
    pub fn create(cfg: &ExperimentConfig) -> Result<Self> {
        let dir = cfg.out.join(cfg.command.name());
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, hash: cfg.hash(), files: Vec::new() })
    }

    pub fn dir(&self) -> &PathBuf {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// List an artifact written by other code in the manifest.
    pub fn register(&mut self, name: &str) {
        self.files.push(name.into());
    }

    /// One line per item, each carrying the config hash.
    pub fn jsonl<T: Serialize>(&mut self, name: &str, items: &[T]) -> Result<()> {
        let mut buf = Vec::new();
        for it in items {
            buf.extend(to_json17(&Line { config_hash: &self.hash, report: it })?);
            buf.push(b'\n');
        }
        fs::write(self.path(name), buf)?;
        self.register(name);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let mut s = format!("# config_hash = {}\n{}\n", self.hash, header.join(","));
        for r in rows {
            s.push_str(&r.iter().map(|&x| fmt17(x)).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        fs::write(self.path(name), s)?;
        self.register(name);
        Ok(())
    }

    pub fn finish(self, cfg: &ExperimentConfig, verdict: Verdict) -> Result<()> {
        let mut files = Vec::new();
        for name in &self.files {
            let p = self.path(name);
            let sha256 = if p.is_file() { Some(hex(&fs::read(&p)?)) } else { None };
            files.push(FileEntry { name: name.clone(), sha256 });
        }
        let manifest = Manifest {
            command: cfg.command.name(),
            config_hash: &self.hash,
            config: &cfg.canonical(),
            verdict: match verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "fail",
            },
            files,
            written_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        fs::write(self.path("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
        Ok(())
    }
}
