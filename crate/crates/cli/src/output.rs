use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const ARTIFACT: &str = "btc-topo";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Round-trip-exact float: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

/// Buffered CSV file, written in one go by `finish`.
pub struct Csv {
    name: String,
    buf: String,
    columns: usize,
    rows: usize,
}

impl Csv {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self { name: name.into(), buf, columns: header.len(), rows: 0 }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut n = 0;
        for (i, f) in fields.into_iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            self.buf.push_str(f.as_ref());
            n += 1;
        }
        debug_assert_eq!(n, self.columns, "row width of {}", self.name);
        self.buf.push('\n');
        self.rows += 1;
    }

    pub fn finish(self, out_dir: &Path) -> Result<OutputFile, CliError> {
        let path = out_dir.join(&self.name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, self.buf.as_bytes()).map_err(|e| CliError::io(&path, e))?;
        Ok(OutputFile { file: self.name, rows: self.rows, sha256: hex_sha256(self.buf.as_bytes()) })
    }
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        write!(s, "{b:02x}").expect("writing to a String");
    }
    s
}

#[derive(Serialize)]
struct Sidecar<'a, D: Serialize> {
    artifact: &'static str,
    version: &'static str,
    command: &'a str,
    config: RunConfig,
    config_sha256: String,
    outputs: &'a [OutputFile],
    results: &'a D,
}

/// Writes `<command>.json` next to the outputs. Contains only
/// deterministic data; the config member can be fed back with `--config`.
pub fn write_sidecar<D: Serialize>(
    out_dir: &Path,
    command: &str,
    cfg: &RunConfig,
    outputs: &[OutputFile],
    results: &D,
) -> Result<PathBuf, CliError> {
    let config = cfg.for_sidecar();
    let config_json = serde_json::to_string(&config).expect("config serializes");
    let sidecar = Sidecar {
        artifact: ARTIFACT,
        version: ARTIFACT_VERSION,
        command,
        config,
        config_sha256: hex_sha256(config_json.as_bytes()),
        outputs,
        results,
    };
    write_json(out_dir, &format!("{command}.json"), &sidecar)
}

pub fn write_json<T: Serialize>(out_dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let path = out_dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

#[derive(Serialize)]
struct Timing<'a> {
    command: &'a str,
    threads: usize,
    elapsed_seconds: f64,
    phases: &'a [(String, f64)],
}

/// Wall-clock goes here so the other outputs stay byte-identical between runs.
pub fn write_timing(out_dir: &Path, command: &str, elapsed: f64, phases: &[(String, f64)]) -> Result<(), CliError> {
    let timing = Timing { command, threads: rayon::current_num_threads(), elapsed_seconds: elapsed, phases };
    write_json(out_dir, &format!("{command}.timing.json"), &timing).map(|_| ())
}
