//! Errors, config loading, output files and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Lib(#[from] dimerlab::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use dimerlab::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Lib(e) => match e {
                E::OddL(_)
                | E::SizeTooLarge { .. }
                | E::Invalid(_)
                | E::ZeroDistance
                | E::WrapGuard { .. }
                | E::TooLarge(_)
                | E::ParityMismatch
                | E::InsufficientRange(_) => 2,
                E::NotLiquid(_)
                | E::NotOnSpectralCurve(_)
                | E::InconsistentForms(_)
                | E::SingularSector(_)
                | E::UnrealizableWinding(..) => 3,
                E::InsufficientStatistics { .. } => 4,
                _ => 1,
            },
            CliError::Io { .. } | CliError::Other(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

/// Parses a versioned JSON config; errors carry the file, line and column.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> CliResult<(T, serde_json::Value)> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))?;
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == CONFIG_VERSION as u64 => {}
        Some(v) => return Err(CliError::Config(format!("{}: unsupported config version {v}", path.display()))),
        None => return Err(CliError::Config(format!("{}: missing \"version\": {CONFIG_VERSION}", path.display()))),
    }
    let cfg = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))?;
    Ok((cfg, value))
}

/// Resolves `p` against the directory of the config file.
pub fn relative_to(config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config.parent().unwrap_or(Path::new(".")).join(p)
    }
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Output directory that remembers what was written to it.
pub struct OutDir {
    pub dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(OutDir { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Records a file written by other means.
    pub fn register(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))?;
        self.register(name);
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        let path = self.path(name);
        fs::write(&path, text).map_err(io_err(&path))?;
        self.register(name);
        Ok(())
    }

    pub fn write_csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
        let csv_err = |e: csv::Error| CliError::Other(format!("{}: {e}", path.display()));
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(csv_err)?;
        }
        w.flush().map_err(io_err(&path))?;
        self.register(name);
        Ok(())
    }

    /// Writes `manifest.json` with digests of every registered file.
    pub fn write_manifest(&mut self, m: ManifestInfo) -> CliResult<()> {
        let mut outputs = BTreeMap::new();
        for f in &self.files {
            outputs.insert(f.clone(), sha256_file(&self.path(f))?);
        }
        let manifest = RunManifest {
            command: m.command.to_string(),
            config: m.config,
            seeds: m.seeds,
            chains: m.chains,
            complete: m.complete,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: m.start.elapsed().as_secs_f64(),
            outputs,
        };
        let path = self.path("manifest.json");
        let mut f = fs::File::create(&path).map_err(io_err(&path))?;
        serde_json::to_writer_pretty(&mut f, &manifest).map_err(|e| CliError::Other(e.to_string()))?;
        f.write_all(b"\n").map_err(io_err(&path))?;
        Ok(())
    }
}

pub struct ManifestInfo {
    pub command: &'static str,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub chains: usize,
    pub complete: bool,
    pub start: Instant,
}

#[derive(Debug, Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub chains: usize,
    pub complete: bool,
    pub code_version: String,
    pub wall_clock_seconds: f64,
    pub outputs: BTreeMap<String, String>,
}

/// Shortest round-trip representation, so outputs are byte-stable.
pub fn num(v: f64) -> String {
    format!("{v}")
}
