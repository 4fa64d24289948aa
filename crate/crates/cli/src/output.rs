//! Artifact writing: every file gets a `<stem>.meta.json` sidecar.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

pub struct Artifacts {
    command: &'static str,
    config: Value,
    tolerances: Value,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

impl Artifacts {
    pub fn new(command: &'static str, config: &impl Serialize, tolerances: Value) -> Self {
        let config = serde_json::to_value(config).expect("configuration serializes");
        Self { command, config, tolerances }
    }

    fn sidecar(&self, path: &Path, format: &str, details: Value) -> Result<(), CliError> {
        let meta = json!({
            "tool": "tomokit",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config,
            "tolerances": self.tolerances,
            "artifact": {
                "file": path.file_name().map(|f| f.to_string_lossy().into_owned()),
                "format": format,
                "details": details,
            },
        });
        let side = sidecar_path(path);
        let mut out = create(&side)?;
        serde_json::to_writer_pretty(&mut out, &meta).map_err(|e| CliError::Io { path: side.clone(), source: e.into() })?;
        out.write_all(b"\n").and_then(|_| out.flush()).map_err(io_err(&side))
    }

    /// Writes a CSV artifact through `write` and its sidecar; returns the line count.
    pub fn csv(
        &self,
        path: &Path,
        format: &str,
        details: Value,
        write: impl FnOnce(&mut Vec<u8>) -> tomokit::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        let mut out = create(path)?;
        out.write_all(&buf).and_then(|_| out.flush()).map_err(io_err(path))?;
        self.sidecar(path, format, details)?;
        let rows = buf.iter().filter(|&&b| b == b'\n').count().saturating_sub(1);
        println!("wrote {} ({rows} rows, {format})", path.display());
        Ok(())
    }

    /// Writes a pretty-printed JSON artifact and its sidecar.
    pub fn json(&self, path: &Path, format: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut out = create(path)?;
        serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e.into() })?;
        out.write_all(b"\n").and_then(|_| out.flush()).map_err(io_err(path))?;
        self.sidecar(path, format, Value::Null)?;
        println!("wrote {} ({format})", path.display());
        Ok(())
    }
}
