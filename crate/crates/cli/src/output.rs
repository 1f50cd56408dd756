//! Output file writing: atomic (temp + rename), with the resolved run
//! configuration embedded in every file for provenance.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;

/// Write bytes atomically: temp file in the target directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// A JSON document wrapping a payload with the config that produced it.
#[derive(Serialize)]
struct Provenanced<'a, T: Serialize> {
    config: &'a RunConfig,
    #[serde(flatten)]
    payload: &'a T,
}

pub fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    config: &RunConfig,
    payload: &T,
) -> std::io::Result<PathBuf> {
    let path = dir.join(name);
    let doc = Provenanced { config, payload };
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    atomic_write(&path, text.as_bytes())?;
    Ok(path)
}

/// Leading comment lines embedding the config into a text/CSV file.
pub fn config_header(config: &RunConfig) -> String {
    format!("# config: {}\n", serde_json::to_string(config).expect("serializable"))
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> std::io::Result<PathBuf> {
    let path = dir.join(name);
    atomic_write(&path, text.as_bytes())?;
    Ok(path)
}
