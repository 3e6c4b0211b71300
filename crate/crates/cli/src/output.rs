//! Output writing: atomic file replacement and reproducibility headers.
//!
//! Every file embeds the resolved configuration and the toolkit version —
//! as `#`-prefixed comment lines in CSV, as a `meta` object in JSON. No
//! timestamps, so reruns with equal inputs are byte-identical.

use crate::config::RunConfig;
use crate::error::CliError;
use serde::Serialize;
use serde_json::json;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Write `contents` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::io(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::io(format!("cannot rename to {}: {e}", path.display())))?;
    Ok(())
}

/// CSV reproducibility header lines.
pub fn csv_header(config: &RunConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# nvforge_version = {}", nvforge_core::TOOLKIT_VERSION);
    let _ = writeln!(out, "# config = {}", config.resolved_json());
    out
}

/// Wrap a serializable payload with the reproducibility `meta` object and
/// serialize to pretty JSON.
pub fn json_with_meta<T: Serialize>(payload: &T, config: &RunConfig) -> Result<String, CliError> {
    let value = json!({
        "meta": {
            "nvforge_version": nvforge_core::TOOLKIT_VERSION,
            "config": serde_json::to_value(config)
                .map_err(|e| CliError::io(format!("config serialization: {e}")))?,
        },
        "data": serde_json::to_value(payload)
            .map_err(|e| CliError::io(format!("payload serialization: {e}")))?,
    });
    serde_json::to_string_pretty(&value)
        .map_err(|e| CliError::io(format!("json serialization: {e}")))
        .map(|mut s| {
            s.push('\n');
            s
        })
}

/// Resolve the output path for a command: `--out` may name a file directly
/// or a directory into which `default_name` is placed; without `--out` the
/// config's output directory is used.
pub fn resolve_out(
    out_flag: Option<&Path>,
    config: &RunConfig,
    default_name: &str,
) -> PathBuf {
    match out_flag {
        Some(p) if p.is_dir() => p.join(default_name),
        Some(p) => p.to_path_buf(),
        None => Path::new(&config.output_dir).join(default_name),
    }
}
