//! Model file: one header line `concept-fusion-model v<version> sha256:<hex>`
//! followed by the JSON-encoded ensemble. The digest covers the body bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pipeline::TrainedEnsemble;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "concept-fusion-model";

#[derive(Serialize)]
struct BodyRef<'a> {
    format_version: u32,
    ensemble: &'a TrainedEnsemble,
}

#[derive(Deserialize)]
struct Body {
    format_version: u32,
    ensemble: TrainedEnsemble,
}

pub fn encode_ensemble(e: &TrainedEnsemble) -> Vec<u8> {
    let body = serde_json::to_vec(&BodyRef { format_version: FORMAT_VERSION, ensemble: e }).expect("ensemble serializes");
    let mut out = format!("{MAGIC} v{FORMAT_VERSION} sha256:{}\n", hex::encode(Sha256::digest(&body))).into_bytes();
    out.extend_from_slice(&body);
    out
}

pub fn decode_ensemble(bytes: &[u8]) -> Result<TrainedEnsemble> {
    let newline = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::CorruptModel("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| Error::CorruptModel("header is not UTF-8".into()))?;
    let body = &bytes[newline + 1..];
    let mut parts = header.split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(Error::CorruptModel("not a model file".into()));
    }
    let found = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| Error::CorruptModel("unreadable format version".into()))?;
    if found != FORMAT_VERSION {
        return Err(Error::VersionMismatch { found, expected: FORMAT_VERSION });
    }
    let digest = parts.next().and_then(|d| d.strip_prefix("sha256:")).ok_or_else(|| Error::CorruptModel("missing checksum".into()))?;
    if parts.next().is_some() {
        return Err(Error::CorruptModel("trailing header fields".into()));
    }
    if hex::encode(Sha256::digest(body)) != digest {
        return Err(Error::CorruptModel("checksum mismatch".into()));
    }
    let parsed: Body = serde_json::from_slice(body).map_err(|e| Error::CorruptModel(e.to_string()))?;
    if parsed.format_version != found {
        return Err(Error::VersionMismatch { found: parsed.format_version, expected: FORMAT_VERSION });
    }
    check_consistency(&parsed.ensemble)?;
    Ok(parsed.ensemble)
}

fn check_consistency(e: &TrainedEnsemble) -> Result<()> {
    if e.members.is_empty() {
        return Err(Error::CorruptModel("no groups".into()));
    }
    if e.strategy.is_stacking() != e.meta.is_some() {
        return Err(Error::CorruptModel("meta-classifier presence does not match strategy".into()));
    }
    for m in &e.members {
        if m.classifier.label_space() != &e.label_space || m.standardizer.dim() != m.input_dim {
            return Err(Error::CorruptModel(format!("group `{}` is inconsistent", m.group_name)));
        }
    }
    Ok(())
}

/// Writes atomically: the file appears complete or not at all.
pub fn save_ensemble(e: &TrainedEnsemble, path: &Path) -> Result<()> {
    write_atomic(path, &encode_ensemble(e))
}

pub fn load_ensemble(path: &Path) -> Result<TrainedEnsemble> {
    let bytes = fs::read(path).map_err(|source| Error::IoFailure { path: path.to_path_buf(), source })?;
    decode_ensemble(&bytes)
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| Error::IoFailure { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
