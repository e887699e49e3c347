//! Model checkpoints: one file carrying a version tag, the architecture
//! configuration and every named tensor.
//!
//! Layout: a magic line, a JSON header line (config + parameter index),
//! then the raw little-endian `f32` payload in index order.  Values are
//! stored row-major.

use super::params::ParamSet;
use crate::error::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::io::{BufReader, Read, Write};
use std::path::Path;

const MAGIC: &str = "affordance-checkpoint v1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: serde_json::Value,
    params: Vec<ParamEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    rows: usize,
    cols: usize,
    trainable: bool,
}

/// A tensor loaded back from disk.
#[derive(Debug, Clone)]
pub struct LoadedParam {
    pub name: String,
    pub value: Array2<f64>,
    pub trainable: bool,
}

pub fn save_checkpoint(path: &Path, config: &serde_json::Value, ps: &ParamSet) -> Result<()> {
    let header = Header {
        config: config.clone(),
        params: ps
            .iter()
            .map(|p| ParamEntry {
                name: p.name.clone(),
                rows: p.value.nrows(),
                cols: p.value.ncols(),
                trainable: p.trainable,
            })
            .collect(),
    };
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{MAGIC}")?;
    serde_json::to_writer(&mut w, &header)
        .map_err(|e| Error::format(format!("checkpoint header: {e}")))?;
    writeln!(w)?;
    let mut buf = Vec::new();
    for p in ps.iter() {
        for v in p.value.iter() {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(serde_json::Value, Vec<LoadedParam>)> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let magic = read_line(&mut r)?;
    if magic.trim_end() != MAGIC {
        return Err(Error::format("not an affordance checkpoint (bad magic)"));
    }
    let header_line = read_line(&mut r)?;
    let header: Header = serde_json::from_str(header_line.trim_end())
        .map_err(|e| Error::format(format!("checkpoint header: {e}")))?;

    let mut params = Vec::with_capacity(header.params.len());
    let mut scratch = Vec::new();
    for entry in &header.params {
        let count = entry.rows * entry.cols;
        scratch.resize(count * 4, 0u8);
        r.read_exact(&mut scratch).map_err(|_| {
            Error::format(format!("checkpoint truncated while reading '{}'", entry.name))
        })?;
        let mut data = Vec::with_capacity(count);
        for chunk in scratch.chunks_exact(4) {
            data.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64);
        }
        let value = Array2::from_shape_vec((entry.rows, entry.cols), data)
            .map_err(|e| Error::format(format!("checkpoint tensor '{}': {e}", entry.name)))?;
        params.push(LoadedParam { name: entry.name.clone(), value, trainable: entry.trainable });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::format("checkpoint has trailing bytes"));
    }
    Ok((header.config, params))
}

/// Copy loaded tensors into an existing parameter set.  Every tensor must
/// find its slot by name with a matching shape — a mismatch means the file
/// belongs to a different architecture.
pub fn load_into(ps: &mut ParamSet, loaded: &[LoadedParam]) -> Result<()> {
    if loaded.len() != ps.len() {
        return Err(Error::format(format!(
            "checkpoint has {} tensors, model expects {}",
            loaded.len(),
            ps.len()
        )));
    }
    for lp in loaded {
        let id = ps
            .find(&lp.name)
            .ok_or_else(|| Error::format(format!("checkpoint tensor '{}' not in model", lp.name)))?;
        let dst = ps.value_mut(id);
        if dst.raw_dim() != lp.value.raw_dim() {
            return Err(Error::format(format!(
                "checkpoint tensor '{}' has shape {}x{}, model expects {}x{}",
                lp.name,
                lp.value.nrows(),
                lp.value.ncols(),
                dst.nrows(),
                dst.ncols()
            )));
        }
        dst.assign(&lp.value);
    }
    Ok(())
}

fn read_line(r: &mut impl std::io::BufRead) -> Result<String> {
    let mut line = String::new();
    if r.read_line(&mut line)? == 0 {
        return Err(Error::format("checkpoint ended before header"));
    }
    Ok(line)
}
