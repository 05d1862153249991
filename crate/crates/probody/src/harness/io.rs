//! JSONL streaming with line-numbered diagnostics.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::evaluate::PosteriorRecord;
use super::SequenceFrame;
use crate::body_model::ERROR_DIM;
use crate::error::{Error, Result};

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut items = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item: T = serde_json::from_str(&line).map_err(|e| Error::JsonLine {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        items.push(item);
    }
    Ok(items)
}

/// Read a sequence and validate its frame invariants (strictly increasing
/// timestamps, mask length, observation sanity), reporting the offending
/// line on failure.
pub fn read_sequence(path: &Path) -> Result<Vec<SequenceFrame>> {
    let frames: Vec<SequenceFrame> = read_jsonl(path)?;
    let mut prev_t = f64::NEG_INFINITY;
    for (i, f) in frames.iter().enumerate() {
        let line = i + 1;
        let fail = |message: String| Error::JsonLine {
            path: path.display().to_string(),
            line,
            message,
        };
        if f.t <= prev_t {
            return Err(fail(format!("timestamp {} not increasing (after {prev_t})", f.t)));
        }
        prev_t = f.t;
        if f.visibility.len() != ERROR_DIM {
            return Err(fail(format!(
                "visibility mask has {} entries, expected {ERROR_DIM}",
                f.visibility.len()
            )));
        }
        if let Some(obs) = &f.observation {
            obs.validate().map_err(|e| fail(e.to_string()))?;
        }
        if let Some(gt) = &f.gt {
            gt.validate().map_err(|e| fail(e.to_string()))?;
        }
    }
    Ok(frames)
}

pub fn read_posteriors(path: &Path) -> Result<Vec<PosteriorRecord>> {
    let records: Vec<PosteriorRecord> = read_jsonl(path)?;
    for (i, r) in records.iter().enumerate() {
        r.state.validate().map_err(|e| Error::JsonLine {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
    }
    Ok(records)
}
