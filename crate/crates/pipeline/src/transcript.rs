//! JSONL persistence for pipeline transcripts.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::run::PipelineTranscript;

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {source}", .path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
}

/// One transcript as a single JSON line (without the newline).
pub fn to_line(t: &PipelineTranscript) -> String {
    serde_json::to_string(t).expect("transcripts always serialize")
}

pub fn parse_line(line: &str) -> Result<PipelineTranscript, serde_json::Error> {
    serde_json::from_str(line)
}

/// Writes transcripts sorted by example id, one per line.
pub fn write_transcripts(
    path: &Path,
    transcripts: &[PipelineTranscript],
) -> Result<(), TranscriptError> {
    let io_err = |source| TranscriptError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    let mut sorted: Vec<&PipelineTranscript> = transcripts.iter().collect();
    sorted.sort_by_key(|t| t.example_id);
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for t in sorted {
        writeln!(w, "{}", to_line(t)).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_transcripts(path: &Path) -> Result<Vec<PipelineTranscript>, TranscriptError> {
    let io_err = |source| TranscriptError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_line(&line).map_err(|source| TranscriptError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}
