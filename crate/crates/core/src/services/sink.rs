use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum SinkError {
    #[error("sink i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("record not serializable: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Acknowledges one appended record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Receipt {
    /// Zero-based arrival order.
    pub seq: u64,
    pub bytes: usize,
}

/// Append-only, line-delimited JSON log.
pub trait EventSink {
    fn append_line(&mut self, line: &str) -> Result<Receipt, SinkError>;

    fn append<T: Serialize + ?Sized>(&mut self, record: &T) -> Result<Receipt, SinkError>
    where
        Self: Sized,
    {
        let line = serde_json::to_string(record)?;
        self.append_line(&line)
    }
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct MemorySink {
    lines: Vec<String>,
}

impl MemorySink {
    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn into_lines(self) -> Vec<String> {
        self.lines
    }
}

impl EventSink for MemorySink {
    fn append_line(&mut self, line: &str) -> Result<Receipt, SinkError> {
        self.lines.push(line.to_string());
        Ok(Receipt {
            seq: self.lines.len() as u64 - 1,
            bytes: line.len() + 1,
        })
    }
}

/// Appends to a file, opening it per record so nothing is buffered.
#[derive(Debug, Clone)]
pub struct FileSink {
    path: PathBuf,
    written: u64,
}

impl FileSink {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            written: 0,
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl EventSink for FileSink {
    fn append_line(&mut self, line: &str) -> Result<Receipt, SinkError> {
        let io = |source| SinkError::Io {
            path: self.path.clone(),
            source,
        };
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(io)?;
        f.write_all(format!("{line}\n").as_bytes()).map_err(io)?;
        let seq = self.written;
        self.written += 1;
        Ok(Receipt {
            seq,
            bytes: line.len() + 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn memory_round_trip_and_order() {
        let mut s = MemorySink::default();
        let r0 = s.append(&json!({"t": 1.0, "command": "LOCK"})).unwrap();
        let r1 = s.append(&json!({"t": 2.0, "command": "UNLOCK"})).unwrap();
        assert_eq!((r0.seq, r1.seq), (0, 1));
        let back: serde_json::Value = serde_json::from_str(&s.lines()[0]).unwrap();
        assert_eq!(back, json!({"t": 1.0, "command": "LOCK"}));
        assert!(s.lines()[1].contains("UNLOCK"));
    }

    #[test]
    fn file_round_trip_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let mut s = FileSink::new(&path);
        s.append(&json!({"a": 1})).unwrap();
        let r = s.append(&json!({"a": 2})).unwrap();
        assert_eq!(r.seq, 1);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "{\"a\":1}\n{\"a\":2}\n");
    }

    #[test]
    fn unwritable_path() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = FileSink::new(dir.path().join("no").join("such").join("dir.jsonl"));
        assert!(matches!(s.append(&json!({})), Err(SinkError::Io { .. })));
    }
}
