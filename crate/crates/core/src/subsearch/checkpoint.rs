//! Append-only JSON-lines record of finished stage-1 and stage-2 work.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SearchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub stage: u8,
    pub key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combo: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct Checkpoint {
    path: PathBuf,
    done: HashMap<(u8, String), Entry>,
}

impl Checkpoint {
    /// Opens or creates the file. A truncated final line (from an
    /// interrupted write) is ignored; any other malformed line is an error.
    pub fn open(path: &Path) -> Result<Checkpoint, SearchError> {
        let mut done = HashMap::new();
        if path.exists() {
            let file = File::open(path).map_err(|e| SearchError::Io(e.to_string()))?;
            let lines: Vec<String> = BufReader::new(file)
                .lines()
                .collect::<Result<_, _>>()
                .map_err(|e| SearchError::Io(e.to_string()))?;
            let last = lines.len().saturating_sub(1);
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<Entry>(line) {
                    Ok(e) => {
                        done.insert((e.stage, e.key.clone()), e);
                    }
                    Err(_) if i == last => {}
                    Err(e) => return Err(SearchError::Checkpoint(format!("line {}: {e}", i + 1))),
                }
            }
        }
        Ok(Checkpoint { path: path.to_path_buf(), done })
    }

    pub fn get(&self, stage: u8, key: &str) -> Option<&Entry> {
        self.done.get(&(stage, key.to_string()))
    }

    pub fn len(&self) -> usize {
        self.done.len()
    }

    pub fn is_empty(&self) -> bool {
        self.done.is_empty()
    }

    pub fn append(&mut self, entries: &[Entry]) -> Result<(), SearchError> {
        if entries.is_empty() {
            return Ok(());
        }
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| SearchError::Io(e.to_string()))?;
        let mut buf = String::new();
        for e in entries {
            buf.push_str(&serde_json::to_string(e).map_err(|er| SearchError::Checkpoint(er.to_string()))?);
            buf.push('\n');
        }
        f.write_all(buf.as_bytes()).map_err(|e| SearchError::Io(e.to_string()))?;
        f.flush().map_err(|e| SearchError::Io(e.to_string()))?;
        for e in entries {
            self.done.insert((e.stage, e.key.clone()), e.clone());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_truncated_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.jsonl");
        let mut c = Checkpoint::open(&path).unwrap();
        let e = Entry { stage: 1, key: "a+b".into(), combo: None, r2: Some(0.1 + 0.2), rmse: None, error: None };
        c.append(std::slice::from_ref(&e)).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("{\"stage\":2,\"ke");
        std::fs::write(&path, text).unwrap();
        let c = Checkpoint::open(&path).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.get(1, "a+b"), Some(&e));
    }

    #[test]
    fn corrupt_middle_line_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.jsonl");
        std::fs::write(&path, "garbage\n{\"stage\":1,\"key\":\"a\"}\n").unwrap();
        assert!(matches!(Checkpoint::open(&path), Err(SearchError::Checkpoint(_))));
    }
}
