use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::simplant::SensorRecord;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("record at minute {got} does not follow minute {last}")]
    OutOfOrder { last: u64, got: u64 },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path} line {line}: {source}")]
    Parse { path: String, line: usize, source: serde_json::Error },
}

/// Ordered, append-only sequence of records, optionally mirrored to a
/// JSON-lines file.
#[derive(Debug, Default)]
pub struct RecordStore {
    records: Vec<SensorRecord>,
    file: Option<(PathBuf, File)>,
}

impl RecordStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Creates (truncating) a file-backed store.
    pub fn create(path: &Path) -> Result<Self, StoreError> {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        Ok(Self { records: Vec::new(), file: Some((path.to_path_buf(), file)) })
    }

    /// Opens a file-backed store, loading what is already there.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let records = if path.exists() { read_records(path)? } else { Vec::new() };
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| io_err(path, e))?;
        Ok(Self { records, file: Some((path.to_path_buf(), file)) })
    }

    pub fn from_records(records: Vec<SensorRecord>) -> Result<Self, StoreError> {
        let mut store = Self::in_memory();
        for r in records {
            store.append(r)?;
        }
        Ok(store)
    }

    pub fn append(&mut self, record: SensorRecord) -> Result<(), StoreError> {
        if let Some(last) = self.records.last() {
            if record.ts <= last.ts {
                return Err(StoreError::OutOfOrder { last: last.ts, got: record.ts });
            }
        }
        if let Some((path, file)) = &mut self.file {
            let mut line = serde_json::to_vec(&record).expect("records always serialize");
            line.push(b'\n');
            // One write per line so concurrent readers never see half a record.
            file.write_all(&line).map_err(|e| io_err(path, e))?;
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[SensorRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&SensorRecord> {
        self.records.last()
    }

    /// Records with `from <= ts < to`.
    pub fn range(&self, from: u64, to: u64) -> &[SensorRecord] {
        let lo = self.records.partition_point(|r| r.ts < from);
        let hi = self.records.partition_point(|r| r.ts < to);
        &self.records[lo..hi.max(lo)]
    }

    pub fn flush(&mut self) -> Result<(), StoreError> {
        if let Some((path, file)) = &mut self.file {
            file.flush().map_err(|e| io_err(path, e))?;
        }
        Ok(())
    }
}

fn io_err(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io { path: path.display().to_string(), source }
}

/// Reads a JSON-lines telemetry file. A trailing line without newline is
/// treated as an unfinished write and skipped.
pub fn read_records(path: &Path) -> Result<Vec<SensorRecord>, StoreError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut buf = String::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf).map_err(|e| io_err(path, e))?;
        if n == 0 || !buf.ends_with('\n') {
            break;
        }
        line_no += 1;
        if buf.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&buf)
            .map_err(|source| StoreError::Parse { path: path.display().to_string(), line: line_no, source })?;
        out.push(rec);
    }
    Ok(out)
}
