//! Destinations for session-log records.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use parley_core::LogRecord;

pub trait LogSink: Send {
    fn append(&mut self, record: &LogRecord) -> io::Result<()>;

    /// Makes the log durable and returns its id.
    fn finish(&mut self) -> io::Result<String>;
}

/// Writes `<dir>/<id>.partial` while the session runs and renames it to
/// `<dir>/<id>` once flushed and synced. If finishing fails the partial file
/// is moved under `<dir>/recovery/`.
pub struct FileSink {
    dir: PathBuf,
    id: String,
    out: Option<BufWriter<File>>,
}

impl FileSink {
    pub fn new(dir: impl Into<PathBuf>, id: impl Into<String>) -> Self {
        Self {
            dir: dir.into(),
            id: id.into(),
            out: None,
        }
    }

    fn partial_path(&self) -> PathBuf {
        self.dir.join(format!("{}.partial", self.id))
    }

    fn writer(&mut self) -> io::Result<&mut BufWriter<File>> {
        if self.out.is_none() {
            fs::create_dir_all(&self.dir)?;
            self.out = Some(BufWriter::new(File::create(self.partial_path())?));
        }
        Ok(self.out.as_mut().expect("just opened"))
    }

    fn try_finish(&mut self) -> io::Result<()> {
        let out = self.writer()?;
        out.flush()?;
        out.get_ref().sync_all()?;
        self.out = None;
        let final_path = self.dir.join(&self.id);
        fs::rename(self.partial_path(), &final_path)?;
        if let Ok(d) = File::open(&self.dir) {
            let _ = d.sync_all();
        }
        Ok(())
    }

    fn recover(&mut self) -> Option<PathBuf> {
        self.out = None;
        let recovery = self.dir.join("recovery");
        let dest = recovery.join(&self.id);
        fs::create_dir_all(&recovery).ok()?;
        fs::rename(self.partial_path(), &dest).ok()?;
        Some(dest)
    }
}

impl LogSink for FileSink {
    fn append(&mut self, record: &LogRecord) -> io::Result<()> {
        record.write_line(self.writer()?)
    }

    fn finish(&mut self) -> io::Result<String> {
        match self.try_finish() {
            Ok(()) => Ok(self.id.clone()),
            Err(e) => {
                match self.recover() {
                    Some(p) => {
                        tracing::error!(log = %self.id, recovery = %p.display(), "log finish failed: {e}")
                    }
                    None => {
                        tracing::error!(log = %self.id, "log finish failed and recovery failed: {e}")
                    }
                }
                Err(e)
            }
        }
    }
}

/// In-memory sink whose lines can be read back through a shared handle.
#[derive(Clone, Default)]
pub struct MemorySink {
    id: String,
    lines: Arc<Mutex<Vec<String>>>,
    finished: Arc<Mutex<bool>>,
}

impl MemorySink {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            ..Default::default()
        }
    }

    pub fn contents(&self) -> String {
        self.lines.lock().unwrap().concat()
    }

    pub fn len(&self) -> usize {
        self.lines.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finished(&self) -> bool {
        *self.finished.lock().unwrap()
    }
}

impl LogSink for MemorySink {
    fn append(&mut self, record: &LogRecord) -> io::Result<()> {
        self.lines.lock().unwrap().push(record.to_line());
        Ok(())
    }

    fn finish(&mut self) -> io::Result<String> {
        *self.finished.lock().unwrap() = true;
        Ok(self.id.clone())
    }
}

/// Log file name for a room whose clock started at `start_ms`.
pub fn log_id(room: &str, start_ms: u64) -> String {
    let safe: String = room
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{safe}-{start_ms}.jsonl")
}

pub fn log_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(id)
}
