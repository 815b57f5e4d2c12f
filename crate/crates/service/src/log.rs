//! Append-only JSONL event logs, one file per campaign.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use log::warn;

use crate::error::ServiceError;
use crate::events::CampaignEvent;

pub struct EventLog {
    path: PathBuf,
    file: File,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ServiceError + '_ {
    move |source| ServiceError::Io { path: path.to_path_buf(), source }
}

/// Parses a log's contents. A final line without a newline is a torn write
/// and is reported separately so the caller can drop it.
fn parse(path: &Path, text: &str) -> Result<(Vec<CampaignEvent>, usize), ServiceError> {
    let mut events = Vec::new();
    let mut good_len = 0;
    for (i, chunk) in text.split_inclusive('\n').enumerate() {
        if !chunk.ends_with('\n') {
            warn!("{}: dropping torn final record", path.display());
            break;
        }
        let line = chunk.trim_end();
        if !line.is_empty() {
            let event: CampaignEvent = serde_json::from_str(line)
                .map_err(|e| ServiceError::CorruptLog { path: path.to_path_buf(), reason: format!("line {}: {e}", i + 1) })?;
            events.push(event);
        }
        good_len += chunk.len();
    }
    Ok((events, good_len))
}

/// Reads every complete record of a log without modifying it.
pub fn read_log(path: &Path) -> Result<Vec<CampaignEvent>, ServiceError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse(path, &text)?.0)
}

impl EventLog {
    pub fn create(path: &Path) -> Result<EventLog, ServiceError> {
        let file = OpenOptions::new().append(true).create_new(true).open(path).map_err(io_err(path))?;
        if let Some(dir) = path.parent() {
            // Make the new directory entry durable too.
            if let Ok(d) = File::open(dir) {
                let _ = d.sync_all();
            }
        }
        Ok(EventLog { path: path.to_path_buf(), file })
    }

    /// Opens an existing log for appending and returns its events. A torn
    /// final record is truncated away.
    pub fn open(path: &Path) -> Result<(EventLog, Vec<CampaignEvent>), ServiceError> {
        let mut file = OpenOptions::new().read(true).append(true).open(path).map_err(io_err(path))?;
        let mut text = String::new();
        file.read_to_string(&mut text).map_err(io_err(path))?;
        let (events, good_len) = parse(path, &text)?;
        if good_len < text.len() {
            file.set_len(good_len as u64).map_err(io_err(path))?;
            file.sync_all().map_err(io_err(path))?;
        }
        Ok((EventLog { path: path.to_path_buf(), file }, events))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes the events as one batch and syncs them to disk.
    pub fn append(&mut self, events: &[CampaignEvent]) -> Result<(), ServiceError> {
        let mut buf = Vec::new();
        for e in events {
            serde_json::to_writer(&mut buf, e).expect("events serialize");
            buf.push(b'\n');
        }
        self.file.write_all(&buf).map_err(io_err(&self.path))?;
        self.file.sync_data().map_err(io_err(&self.path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::EventKind;

    fn closed(seq: u64) -> CampaignEvent {
        CampaignEvent { seq, timestamp: seq as i64, campaign_id: "c".into(), kind: EventKind::Closed }
    }

    #[test]
    fn append_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let mut log = EventLog::create(&path).unwrap();
        log.append(&[closed(1), closed(2)]).unwrap();
        drop(log);
        let (mut log, events) = EventLog::open(&path).unwrap();
        assert_eq!(events, vec![closed(1), closed(2)]);
        log.append(&[closed(3)]).unwrap();
        assert_eq!(read_log(&path).unwrap().len(), 3);
        assert!(EventLog::create(&path).is_err());
    }

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let mut log = EventLog::create(&path).unwrap();
        log.append(&[closed(1)]).unwrap();
        drop(log);
        std::fs::OpenOptions::new().append(true).open(&path).unwrap().write_all(b"{\"seq\":2,\"times").unwrap();
        let (mut log, events) = EventLog::open(&path).unwrap();
        assert_eq!(events.len(), 1);
        log.append(&[closed(2)]).unwrap();
        assert_eq!(read_log(&path).unwrap(), vec![closed(1), closed(2)]);
    }

    #[test]
    fn garbage_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(&path, "not json\n").unwrap();
        assert_eq!(read_log(&path).unwrap_err().code(), "CorruptLog");
    }
}
