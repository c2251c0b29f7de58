use std::fmt::Display;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{io_error, CliResult};

pub const GIT_DESCRIBE: &str = env!("LMM_GIT_DESCRIBE");

/// Flat `key=value` record of everything needed to rerun a command.
#[derive(Debug, Clone)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

fn unix_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn start(command: &str) -> Self {
        let mut m = RunManifest { entries: Vec::new() };
        m.set("command", command);
        m.set("version", env!("CARGO_PKG_VERSION"));
        m.set("git_describe", GIT_DESCRIBE);
        m.set("started_unix", unix_seconds());
        m
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn finish(mut self, path: &Path) -> CliResult<()> {
        self.set("finished_unix", unix_seconds());
        std::fs::write(path, self.to_text()).map_err(|e| io_error(path, e))
    }
}
