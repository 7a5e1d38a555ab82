//! Run manifests written next to every CSV.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Result};

pub const TOOL_NAME: &str = "plateau";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub tag: String,
    pub master_seed: u64,
    pub config_hash: String,
    pub workers: usize,
    pub wall_time_s: f64,
    /// The exact config of the run; accepted back by `--config`.
    pub config: serde_json::Value,
    #[serde(default)]
    pub notes: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    pub fn new<C: Serialize>(
        command: &str,
        tag: &str,
        master_seed: u64,
        config_hash: String,
        workers: usize,
        config: &C,
    ) -> Result<Self> {
        Ok(Self {
            tool: TOOL_NAME.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            tag: tag.into(),
            master_seed,
            config_hash,
            workers,
            wall_time_s: 0.0,
            config: serde_json::to_value(config)?,
            notes: BTreeMap::new(),
        })
    }

    pub fn note<V: Serialize>(&mut self, key: &str, value: V) -> Result<()> {
        self.notes.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(io_err(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}
