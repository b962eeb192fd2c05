//! JSON result records, one file per experiment cell. The `report` command
//! re-renders tables from these alone, so they carry their own labels and
//! ordering.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use echotext_core::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRecord {
    /// Which table this cell belongs to: train, matrix, sweep-dropout,
    /// sweep-activation, eval.
    pub experiment: String,
    pub row: String,
    /// Original row position, so reports keep the producing command's order.
    pub row_index: usize,
    pub col: String,
    pub plan: String,
    pub seed: u64,
    pub param_count: u64,
    /// Mean cross-validated accuracy, percent.
    pub mean_pct: Option<f64>,
    /// (frozen, fine-tuned) accuracies, percent.
    pub pair_pct: Option<(f64, f64)>,
    /// Why this cell is structurally impossible, when it is.
    pub blocked: Option<String>,
    pub per_repetition_pct: Vec<f64>,
}

pub fn write_record(path: &Path, record: &CellRecord) -> Result<()> {
    let mut text = serde_json::to_string_pretty(record)
        .map_err(|e| Error::InvalidConfig(format!("cannot serialize record: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::file(path, e))
}

/// Read-side failures come back as plain strings so the report command can
/// list corrupt files without aborting.
pub fn read_record(path: &Path) -> std::result::Result<CellRecord, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}
