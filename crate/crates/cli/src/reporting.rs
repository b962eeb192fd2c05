//! The report command: re-render every recorded experiment under a
//! directory as aligned text and CSV tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;

use echotext_core::report::{Cell, ReportTable};
use echotext_core::{Error, Result};

use crate::records::{read_record, CellRecord};
use crate::util::emit_table;
use crate::CommonOpts;

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Directory scanned recursively for result records (*.json).
    #[arg(long, value_name = "DIR")]
    pub dir: PathBuf,
    /// Directory for report_<experiment>.txt/.csv files.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

fn record_files(dir: &Path, into: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| Error::file(dir, e))? {
        let entry = entry.map_err(|e| Error::file(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            record_files(&path, into)?;
        } else if path.extension().is_some_and(|e| e == "json") {
            into.push(path);
        }
    }
    Ok(())
}

fn titles(experiment: &str) -> (String, String) {
    match experiment {
        "matrix" => ("transfer accuracy (%)".into(), "setting".into()),
        "sweep-dropout" => ("transfer accuracy (%) by dropout rate".into(), "rate".into()),
        "sweep-activation" => ("transfer accuracy (%) as (frozen, fine-tuned)".into(), "source act".into()),
        "train" => ("training runs".into(), "dataset".into()),
        "eval" => ("evaluations".into(), "dataset".into()),
        other => (format!("{other} results"), "row".into()),
    }
}

fn cell_of(record: &CellRecord) -> Cell {
    if record.blocked.is_some() {
        return Cell::Missing;
    }
    if let Some((a, b)) = record.pair_pct {
        return Cell::Pair(a, b);
    }
    match record.mean_pct {
        Some(v) => Cell::Value(v),
        None => Cell::Missing,
    }
}

fn build_table(experiment: &str, records: &[&CellRecord]) -> ReportTable {
    let mut row_order: BTreeSet<(usize, &str)> = BTreeSet::new();
    let mut col_order: BTreeSet<&str> = BTreeSet::new();
    let mut by_key: BTreeMap<(&str, &str), &CellRecord> = BTreeMap::new();
    for r in records {
        row_order.insert((r.row_index, r.row.as_str()));
        col_order.insert(r.col.as_str());
        by_key.insert((r.row.as_str(), r.col.as_str()), r);
    }
    let cols: Vec<&str> = col_order.into_iter().collect();
    let with_params = experiment == "matrix";

    let (title, corner) = titles(experiment);
    let mut col_labels: Vec<String> = cols.iter().map(|c| c.to_string()).collect();
    if with_params {
        col_labels.push("params".to_string());
    }
    let mut table = ReportTable::new(title, corner, col_labels);
    table.bold_column_max = true;

    for (_, row) in row_order {
        let mut cells = Vec::with_capacity(cols.len() + 1);
        let mut params: BTreeSet<u64> = BTreeSet::new();
        for col in &cols {
            match by_key.get(&(row, *col)) {
                Some(r) => {
                    params.insert(r.param_count);
                    cells.push(cell_of(r));
                }
                None => cells.push(Cell::Missing),
            }
        }
        if with_params {
            let joined: Vec<String> = params.iter().map(|p| p.to_string()).collect();
            cells.push(Cell::Text(joined.join(" / ")));
        }
        table.push_row(row, cells);
    }
    table
}

pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    crate::util::resolve(&args.common)?;
    let mut files = Vec::new();
    record_files(&args.dir, &mut files)?;
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no result records (*.json) under {}",
            args.dir.display()
        )));
    }

    let mut corrupt: Vec<(PathBuf, String)> = Vec::new();
    let mut records: Vec<CellRecord> = Vec::new();
    for path in &files {
        match read_record(path) {
            Ok(r) => records.push(r),
            Err(e) => corrupt.push((path.clone(), e)),
        }
    }

    let mut groups: BTreeMap<&str, Vec<&CellRecord>> = BTreeMap::new();
    for r in &records {
        groups.entry(r.experiment.as_str()).or_default().push(r);
    }
    for (experiment, group) in &groups {
        let table = build_table(experiment, group);
        let name = format!("report_{}", experiment.replace('-', "_"));
        emit_table(&table, args.out.as_deref(), &name)?;
        println!();
    }
    for (path, why) in &corrupt {
        println!("unreadable record {}: {why}", path.display());
    }
    Ok(())
}
