//! Shared plumbing: config assembly, dataset loading, table emission, and
//! the named seed streams that keep every command's randomness disjoint.

use std::fs;
use std::path::Path;
use std::sync::Once;

use echotext_core::config::FullConfig;
use echotext_core::model::ModelConfig;
use echotext_core::report::ReportTable;
use echotext_core::text::{build_vocab, encode_dataset, tokenize, EncodedSentence, Vocabulary};
use echotext_core::transfer::{LayerMode, TransferPlan};
use echotext_core::{Error, Result};

use crate::CommonOpts;

/// Seed streams, all derived from the run seed with `derive_seed`. Keeping
/// them fixed and disjoint makes `train --epochs 0` reproduce a bare
/// `init_random` with the init stream's generator, which tests rely on.
pub const HOLDOUT_STREAM: u64 = 1;
pub const INIT_STREAM: u64 = 2;
pub const TRAIN_STREAM: u64 = 3;
pub const VECTOR_STREAM: u64 = 4;
/// Per-source-activation streams start here (one init + one train each).
pub const SOURCE_ACT_STREAM: u64 = 0x10;

static POOL: Once = Once::new();

fn init_jobs(jobs: Option<usize>) {
    if let Some(n) = jobs {
        POOL.call_once(|| {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the global thread pool: {e}");
            }
        });
    }
}

/// Defaults, then the --config file, then --set pairs in order, then the
/// dedicated flags. Later layers win.
pub fn resolve(common: &CommonOpts) -> Result<FullConfig> {
    init_jobs(common.jobs);
    let mut cfg = FullConfig::default();
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        cfg.apply_text(&text)?;
    }
    for pair in &common.set {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("--set expects KEY=VALUE, got `{pair}`")))?;
        cfg.apply(key.trim(), value.trim())?;
    }
    if let Some(seed) = common.seed {
        cfg.train.seed = seed;
    }
    Ok(cfg)
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn read_pairs(path: &Path) -> Result<Vec<(usize, String)>> {
    let pairs = echotext_core::text::load_dataset(path)?;
    if pairs.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    Ok(pairs)
}

/// Class count implied by the labels (max + 1, so labels can be sparse).
pub fn classes_in(pairs: &[(usize, String)]) -> Result<usize> {
    let max = pairs.iter().map(|(l, _)| *l).max().unwrap_or(0);
    if max == 0 {
        return Err(Error::InvalidConfig(
            "dataset labels span a single class; need at least 2".into(),
        ));
    }
    Ok(max + 1)
}

pub fn vocab_of(pairs: &[(usize, String)], min_count: usize) -> Vocabulary {
    let corpus: Vec<Vec<String>> = pairs.iter().map(|(_, t)| tokenize(t)).collect();
    build_vocab(&corpus, min_count)
}

/// Encodes against a specific model config; `max_len` is raised to the
/// largest filter region when a transferred config demands more than the
/// pipeline default allows.
pub fn encode_for(
    pairs: &[(usize, String)],
    vocab: &Vocabulary,
    max_len: usize,
    model_cfg: &ModelConfig,
) -> Vec<EncodedSentence> {
    let min_len = model_cfg.min_sentence_len();
    encode_dataset(pairs, vocab, max_len.max(min_len), min_len)
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::file(path, e))
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            ensure_dir(dir)?;
        }
    }
    Ok(())
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::file(path, e))
}

/// Prints the table and, when an output directory is given, writes
/// `<name>.txt` and `<name>.csv` there.
pub fn emit_table(table: &ReportTable, out: Option<&Path>, name: &str) -> Result<()> {
    print!("{}", table.render_text());
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_file(&dir.join(format!("{name}.txt")), &table.render_text())?;
        write_file(&dir.join(format!("{name}.csv")), &table.render_csv())?;
    }
    Ok(())
}

/// ASCII plan tag for filenames: f fresh, z frozen, t fine-tune.
pub fn plan_slug(plan: &TransferPlan) -> String {
    let tag = |m: LayerMode| match m {
        LayerMode::Fresh => 'f',
        LayerMode::Frozen => 'z',
        LayerMode::FineTune => 't',
    };
    format!("E{}C{}H{}O{}", tag(plan.e), tag(plan.c), tag(plan.h), tag(plan.o))
}

pub fn gather(data: &[EncodedSentence], idx: &[usize]) -> Vec<EncodedSentence> {
    idx.iter().map(|i| data[*i].clone()).collect()
}
