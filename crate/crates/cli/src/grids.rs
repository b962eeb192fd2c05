//! Experiment grids: the plan × pair transfer matrix and the dropout and
//! activation sweeps. Each cell is one cross-validation; all cells share the
//! run seed, so every row sees the same splits and differences come from the
//! plans themselves.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;

use echotext_core::config::FullConfig;
use echotext_core::model::{CnnModel, ModelConfig};
use echotext_core::report::{Cell, ReportTable};
use echotext_core::rng::{derive_seed, seeded};
use echotext_core::tensor::{ActivationKind, Scalar};
use echotext_core::text::{EncodedSentence, Vocabulary};
use echotext_core::train::{cross_validate, train, RunResult};
use echotext_core::transfer::{validate_transfer, Checkpoint, TransferOptions, TransferPlan};
use echotext_core::{Error, Result};

use crate::records::{write_record, CellRecord};
use crate::util::{
    classes_in, emit_table, encode_for, ensure_dir, plan_slug, read_pairs, resolve, stem, vocab_of,
    SOURCE_ACT_STREAM,
};
use crate::{CommonOpts, Precision};

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Source checkpoint; repeatable.
    #[arg(long = "source", value_name = "CKPT", required = true)]
    pub sources: Vec<PathBuf>,
    /// Target dataset; repeatable.
    #[arg(long = "target", value_name = "FILE", required = true)]
    pub targets: Vec<PathBuf>,
    /// Comma-separated plans; default is the eight ECHO settings.
    #[arg(long)]
    pub settings: Option<String>,
    /// Prepend the all-Fresh control row.
    #[arg(long)]
    pub include_baseline: bool,
    /// Under a frozen E, still train embedding rows the source never saw.
    #[arg(long)]
    pub train_uncovered_rows: bool,
    /// Directory for matrix.txt, matrix.csv, and records/.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

struct PairCtx {
    label: String,
    source_stem: String,
    target_stem: String,
    checkpoint: Checkpoint,
    target_cfg: ModelConfig,
    vocab: Vocabulary,
    data: Vec<EncodedSentence>,
}

fn parse_settings(text: Option<&str>, include_baseline: bool) -> Result<Vec<TransferPlan>> {
    let mut settings: Vec<TransferPlan> = match text {
        Some(list) => list
            .split(',')
            .map(|p| p.trim().parse())
            .collect::<Result<_>>()?,
        None => TransferPlan::matrix_settings(),
    };
    if include_baseline {
        settings.insert(0, TransferPlan::all_fresh());
    }
    if settings.is_empty() {
        return Err(Error::InvalidConfig("the settings list is empty".into()));
    }
    Ok(settings)
}

pub fn cmd_matrix(args: &MatrixArgs) -> Result<()> {
    let cfg = resolve(&args.common)?;
    cfg.train.validate()?;
    let settings = parse_settings(args.settings.as_deref(), args.include_baseline)?;

    // Load every input up front; nothing trains unless all of it is present.
    let mut pairs_ctx = Vec::new();
    for source_path in &args.sources {
        let checkpoint = Checkpoint::load(source_path)?;
        for target_path in &args.targets {
            let rows = read_pairs(target_path)?;
            let vocab = vocab_of(&rows, cfg.pipeline.min_count);
            let mut target_cfg = checkpoint.config.clone();
            target_cfg.num_classes = classes_in(&rows)?;
            let data = encode_for(&rows, &vocab, cfg.pipeline.max_len, &target_cfg);
            pairs_ctx.push(PairCtx {
                label: format!("{}↠{}", stem(source_path), stem(target_path)),
                source_stem: stem(source_path),
                target_stem: stem(target_path),
                checkpoint: checkpoint.clone(),
                target_cfg,
                vocab,
                data,
            });
        }
    }

    match args.common.precision {
        Precision::F32 => matrix_run::<f32>(args, &cfg, &settings, &pairs_ctx),
        Precision::F64 => matrix_run::<f64>(args, &cfg, &settings, &pairs_ctx),
    }
}

fn matrix_run<S: Scalar>(
    args: &MatrixArgs,
    cfg: &FullConfig,
    settings: &[TransferPlan],
    pairs: &[PairCtx],
) -> Result<()> {
    let opts = TransferOptions {
        train_uncovered_rows: args.train_uncovered_rows,
    };
    let records_dir = args.out.join("records");
    ensure_dir(&records_dir)?;

    let col_labels = pairs.iter().map(|p| p.label.clone()).collect();
    let mut table = ReportTable::new("transfer accuracy (%)", "setting", col_labels);
    table.bold_column_max = true;

    for (row_index, plan) in settings.iter().enumerate() {
        let mut cells = Vec::with_capacity(pairs.len());
        for (pair_index, pair) in pairs.iter().enumerate() {
            let mut record = CellRecord {
                experiment: "matrix".to_string(),
                row: plan.to_string(),
                row_index,
                col: pair.label.clone(),
                plan: plan.to_string(),
                seed: cfg.train.seed,
                param_count: pair.target_cfg.param_count(plan),
                mean_pct: None,
                pair_pct: None,
                blocked: None,
                per_repetition_pct: Vec::new(),
            };
            let cell = match validate_transfer(&pair.checkpoint, &pair.target_cfg, plan) {
                Err(e @ Error::ClassCountMismatch { .. }) => {
                    record.blocked = Some(e.to_string());
                    Cell::Missing
                }
                Err(e) => return Err(e),
                Ok(_) => {
                    let result: RunResult = cross_validate::<S>(
                        &pair.data,
                        &pair.vocab,
                        &pair.target_cfg,
                        &cfg.train,
                        plan,
                        Some(&pair.checkpoint),
                        &opts,
                    )?;
                    record.mean_pct = Some(100.0 * result.mean_accuracy);
                    record.per_repetition_pct = result.per_repetition.iter().map(|a| 100.0 * a).collect();
                    Cell::Value(100.0 * result.mean_accuracy)
                }
            };
            let name = format!(
                "m{pair_index:02}r{row_index:02}_{}__{}__{}.json",
                pair.source_stem,
                pair.target_stem,
                plan_slug(plan)
            );
            write_record(&records_dir.join(name), &record)?;
            cells.push(cell);
        }
        table.push_row(plan.to_string(), cells);
    }
    emit_table(&table, Some(&args.out), "matrix")
}

#[derive(Debug, Args)]
pub struct SweepDropoutArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    #[arg(long, value_name = "CKPT")]
    pub source: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub target: PathBuf,
    /// Comma-separated dropout rates; default 0.0 through 0.9.
    #[arg(long)]
    pub rates: Option<String>,
    #[arg(long, default_value = "E🔓C🔓H🔓O★")]
    pub plan: String,
    /// Under a frozen E, still train embedding rows the source never saw.
    #[arg(long)]
    pub train_uncovered_rows: bool,
    /// Directory for sweep_dropout.txt, sweep_dropout.csv, and records/.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn cmd_sweep_dropout(args: &SweepDropoutArgs) -> Result<()> {
    let cfg = resolve(&args.common)?;
    let rates: Vec<f64> = match &args.rates {
        Some(list) => list
            .split(',')
            .map(|r| {
                r.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad dropout rate `{r}`")))
            })
            .collect::<Result<_>>()?,
        None => (0..10).map(|i| i as f64 / 10.0).collect(),
    };
    for rate in &rates {
        if !(0.0..1.0).contains(rate) {
            return Err(Error::InvalidConfig(format!("dropout rate {rate} outside [0, 1)")));
        }
    }
    let plan: TransferPlan = args.plan.parse()?;
    let checkpoint = Checkpoint::load(&args.source)?;
    let rows = read_pairs(&args.target)?;
    let vocab = vocab_of(&rows, cfg.pipeline.min_count);
    let mut target_cfg = checkpoint.config.clone();
    target_cfg.num_classes = classes_in(&rows)?;
    validate_transfer(&checkpoint, &target_cfg, &plan)?;
    let data = encode_for(&rows, &vocab, cfg.pipeline.max_len, &target_cfg);
    let label = format!("{}↠{}", stem(&args.source), stem(&args.target));

    match args.common.precision {
        Precision::F32 => {
            dropout_run::<f32>(args, &cfg, &rates, &plan, &checkpoint, &target_cfg, &vocab, &data, &label)
        }
        Precision::F64 => {
            dropout_run::<f64>(args, &cfg, &rates, &plan, &checkpoint, &target_cfg, &vocab, &data, &label)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn dropout_run<S: Scalar>(
    args: &SweepDropoutArgs,
    cfg: &FullConfig,
    rates: &[f64],
    plan: &TransferPlan,
    checkpoint: &Checkpoint,
    target_cfg: &ModelConfig,
    vocab: &Vocabulary,
    data: &[EncodedSentence],
    label: &str,
) -> Result<()> {
    let opts = TransferOptions {
        train_uncovered_rows: args.train_uncovered_rows,
    };
    let records_dir = args.out.join("records");
    ensure_dir(&records_dir)?;
    let mut table = ReportTable::new(
        format!("transfer accuracy (%) by dropout rate, plan {plan}"),
        "rate",
        vec![label.to_string()],
    );
    table.bold_column_max = true;

    for (row_index, rate) in rates.iter().enumerate() {
        let mut train_cfg = cfg.train.clone();
        train_cfg.dropout_rate = *rate;
        let mut model_cfg = target_cfg.clone();
        model_cfg.dropout_rate = *rate;
        let result =
            cross_validate::<S>(data, vocab, &model_cfg, &train_cfg, plan, Some(checkpoint), &opts)?;
        let row = format!("{rate:.1}");
        let record = CellRecord {
            experiment: "sweep-dropout".to_string(),
            row: row.clone(),
            row_index,
            col: label.to_string(),
            plan: plan.to_string(),
            seed: train_cfg.seed,
            param_count: model_cfg.param_count(plan),
            mean_pct: Some(100.0 * result.mean_accuracy),
            pair_pct: None,
            blocked: None,
            per_repetition_pct: result.per_repetition.iter().map(|a| 100.0 * a).collect(),
        };
        write_record(&records_dir.join(format!("d{row_index:02}_{row}.json")), &record)?;
        table.push_row(row, vec![Cell::Value(100.0 * result.mean_accuracy)]);
    }
    emit_table(&table, Some(&args.out), "sweep_dropout")
}

#[derive(Debug, Args)]
pub struct SweepActivationArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Source dataset; one checkpoint is trained per source activation.
    #[arg(long, value_name = "FILE")]
    pub source_data: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub target: PathBuf,
    /// Comma-separated activations for the source model.
    #[arg(long, default_value = "Iden,Tanh,ReLU")]
    pub source_acts: String,
    /// Comma-separated activations for the target model.
    #[arg(long, default_value = "Iden,Tanh,ReLU")]
    pub target_acts: String,
    /// Directory for sweep_activation.txt, sweep_activation.csv, records/.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

fn parse_acts(list: &str) -> Result<Vec<ActivationKind>> {
    let acts: Vec<ActivationKind> = list
        .split(',')
        .map(|a| ActivationKind::from_str(a.trim()))
        .collect::<Result<_>>()?;
    if acts.is_empty() {
        return Err(Error::InvalidConfig("the activation list is empty".into()));
    }
    Ok(acts)
}

pub fn cmd_sweep_activation(args: &SweepActivationArgs) -> Result<()> {
    let cfg = resolve(&args.common)?;
    let source_acts = parse_acts(&args.source_acts)?;
    let target_acts = parse_acts(&args.target_acts)?;
    let source_rows = read_pairs(&args.source_data)?;
    let target_rows = read_pairs(&args.target)?;
    match args.common.precision {
        Precision::F32 => {
            activation_run::<f32>(args, &cfg, &source_acts, &target_acts, &source_rows, &target_rows)
        }
        Precision::F64 => {
            activation_run::<f64>(args, &cfg, &source_acts, &target_acts, &source_rows, &target_rows)
        }
    }
}

fn activation_run<S: Scalar>(
    args: &SweepActivationArgs,
    cfg: &FullConfig,
    source_acts: &[ActivationKind],
    target_acts: &[ActivationKind],
    source_rows: &[(usize, String)],
    target_rows: &[(usize, String)],
) -> Result<()> {
    let frozen: TransferPlan = "E🔒C🔒H🔒O★".parse()?;
    let finetune: TransferPlan = "E🔓C🔓H🔓O★".parse()?;
    let opts = TransferOptions::default();
    let seed = cfg.train.seed;

    let source_vocab = vocab_of(source_rows, cfg.pipeline.min_count);
    let source_classes = classes_in(source_rows)?;
    let target_vocab = vocab_of(target_rows, cfg.pipeline.min_count);
    let target_classes = classes_in(target_rows)?;

    let records_dir = args.out.join("records");
    ensure_dir(&records_dir)?;
    let mut table = ReportTable::new(
        "transfer accuracy (%) as (frozen, fine-tuned)",
        "source act",
        target_acts.iter().map(|a| a.to_string()).collect(),
    );

    for (i, source_act) in source_acts.iter().enumerate() {
        let mut source_cfg = cfg.model.clone();
        source_cfg.conv_activation = *source_act;
        source_cfg.hidden_activation = *source_act;
        source_cfg.num_classes = source_classes;
        source_cfg.validate()?;
        let source_data = encode_for(source_rows, &source_vocab, cfg.pipeline.max_len, &source_cfg);

        let stream = SOURCE_ACT_STREAM + 2 * i as u64;
        let mut model: CnnModel<S> = CnnModel::init_random(
            source_cfg,
            &source_vocab,
            &mut seeded(derive_seed(seed, stream)),
        )?;
        train(
            &mut model,
            &source_data,
            &cfg.train,
            &TransferPlan::all_fresh(),
            &mut seeded(derive_seed(seed, stream + 1)),
        )?;
        let checkpoint = Checkpoint::from_model(
            &model,
            &source_vocab,
            format!("sweep-activation act={source_act} seed={seed}"),
        );

        let mut cells = Vec::with_capacity(target_acts.len());
        for target_act in target_acts {
            let mut target_cfg = cfg.model.clone();
            target_cfg.conv_activation = *target_act;
            target_cfg.hidden_activation = *target_act;
            target_cfg.num_classes = target_classes;
            let target_data = encode_for(target_rows, &target_vocab, cfg.pipeline.max_len, &target_cfg);
            let run = |plan: &TransferPlan| {
                cross_validate::<S>(
                    &target_data,
                    &target_vocab,
                    &target_cfg,
                    &cfg.train,
                    plan,
                    Some(&checkpoint),
                    &opts,
                )
            };
            let frozen_pct = 100.0 * run(&frozen)?.mean_accuracy;
            let finetuned = run(&finetune)?;
            let finetuned_pct = 100.0 * finetuned.mean_accuracy;
            let record = CellRecord {
                experiment: "sweep-activation".to_string(),
                row: source_act.to_string(),
                row_index: i,
                col: target_act.to_string(),
                plan: format!("{frozen} / {finetune}"),
                seed,
                param_count: target_cfg.param_count(&finetune),
                mean_pct: None,
                pair_pct: Some((frozen_pct, finetuned_pct)),
                blocked: None,
                per_repetition_pct: finetuned.per_repetition.iter().map(|a| 100.0 * a).collect(),
            };
            write_record(
                &records_dir.join(format!("a{i:02}_{source_act}_{target_act}.json")),
                &record,
            )?;
            cells.push(Cell::Pair(frozen_pct, finetuned_pct));
        }
        table.push_row(source_act.to_string(), cells);
    }
    emit_table(&table, Some(&args.out), "sweep_activation")
}

/// Shared by tests: the directory a grid command writes its records into.
pub fn records_dir(out: &Path) -> PathBuf {
    out.join("records")
}
