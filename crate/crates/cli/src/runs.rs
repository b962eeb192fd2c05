//! Single-model commands: train, transfer (build an initialization), eval.

use std::path::{Path, PathBuf};

use clap::Args;

use echotext_core::config::FullConfig;
use echotext_core::model::CnnModel;
use echotext_core::rng::{derive_seed, seeded};
use echotext_core::tensor::Scalar;
use echotext_core::text::{load_pretrained_vectors, Vocabulary};
use echotext_core::train::{evaluate, mc_split, train};
use echotext_core::transfer::{
    build_transfer_model, validate_transfer, Checkpoint, LayerMode, TransferOptions, TransferPlan,
};
use echotext_core::{Error, Result};

use crate::records::{write_record, CellRecord};
use crate::util::{
    classes_in, encode_for, ensure_parent, gather, read_pairs, resolve, stem, vocab_of,
    HOLDOUT_STREAM, INIT_STREAM, TRAIN_STREAM, VECTOR_STREAM,
};
use crate::{CommonOpts, Precision};

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Pretrained word vectors for the E layer (fresh inits only).
    #[arg(long, value_name = "FILE")]
    pub vectors: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Start from this checkpoint instead of a random initialization.
    #[arg(long, value_name = "CKPT", requires = "plan")]
    pub from_checkpoint: Option<PathBuf>,
    /// Per-layer plan like E🔓C🔓H★O★ (or E~C~H*O*); needs --from-checkpoint.
    #[arg(long, requires = "from_checkpoint")]
    pub plan: Option<String>,
    /// Under a frozen E, still train embedding rows the source never saw.
    #[arg(long)]
    pub train_uncovered_rows: bool,
    /// Checkpoint path; a result record lands next to it as <path>.json.
    #[arg(long, value_name = "CKPT")]
    pub out: PathBuf,
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut cfg = resolve(&args.common)?;
    if let Some(epochs) = args.epochs {
        cfg.train.epochs = epochs;
    }
    if args.vectors.is_some() && args.from_checkpoint.is_some() {
        return Err(Error::InvalidConfig(
            "--vectors conflicts with --from-checkpoint; the source already fixes the E layer".into(),
        ));
    }
    // Everything is read and validated before any output file is touched.
    let pairs = read_pairs(&args.data)?;
    cfg.model.num_classes = classes_in(&pairs)?;
    cfg.validate()?;
    let vocab = vocab_of(&pairs, cfg.pipeline.min_count);
    let plan = match &args.plan {
        Some(p) => p.parse::<TransferPlan>()?,
        None => TransferPlan::all_fresh(),
    };
    let source = match &args.from_checkpoint {
        Some(p) => Some(Checkpoint::load(p)?),
        None => None,
    };
    match args.common.precision {
        Precision::F32 => train_run::<f32>(args, &cfg, &pairs, &vocab, &plan, source.as_ref()),
        Precision::F64 => train_run::<f64>(args, &cfg, &pairs, &vocab, &plan, source.as_ref()),
    }
}

fn train_run<S: Scalar>(
    args: &TrainArgs,
    cfg: &FullConfig,
    pairs: &[(usize, String)],
    vocab: &Vocabulary,
    plan: &TransferPlan,
    source: Option<&Checkpoint>,
) -> Result<()> {
    let seed = cfg.train.seed;
    let encoded = encode_for(pairs, vocab, cfg.pipeline.max_len, &cfg.model);
    let (train_idx, test_idx) = mc_split(
        encoded.len(),
        cfg.train.test_fraction,
        &mut seeded(derive_seed(seed, HOLDOUT_STREAM)),
    )?;

    let opts = TransferOptions {
        train_uncovered_rows: args.train_uncovered_rows,
    };
    let mut init_rng = seeded(derive_seed(seed, INIT_STREAM));
    let mut model: CnnModel<S> = match source {
        Some(ck) => build_transfer_model(ck, vocab, cfg.model.clone(), plan, &opts, &mut init_rng)?,
        None => {
            let mut m = CnnModel::init_random(cfg.model.clone(), vocab, &mut init_rng)?;
            if let Some(vectors) = &args.vectors {
                let mut vec_rng = seeded(derive_seed(seed, VECTOR_STREAM));
                let (table, covered) = load_pretrained_vectors(vectors, vocab, cfg.model.d, &mut vec_rng)?;
                println!("pretrained vectors cover {covered} of {} vocabulary words", vocab.size());
                m.embeddings = table;
            }
            m
        }
    };

    let train_data = gather(&encoded, &train_idx);
    let test_data = gather(&encoded, &test_idx);
    train(
        &mut model,
        &train_data,
        &cfg.train,
        plan,
        &mut seeded(derive_seed(seed, TRAIN_STREAM)),
    )?;
    let accuracy = evaluate(&model, &test_data)?;
    println!(
        "trained {} epochs on {} examples; held-out accuracy {:.4} ({} examples)",
        cfg.train.epochs,
        train_data.len(),
        accuracy,
        test_data.len()
    );

    let dataset = stem(&args.data);
    let provenance = format!("train dataset={dataset} seed={seed} epochs={} plan={plan}", cfg.train.epochs);
    ensure_parent(&args.out)?;
    Checkpoint::from_model(&model, vocab, provenance).save(&args.out)?;
    let record = CellRecord {
        experiment: "train".to_string(),
        row: dataset,
        row_index: 0,
        col: "holdout".to_string(),
        plan: plan.to_string(),
        seed,
        param_count: cfg.model.param_count(plan),
        mean_pct: Some(100.0 * accuracy),
        pair_pct: None,
        blocked: None,
        per_repetition_pct: vec![100.0 * accuracy],
    };
    write_record(&record_path(&args.out), &record)?;
    println!("checkpoint written to {}", args.out.display());
    Ok(())
}

pub fn record_path(out: &Path) -> PathBuf {
    PathBuf::from(format!("{}.json", out.display()))
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Source checkpoint.
    #[arg(long, value_name = "CKPT")]
    pub from: PathBuf,
    /// Target dataset; supplies the vocabulary and class count.
    #[arg(long, value_name = "FILE")]
    pub target_data: PathBuf,
    #[arg(long)]
    pub plan: String,
    /// Under a frozen E, still train embedding rows the source never saw.
    #[arg(long)]
    pub train_uncovered_rows: bool,
    /// Path for the transferred (untrained) checkpoint.
    #[arg(long, value_name = "CKPT")]
    pub out: PathBuf,
}

pub fn cmd_transfer(args: &TransferArgs) -> Result<()> {
    let cfg = resolve(&args.common)?;
    let source = Checkpoint::load(&args.from)?;
    let pairs = read_pairs(&args.target_data)?;
    let vocab = vocab_of(&pairs, cfg.pipeline.min_count);
    let plan: TransferPlan = args.plan.parse()?;
    let mut target_cfg = source.config.clone();
    target_cfg.num_classes = classes_in(&pairs)?;
    for warning in validate_transfer(&source, &target_cfg, &plan)? {
        println!("warning: {warning}");
    }
    let oov = echotext_core::metrics::oov_count(&vocab, &source.vocabulary);
    println!(
        "target vocabulary {} words, {} not covered by the source",
        vocab.size(),
        oov
    );

    let opts = TransferOptions {
        train_uncovered_rows: args.train_uncovered_rows,
    };
    let seed = cfg.train.seed;
    let mut rng = seeded(derive_seed(seed, INIT_STREAM));
    let provenance = format!("transfer plan={plan} seed={seed} source=[{}]", source.provenance);
    let checkpoint = match args.common.precision {
        Precision::F32 => {
            let model: CnnModel<f32> = build_transfer_model(&source, &vocab, target_cfg, &plan, &opts, &mut rng)?;
            Checkpoint::from_model(&model, &vocab, provenance)
        }
        Precision::F64 => {
            let model: CnnModel<f64> = build_transfer_model(&source, &vocab, target_cfg, &plan, &opts, &mut rng)?;
            Checkpoint::from_model(&model, &vocab, provenance)
        }
    };
    ensure_parent(&args.out)?;
    checkpoint.save(&args.out)?;
    println!("transferred initialization written to {}", args.out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    #[arg(long, value_name = "CKPT")]
    pub checkpoint: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Optional result-record file.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Exact reconstruction: fine-tune everything against the checkpoint's own
/// vocabulary and config, which copies every tensor verbatim.
fn model_from_checkpoint<S: Scalar>(ck: &Checkpoint) -> Result<CnnModel<S>> {
    let plan = TransferPlan {
        e: LayerMode::FineTune,
        c: LayerMode::FineTune,
        h: LayerMode::FineTune,
        o: LayerMode::FineTune,
    };
    build_transfer_model(
        ck,
        &ck.vocabulary,
        ck.config.clone(),
        &plan,
        &TransferOptions::default(),
        &mut seeded(0),
    )
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let cfg = resolve(&args.common)?;
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let pairs = read_pairs(&args.data)?;
    let classes = classes_in(&pairs)?;
    if classes > checkpoint.config.num_classes {
        return Err(Error::InvalidConfig(format!(
            "dataset implies {} classes but the checkpoint has {}",
            classes, checkpoint.config.num_classes
        )));
    }
    let encoded = encode_for(&pairs, &checkpoint.vocabulary, cfg.pipeline.max_len, &checkpoint.config);
    let accuracy = match args.common.precision {
        Precision::F32 => evaluate(&model_from_checkpoint::<f32>(&checkpoint)?, &encoded)?,
        Precision::F64 => evaluate(&model_from_checkpoint::<f64>(&checkpoint)?, &encoded)?,
    };
    let dataset = stem(&args.data);
    println!("accuracy on {dataset} ({} examples): {:.4}", encoded.len(), accuracy);
    if let Some(out) = &args.out {
        let record = CellRecord {
            experiment: "eval".to_string(),
            row: dataset,
            row_index: 0,
            col: stem(&args.checkpoint),
            plan: String::new(),
            seed: cfg.train.seed,
            param_count: 0,
            mean_pct: Some(100.0 * accuracy),
            pair_pct: None,
            blocked: None,
            per_repetition_pct: vec![100.0 * accuracy],
        };
        ensure_parent(out)?;
        write_record(out, &record)?;
    }
    Ok(())
}
