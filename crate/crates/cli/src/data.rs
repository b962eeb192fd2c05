//! Dataset-facing commands: stats, oov, advise, gen.

use std::path::PathBuf;

use clap::{Args, ValueEnum};

use echotext_core::metrics::{
    compute_stats_with_vocab, oov_count, rank_sources, AdvisorWeights, DomainRole, SourceCandidate,
};
use echotext_core::report::{Cell, ReportTable};
use echotext_core::synth::{dataset_to_string, generate, SynthSpec};
use echotext_core::{Error, Result};

use crate::util::{emit_table, ensure_parent, read_pairs, stem, vocab_of, write_file};
use crate::CommonOpts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    Source,
    Target,
}

impl From<RoleArg> for DomainRole {
    fn from(r: RoleArg) -> DomainRole {
        match r {
            RoleArg::Source => DomainRole::Source,
            RoleArg::Target => DomainRole::Target,
        }
    }
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Dataset file; repeatable, one table row each.
    #[arg(long = "data", value_name = "FILE", required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = RoleArg::Target)]
    pub role: RoleArg,
    /// Word-vector file; adds the V_pre column.
    #[arg(long, value_name = "FILE")]
    pub vectors: Option<PathBuf>,
    /// Directory for stats.txt and stats.csv.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn cmd_stats(args: &StatsArgs) -> Result<()> {
    crate::util::resolve(&args.common)?;
    let cols = ["D", "C", "L", "N", "V", "V_pre"].map(String::from).to_vec();
    let mut table = ReportTable::new("dataset statistics", "dataset", cols);
    for path in &args.data {
        let pairs = read_pairs(path)?;
        let (stats, _) = compute_stats_with_vocab(&pairs, args.role.into(), args.vectors.as_deref())?;
        table.push_row(
            stem(path),
            vec![
                Cell::Text(stats.domain_role.to_string()),
                Cell::Text(stats.num_classes.to_string()),
                Cell::Value(stats.avg_length),
                Cell::Text(stats.num_sentences.to_string()),
                Cell::Text(stats.vocab_size.to_string()),
                match stats.pretrained_covered {
                    Some(v) => Cell::Text(v.to_string()),
                    None => Cell::Missing,
                },
            ],
        );
    }
    emit_table(&table, args.out.as_deref(), "stats")
}

#[derive(Debug, Args)]
pub struct OovArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Target dataset; repeatable, one column each.
    #[arg(long = "target", value_name = "FILE", required = true)]
    pub targets: Vec<PathBuf>,
    /// Source dataset; repeatable, one row each.
    #[arg(long = "source", value_name = "FILE", required = true)]
    pub sources: Vec<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn cmd_oov(args: &OovArgs) -> Result<()> {
    crate::util::resolve(&args.common)?;
    // Raw vocabularies on both sides: every token counts once it appears.
    let load = |paths: &[PathBuf]| -> Result<Vec<(String, echotext_core::text::Vocabulary)>> {
        paths
            .iter()
            .map(|p| Ok((stem(p), vocab_of(&read_pairs(p)?, 1))))
            .collect()
    };
    let targets = load(&args.targets)?;
    let sources = load(&args.sources)?;

    let col_labels = targets.iter().map(|(s, _)| s.clone()).collect();
    let mut table = ReportTable::new("OOV: target words missing from each source", "source", col_labels);
    for (sname, svocab) in &sources {
        let cells = targets
            .iter()
            .map(|(_, tvocab)| Cell::Text(oov_count(tvocab, svocab).to_string()))
            .collect();
        table.push_row(sname.clone(), cells);
    }
    emit_table(&table, args.out.as_deref(), "oov")
}

#[derive(Debug, Args)]
pub struct AdviseArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    #[arg(long, value_name = "FILE")]
    pub target: PathBuf,
    /// Candidate source dataset; repeatable.
    #[arg(long = "source", value_name = "FILE", required = true)]
    pub sources: Vec<PathBuf>,
    /// Score weight for vocabulary coverage.
    #[arg(long, default_value_t = AdvisorWeights::default().coverage)]
    pub weight_coverage: f64,
    /// Score weight for source vocabulary size.
    #[arg(long, default_value_t = AdvisorWeights::default().vocab)]
    pub weight_vocab: f64,
    /// Score weight for source corpus size.
    #[arg(long, default_value_t = AdvisorWeights::default().size)]
    pub weight_size: f64,
    /// Score weight for a matching class count.
    #[arg(long, default_value_t = AdvisorWeights::default().class_match)]
    pub weight_class: f64,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn cmd_advise(args: &AdviseArgs) -> Result<()> {
    crate::util::resolve(&args.common)?;
    let target_pairs = read_pairs(&args.target)?;
    let (target_stats, target_vocab) = compute_stats_with_vocab(&target_pairs, DomainRole::Target, None)?;
    let candidates: Vec<SourceCandidate> = args
        .sources
        .iter()
        .map(|p| {
            let pairs = read_pairs(p)?;
            let (stats, vocab) = compute_stats_with_vocab(&pairs, DomainRole::Source, None)?;
            Ok(SourceCandidate {
                id: stem(p),
                stats,
                vocab,
            })
        })
        .collect::<Result<_>>()?;
    let weights = AdvisorWeights {
        coverage: args.weight_coverage,
        vocab: args.weight_vocab,
        size: args.weight_size,
        class_match: args.weight_class,
    };
    let scores = rank_sources(&target_stats, &target_vocab, &candidates, &weights)?;

    let cols = ["source", "OOV", "V", "N", "class match", "score"].map(String::from).to_vec();
    let mut table = ReportTable::new(format!("source ranking for target `{}`", stem(&args.target)), "rank", cols);
    for s in &scores {
        table.push_row(
            s.rank.to_string(),
            vec![
                Cell::Text(s.source_id.clone()),
                Cell::Text(s.oov.to_string()),
                Cell::Text(s.vocab_size.to_string()),
                Cell::Text(s.num_sentences.to_string()),
                Cell::Text(if s.class_match { "yes" } else { "no" }.to_string()),
                Cell::Text(format!("{:.4}", s.score)),
            ],
        );
    }
    emit_table(&table, args.out.as_deref(), "advise")?;
    println!("advice: source `{}` fits best", scores[0].source_id);
    Ok(())
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long, default_value_t = 1000)]
    pub sentences: usize,
    /// Shortest sentence, in tokens.
    #[arg(long, default_value_t = 5)]
    pub min_len: usize,
    /// Longest sentence, in tokens.
    #[arg(long, default_value_t = 9)]
    pub max_len: usize,
    /// Keyword pool size per class.
    #[arg(long, default_value_t = 20)]
    pub keywords: usize,
    /// Shared (class-neutral) pool size.
    #[arg(long, default_value_t = 40)]
    pub shared: usize,
    /// Also emit class-discriminative keyword bigrams.
    #[arg(long)]
    pub bigrams: bool,
    /// Fraction of pools reused from the reference corpus; needs --ref-seed.
    #[arg(long, requires = "ref_seed")]
    pub overlap: Option<f64>,
    /// Seed of the reference corpus whose pools are partially reused.
    #[arg(long)]
    pub ref_seed: Option<u64>,
    #[arg(long)]
    pub ref_classes: Option<usize>,
    #[arg(long)]
    pub ref_keywords: Option<usize>,
    #[arg(long)]
    pub ref_shared: Option<usize>,
    /// Output dataset file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

pub fn cmd_gen(args: &GenArgs) -> Result<()> {
    let cfg = crate::util::resolve(&args.common)?;
    let spec = SynthSpec {
        num_classes: args.classes,
        num_sentences: args.sentences,
        sentence_len: (args.min_len, args.max_len),
        keywords_per_class: vec![args.keywords; args.classes],
        shared_pool_size: args.shared,
        overlap_fraction: args.overlap.unwrap_or(0.0),
        class_bigrams: args.bigrams,
        seed: cfg.train.seed,
    };
    let reference = args.ref_seed.map(|ref_seed| {
        let classes = args.ref_classes.unwrap_or(args.classes);
        SynthSpec {
            num_classes: classes,
            num_sentences: 1,
            sentence_len: spec.sentence_len,
            keywords_per_class: vec![args.ref_keywords.unwrap_or(args.keywords); classes],
            shared_pool_size: args.ref_shared.unwrap_or(args.shared),
            overlap_fraction: 0.0,
            class_bigrams: args.bigrams,
            seed: ref_seed,
        }
    });
    if args.ref_seed.is_some() && args.overlap.is_none() {
        return Err(Error::InvalidConfig(
            "--ref-seed without --overlap generates nothing shared; pass --overlap".into(),
        ));
    }
    let rows = generate(&spec, reference.as_ref())?;
    ensure_parent(&args.out)?;
    write_file(&args.out, &dataset_to_string(&rows))?;
    println!(
        "wrote {} sentences over {} classes to {}",
        rows.len(),
        args.classes,
        args.out.display()
    );
    Ok(())
}
