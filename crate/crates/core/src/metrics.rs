//! Dataset statistics, the OOV metric, and the source-selection advisor.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::text::{build_vocab, pretrained_coverage, tokenize, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainRole {
    Source,
    Target,
}

impl fmt::Display for DomainRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainRole::Source => "source",
            DomainRole::Target => "target",
        })
    }
}

/// The per-dataset summary row: class count, mean sentence length
/// (post-tokenization token count), corpus size, vocabulary size, and
/// optionally how many vocabulary words a pretrained vector file covers.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub domain_role: DomainRole,
    pub num_classes: usize,
    pub avg_length: f64,
    pub num_sentences: usize,
    pub vocab_size: usize,
    pub pretrained_covered: Option<usize>,
}

/// Computes stats and returns the vocabulary alongside so callers that need
/// both do not tokenize twice.
pub fn compute_stats_with_vocab(
    data: &[(usize, String)],
    role: DomainRole,
    vectors: Option<&Path>,
) -> Result<(DatasetStats, Vocabulary)> {
    if data.is_empty() {
        return Err(Error::EmptyInput("compute_stats"));
    }
    let corpus: Vec<Vec<String>> = data.iter().map(|(_, text)| tokenize(text)).collect();
    let labels: HashSet<usize> = data.iter().map(|(l, _)| *l).collect();
    let total_tokens: usize = corpus.iter().map(|s| s.len()).sum();
    let vocab = build_vocab(&corpus, 1);
    let pretrained_covered = match vectors {
        Some(path) => Some(pretrained_coverage(path, &vocab)?),
        None => None,
    };
    let stats = DatasetStats {
        domain_role: role,
        num_classes: labels.len(),
        avg_length: total_tokens as f64 / data.len() as f64,
        num_sentences: data.len(),
        vocab_size: vocab.size(),
        pretrained_covered,
    };
    Ok((stats, vocab))
}

pub fn compute_stats(data: &[(usize, String)], role: DomainRole, vectors: Option<&Path>) -> Result<DatasetStats> {
    compute_stats_with_vocab(data, role, vectors).map(|(s, _)| s)
}

/// Number of target-vocabulary words absent from the source vocabulary.
pub fn oov_count(target_vocab: &Vocabulary, source_vocab: &Vocabulary) -> usize {
    target_vocab
        .words()
        .iter()
        .filter(|w| !source_vocab.contains(w))
        .count()
}

/// Relative importance of the advisor's four signals. These weights are a
/// heuristic, not a measured quantity; they are exposed so callers can tune
/// them.
#[derive(Debug, Clone, Copy)]
pub struct AdvisorWeights {
    /// Vocabulary coverage, 1 − OOV/V_target.
    pub coverage: f64,
    /// Source vocabulary size (log, min-max normalized).
    pub vocab: f64,
    /// Source corpus size (log, min-max normalized).
    pub size: f64,
    /// Same class count as the target.
    pub class_match: f64,
}

impl Default for AdvisorWeights {
    fn default() -> Self {
        AdvisorWeights {
            coverage: 0.4,
            vocab: 0.25,
            size: 0.25,
            class_match: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SourceCandidate {
    pub id: String,
    pub stats: DatasetStats,
    pub vocab: Vocabulary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceScore {
    pub source_id: String,
    pub oov: usize,
    pub vocab_size: usize,
    pub num_sentences: usize,
    pub class_match: bool,
    pub score: f64,
    pub rank: usize,
}

fn minmax_norm(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if (max - min).abs() < f64::EPSILON {
        return vec![1.0; values.len()];
    }
    values.iter().map(|v| (v - min) / (max - min)).collect()
}

/// Ranks candidate source datasets for a target: prefer low OOV against the
/// target, large vocabulary, large corpus, and a matching class count.
/// Returns one score per candidate with ranks 1..k, ties broken by id.
pub fn rank_sources(
    target_stats: &DatasetStats,
    target_vocab: &Vocabulary,
    candidates: &[SourceCandidate],
    weights: &AdvisorWeights,
) -> Result<Vec<SourceScore>> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("rank_sources"));
    }
    let v_target = target_vocab.size();
    let log_vocab: Vec<f64> = candidates
        .iter()
        .map(|c| (c.stats.vocab_size.max(1) as f64).ln())
        .collect();
    let log_size: Vec<f64> = candidates
        .iter()
        .map(|c| (c.stats.num_sentences.max(1) as f64).ln())
        .collect();
    let vocab_norm = minmax_norm(&log_vocab);
    let size_norm = minmax_norm(&log_size);

    let mut scores: Vec<SourceScore> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let oov = oov_count(target_vocab, &c.vocab);
            let coverage = if v_target == 0 {
                1.0
            } else {
                1.0 - oov as f64 / v_target as f64
            };
            let class_match = c.stats.num_classes == target_stats.num_classes;
            let score = weights.coverage * coverage
                + weights.vocab * vocab_norm[i]
                + weights.size * size_norm[i]
                + weights.class_match * if class_match { 1.0 } else { 0.0 };
            SourceScore {
                source_id: c.id.clone(),
                oov,
                vocab_size: c.stats.vocab_size,
                num_sentences: c.stats.num_sentences,
                class_match,
                score,
                rank: 0,
            }
        })
        .collect();
    scores.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.source_id.cmp(&b.source_id))
    });
    for (i, s) in scores.iter_mut().enumerate() {
        s.rank = i + 1;
    }
    Ok(scores)
}
