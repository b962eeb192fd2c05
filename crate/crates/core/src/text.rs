//! Tokenization, vocabulary, word-vector loading, and sentence encoding:
//! everything on the input side of the embedding layer.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::rngs::StdRng;

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, ParamTensor, Scalar};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;

/// Characters split off as standalone tokens.
const DETACHED: [char; 8] = ['.', ',', '!', '?', '\'', '"', '(', ')'];

/// Lowercases, splits on whitespace, and detaches common punctuation into
/// standalone tokens. Empty input yields an empty list; the encoder later
/// substitutes a single UNK.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut word = String::new();
        for ch in chunk.chars() {
            let ch = ch.to_lowercase().next().unwrap_or(ch);
            if DETACHED.contains(&ch) {
                if !word.is_empty() {
                    tokens.push(std::mem::take(&mut word));
                }
                tokens.push(ch.to_string());
            } else {
                word.extend(ch.to_lowercase());
            }
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    tokens
}

/// Token table with two reserved slots: index 0 is PAD, index 1 is UNK.
/// Real words occupy indices `2..V+2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds directly from an ordered word list (used by checkpoint load).
    pub fn from_words(words: Vec<String>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32 + 2))
            .collect();
        Vocabulary { words, index }
    }

    /// Number of real words, excluding PAD and UNK.
    pub fn size(&self) -> usize {
        self.words.len()
    }

    /// Words in index order (index 2 first).
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Token id, UNK for out-of-vocabulary tokens.
    pub fn id_of(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    /// Exact id if present (no UNK fallback).
    pub fn lookup(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }
}

/// Collects every token appearing at least `min_count` times, ordered by
/// frequency descending then token ascending, so the result is
/// deterministic for a given corpus.
pub fn build_vocab(corpus: &[Vec<String>], min_count: usize) -> Vocabulary {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for sentence in corpus {
        for token in sentence {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(&str, usize)> = counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocabulary::from_words(entries.into_iter().map(|(w, _)| w.to_string()).collect())
}

/// A sentence ready for the model: fixed-length id array plus the true
/// (pre-padding) length and its class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSentence {
    pub token_ids: Vec<u32>,
    pub true_length: usize,
    pub label: usize,
}

/// Maps tokens to ids (OOV → UNK), truncates to `max_len`, and right-pads
/// with PAD up to at least `min_len` so every sentence covers the largest
/// filter region. Empty input becomes a single UNK.
pub fn encode(tokens: &[String], vocab: &Vocabulary, max_len: usize, min_len: usize) -> EncodedSentence {
    let mut ids: Vec<u32> = tokens.iter().take(max_len).map(|t| vocab.id_of(t)).collect();
    if ids.is_empty() {
        ids.push(UNK_ID);
    }
    let true_length = ids.len();
    while ids.len() < min_len {
        ids.push(PAD_ID);
    }
    EncodedSentence {
        token_ids: ids,
        true_length,
        label: 0,
    }
}

/// The E layer: one embedding row per vocabulary slot, PAD and UNK
/// included.
#[derive(Debug, Clone)]
pub struct EmbeddingTable<S> {
    /// Shape `[(V+2) × d]`; row 0 (PAD) stays exactly zero.
    pub matrix: ParamTensor<S>,
    pub d: usize,
    /// Provenance: "random", a vector file id, or a checkpoint id.
    pub source_tag: String,
    /// When set, only rows flagged true receive gradient. Used to train
    /// just the uncovered rows of an otherwise frozen transferred table.
    pub trainable_rows: Option<Vec<bool>>,
}

impl<S: Scalar> EmbeddingTable<S> {
    /// Fresh random table: word and UNK rows uniform in [−0.25, 0.25],
    /// PAD zero.
    pub fn random(vocab_size: usize, d: usize, rng: &mut StdRng) -> Self {
        let rows = vocab_size + 2;
        let mut matrix = DenseTensor::zeros(&[rows, d]);
        for r in 1..rows {
            fill_row_uniform(matrix.row_mut(r), rng);
        }
        EmbeddingTable {
            matrix: ParamTensor::new("E.embeddings", matrix, true),
            d,
            source_tag: "random".to_string(),
            trainable_rows: None,
        }
    }

    pub fn rows(&self) -> usize {
        self.matrix.shape()[0]
    }

    /// Whether gradient may accumulate into `row` under the current flags.
    pub fn row_trainable(&self, row: usize) -> bool {
        if row == PAD_ID as usize || !self.matrix.trainable {
            return false;
        }
        match &self.trainable_rows {
            Some(mask) => mask[row],
            None => true,
        }
    }
}

pub(crate) fn fill_row_uniform<S: Scalar>(row: &mut [S], rng: &mut StdRng) {
    use rand::Rng;
    for v in row {
        *v = S::from_f64(rng.gen_range(-0.25..0.25));
    }
}

struct VectorFile<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    entries: usize,
    pub count: usize,
    pub dim: usize,
}

impl<R: BufRead> VectorFile<R> {
    fn open(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or(Error::Parse {
                line: 1,
                message: "missing header line".to_string(),
            })?
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?;
        let mut parts = header.split(' ');
        let count = parse_header_field(parts.next(), "count")?;
        let dim = parse_header_field(parts.next(), "dim")?;
        if parts.next().is_some() {
            return Err(Error::Parse {
                line: 1,
                message: format!("header must be \"<count> <dim>\", got `{header}`"),
            });
        }
        Ok(VectorFile {
            lines,
            line_no: 1,
            entries: 0,
            count,
            dim,
        })
    }

    /// Next `(word, values)` entry, or None at end of file. At the end the
    /// number of entries must match the header's declared count.
    fn next_entry(&mut self) -> Result<Option<(String, Vec<f32>)>> {
        let line = match self.lines.next() {
            Some(l) => l,
            None => {
                if self.entries != self.count {
                    return Err(Error::Parse {
                        line: self.line_no,
                        message: format!(
                            "header declares {} vectors, file has {}",
                            self.count, self.entries
                        ),
                    });
                }
                return Ok(None);
            }
        };
        self.line_no += 1;
        let line = line.map_err(|e| Error::Parse {
            line: self.line_no,
            message: e.to_string(),
        })?;
        let mut parts = line.split(' ');
        let word = parts
            .next()
            .filter(|w| !w.is_empty())
            .ok_or(Error::Parse {
                line: self.line_no,
                message: "empty line in vector file".to_string(),
            })?
            .to_string();
        let mut values = Vec::with_capacity(self.dim);
        for part in parts {
            let v: f32 = part.parse().map_err(|_| Error::Parse {
                line: self.line_no,
                message: format!("bad float `{part}`"),
            })?;
            values.push(v);
        }
        if values.len() != self.dim {
            return Err(Error::Parse {
                line: self.line_no,
                message: format!("expected {} values for `{word}`, got {}", self.dim, values.len()),
            });
        }
        self.entries += 1;
        Ok(Some((word, values)))
    }
}

fn parse_header_field(part: Option<&str>, name: &str) -> Result<usize> {
    part.and_then(|p| p.parse().ok()).ok_or(Error::Parse {
        line: 1,
        message: format!("header missing {name}"),
    })
}

/// Loads pretrained vectors for a vocabulary. Rows for covered words are
/// copied verbatim from the file; everything else (including UNK) is drawn
/// uniform in [−0.25, 0.25]; PAD stays zero. Returns the table and the
/// number of vocabulary words found in the file.
pub fn load_pretrained_vectors<S: Scalar>(
    path: &Path,
    vocab: &Vocabulary,
    d: usize,
    rng: &mut StdRng,
) -> Result<(EmbeddingTable<S>, usize)> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let mut vectors = VectorFile::open(BufReader::new(file))?;
    if vectors.dim != d {
        return Err(Error::InvalidConfig(format!(
            "vector file has dimension {}, model expects {}",
            vectors.dim, d
        )));
    }
    // Randomize every non-PAD row first, then overwrite covered rows. This
    // keeps the generator stream independent of the file's word order.
    let mut table = EmbeddingTable::random(vocab.size(), d, rng);
    let mut covered = 0usize;
    while let Some((word, values)) = vectors.next_entry()? {
        if let Some(id) = vocab.lookup(&word) {
            covered += 1;
            let row = table.matrix.value.row_mut(id as usize);
            for (slot, v) in row.iter_mut().zip(&values) {
                *slot = S::from_f32(*v);
            }
        }
    }
    table.source_tag = format!("pretrained:{}", path.display());
    Ok((table, covered))
}

/// Counts vocabulary words present in a vector file without building a
/// table (the V_pre statistic).
pub fn pretrained_coverage(path: &Path, vocab: &Vocabulary) -> Result<usize> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let mut vectors = VectorFile::open(BufReader::new(file))?;
    let mut covered = 0usize;
    while let Some((word, _)) = vectors.next_entry()? {
        if vocab.contains(&word) {
            covered += 1;
        }
    }
    Ok(covered)
}

/// Reads a `<label>\t<text>` dataset file. Blank lines are skipped; labels
/// must be non-negative integers.
pub fn load_dataset(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.is_empty() {
            continue;
        }
        let (label, text) = line.split_once('\t').ok_or(Error::Parse {
            line: line_no,
            message: "expected <label><TAB><text>".to_string(),
        })?;
        let label: usize = label.trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad label `{label}`"),
        })?;
        out.push((label, text.to_string()));
    }
    Ok(out)
}

/// Tokenizes and encodes a labeled dataset in one pass.
pub fn encode_dataset(
    pairs: &[(usize, String)],
    vocab: &Vocabulary,
    max_len: usize,
    min_len: usize,
) -> Vec<EncodedSentence> {
    pairs
        .iter()
        .map(|(label, text)| {
            let mut enc = encode(&tokenize(text), vocab, max_len, min_len);
            enc.label = *label;
            enc
        })
        .collect()
}
