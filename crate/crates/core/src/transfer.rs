//! Checkpoint serialization and the layer-transfer protocol: build a target
//! model from a source checkpoint under a per-layer Fresh/Frozen/FineTune
//! plan, with vocabulary alignment for the embedding layer and structural
//! validation for everything else.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::rngs::StdRng;

use crate::config::{model_config_from_kv, model_config_to_kv};
use crate::error::{Error, Result};
use crate::model::{fresh_affine, fresh_conv_layer, CnnModel, ConvLayer, LayerId, ModelConfig};
use crate::tensor::{DenseTensor, ParamTensor, Scalar};
use crate::text::{EmbeddingTable, Vocabulary, PAD_ID, UNK_ID};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"ECHO";
pub const CHECKPOINT_VERSION: u32 = 1;

/// What happens to one layer when a target model is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerMode {
    /// Randomly initialized, trainable.
    Fresh,
    /// Copied from the source and not trainable.
    Frozen,
    /// Copied from the source, then fine-tuned.
    FineTune,
}

impl LayerMode {
    pub fn symbol(self) -> &'static str {
        match self {
            LayerMode::Fresh => "★",
            LayerMode::Frozen => "🔒",
            LayerMode::FineTune => "🔓",
        }
    }

    fn from_symbol(c: char) -> Option<LayerMode> {
        match c {
            '✳' | '★' | '*' => Some(LayerMode::Fresh),
            '🔒' | '=' => Some(LayerMode::Frozen),
            '🔓' | '~' => Some(LayerMode::FineTune),
            _ => None,
        }
    }
}

impl fmt::Display for LayerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Per-layer modes, written as a 4-symbol string like `E🔒C🔒H★O★`.
/// ASCII aliases are accepted on input: `*` fresh (also `✳`), `=` frozen,
/// `~` fine-tune (so `E=C=H*O*` means the same thing).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferPlan {
    pub e: LayerMode,
    pub c: LayerMode,
    pub h: LayerMode,
    pub o: LayerMode,
}

impl TransferPlan {
    pub fn all_fresh() -> Self {
        TransferPlan {
            e: LayerMode::Fresh,
            c: LayerMode::Fresh,
            h: LayerMode::Fresh,
            o: LayerMode::Fresh,
        }
    }

    pub fn mode(&self, layer: LayerId) -> LayerMode {
        match layer {
            LayerId::E => self.e,
            LayerId::C => self.c,
            LayerId::H => self.h,
            LayerId::O => self.o,
        }
    }

    /// The eight hierarchical settings of the transfer matrix, frozen block
    /// first (E🔒 growing rightward), then the fine-tuned block.
    pub fn matrix_settings() -> Vec<TransferPlan> {
        [
            "E🔒C★H★O★",
            "E🔒C🔒H★O★",
            "E🔒C🔒H🔒O★",
            "E🔒C🔒H🔒O🔒",
            "E🔓C★H★O★",
            "E🔓C🔓H★O★",
            "E🔓C🔓H🔓O★",
            "E🔓C🔓H🔓O🔓",
        ]
        .iter()
        .map(|s| s.parse().expect("built-in plan strings parse"))
        .collect()
    }
}

impl fmt::Display for TransferPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E{}C{}H{}O{}", self.e, self.c, self.h, self.o)
    }
}

impl std::str::FromStr for TransferPlan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("bad transfer plan `{s}` (expected e.g. E🔓C🔓H★O★ or E~C~H*O*)"));
        let mut chars = s.chars();
        let mut modes = Vec::with_capacity(4);
        for expected in ['E', 'C', 'H', 'O'] {
            match chars.next() {
                Some(c) if c.eq_ignore_ascii_case(&expected) => {}
                _ => return Err(bad()),
            }
            let mode = chars.next().and_then(LayerMode::from_symbol).ok_or_else(bad)?;
            modes.push(mode);
        }
        if chars.next().is_some() {
            return Err(bad());
        }
        Ok(TransferPlan {
            e: modes[0],
            c: modes[1],
            h: modes[2],
            o: modes[3],
        })
    }
}

/// One saved tensor. The owning layer is the name's prefix
/// (`E.embeddings`, `C.filters.0`, `H.weight`, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

impl TensorRecord {
    pub fn layer(&self) -> LayerId {
        CnnModel::<f32>::layer_of(&self.name)
    }
}

/// A trained model on disk: config, vocabulary, all tensors, and a free-text
/// provenance line.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config: ModelConfig,
    pub vocabulary: Vocabulary,
    pub tensors: Vec<TensorRecord>,
    pub provenance: String,
}

impl Checkpoint {
    pub fn from_model<S: Scalar>(model: &CnnModel<S>, vocab: &Vocabulary, provenance: impl Into<String>) -> Self {
        let tensors = model
            .tensors()
            .into_iter()
            .map(|p| TensorRecord {
                name: p.name.clone(),
                shape: p.shape().to_vec(),
                values: p.value.data().iter().map(|v| v.as_f32()).collect(),
            })
            .collect();
        Checkpoint {
            format_version: CHECKPOINT_VERSION,
            config: model.config.clone(),
            vocabulary: vocab.clone(),
            tensors,
            provenance: provenance.into(),
        }
    }

    pub fn tensor(&self, name: &str) -> Option<&TensorRecord> {
        self.tensors.iter().find(|t| t.name == name)
    }

    fn required(&self, name: &str) -> Result<&TensorRecord> {
        self.tensor(name)
            .ok_or_else(|| Error::StructureMismatch(format!("checkpoint is missing tensor `{name}`")))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        put_u32(&mut buf, self.format_version);
        put_block(&mut buf, model_config_to_kv(&self.config).as_bytes());
        put_block(&mut buf, self.provenance.as_bytes());
        put_u32(&mut buf, self.vocabulary.size() as u32);
        for word in self.vocabulary.words() {
            put_block(&mut buf, word.as_bytes());
        }
        for t in &self.tensors {
            if t.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Integrity(format!(
                    "tensor `{}` contains non-finite values; refusing to serialize",
                    t.name
                )));
            }
            let expected: usize = t.shape.iter().product();
            if expected != t.values.len() {
                return Err(Error::Integrity(format!(
                    "tensor `{}` shape {:?} disagrees with {} values",
                    t.name,
                    t.shape,
                    t.values.len()
                )));
            }
            put_block(&mut buf, t.name.as_bytes());
            put_u32(&mut buf, t.shape.len() as u32);
            for dim in &t.shape {
                put_u32(&mut buf, *dim as u32);
            }
            for v in &t.values {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&buf);
        put_u32(&mut buf, crc);
        Ok(buf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        fs::write(path, bytes).map_err(|e| Error::file(path, e))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 {
            return Err(Error::Integrity("file too short to be a checkpoint".into()));
        }
        if &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(Error::Integrity("bad magic bytes (not a checkpoint file)".into()));
        }
        // Checksum is validated before anything else is parsed, so any
        // corruption surfaces as one clear error instead of a garbled field.
        let body = &bytes[..bytes.len() - 4];
        let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
        let actual = crc32fast::hash(body);
        if stored != actual {
            return Err(Error::Integrity(format!(
                "checksum mismatch (stored {stored:08x}, computed {actual:08x})"
            )));
        }
        let mut cur = Cursor::new(&body[4..]);
        let version = cur.take_u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: CHECKPOINT_VERSION,
            });
        }
        let config_text = cur.take_string()?;
        let config = model_config_from_kv(&config_text)?;
        let provenance = cur.take_string()?;
        let word_count = cur.take_u32()? as usize;
        let mut words = Vec::new();
        for _ in 0..word_count {
            words.push(cur.take_string()?);
        }
        let vocabulary = Vocabulary::from_words(words);
        let mut tensors = Vec::new();
        while !cur.done() {
            let name = cur.take_string()?;
            let rank = cur.take_u32()? as usize;
            let mut shape = Vec::with_capacity(rank.min(8));
            for _ in 0..rank {
                shape.push(cur.take_u32()? as usize);
            }
            let count = shape
                .iter()
                .try_fold(1usize, |acc, d| acc.checked_mul(*d))
                .ok_or_else(|| Error::Integrity(format!("tensor `{name}` shape overflows")))?;
            let raw = cur.take_bytes(count.checked_mul(4).ok_or_else(|| {
                Error::Integrity(format!("tensor `{name}` too large"))
            })?)?;
            let values = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push(TensorRecord { name, shape, values });
        }
        Ok(Checkpoint {
            format_version: version,
            config,
            vocabulary,
            tensors,
            provenance,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_block(buf: &mut Vec<u8>, bytes: &[u8]) {
    put_u32(buf, bytes.len() as u32);
    buf.extend_from_slice(bytes);
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Cursor { buf, pos: 0 }
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }

    fn take_bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|end| *end <= self.buf.len())
            .ok_or_else(|| Error::Integrity("checkpoint truncated mid-record".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn take_u32(&mut self) -> Result<u32> {
        let b = self.take_bytes(4)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn take_string(&mut self) -> Result<String> {
        let len = self.take_u32()? as usize;
        let bytes = self.take_bytes(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Integrity("invalid UTF-8 in checkpoint".into()))
    }
}

/// Non-fatal observations surfaced during transfer validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransferWarning {
    /// The H layer is being transferred although source and target class
    /// counts differ, which is known to transfer poorly.
    HiddenAcrossClassCounts { source: usize, target: usize },
}

impl fmt::Display for TransferWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransferWarning::HiddenAcrossClassCounts { source, target } => write!(
                f,
                "transferring the H layer across class counts ({source} → {target}) is usually counterproductive"
            ),
        }
    }
}

/// Checks that a plan is structurally possible from `source` into a model
/// with `target` config. Hard blocks are errors; soft concerns come back as
/// warnings (also logged).
pub fn validate_transfer(
    source: &Checkpoint,
    target: &ModelConfig,
    plan: &TransferPlan,
) -> Result<Vec<TransferWarning>> {
    let src = &source.config;
    if plan.o != LayerMode::Fresh && src.num_classes != target.num_classes {
        return Err(Error::ClassCountMismatch {
            source_classes: src.num_classes,
            target_classes: target.num_classes,
        });
    }
    if plan.e != LayerMode::Fresh && src.d != target.d {
        return Err(Error::StructureMismatch(format!(
            "cannot transfer E: source d={} vs target d={}",
            src.d, target.d
        )));
    }
    if plan.c != LayerMode::Fresh
        && (src.d != target.d || src.region_sizes != target.region_sizes || src.feature_maps != target.feature_maps)
    {
        return Err(Error::StructureMismatch(format!(
            "cannot transfer C: source (d={}, regions {:?}, maps {}) vs target (d={}, regions {:?}, maps {})",
            src.d, src.region_sizes, src.feature_maps, target.d, target.region_sizes, target.feature_maps
        )));
    }
    if plan.h != LayerMode::Fresh
        && (src.hidden_units != target.hidden_units || src.pooled_len() != target.pooled_len())
    {
        return Err(Error::StructureMismatch(format!(
            "cannot transfer H: source ({}×{}) vs target ({}×{})",
            src.hidden_units,
            src.pooled_len(),
            target.hidden_units,
            target.pooled_len()
        )));
    }
    let mut warnings = Vec::new();
    if plan.h != LayerMode::Fresh && src.num_classes != target.num_classes {
        let w = TransferWarning::HiddenAcrossClassCounts {
            source: src.num_classes,
            target: target.num_classes,
        };
        log::warn!("{w}");
        warnings.push(w);
    }
    Ok(warnings)
}

/// Switches that refine transfer behavior beyond the plan itself.
#[derive(Debug, Clone, Default)]
pub struct TransferOptions {
    /// With a frozen E layer and partial vocabulary overlap, train just the
    /// randomly initialized (uncovered) rows instead of freezing them too.
    pub train_uncovered_rows: bool,
}

fn align_embeddings_full<S: Scalar>(
    source: &Checkpoint,
    target_vocab: &Vocabulary,
    rng: &mut StdRng,
) -> Result<(EmbeddingTable<S>, Vec<bool>, usize)> {
    let record = source.required("E.embeddings")?;
    let d = source.config.d;
    if record.shape != [source.vocabulary.size() + 2, d] {
        return Err(Error::StructureMismatch(format!(
            "E.embeddings shape {:?} disagrees with vocabulary size {} and d {}",
            record.shape,
            source.vocabulary.size(),
            d
        )));
    }
    // Randomize every non-PAD row first so the generator stream does not
    // depend on which words happen to overlap, then overwrite copied rows.
    let mut table = EmbeddingTable::random(target_vocab.size(), d, rng);
    let rows = table.rows();
    let mut copied = vec![false; rows];
    let copy_row = |table: &mut EmbeddingTable<S>, dst: usize, src: usize| {
        let src_values = &record.values[src * d..(src + 1) * d];
        let dst_row = table.matrix.value.row_mut(dst);
        for (slot, v) in dst_row.iter_mut().zip(src_values) {
            *slot = S::from_f32(*v);
        }
    };
    copy_row(&mut table, UNK_ID as usize, UNK_ID as usize);
    copied[UNK_ID as usize] = true;
    let mut copied_words = 0usize;
    for (i, word) in target_vocab.words().iter().enumerate() {
        if let Some(src_id) = source.vocabulary.lookup(word) {
            copy_row(&mut table, i + 2, src_id as usize);
            copied[i + 2] = true;
            copied_words += 1;
        }
    }
    table.source_tag = format!("checkpoint:{}", source.provenance);
    Ok((table, copied, copied_words))
}

/// Builds the target E layer from a source checkpoint: rows for overlapping
/// words (and UNK) are copied, everything else is drawn uniform in
/// [−0.25, 0.25], PAD stays zero. Returns the table and the number of word
/// rows copied, which equals |target vocab| − OOV(target, source).
pub fn align_embeddings<S: Scalar>(
    source: &Checkpoint,
    target_vocab: &Vocabulary,
    rng: &mut StdRng,
) -> Result<(EmbeddingTable<S>, usize)> {
    let (table, _, copied_words) = align_embeddings_full(source, target_vocab, rng)?;
    Ok((table, copied_words))
}

fn copy_param<S: Scalar>(source: &Checkpoint, name: &str, trainable: bool) -> Result<ParamTensor<S>> {
    let record = source.required(name)?;
    let values = record.values.iter().map(|v| S::from_f32(*v)).collect();
    let tensor = DenseTensor::from_vec(&record.shape, values)?;
    Ok(ParamTensor::new(name, tensor, trainable))
}

/// Assembles a target model from a source checkpoint under a plan. Fresh
/// layers draw from `rng` in the same order as `CnnModel::init_random`, so
/// an all-Fresh plan reproduces a random init bit for bit given the same
/// generator state.
pub fn build_transfer_model<S: Scalar>(
    source: &Checkpoint,
    target_vocab: &Vocabulary,
    target_config: ModelConfig,
    plan: &TransferPlan,
    opts: &TransferOptions,
    rng: &mut StdRng,
) -> Result<CnnModel<S>> {
    target_config.validate()?;
    validate_transfer(source, &target_config, plan)?;

    let embeddings = match plan.e {
        LayerMode::Fresh => EmbeddingTable::random(target_vocab.size(), target_config.d, rng),
        mode => {
            let (mut table, copied, _) = align_embeddings_full(source, target_vocab, rng)?;
            match mode {
                LayerMode::FineTune => table.matrix.trainable = true,
                _ if opts.train_uncovered_rows => {
                    // Keep the copied rows frozen but let the fresh ones move.
                    table.matrix.trainable = true;
                    let mut mask: Vec<bool> = copied.iter().map(|c| !c).collect();
                    mask[PAD_ID as usize] = false;
                    table.trainable_rows = Some(mask);
                }
                _ => table.matrix.trainable = false,
            }
            table
        }
    };

    let conv: Vec<ConvLayer<S>> = match plan.c {
        LayerMode::Fresh => target_config
            .region_sizes
            .iter()
            .enumerate()
            .map(|(i, h)| fresh_conv_layer(i, *h, &target_config, rng))
            .collect(),
        mode => {
            let trainable = mode != LayerMode::Frozen;
            (0..target_config.region_sizes.len())
                .map(|i| {
                    Ok(ConvLayer {
                        filters: copy_param(source, &format!("C.filters.{i}"), trainable)?,
                        bias: copy_param(source, &format!("C.bias.{i}"), trainable)?,
                    })
                })
                .collect::<Result<_>>()?
        }
    };

    let (hidden_w, hidden_b) = match plan.h {
        LayerMode::Fresh => fresh_affine(
            "H.weight",
            "H.bias",
            target_config.hidden_units,
            target_config.pooled_len(),
            rng,
        ),
        mode => {
            let trainable = mode != LayerMode::Frozen;
            (
                copy_param(source, "H.weight", trainable)?,
                copy_param(source, "H.bias", trainable)?,
            )
        }
    };

    let (output_w, output_b) = match plan.o {
        LayerMode::Fresh => fresh_affine(
            "O.weight",
            "O.bias",
            target_config.num_classes,
            target_config.hidden_units,
            rng,
        ),
        mode => {
            let trainable = mode != LayerMode::Frozen;
            (
                copy_param(source, "O.weight", trainable)?,
                copy_param(source, "O.bias", trainable)?,
            )
        }
    };

    Ok(CnnModel {
        config: target_config,
        embeddings,
        conv,
        hidden_w,
        hidden_b,
        output_w,
        output_b,
    })
}
