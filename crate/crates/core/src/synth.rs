//! Deterministic generator of small labeled corpora with controllable
//! vocabulary overlap, size, and class count. Class signal is carried by
//! per-class keyword tokens mixed with a shared ambiguous pool, so a small
//! CNN can learn the task and transfer experiments have something real to
//! transfer.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub num_classes: usize,
    pub num_sentences: usize,
    /// Inclusive (min, max) token count per sentence.
    pub sentence_len: (usize, usize),
    /// Keyword pool size per class; must have one entry per class.
    pub keywords_per_class: Vec<usize>,
    pub shared_pool_size: usize,
    /// With a reference spec, the fraction of each pool reused verbatim
    /// from the reference's pools (controls the OOV rate between the two).
    pub overlap_fraction: f64,
    /// Also emit adjacent keyword pairs, giving conv filters wider
    /// class-discriminative patterns.
    pub class_bigrams: bool,
    pub seed: u64,
}

impl SynthSpec {
    /// A reasonable starting point: binary task, 7-token sentences.
    pub fn default_with(num_classes: usize, num_sentences: usize, seed: u64) -> Self {
        SynthSpec {
            num_classes,
            num_sentences,
            sentence_len: (5, 9),
            keywords_per_class: vec![20; num_classes],
            shared_pool_size: 40,
            overlap_fraction: 0.0,
            class_bigrams: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::InvalidConfig("synth corpus needs ≥ 2 classes".into()));
        }
        if self.num_sentences < 1 {
            return Err(Error::InvalidConfig("synth corpus needs ≥ 1 sentence".into()));
        }
        let (lo, hi) = self.sentence_len;
        if lo < 1 || lo > hi {
            return Err(Error::InvalidConfig(format!("bad sentence length range ({lo}, {hi})")));
        }
        if self.keywords_per_class.len() != self.num_classes {
            return Err(Error::InvalidConfig(format!(
                "keywords_per_class has {} entries for {} classes",
                self.keywords_per_class.len(),
                self.num_classes
            )));
        }
        if self.keywords_per_class.iter().any(|k| *k < 1) || self.shared_pool_size < 1 {
            return Err(Error::InvalidConfig("every token pool needs at least one entry".into()));
        }
        if !(0.0..=1.0).contains(&self.overlap_fraction) {
            return Err(Error::InvalidConfig(format!(
                "overlap_fraction must be in [0, 1], got {}",
                self.overlap_fraction
            )));
        }
        Ok(())
    }
}

struct Pools {
    class: Vec<Vec<String>>,
    shared: Vec<String>,
}

/// A spec's own pools, independent of any reference: token names are
/// namespaced by seed so two specs with different seeds never collide.
fn standalone_pools(spec: &SynthSpec) -> Pools {
    let class = (0..spec.num_classes)
        .map(|c| {
            (0..spec.keywords_per_class[c])
                .map(|k| format!("c{c}k{k}s{}", spec.seed))
                .collect()
        })
        .collect();
    let shared = (0..spec.shared_pool_size)
        .map(|k| format!("sh{k}s{}", spec.seed))
        .collect();
    Pools { class, shared }
}

/// Pools with `overlap_fraction` of each pool taken from the reference's
/// standalone pools (class i reuses reference class i mod its class count).
/// Fresh tokens get an `f` suffix, which reference names never carry, so
/// the non-reused part is guaranteed disjoint from the reference even when
/// seeds coincide.
fn pools_with_reference(spec: &SynthSpec, reference: &SynthSpec) -> Pools {
    let ref_pools = standalone_pools(reference);
    let reuse = |size: usize| (spec.overlap_fraction * size as f64).floor() as usize;
    let class = (0..spec.num_classes)
        .map(|c| {
            let size = spec.keywords_per_class[c];
            let ref_pool = &ref_pools.class[c % reference.num_classes];
            let take = reuse(size).min(ref_pool.len());
            let mut pool: Vec<String> = ref_pool[..take].to_vec();
            for k in pool.len()..size {
                pool.push(format!("c{c}k{k}s{}f", spec.seed));
            }
            pool
        })
        .collect();
    let take = reuse(spec.shared_pool_size).min(ref_pools.shared.len());
    let mut shared: Vec<String> = ref_pools.shared[..take].to_vec();
    for k in shared.len()..spec.shared_pool_size {
        shared.push(format!("sh{k}s{}f", spec.seed));
    }
    Pools { class, shared }
}

/// Generates a labeled dataset, fully determined by `spec`. Labels are
/// balanced round-robin. Every sentence carries at least one keyword of its
/// class; keyword and shared pools are cycled through so each pool token
/// appears once the corpus is large enough.
pub fn generate(spec: &SynthSpec, reference: Option<&SynthSpec>) -> Result<Vec<(usize, String)>> {
    spec.validate()?;
    if let Some(r) = reference {
        r.validate()?;
    }
    let pools = match reference {
        Some(r) => pools_with_reference(spec, r),
        None => standalone_pools(spec),
    };
    let mut rng = seeded(spec.seed);
    let (lo, hi) = spec.sentence_len;
    let mut out = Vec::with_capacity(spec.num_sentences);
    for j in 0..spec.num_sentences {
        let label = j % spec.num_classes;
        let pool = &pools.class[label];
        let len = rng.gen_range(lo..=hi);
        let mut tokens: Vec<&str> = Vec::with_capacity(len + 1);
        while tokens.len() < len {
            if spec.class_bigrams && tokens.len() + 2 <= len && rng.gen_bool(0.3) {
                let k = rng.gen_range(0..pool.len());
                tokens.push(&pool[k]);
                tokens.push(&pool[(k + 1) % pool.len()]);
            } else if rng.gen_bool(0.5) {
                tokens.push(&pool[rng.gen_range(0..pool.len())]);
            } else {
                tokens.push(&pools.shared[rng.gen_range(0..pools.shared.len())]);
            }
        }
        // Forced coverage: overwrite one position with the cycled class
        // keyword and (when there is room) another with the cycled shared
        // token, so every pool token eventually appears in the corpus.
        let forced_key = &pool[(j / spec.num_classes) % pool.len()];
        let key_pos = rng.gen_range(0..len);
        tokens[key_pos] = forced_key;
        if len > 1 {
            let mut shared_pos = rng.gen_range(0..len);
            if shared_pos == key_pos {
                shared_pos = (shared_pos + 1) % len;
            }
            tokens[shared_pos] = &pools.shared[j % pools.shared.len()];
        }
        out.push((label, tokens.join(" ")));
    }
    Ok(out)
}

/// Serializes to the standard dataset format, one `<label>\t<text>` line
/// per example.
pub fn dataset_to_string(rows: &[(usize, String)]) -> String {
    let mut s = String::new();
    for (label, text) in rows {
        s.push_str(&label.to_string());
        s.push('\t');
        s.push_str(text);
        s.push('\n');
    }
    s
}
