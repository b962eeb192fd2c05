//! Adadelta mini-batch training with freeze masks, the per-row l2 norm
//! constraint, and Monte-Carlo k-fold cross-validation with repetition
//! averaging.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CnnModel, ModelConfig};
use crate::rng::{derive_seed, seeded};
use crate::tensor::{ParamTensor, Scalar};
use crate::text::{EncodedSentence, Vocabulary};
use crate::transfer::{build_transfer_model, Checkpoint, LayerMode, TransferOptions, TransferPlan};

/// Stream index reserved for the per-repetition permutation used by
/// disjoint folds; fold streams use indices 0..folds.
const PERM_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    /// Adadelta decay.
    pub rho: f64,
    /// Adadelta conditioning constant.
    pub epsilon: f64,
    pub dropout_rate: f64,
    pub l2_cap: f64,
    pub seed: u64,
    pub folds: usize,
    pub repetitions: usize,
    pub test_fraction: f64,
    /// Classic partitioned k-fold instead of the default Monte-Carlo
    /// (independently re-drawn) test samples.
    pub disjoint_folds: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 50,
            epochs: 10,
            rho: 0.95,
            epsilon: 1e-6,
            dropout_rate: 0.6,
            l2_cap: 3.0,
            seed: 42,
            folds: 10,
            repetitions: 5,
            test_fraction: 0.1,
            disjoint_folds: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::InvalidConfig("batch_size must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if !(0.0 < self.rho && self.rho < 1.0) {
            return Err(Error::InvalidConfig(format!("rho must be in (0, 1), got {}", self.rho)));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(0.0 < self.test_fraction && self.test_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "test_fraction must be in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.folds < 1 || self.repetitions < 1 {
            return Err(Error::InvalidConfig("folds and repetitions must be ≥ 1".into()));
        }
        if self.l2_cap <= 0.0 {
            return Err(Error::InvalidConfig("l2_cap must be > 0".into()));
        }
        Ok(())
    }
}

/// Cross-validation outcome: per-fold accuracies (repetition-major), their
/// per-repetition means, and the overall mean of those means.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub mean_accuracy: f64,
    pub per_fold: Vec<f64>,
    pub per_repetition: Vec<f64>,
    pub seed_trace: Vec<u64>,
}

/// One Adadelta update:
/// accumulate the squared gradient, scale the step by the ratio of running
/// RMS values, apply it, accumulate the squared step, clear the gradient.
pub fn adadelta_step<S: Scalar>(p: &mut ParamTensor<S>, rho: f64, epsilon: f64) -> Result<()> {
    if !p.trainable {
        return Err(Error::FreezeViolation(format!(
            "adadelta_step called on non-trainable tensor `{}`",
            p.name
        )));
    }
    let rho = S::from_f64(rho);
    let one_minus = S::one() - rho;
    let eps = S::from_f64(epsilon);
    let n = p.value.len();
    let value = p.value.data_mut();
    let grad = p.grad.data_mut();
    let acc_g = p.acc_grad_sq.data_mut();
    let acc_u = p.acc_update_sq.data_mut();
    for i in 0..n {
        let g = grad[i];
        acc_g[i] = rho * acc_g[i] + one_minus * g * g;
        let delta = -((acc_u[i] + eps) / (acc_g[i] + eps)).sqrt() * g;
        value[i] = value[i] + delta;
        acc_u[i] = rho * acc_u[i] + one_minus * delta * delta;
        grad[i] = S::zero();
    }
    Ok(())
}

/// Rescales any row of a 2-D weight whose l2 norm exceeds `cap` back onto
/// the cap sphere. Rows at or under the cap are left untouched (bit-exact).
pub fn apply_l2_cap<S: Scalar>(w: &mut ParamTensor<S>, cap: f64) {
    debug_assert_eq!(w.shape().len(), 2);
    let rows = w.shape()[0];
    let cap_s = S::from_f64(cap);
    for r in 0..rows {
        let row = w.value.row_mut(r);
        let mut sq = S::zero();
        for v in row.iter() {
            sq = sq + *v * *v;
        }
        let norm = sq.sqrt();
        if norm > cap_s {
            let scale = cap_s / norm;
            for v in row.iter_mut() {
                *v = *v * scale;
            }
        }
    }
}

fn check_flags_match_plan<S: Scalar>(model: &CnnModel<S>, plan: &TransferPlan) -> Result<()> {
    let expect = |mode: LayerMode| mode != LayerMode::Frozen;
    let mut mismatches = Vec::new();
    // E is special: a frozen plan may still train uncovered rows behind a
    // row mask, so a trainable flag there needs the mask present.
    let e_ok = match plan.e {
        LayerMode::Frozen => !model.embeddings.matrix.trainable || model.embeddings.trainable_rows.is_some(),
        _ => model.embeddings.matrix.trainable,
    };
    if !e_ok {
        mismatches.push("E");
    }
    if model.conv.iter().any(|b| b.filters.trainable != expect(plan.c) || b.bias.trainable != expect(plan.c)) {
        mismatches.push("C");
    }
    if model.hidden_w.trainable != expect(plan.h) || model.hidden_b.trainable != expect(plan.h) {
        mismatches.push("H");
    }
    if model.output_w.trainable != expect(plan.o) || model.output_b.trainable != expect(plan.o) {
        mismatches.push("O");
    }
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(Error::FreezeViolation(format!(
            "model trainable flags disagree with plan {plan} on layer(s) {}",
            mismatches.join(", ")
        )))
    }
}

/// Trains in place: per epoch, shuffle, walk mini-batches (the last partial
/// batch is kept), backpropagate, step every trainable tensor, and re-apply
/// the l2 cap to trainable H/O weights. Frozen tensors stay bit-identical.
pub fn train<S: Scalar>(
    model: &mut CnnModel<S>,
    data: &[EncodedSentence],
    cfg: &TrainConfig,
    plan: &TransferPlan,
    rng: &mut StdRng,
) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyInput("train"));
    }
    cfg.validate()?;
    check_flags_match_plan(model, plan)?;
    for t in model.tensors_mut() {
        t.clear_grad();
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        for (batch_no, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<EncodedSentence> = chunk.iter().map(|i| data[*i].clone()).collect();
            let loss = model.forward_backward(&batch, cfg.dropout_rate, rng)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_no,
                });
            }
            for t in model.tensors_mut() {
                if t.trainable {
                    adadelta_step(t, cfg.rho, cfg.epsilon)?;
                } else {
                    t.clear_grad();
                }
            }
            if model.hidden_w.trainable {
                apply_l2_cap(&mut model.hidden_w, cfg.l2_cap);
            }
            if model.output_w.trainable {
                apply_l2_cap(&mut model.output_w, cfg.l2_cap);
            }
        }
    }
    Ok(())
}

/// Fraction of examples whose prediction matches the label.
pub fn evaluate<S: Scalar>(model: &CnnModel<S>, data: &[EncodedSentence]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput("evaluate"));
    }
    let mut correct = 0usize;
    for enc in data {
        if model.predict(enc)? == enc.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Monte-Carlo split: `⌊test_fraction·n⌋` test indices sampled uniformly
/// without replacement, the rest train. Both halves come back sorted.
pub fn mc_split(n: usize, test_fraction: f64, rng: &mut StdRng) -> Result<(Vec<usize>, Vec<usize>)> {
    let test_size = (test_fraction * n as f64).floor() as usize;
    if test_size == 0 || test_size >= n {
        return Err(Error::InvalidConfig(format!(
            "test split of {test_size} from {n} examples leaves nothing to work with"
        )));
    }
    let mut test = rand::seq::index::sample(rng, n, test_size).into_vec();
    test.sort_unstable();
    let mut in_test = vec![false; n];
    for i in &test {
        in_test[*i] = true;
    }
    let train = (0..n).filter(|i| !in_test[*i]).collect();
    Ok((train, test))
}

/// Classic k-fold split: one shared permutation, fold `f` tests its chunk.
fn disjoint_split(n: usize, folds: usize, fold: usize, perm_seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seeded(perm_seed));
    let lo = fold * n / folds;
    let hi = (fold + 1) * n / folds;
    if lo == hi {
        return Err(Error::InvalidConfig(format!(
            "fold {fold} of {folds} over {n} examples is empty"
        )));
    }
    let mut test: Vec<usize> = perm[lo..hi].to_vec();
    test.sort_unstable();
    let mut in_test = vec![false; n];
    for i in &test {
        in_test[*i] = true;
    }
    let train = (0..n).filter(|i| !in_test[*i]).collect();
    Ok((train, test))
}

fn gather(data: &[EncodedSentence], idx: &[usize]) -> Vec<EncodedSentence> {
    idx.iter().map(|i| data[*i].clone()).collect()
}

/// Repeated cross-validation. For each repetition a seed is derived from
/// `cfg.seed`; each fold re-draws its own test sample (Monte-Carlo, per the
/// default protocol), trains a model (from `source` + `plan` when given,
/// all-Fresh otherwise), and evaluates on the held-out sample. Folds run in
/// parallel; aggregation order is fixed by indices, so the result does not
/// depend on scheduling.
pub fn cross_validate<S: Scalar>(
    data: &[EncodedSentence],
    vocab: &Vocabulary,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    plan: &TransferPlan,
    source: Option<&Checkpoint>,
    opts: &TransferOptions,
) -> Result<RunResult> {
    cfg.validate()?;
    if data.len() < cfg.folds {
        return Err(Error::InvalidConfig(format!(
            "{} examples cannot support {} folds",
            data.len(),
            cfg.folds
        )));
    }
    let rep_seeds: Vec<u64> = (0..cfg.repetitions).map(|r| derive_seed(cfg.seed, r as u64)).collect();
    let cells: Vec<(usize, usize, u64, u64)> = rep_seeds
        .iter()
        .enumerate()
        .flat_map(|(r, rep_seed)| {
            (0..cfg.folds).map(move |f| (r, f, derive_seed(*rep_seed, f as u64), *rep_seed))
        })
        .collect();

    let fold_accuracies: Vec<f64> = cells
        .par_iter()
        .map(|(_, f, fold_seed, rep_seed)| -> Result<f64> {
            let mut rng = seeded(*fold_seed);
            let (train_idx, test_idx) = if cfg.disjoint_folds {
                disjoint_split(data.len(), cfg.folds, *f, derive_seed(*rep_seed, PERM_STREAM))?
            } else {
                mc_split(data.len(), cfg.test_fraction, &mut rng)?
            };
            let train_data = gather(data, &train_idx);
            let test_data = gather(data, &test_idx);
            let (mut model, plan_used) = match source {
                Some(ck) => {
                    let m: CnnModel<S> =
                        build_transfer_model(ck, vocab, model_cfg.clone(), plan, opts, &mut rng)?;
                    (m, plan.clone())
                }
                None => {
                    let m: CnnModel<S> = CnnModel::init_random(model_cfg.clone(), vocab, &mut rng)?;
                    (m, TransferPlan::all_fresh())
                }
            };
            train(&mut model, &train_data, cfg, &plan_used, &mut rng)?;
            evaluate(&model, &test_data)
        })
        .collect::<Result<Vec<f64>>>()?;

    let per_repetition: Vec<f64> = fold_accuracies
        .chunks(cfg.folds)
        .map(|rep| rep.iter().sum::<f64>() / rep.len() as f64)
        .collect();
    let mean_accuracy = per_repetition.iter().sum::<f64>() / per_repetition.len() as f64;
    Ok(RunResult {
        mean_accuracy,
        per_fold: fold_accuracies,
        per_repetition,
        seed_trace: rep_seeds,
    })
}
