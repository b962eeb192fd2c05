//! The numerical operations the CNN needs, each with a reverse-mode
//! backward pass. No general graph machinery: the model topology is fixed,
//! so callers wire these by hand and keep their own tape.

use rand::rngs::StdRng;
use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, ParamTensor, Scalar};

/// `out[i] = Σ_j W[i,j]·x[j] + b[i]`.
pub fn matvec_affine<S: Scalar>(w: &ParamTensor<S>, b: &ParamTensor<S>, x: &[S]) -> Result<Vec<S>> {
    let (m, n) = match w.shape() {
        [m, n] => (*m, *n),
        other => {
            return Err(Error::ShapeMismatch {
                op: "matvec_affine",
                details: format!("weight must be rank 2, got shape {:?}", other),
            })
        }
    };
    if b.shape() != [m] || x.len() != n {
        return Err(Error::ShapeMismatch {
            op: "matvec_affine",
            details: format!(
                "W [{m}×{n}] needs b [{m}] and x [{n}], got b {:?} and x [{}]",
                b.shape(),
                x.len()
            ),
        });
    }
    let wd = w.value.data();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut acc = b.value.data()[i];
        let row = &wd[i * n..(i + 1) * n];
        for (wij, xj) in row.iter().zip(x) {
            acc = acc + *wij * *xj;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Accumulates `dout` into the weight and bias grads (when trainable) and
/// writes the input gradient into `dx`. `dx` must already be zeroed or hold
/// a partial sum the caller wants added to.
pub fn matvec_affine_backward<S: Scalar>(
    w: &mut ParamTensor<S>,
    b: &mut ParamTensor<S>,
    x: &[S],
    dout: &[S],
    dx: &mut [S],
) {
    let m = w.shape()[0];
    let n = w.shape()[1];
    debug_assert_eq!(x.len(), n);
    debug_assert_eq!(dout.len(), m);
    debug_assert_eq!(dx.len(), n);
    if w.trainable {
        let gw = w.grad.data_mut();
        for i in 0..m {
            let di = dout[i];
            let row = &mut gw[i * n..(i + 1) * n];
            for (g, xj) in row.iter_mut().zip(x) {
                *g = *g + di * *xj;
            }
        }
    }
    if b.trainable {
        for (g, di) in b.grad.data_mut().iter_mut().zip(dout) {
            *g = *g + *di;
        }
    }
    // Input gradient always propagates, even through frozen layers.
    let wd = w.value.data();
    for i in 0..m {
        let di = dout[i];
        let row = &wd[i * n..(i + 1) * n];
        for (dxj, wij) in dx.iter_mut().zip(row) {
            *dxj = *dxj + *wij * di;
        }
    }
}

/// Valid convolution along the word axis:
/// `out[f,t] = Σ_{i<h, j<d} filters[f,i,j]·sentence[t+i,j] + bias[f]`
/// for `t` in `0..L-h+1`.
pub fn conv_over_time<S: Scalar>(
    filters: &ParamTensor<S>,
    bias: &ParamTensor<S>,
    sentence: &DenseTensor<S>,
) -> Result<DenseTensor<S>> {
    let (f_count, h, d) = match filters.shape() {
        [f, h, d] => (*f, *h, *d),
        other => {
            return Err(Error::ShapeMismatch {
                op: "conv_over_time",
                details: format!("filters must be rank 3, got shape {:?}", other),
            })
        }
    };
    let (l, sd) = match sentence.shape() {
        [l, sd] => (*l, *sd),
        other => {
            return Err(Error::ShapeMismatch {
                op: "conv_over_time",
                details: format!("sentence must be rank 2, got shape {:?}", other),
            })
        }
    };
    if sd != d || bias.shape() != [f_count] {
        return Err(Error::ShapeMismatch {
            op: "conv_over_time",
            details: format!(
                "filters [{f_count}×{h}×{d}] need sentence [*×{d}] and bias [{f_count}], got sentence {:?} and bias {:?}",
                sentence.shape(),
                bias.shape()
            ),
        });
    }
    if l < h {
        return Err(Error::InputTooShort {
            op: "conv_over_time",
            len: l,
            region: h,
        });
    }
    let t_len = l - h + 1;
    let fd = filters.value.data();
    let sent = sentence.data();
    let mut out = DenseTensor::zeros(&[f_count, t_len]);
    {
        let od = out.data_mut();
        for f in 0..f_count {
            let filter = &fd[f * h * d..(f + 1) * h * d];
            let bf = bias.value.data()[f];
            for t in 0..t_len {
                let window = &sent[t * d..(t + h) * d];
                let mut acc = bf;
                for (wv, sv) in filter.iter().zip(window) {
                    acc = acc + *wv * *sv;
                }
                od[f * t_len + t] = acc;
            }
        }
    }
    Ok(out)
}

/// Backward of `conv_over_time`. `d_sentence` receives the gradient with
/// respect to the sentence matrix (accumulated, so zero it first for a
/// fresh pass).
pub fn conv_over_time_backward<S: Scalar>(
    filters: &mut ParamTensor<S>,
    bias: &mut ParamTensor<S>,
    sentence: &DenseTensor<S>,
    dout: &DenseTensor<S>,
    d_sentence: &mut DenseTensor<S>,
) {
    let f_count = filters.shape()[0];
    let h = filters.shape()[1];
    let d = filters.shape()[2];
    let t_len = dout.shape()[1];
    debug_assert_eq!(dout.shape()[0], f_count);
    debug_assert_eq!(d_sentence.shape(), sentence.shape());
    let sent = sentence.data();
    let dod = dout.data();
    if filters.trainable {
        let gf = filters.grad.data_mut();
        for f in 0..f_count {
            let gfilter = &mut gf[f * h * d..(f + 1) * h * d];
            for t in 0..t_len {
                let g = dod[f * t_len + t];
                let window = &sent[t * d..(t + h) * d];
                for (gv, sv) in gfilter.iter_mut().zip(window) {
                    *gv = *gv + g * *sv;
                }
            }
        }
    }
    if bias.trainable {
        let gb = bias.grad.data_mut();
        for f in 0..f_count {
            let mut acc = S::zero();
            for t in 0..t_len {
                acc = acc + dod[f * t_len + t];
            }
            gb[f] = gb[f] + acc;
        }
    }
    let fd = filters.value.data();
    let dsd = d_sentence.data_mut();
    for f in 0..f_count {
        let filter = &fd[f * h * d..(f + 1) * h * d];
        for t in 0..t_len {
            let g = dod[f * t_len + t];
            let window = &mut dsd[t * d..(t + h) * d];
            for (dv, wv) in window.iter_mut().zip(filter) {
                *dv = *dv + g * *wv;
            }
        }
    }
}

/// 1-max pooling over the time axis. Returns the pooled vector and the
/// argmax position per row; ties go to the lowest index so the backward
/// routing is deterministic.
pub fn max_over_time<S: Scalar>(featmap: &DenseTensor<S>) -> Result<(Vec<S>, Vec<usize>)> {
    let (f_count, t_len) = match featmap.shape() {
        [f, t] => (*f, *t),
        other => {
            return Err(Error::ShapeMismatch {
                op: "max_over_time",
                details: format!("feature map must be rank 2, got shape {:?}", other),
            })
        }
    };
    if t_len == 0 {
        return Err(Error::EmptyInput("max_over_time"));
    }
    let data = featmap.data();
    let mut out = Vec::with_capacity(f_count);
    let mut argmax = Vec::with_capacity(f_count);
    for f in 0..f_count {
        let row = &data[f * t_len..(f + 1) * t_len];
        let mut best = row[0];
        let mut best_t = 0;
        for (t, v) in row.iter().enumerate().skip(1) {
            if *v > best {
                best = *v;
                best_t = t;
            }
        }
        out.push(best);
        argmax.push(best_t);
    }
    Ok((out, argmax))
}

/// Routes each row's upstream gradient to its recorded argmax position.
pub fn max_over_time_backward<S: Scalar>(argmax: &[usize], dout: &[S], d_featmap: &mut DenseTensor<S>) {
    let t_len = d_featmap.shape()[1];
    let data = d_featmap.data_mut();
    for (f, (&t, &g)) in argmax.iter().zip(dout).enumerate() {
        data[f * t_len + t] = data[f * t_len + t] + g;
    }
}

/// Softmax cross-entropy with max-subtraction for stability.
/// Returns `(−log probs[label], probs)`; the logit gradient is
/// `probs − onehot(label)`, left to the caller since it already has both.
pub fn softmax_xent<S: Scalar>(logits: &[S], label: usize) -> Result<(S, Vec<S>)> {
    if logits.is_empty() {
        return Err(Error::EmptyInput("softmax_xent"));
    }
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange {
            label,
            num_classes: logits.len(),
        });
    }
    let mut max = logits[0];
    for v in &logits[1..] {
        if *v > max {
            max = *v;
        }
    }
    let mut probs: Vec<S> = logits.iter().map(|v| (*v - max).exp()).collect();
    let mut sum = S::zero();
    for p in &probs {
        sum = sum + *p;
    }
    for p in &mut probs {
        *p = *p / sum;
    }
    // −log(exp(z−max)/sum) computed from the shifted logit directly; taking
    // log of a denormal probability would overflow to inf sooner.
    let loss = sum.ln() - (logits[label] - max);
    Ok((loss, probs))
}

/// Multiplicative dropout mask captured during a forward pass. `None` means
/// the pass was an identity (eval mode or rate 0).
#[derive(Debug, Clone)]
pub struct DropoutMask<S> {
    factors: Option<Vec<S>>,
}

impl<S: Scalar> DropoutMask<S> {
    pub fn identity() -> Self {
        DropoutMask { factors: None }
    }

    pub fn backward(&self, dout: &mut [S]) {
        if let Some(factors) = &self.factors {
            for (d, f) in dout.iter_mut().zip(factors) {
                *d = *d * *f;
            }
        }
    }
}

/// Inverted dropout: in training mode each element is zeroed with
/// probability `rate` and survivors are scaled by `1/(1−rate)`, so the
/// expected value is unchanged and evaluation needs no rescaling. Eval mode
/// and rate 0 are exact identities and consume no randomness.
pub fn apply_dropout<S: Scalar>(
    x: &[S],
    rate: f64,
    rng: &mut StdRng,
    training: bool,
) -> Result<(Vec<S>, DropoutMask<S>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidConfig(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    if !training || rate == 0.0 {
        return Ok((x.to_vec(), DropoutMask::identity()));
    }
    let scale = S::from_f64(1.0 / (1.0 - rate));
    let mut factors = Vec::with_capacity(x.len());
    let mut out = Vec::with_capacity(x.len());
    for v in x {
        let keep = rng.gen::<f64>() >= rate;
        let f = if keep { scale } else { S::zero() };
        factors.push(f);
        out.push(*v * f);
    }
    Ok((out, DropoutMask { factors: Some(factors) }))
}
