//! Training objectives and the regularised training loop.
//!
//! Two forms of the invariance penalty live here. [`toy_loss`] follows the
//! matrix experiment: per-transform means are taken first and the smoothed
//! maximum is applied across transforms. [`rice_objective`] takes the
//! smoothed maximum per sample and then averages, for arbitrary outputs,
//! losses and discrepancies.

use std::fs;
use std::path::Path;

use rand::seq::index;

use crate::cit::{toy_transform_family, Transform};
use crate::error::{Error, Result};
use crate::model::{feature_map, FeatureVec, ModelParams, N_PARAMS};
use crate::optim::{Optimizer, OptimizerKind};
use crate::rng;
use crate::scalar::Real;
use crate::scm_toy::ToyDataset;

/// Exponentially weighted average `Σ e^{c·l} l / Σ e^{c·l}`.
pub fn smooth_max<T: Real>(values: &[T], c: T) -> Result<T> {
    Ok(smooth_max_with_weights(values, c)?.0)
}

/// Smoothed maximum and its partial derivatives `∂S/∂l_j = w_j (1 + c (l_j − S))`.
pub fn smooth_max_with_weights<T: Real>(values: &[T], c: T) -> Result<(T, Vec<T>)> {
    if values.is_empty() {
        return Err(Error::Domain("smooth_max of an empty collection".into()));
    }
    if !(c > T::zero()) {
        return Err(Error::Domain(format!(
            "smoothing coefficient must be positive, got {c}"
        )));
    }
    let top = values.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = values.iter().map(|&l| (c * (l - top)).exp()).collect();
    let z: T = e.iter().copied().sum();
    let s = values.iter().zip(&e).map(|(&l, &w)| w * l).sum::<T>() / z;
    let grads = values
        .iter()
        .zip(&e)
        .map(|(&l, &w)| (w / z) * (T::one() + c * (l - s)))
        .collect();
    Ok((s, grads))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind<T> {
    /// Mean squared error on the untransformed inputs.
    Erm,
    /// Mean of the six per-transform squared errors.
    AvgTransforms,
    /// Smoothed maximum of the six per-transform squared errors.
    MaxTransforms,
    /// Squared error plus `lambda` times the smoothed maximum discrepancy.
    Rice { lambda: T },
}

/// Default toy penalty weight.
pub const TOY_RICE_LAMBDA: f64 = 10.0;

impl<T: Real> LossKind<T> {
    /// `Erm`, `AvgTransforms`, `MaxTransforms`, `Rice { TOY_RICE_LAMBDA }`.
    pub fn toy_methods() -> [Self; 4] {
        [
            LossKind::Erm,
            LossKind::AvgTransforms,
            LossKind::MaxTransforms,
            LossKind::Rice {
                lambda: T::lit(TOY_RICE_LAMBDA),
            },
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Erm => "erm",
            LossKind::AvgTransforms => "avg",
            LossKind::MaxTransforms => "max",
            LossKind::Rice { .. } => "rice",
        }
    }

    /// Inverse of [`LossKind::name`]; `lambda` is used only for `"rice"`.
    pub fn from_name(name: &str, lambda: T) -> Result<Self> {
        match name {
            "erm" => Ok(LossKind::Erm),
            "avg" => Ok(LossKind::AvgTransforms),
            "max" => Ok(LossKind::MaxTransforms),
            "rice" => Ok(LossKind::Rice { lambda }),
            other => Err(Error::Config(format!(
                "unknown loss {other:?} (expected erm, avg, max or rice)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let LossKind::Rice { lambda } = self {
            if !(lambda.is_finite() && *lambda >= T::zero()) {
                return Err(Error::Config(format!(
                    "rice lambda must be finite and ≥ 0, got {lambda}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub loss: LossKind<T>,
    pub lr: T,
    pub iterations: usize,
    /// `None` trains on the full dataset every iteration.
    pub batch_size: Option<usize>,
    pub optimizer: OptimizerKind<T>,
    pub seed: u64,
    pub smoothing_coef: T,
    /// Record a progress row every `log_every` iterations; 0 disables.
    pub log_every: usize,
    /// The penalty weight ramps linearly from 0 to its full value over this
    /// many initial iterations; 0 applies it from the start.
    pub penalty_warmup: usize,
}

impl<T: Real> TrainConfig<T> {
    /// Adam, learning rate 1e-2, 5000 full-batch iterations, `c = 0.2`,
    /// penalty ramped in over the first half.
    pub fn toy_default(loss: LossKind<T>) -> Self {
        TrainConfig {
            loss,
            lr: T::lit(1e-2),
            iterations: 5000,
            batch_size: None,
            optimizer: OptimizerKind::adam_default(),
            seed: 0,
            smoothing_coef: T::lit(0.2),
            log_every: 0,
            penalty_warmup: 2500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        if !(self.lr > T::zero() && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.smoothing_coef > T::zero()) {
            return Err(Error::Config(
                "smoothing coefficient must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Feature vectors of `T_k(x_i)` for the six-member transform family,
/// computed once before training.
#[derive(Debug, Clone)]
pub struct TransformedFeatures<T> {
    /// `feats[k][i] = v(T_k(x_i))`.
    pub feats: Vec<Vec<FeatureVec<T>>>,
    pub y: Vec<T>,
}

impl<T: Real> TransformedFeatures<T> {
    pub fn new(data: &ToyDataset<T>, family: &[Transform<T>]) -> Self {
        let feats = family
            .iter()
            .map(|t| {
                data.samples
                    .iter()
                    .map(|s| feature_map(&t.apply(&s.x)))
                    .collect()
            })
            .collect();
        let y = data.samples.iter().map(|s| s.y).collect();
        TransformedFeatures { feats, y }
    }

    pub fn toy(data: &ToyDataset<T>) -> Self {
        Self::new(data, &toy_transform_family())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Value of a toy objective split into its parts, with the gradient.
#[derive(Debug, Clone)]
pub struct LossEval<T> {
    pub objective: T,
    pub erm_term: T,
    pub reg_term: T,
    pub grad: [T; N_PARAMS],
}

/// Evaluates the objective of `kind` on the samples listed in `batch`
/// (all samples when `None`) and its gradient.
pub fn toy_loss_and_grad<T: Real>(
    p: &ModelParams<T>,
    tf: &TransformedFeatures<T>,
    batch: Option<&[usize]>,
    kind: LossKind<T>,
    c: T,
) -> Result<LossEval<T>> {
    let n_all = tf.len();
    if n_all == 0 {
        return Err(Error::Domain("empty dataset".into()));
    }
    let n_k = tf.feats.len();
    let all: Vec<usize>;
    let idx: &[usize] = match batch {
        Some(b) => b,
        None => {
            all = (0..n_all).collect();
            &all
        }
    };
    let n = T::from_usize(idx.len()).expect("batch size fits");
    let k_used = if matches!(kind, LossKind::Erm) {
        1
    } else {
        n_k
    };

    // predictions pred[k * |idx| + j]
    let m = idx.len();
    let mut pred = vec![T::zero(); k_used * m];
    for k in 0..k_used {
        for (j, &i) in idx.iter().enumerate() {
            pred[k * m + j] = p.predict_features(&tf.feats[k][i]);
        }
    }
    let mut l = vec![T::zero(); k_used];
    let mut d = vec![T::zero(); k_used];
    for k in 0..k_used {
        let (mut sl, mut sd) = (T::zero(), T::zero());
        for (j, &i) in idx.iter().enumerate() {
            let pk = pred[k * m + j];
            sl += (tf.y[i] - pk).powi(2);
            sd += (pred[j] - pk).powi(2);
        }
        l[k] = sl / n;
        d[k] = sd / n;
    }

    // objective = Σ a_k l_k + Σ b_k d_k locally
    let mut a = vec![T::zero(); k_used];
    let mut b = vec![T::zero(); k_used];
    let (objective, reg_term) = match kind {
        LossKind::Erm => {
            a[0] = T::one();
            (l[0], T::zero())
        }
        LossKind::AvgTransforms => {
            let w = T::one() / T::from_usize(k_used).unwrap();
            a.iter_mut().for_each(|v| *v = w);
            let obj = l.iter().copied().sum::<T>() * w;
            (obj, obj - l[0])
        }
        LossKind::MaxTransforms => {
            let (s, w) = smooth_max_with_weights(&l, c)?;
            a.copy_from_slice(&w);
            (s, s - l[0])
        }
        LossKind::Rice { lambda } => {
            let (s, w) = smooth_max_with_weights(&d, c)?;
            a[0] = T::one();
            for k in 0..k_used {
                b[k] = lambda * w[k];
            }
            (l[0] + lambda * s, lambda * s)
        }
    };

    let mut grad = [T::zero(); N_PARAMS];
    let two_over_n = T::lit(2.0) / n;
    for (j, &i) in idx.iter().enumerate() {
        let p0 = pred[j];
        let mut coef0 = T::zero();
        for k in 0..k_used {
            let pk = pred[k * m + j];
            // ∂l_k/∂p_k = −2(y − p_k)/n ; ∂d_k/∂p_k = −2(p_0 − p_k)/n ; ∂d_k/∂p_0 = +2(p_0 − p_k)/n
            let mut ck = -a[k] * two_over_n * (tf.y[i] - pk);
            if k > 0 && b[k] != T::zero() {
                let diff = b[k] * two_over_n * (p0 - pk);
                ck -= diff;
                coef0 += diff;
            }
            if k == 0 {
                coef0 += ck;
            } else if ck != T::zero() {
                p.accumulate_grad(&tf.feats[k][i], ck, &mut grad);
            }
        }
        if coef0 != T::zero() {
            p.accumulate_grad(&tf.feats[0][i], coef0, &mut grad);
        }
    }
    Ok(LossEval {
        objective,
        erm_term: l[0],
        reg_term,
        grad,
    })
}

/// Per-transform mean squared residuals `l_k`, `k = 0..5`, over the
/// identity-plus-five family.
pub fn transform_losses<T: Real>(p: &ModelParams<T>, data: &ToyDataset<T>) -> Result<Vec<T>> {
    if data.is_empty() {
        return Err(Error::Domain("empty dataset".into()));
    }
    let n = T::from_usize(data.len()).unwrap();
    Ok(toy_transform_family::<T>()
        .iter()
        .map(|t| {
            data.samples
                .iter()
                .map(|s| (s.y - p.predict_features(&feature_map(&t.apply(&s.x)))).powi(2))
                .sum::<T>()
                / n
        })
        .collect())
}

/// Value of the toy objective of `kind` with smoothing coefficient `c`.
pub fn toy_loss<T: Real>(
    p: &ModelParams<T>,
    data: &ToyDataset<T>,
    kind: LossKind<T>,
    c: T,
) -> Result<T> {
    let tf = TransformedFeatures::toy(data);
    Ok(toy_loss_and_grad(p, &tf, None, kind, c)?.objective)
}

/// Empirical regularised objective with a per-sample smoothed supremum:
/// `(1/n) Σ L(h(x_i), y_i) + (λ₀/n) Σ_i smax_T D(h(x_i), h(T(x_i)))`.
///
/// `transformed[i]` holds the outputs on every `T(x_i)`.
#[allow(clippy::too_many_arguments)]
pub fn rice_objective<O, Y, T, L, D>(
    outputs: &[O],
    labels: &[Y],
    transformed: &[Vec<O>],
    loss: L,
    disc: D,
    lambda0: T,
    c: T,
) -> Result<T>
where
    T: Real,
    L: Fn(&O, &Y) -> T,
    D: Fn(&O, &O) -> T,
{
    let n = outputs.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    if transformed.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: transformed.len(),
        });
    }
    if n == 0 {
        return Err(Error::Domain("rice objective over zero samples".into()));
    }
    let nn = T::from_usize(n).unwrap();
    let mut risk = T::zero();
    let mut reg = T::zero();
    let mut dvals = Vec::new();
    for i in 0..n {
        risk += loss(&outputs[i], &labels[i]);
        dvals.clear();
        dvals.extend(transformed[i].iter().map(|o| disc(&outputs[i], o)));
        reg += smooth_max(&dvals, c)?;
    }
    Ok(risk / nn + lambda0 * reg / nn)
}

/// Cross entropy of `softmax(logits)` against class `label`.
pub fn softmax_cross_entropy<T: Real>(logits: &[T], label: usize) -> Result<T> {
    if label >= logits.len() {
        return Err(Error::DimensionMismatch {
            expected: logits.len(),
            got: label,
        });
    }
    let top = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = top + logits.iter().map(|&z| (z - top).exp()).sum::<T>().ln();
    Ok(lse - logits[label])
}

/// Squared Euclidean distance.
pub fn l2_discrepancy<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressRow<T> {
    pub iteration: usize,
    pub objective: T,
    pub erm_term: T,
    pub reg_term: T,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub params: ModelParams<T>,
    pub log: Vec<ProgressRow<T>>,
}

/// Regularised training loop.
///
/// Transformed samples are featurised once up front; each iteration draws a
/// mini-batch without replacement (or uses every sample), evaluates the
/// objective and descends its full gradient, penalty included.
pub fn train_with_log<T: Real>(
    config: &TrainConfig<T>,
    data: &ToyDataset<T>,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Domain("empty dataset".into()));
    }
    let tf = TransformedFeatures::toy(data);
    let mut params = balanced_init(config.seed, &tf).to_flat();
    let mut opt = Optimizer::new(config.optimizer, config.lr, N_PARAMS);
    let mut batch_rng = rng::stream(rng::derive_seed(config.seed, "minibatch", 0), 0);
    let n = tf.len();
    let mut log = Vec::new();
    let mut batch: Vec<usize> = Vec::new();
    for it in 0..config.iterations {
        let p = ModelParams::from_flat(&params);
        let kind = match config.loss {
            LossKind::Rice { lambda } if it < config.penalty_warmup => {
                let frac =
                    T::from_usize(it).unwrap() / T::from_usize(config.penalty_warmup).unwrap();
                LossKind::Rice {
                    lambda: lambda * frac,
                }
            }
            k => k,
        };
        let ev = match config.batch_size {
            Some(s) if s < n => {
                batch.clear();
                batch.extend(index::sample(&mut batch_rng, n, s));
                batch.sort_unstable();
                toy_loss_and_grad(&p, &tf, Some(&batch), kind, config.smoothing_coef)?
            }
            _ => toy_loss_and_grad(&p, &tf, None, kind, config.smoothing_coef)?,
        };
        if !ev.objective.is_finite() || ev.grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence {
                iteration: it,
                value: ev.objective.to_f64().unwrap_or(f64::NAN),
            });
        }
        if config.log_every > 0 && it % config.log_every == 0 {
            log.push(ProgressRow {
                iteration: it,
                objective: ev.objective,
                erm_term: ev.erm_term,
                reg_term: ev.reg_term,
            });
        }
        opt.step(&mut params, &ev.grad)?;
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                iteration: it,
                value: f64::NAN,
            });
        }
    }
    Ok(TrainOutcome {
        params: ModelParams::from_flat(&params),
        log,
    })
}

/// Fraction of training inputs on which the rectified unit is active.
pub fn active_fraction<T: Real>(p: &ModelParams<T>, tf: &TransformedFeatures<T>) -> f64 {
    let on = tf.feats[0]
        .iter()
        .filter(|v| crate::model::dot(&p.beta1, v) > T::zero())
        .count();
    on as f64 / tf.len().max(1) as f64
}

/// Lowest and highest active fraction accepted for an initial draw.
pub const INIT_ACTIVE_RANGE: (f64, f64) = (0.25, 0.75);
const INIT_MAX_DRAWS: u64 = 256;

/// First `N(0, 0.01)` draw whose rectified unit is active on a fraction of
/// the inputs inside [`INIT_ACTIVE_RANGE`].
///
/// A unit that starts active (or inactive) on every input receives
/// identical gradients on both coefficient blocks and never develops a kink,
/// leaving the model linear in the features.
pub fn balanced_init<T: Real>(seed: u64, tf: &TransformedFeatures<T>) -> ModelParams<T> {
    let (lo, hi) = INIT_ACTIVE_RANGE;
    for draw in 0..INIT_MAX_DRAWS {
        let p = ModelParams::init_random(rng::derive_seed(seed, "init-draw", draw));
        let frac = active_fraction(&p, tf);
        if (lo..=hi).contains(&frac) {
            return p;
        }
    }
    ModelParams::init_random(rng::derive_seed(seed, "init-draw", 0))
}

pub fn train<T: Real>(config: &TrainConfig<T>, data: &ToyDataset<T>) -> Result<ModelParams<T>> {
    Ok(train_with_log(config, data)?.params)
}

/// Writes the progress log as `iteration,objective,erm_term,reg_term`.
pub fn write_progress_csv<T: Real>(rows: &[ProgressRow<T>], path: &Path) -> Result<()> {
    let mut s = String::from("iteration,objective,erm_term,reg_term\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.iteration,
            crate::model::fmt_real(r.objective),
            crate::model::fmt_real(r.erm_term),
            crate::model::fmt_real(r.reg_term)
        ));
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Mean squared prediction error on a dataset.
pub fn mse<T: Real>(p: &ModelParams<T>, data: &ToyDataset<T>) -> T {
    let n = T::from_usize(data.len().max(1)).unwrap();
    data.samples
        .iter()
        .map(|s| (s.y - p.predict_features(&feature_map(&s.x))).powi(2))
        .sum::<T>()
        / n
}
