//! Tabular analog of the coloured-digit study.
//!
//! A label is encoded by a random codeword of `n_causal_bits` bits; the
//! observed bits are the codeword with independent flips, so they predict the
//! label only up to the Bayes rate. Each label owns two of the colours. In
//! training the colour is drawn from the label's pair and predicts the label
//! perfectly; at test time colours are uniform and carry no information.

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::error::{Error, Result};
use crate::objectives::{l2_discrepancy, softmax_cross_entropy};
use crate::optim::{Optimizer, OptimizerKind};
use crate::rng::{derive_seed, open_unit, stream};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct SpuriousConfig<T> {
    pub n_causal_bits: usize,
    /// Must be even: two colours per label, so there are `n_colors / 2` labels.
    pub n_colors: usize,
    pub causal_flip_prob: T,
    pub n_train: usize,
    pub n_test: usize,
    pub lambda0: T,
    pub lr: T,
    pub iterations: usize,
    pub seed: u64,
}

impl<T: Real> Default for SpuriousConfig<T> {
    fn default() -> Self {
        SpuriousConfig {
            n_causal_bits: 8,
            n_colors: 10,
            causal_flip_prob: T::lit(0.25),
            n_train: 20_000,
            n_test: 20_000,
            lambda0: T::lit(0.25),
            lr: T::lit(0.05),
            iterations: 1000,
            seed: 0,
        }
    }
}

/// Longest codeword for which the Bayes rate is enumerated.
pub const MAX_CAUSAL_BITS: usize = 20;

impl<T: Real> SpuriousConfig<T> {
    pub fn n_labels(&self) -> usize {
        self.n_colors / 2
    }

    /// Bits followed by the colour one-hot.
    pub fn input_dim(&self) -> usize {
        self.n_causal_bits + self.n_colors
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_colors < 4 || !self.n_colors.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "n_colors must be even and ≥ 4, got {}",
                self.n_colors
            )));
        }
        if self.n_causal_bits == 0 || self.n_causal_bits > MAX_CAUSAL_BITS {
            return Err(Error::Config(format!(
                "n_causal_bits must lie in 1..={MAX_CAUSAL_BITS}, got {}",
                self.n_causal_bits
            )));
        }
        if self.n_labels() > 1 << self.n_causal_bits {
            return Err(Error::Config("more labels than distinct codewords".into()));
        }
        let p = self.causal_flip_prob;
        if !(p >= T::zero() && p < T::lit(0.5)) {
            return Err(Error::Config(format!(
                "causal_flip_prob must lie in [0, 0.5), got {p}"
            )));
        }
        if !(self.lambda0.is_finite() && self.lambda0 >= T::zero()) {
            return Err(Error::Config(format!(
                "lambda0 must be finite and ≥ 0, got {}",
                self.lambda0
            )));
        }
        if !(self.lr.is_finite() && self.lr > T::zero()) {
            return Err(Error::Config(format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        if self.n_train == 0 || self.n_test == 0 || self.iterations == 0 {
            return Err(Error::Config(
                "n_train, n_test and iterations must be positive".into(),
            ));
        }
        Ok(())
    }

    /// One distinct random codeword per label, fixed by the seed.
    pub fn codebook(&self) -> Vec<u32> {
        let mut rng = stream(derive_seed(self.seed, "codebook", 0), 0);
        sample_indices(&mut rng, 1 << self.n_causal_bits, self.n_labels())
            .into_iter()
            .map(|c| c as u32)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn label(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpuriousSample {
    /// Observed (noisy) causal bits, least significant bit first.
    pub bits: u32,
    pub color: usize,
    pub label: usize,
}

impl SpuriousSample {
    pub fn encode<T: Real>(&self, n_bits: usize, n_colors: usize) -> Vec<T> {
        let mut v = vec![T::zero(); n_bits + n_colors];
        for (b, slot) in v.iter_mut().take(n_bits).enumerate() {
            if self.bits >> b & 1 == 1 {
                *slot = T::one();
            }
        }
        v[n_bits + self.color] = T::one();
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpuriousDataset {
    pub samples: Vec<SpuriousSample>,
    pub codebook: Vec<u32>,
}

pub fn make_spurious_dataset<T: Real>(
    cfg: &SpuriousConfig<T>,
    split: Split,
) -> Result<SpuriousDataset> {
    cfg.validate()?;
    let codebook = cfg.codebook();
    let n = match split {
        Split::Train => cfg.n_train,
        Split::Test => cfg.n_test,
    };
    let flip = cfg.causal_flip_prob.to_f64().unwrap_or(0.0);
    let base = derive_seed(cfg.seed, split.label(), 0);
    let samples = (0..n as u64)
        .map(|i| {
            let mut rng = stream(base, i);
            let label = rng.random_range(0..cfg.n_labels());
            let mut bits = codebook[label];
            for b in 0..cfg.n_causal_bits {
                if open_unit(&mut rng) < flip {
                    bits ^= 1 << b;
                }
            }
            let color = match split {
                Split::Train => 2 * label + rng.random_range(0..2),
                Split::Test => rng.random_range(0..cfg.n_colors),
            };
            SpuriousSample { bits, color, label }
        })
        .collect();
    Ok(SpuriousDataset { samples, codebook })
}

/// Replaces the colour block of an encoded input by colour 0.
pub fn decolor_transform<T: Real>(input: &[T], n_bits: usize, n_colors: usize) -> Result<Vec<T>> {
    if input.len() != n_bits + n_colors {
        return Err(Error::DimensionMismatch {
            expected: n_bits + n_colors,
            got: input.len(),
        });
    }
    let block = &input[n_bits..];
    let ones = block.iter().filter(|&&v| v == T::one()).count();
    if ones != 1 || block.iter().any(|&v| v != T::one() && v != T::zero()) {
        return Err(Error::Domain("colour block is not a one-hot vector".into()));
    }
    let mut out = input.to_vec();
    out[n_bits..].iter_mut().for_each(|v| *v = T::zero());
    out[n_bits] = T::one();
    Ok(out)
}

/// Accuracy of the optimal classifier that sees only the observed bits,
/// by exact enumeration of every bit pattern under a uniform label prior.
pub fn causal_bayes_accuracy(codebook: &[u32], n_bits: usize, flip: f64) -> f64 {
    let likelihood = |obs: u32, code: u32| {
        let d = (obs ^ code).count_ones() as i32;
        flip.powi(d) * (1.0 - flip).powi(n_bits as i32 - d)
    };
    let prior = 1.0 / codebook.len() as f64;
    (0..1u32 << n_bits)
        .map(|obs| {
            codebook
                .iter()
                .map(|&c| prior * likelihood(obs, c))
                .fold(0.0, f64::max)
        })
        .sum()
}

/// Multinomial logistic regression, `logits = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSoftmax<T> {
    pub n_classes: usize,
    pub dim: usize,
    /// Row-major `n_classes × dim` weights followed by `n_classes` biases.
    pub params: Vec<T>,
}

impl<T: Real> LinearSoftmax<T> {
    pub fn zeros(n_classes: usize, dim: usize) -> Self {
        LinearSoftmax {
            n_classes,
            dim,
            params: vec![T::zero(); n_classes * (dim + 1)],
        }
    }

    pub fn logits(&self, x: &[T]) -> Vec<T> {
        let mut z = vec![T::zero(); self.n_classes];
        self.logits_into(x, &mut z);
        z
    }

    fn logits_into(&self, x: &[T], z: &mut [T]) {
        let (k, d) = (self.n_classes, self.dim);
        for (c, zc) in z.iter_mut().enumerate() {
            let w = &self.params[c * d..(c + 1) * d];
            *zc = w.iter().zip(x).map(|(&a, &b)| a * b).sum::<T>() + self.params[k * d + c];
        }
    }

    pub fn predict(&self, x: &[T]) -> usize {
        let z = self.logits(x);
        let mut best = 0;
        for c in 1..z.len() {
            if z[c] > z[best] {
                best = c;
            }
        }
        best
    }

    /// `∂/∂params += scale · g ⊗ [x; 1]` for a logit gradient `g`.
    fn accumulate(&self, grad: &mut [T], g: &[T], x: &[T], with_bias: bool, scale: T) {
        let (k, d) = (self.n_classes, self.dim);
        for c in 0..k {
            let gc = g[c] * scale;
            if gc == T::zero() {
                continue;
            }
            for (slot, &xj) in grad[c * d..(c + 1) * d].iter_mut().zip(x) {
                *slot += gc * xj;
            }
            if with_bias {
                grad[k * d + c] += gc;
            }
        }
    }
}

/// Mean cross entropy plus `lambda0` times the mean squared logit distance
/// between each input and its decoloured copy.
pub fn classifier_objective<T: Real>(
    model: &LinearSoftmax<T>,
    inputs: &[Vec<T>],
    decolored: &[Vec<T>],
    labels: &[usize],
    lambda0: T,
) -> Result<(T, Vec<T>)> {
    let k = model.n_classes;
    let n = T::from_usize(inputs.len()).unwrap();
    let mut grad = vec![T::zero(); model.params.len()];
    let mut total = T::zero();
    let (mut z, mut zt, mut g) = (vec![T::zero(); k], vec![T::zero(); k], vec![T::zero(); k]);
    for i in 0..inputs.len() {
        model.logits_into(&inputs[i], &mut z);
        total += softmax_cross_entropy(&z, labels[i])?;
        let top = z.iter().copied().fold(T::neg_infinity(), T::max);
        let mut s = T::zero();
        for (gc, &zc) in g.iter_mut().zip(&z) {
            *gc = (zc - top).exp();
            s += *gc;
        }
        g.iter_mut().for_each(|gc| *gc /= s);
        g[labels[i]] -= T::one();
        model.accumulate(&mut grad, &g, &inputs[i], true, T::one() / n);
        if lambda0 > T::zero() {
            model.logits_into(&decolored[i], &mut zt);
            total += lambda0 * l2_discrepancy(&z, &zt)?;
            for c in 0..k {
                g[c] = z[c] - zt[c];
            }
            let s2 = T::lit(2.0) * lambda0 / n;
            model.accumulate(&mut grad, &g, &inputs[i], false, s2);
            model.accumulate(&mut grad, &g, &decolored[i], false, -s2);
        }
    }
    Ok((total / n, grad))
}

/// Full-batch Adam from zero weights.
pub fn train_classifier<T: Real>(
    cfg: &SpuriousConfig<T>,
    inputs: &[Vec<T>],
    labels: &[usize],
    lambda0: T,
) -> Result<LinearSoftmax<T>> {
    let (nb, nc) = (cfg.n_causal_bits, cfg.n_colors);
    let decolored: Vec<Vec<T>> = inputs
        .iter()
        .map(|x| decolor_transform(x, nb, nc))
        .collect::<Result<_>>()?;
    let mut model = LinearSoftmax::zeros(cfg.n_labels(), cfg.input_dim());
    let mut opt = Optimizer::new(OptimizerKind::adam_default(), cfg.lr, model.params.len());
    for it in 0..cfg.iterations {
        let (obj, grad) = classifier_objective(&model, inputs, &decolored, labels, lambda0)?;
        if !obj.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence {
                iteration: it,
                value: obj.to_f64().unwrap_or(f64::NAN),
            });
        }
        opt.step(&mut model.params, &grad)?;
    }
    Ok(model)
}

pub fn accuracy<T: Real>(model: &LinearSoftmax<T>, inputs: &[Vec<T>], labels: &[usize]) -> f64 {
    let hits = inputs
        .iter()
        .zip(labels)
        .filter(|(x, &y)| model.predict(x) == y)
        .count();
    hits as f64 / inputs.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpuriousRow {
    pub method: String,
    pub accuracy: f64,
    /// Test samples behind the accuracy; 0 marks an exact value.
    pub n_test: usize,
    pub seed: u64,
}

/// Test accuracy of ERM, RICE, a model trained and evaluated on decoloured
/// inputs, and the exact causal-only Bayes rate (rows in that order).
pub fn run_spurious<T: Real>(cfg: &SpuriousConfig<T>) -> Result<Vec<SpuriousRow>> {
    cfg.validate()?;
    let (nb, nc) = (cfg.n_causal_bits, cfg.n_colors);
    let train = make_spurious_dataset(cfg, Split::Train)?;
    let test = make_spurious_dataset(cfg, Split::Test)?;
    let enc = |d: &SpuriousDataset| -> (Vec<Vec<T>>, Vec<usize>) {
        d.samples
            .iter()
            .map(|s| (s.encode(nb, nc), s.label))
            .unzip()
    };
    let (xtr, ytr) = enc(&train);
    let (xte, yte) = enc(&test);
    let decolor_all = |xs: &[Vec<T>]| -> Result<Vec<Vec<T>>> {
        xs.iter().map(|x| decolor_transform(x, nb, nc)).collect()
    };
    let row = |method: &str, accuracy: f64, n_test: usize| SpuriousRow {
        method: method.into(),
        accuracy,
        n_test,
        seed: cfg.seed,
    };
    let erm = train_classifier(cfg, &xtr, &ytr, T::zero())?;
    let rice = train_classifier(cfg, &xtr, &ytr, cfg.lambda0)?;
    let decol = train_classifier(cfg, &decolor_all(&xtr)?, &ytr, T::zero())?;
    let bayes = causal_bayes_accuracy(
        &train.codebook,
        nb,
        cfg.causal_flip_prob.to_f64().unwrap_or(0.0),
    );
    Ok(vec![
        row("erm", accuracy(&erm, &xte, &yte), xte.len()),
        row("rice", accuracy(&rice, &xte, &yte), xte.len()),
        row(
            "decolored",
            accuracy(&decol, &decolor_all(&xte)?, &yte),
            xte.len(),
        ),
        row("bayes", bayes, 0),
    ])
}
