//! Polynomial-feature predictor `h_β(X) = ReLU(β₁ᵀv(X)) + β₂ᵀv(X)`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Real;
use crate::scm_toy::Matrix2;

pub const N_FEATURES: usize = 15;
pub const N_PARAMS: usize = 2 * N_FEATURES;

/// Position of `X11·X22` in the feature vector.
pub const IDX_X11_X22: usize = 11;
/// Position of `X21·X12` in the feature vector.
pub const IDX_X21_X12: usize = 12;

/// Feature names in storage order.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "1", "x11", "x21", "x12", "x22", "x11^2", "x21^2", "x12^2", "x22^2", "x11*x21", "x11*x12",
    "x11*x22", "x21*x12", "x21*x22", "x12*x22",
];

/// `(1, X11, X21, X12, X22, X11², X21², X12², X22², X11X21, X11X12, X11X22,
/// X21X12, X21X22, X12X22)`.
pub type FeatureVec<T> = [T; N_FEATURES];

pub fn feature_map<T: Real>(x: &Matrix2<T>) -> FeatureVec<T> {
    let Matrix2 { x11, x21, x12, x22 } = *x;
    [
        T::one(),
        x11,
        x21,
        x12,
        x22,
        x11 * x11,
        x21 * x21,
        x12 * x12,
        x22 * x22,
        x11 * x21,
        x11 * x12,
        x11 * x22,
        x21 * x12,
        x21 * x22,
        x12 * x22,
    ]
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T; N_FEATURES], b: &[T; N_FEATURES]) -> T {
    let mut s = T::zero();
    for i in 0..N_FEATURES {
        s += a[i] * b[i];
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    pub beta1: [T; N_FEATURES],
    pub beta2: [T; N_FEATURES],
}

impl<T: Real> ModelParams<T> {
    pub fn zeros() -> Self {
        ModelParams {
            beta1: [T::zero(); N_FEATURES],
            beta2: [T::zero(); N_FEATURES],
        }
    }

    /// Parameters with `h(X) = |det X|` exactly: `ReLU(2d) − d = |d|`.
    pub fn det_realizer() -> Self {
        let mut p = Self::zeros();
        let two = T::lit(2.0);
        p.beta1[IDX_X11_X22] = two;
        p.beta1[IDX_X21_X12] = -two;
        p.beta2[IDX_X11_X22] = -T::one();
        p.beta2[IDX_X21_X12] = T::one();
        p
    }

    /// Each coefficient drawn from `N(0, 0.01)` (standard deviation 0.1).
    pub fn init_random(seed: u64) -> Self {
        let mut r = rng::stream(rng::derive_seed(seed, "model-init", 0), 0);
        let mut z = [0.0f64; N_PARAMS];
        rng::fill_normals(&mut r, &mut z);
        Self::from_flat(&z.map(|v| T::lit(0.1 * v)))
    }

    pub fn to_flat(&self) -> [T; N_PARAMS] {
        let mut out = [T::zero(); N_PARAMS];
        out[..N_FEATURES].copy_from_slice(&self.beta1);
        out[N_FEATURES..].copy_from_slice(&self.beta2);
        out
    }

    pub fn from_flat(flat: &[T; N_PARAMS]) -> Self {
        let mut p = Self::zeros();
        p.beta1.copy_from_slice(&flat[..N_FEATURES]);
        p.beta2.copy_from_slice(&flat[N_FEATURES..]);
        p
    }

    pub fn is_finite(&self) -> bool {
        self.beta1
            .iter()
            .chain(self.beta2.iter())
            .all(|v| v.is_finite())
    }

    /// Prediction from a precomputed feature vector.
    #[inline]
    pub fn predict_features(&self, v: &FeatureVec<T>) -> T {
        dot(&self.beta1, v).max(T::zero()) + dot(&self.beta2, v)
    }

    /// Gradient from a precomputed feature vector, written into `out` and
    /// scaled by `weight`; accumulates rather than overwrites.
    #[inline]
    pub(crate) fn accumulate_grad(&self, v: &FeatureVec<T>, weight: T, out: &mut [T; N_PARAMS]) {
        let active = dot(&self.beta1, v) > T::zero();
        for i in 0..N_FEATURES {
            let w = weight * v[i];
            if active {
                out[i] += w;
            }
            out[N_FEATURES + i] += w;
        }
    }

    /// Writes `index,block,value` rows, block 1 for `β₁` and 2 for `β₂`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("index,block,value\n");
        for (block, beta) in [(1, &self.beta1), (2, &self.beta2)] {
            for (i, v) in beta.iter().enumerate() {
                s.push_str(&format!("{i},{block},{}\n", fmt_real(*v)));
            }
        }
        fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            msg,
        };
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("index,block,value") {
            return Err(bad("missing header `index,block,value`".into()));
        }
        let mut p = Self::zeros();
        let mut seen = [false; N_PARAMS];
        for (ln, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(bad(format!("line {}: expected 3 fields", ln + 2)));
            }
            let i: usize = f[0]
                .parse()
                .map_err(|_| bad(format!("line {}: bad index", ln + 2)))?;
            let block: usize = f[1]
                .parse()
                .map_err(|_| bad(format!("line {}: bad block", ln + 2)))?;
            let v: f64 = f[2]
                .parse()
                .map_err(|_| bad(format!("line {}: bad value", ln + 2)))?;
            if i >= N_FEATURES || !(1..=2).contains(&block) {
                return Err(bad(format!("line {}: index/block out of range", ln + 2)));
            }
            let slot = (block - 1) * N_FEATURES + i;
            seen[slot] = true;
            if block == 1 {
                p.beta1[i] = T::lit(v);
            } else {
                p.beta2[i] = T::lit(v);
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(bad("expected all 30 coefficients".into()));
        }
        Ok(p)
    }
}

pub(crate) fn fmt_real<T: Real>(v: T) -> String {
    format!("{:.16e}", v.to_f64().unwrap_or(f64::NAN))
}

/// `max(0, ⟨β₁, v⟩) + ⟨β₂, v⟩` with `v = feature_map(x)`.
pub fn predict<T: Real>(p: &ModelParams<T>, x: &Matrix2<T>) -> T {
    p.predict_features(&feature_map(x))
}

/// Gradient of [`predict`] with respect to `(β₁, β₂)`; the ReLU subgradient
/// at zero is taken as 0.
pub fn grad_predict<T: Real>(p: &ModelParams<T>, x: &Matrix2<T>) -> [T; N_PARAMS] {
    let mut g = [T::zero(); N_PARAMS];
    p.accumulate_grad(&feature_map(x), T::one(), &mut g);
    g
}
