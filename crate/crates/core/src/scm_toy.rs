//! Structural model over 2×2 matrices.
//!
//! `X = (X⁽¹⁾, X⁽²⁾)` with independent Gaussian columns, `Y = |det X| + η`,
//! where the noise is tied to the direction `α` of the column midpoint by
//! `η = (a·Φ⁻¹(α/π) + ε) / √(a² + 1)`. The parameter `a` sets how strongly
//! the non-causal angle predicts the noise; `η` is standard normal for every
//! `a`, so the causal part of the mechanism never changes.

use std::ops::{Add, Mul, Neg};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Real;

/// A 2×2 matrix stored by entry; column `j` is `(x1j, x2j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2<T> {
    pub x11: T,
    pub x21: T,
    pub x12: T,
    pub x22: T,
}

impl<T: Real> Matrix2<T> {
    pub fn new(x11: T, x21: T, x12: T, x22: T) -> Self {
        Matrix2 { x11, x21, x12, x22 }
    }

    /// Builds a matrix from its two columns.
    pub fn from_cols(c1: [T; 2], c2: [T; 2]) -> Self {
        Matrix2::new(c1[0], c1[1], c2[0], c2[1])
    }

    /// Builds a matrix from rows `[[a, b], [c, d]]`.
    pub fn from_rows(r: [[T; 2]; 2]) -> Self {
        Matrix2::new(r[0][0], r[1][0], r[0][1], r[1][1])
    }

    pub fn identity() -> Self {
        Matrix2::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn zero() -> Self {
        Matrix2::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn diag(a: T, d: T) -> Self {
        Matrix2::new(a, T::zero(), T::zero(), d)
    }

    pub fn col1(&self) -> [T; 2] {
        [self.x11, self.x21]
    }

    pub fn col2(&self) -> [T; 2] {
        [self.x12, self.x22]
    }

    pub fn det(&self) -> T {
        self.x11 * self.x22 - self.x21 * self.x12
    }

    pub fn is_finite(&self) -> bool {
        self.x11.is_finite() && self.x21.is_finite() && self.x12.is_finite() && self.x22.is_finite()
    }

    pub fn scale(&self, s: T) -> Self {
        Matrix2::new(self.x11 * s, self.x21 * s, self.x12 * s, self.x22 * s)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        (self.x11 - other.x11)
            .abs()
            .max((self.x21 - other.x21).abs())
            .max((self.x12 - other.x12).abs())
            .max((self.x22 - other.x22).abs())
    }

    pub fn cast<U: Real>(&self) -> Matrix2<U> {
        let c = |v: T| U::lit(v.to_f64().unwrap_or(f64::NAN));
        Matrix2::new(c(self.x11), c(self.x21), c(self.x12), c(self.x22))
    }
}

impl<T: Real> Mul for Matrix2<T> {
    type Output = Matrix2<T>;

    fn mul(self, r: Matrix2<T>) -> Matrix2<T> {
        Matrix2::new(
            self.x11 * r.x11 + self.x12 * r.x21,
            self.x21 * r.x11 + self.x22 * r.x21,
            self.x11 * r.x12 + self.x12 * r.x22,
            self.x21 * r.x12 + self.x22 * r.x22,
        )
    }
}

impl<T: Real> Add for Matrix2<T> {
    type Output = Matrix2<T>;

    fn add(self, r: Matrix2<T>) -> Matrix2<T> {
        Matrix2::new(
            self.x11 + r.x11,
            self.x21 + r.x21,
            self.x12 + r.x12,
            self.x22 + r.x22,
        )
    }
}

impl<T: Real> Neg for Matrix2<T> {
    type Output = Matrix2<T>;

    fn neg(self) -> Matrix2<T> {
        self.scale(-T::one())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToySample<T> {
    pub x: Matrix2<T>,
    pub y: T,
}

impl<T: Real> ToySample<T> {
    /// The noise term recovered as `y − |det x|`.
    pub fn noise(&self) -> T {
        self.y - self.x.det().abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyDataset<T> {
    pub samples: Vec<ToySample<T>>,
    pub a: T,
    pub seed: u64,
}

impl<T: Real> ToyDataset<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same inputs with noise-free outcomes `y = |det x|`.
    pub fn noiseless(&self) -> Self {
        ToyDataset {
            samples: self
                .samples
                .iter()
                .map(|s| ToySample {
                    x: s.x,
                    y: s.x.det().abs(),
                })
                .collect(),
            a: self.a,
            seed: self.seed,
        }
    }
}

/// Undirected angle of the column midpoint with the horizontal axis, in (0, π).
pub fn angle_alpha<T: Real>(x: &Matrix2<T>) -> Result<T> {
    let half = T::lit(0.5);
    let w1 = (x.x11 + x.x12) * half;
    let w2 = (x.x21 + x.x22) * half;
    if w1 == T::zero() && w2 == T::zero() {
        return Err(Error::Domain("column midpoint is the zero vector".into()));
    }
    let pi = T::PI();
    let mut theta = w2.atan2(w1);
    if theta < T::zero() {
        theta += pi;
    }
    if theta >= pi {
        theta -= pi;
    }
    let lo = T::lit(1e-12);
    Ok(theta.max(lo).min(pi - lo))
}

/// Standard normal CDF, `Φ(x) = erfc(−x/√2)/2`.
pub fn norm_cdf<T: Real>(x: T) -> T {
    T::lit(0.5) * (-x * T::FRAC_1_SQRT_2()).erfc()
}

fn norm_pdf<T: Real>(x: T) -> T {
    T::lit(0.398_942_280_401_432_7) * (T::lit(-0.5) * x * x).exp()
}

// Acklam's rational approximation, relative error ~1.15e-9.
const ACK_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACK_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACK_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACK_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn acklam(p: f64) -> f64 {
    const P_LOW: f64 = 0.024_25;
    let tail = |q: f64| {
        (((((ACK_C[0] * q + ACK_C[1]) * q + ACK_C[2]) * q + ACK_C[3]) * q + ACK_C[4]) * q
            + ACK_C[5])
            / ((((ACK_D[0] * q + ACK_D[1]) * q + ACK_D[2]) * q + ACK_D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((ACK_A[0] * r + ACK_A[1]) * r + ACK_A[2]) * r + ACK_A[3]) * r + ACK_A[4]) * r
            + ACK_A[5])
            * q
            / (((((ACK_B[0] * r + ACK_B[1]) * r + ACK_B[2]) * r + ACK_B[3]) * r + ACK_B[4]) * r
                + 1.0)
    }
}

/// Standard normal quantile `Φ⁻¹(p)`.
///
/// Rational initial approximation followed by one Newton step against the
/// erfc-based CDF.
pub fn inv_norm_cdf<T: Real>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::Domain(format!(
            "inv_norm_cdf requires 0 < p < 1, got {p}"
        )));
    }
    let pf = p.to_f64().unwrap_or(f64::NAN);
    let x0 = acklam(pf);
    let x = x0 - (norm_cdf(x0) - pf) / norm_pdf(x0);
    Ok(T::lit(x))
}

/// Noise value for angle `alpha`, idiosyncratic draw `eps` and strength `a`.
pub fn gen_noise<T: Real>(alpha: T, eps: T, a: T) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::PI()) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, π), got {alpha}"
        )));
    }
    let z = inv_norm_cdf(alpha / T::PI())?;
    Ok((a * z + eps) / (a * a + T::one()).sqrt())
}

/// Draws sample `index` of the dataset keyed by `seed`.
pub fn sample_one<T: Real>(a: T, seed: u64, index: u64) -> ToySample<T> {
    let mut r = rng::stream(seed, index);
    let sd2 = std::f64::consts::SQRT_2;
    loop {
        let mut z = [0.0f64; 6];
        rng::fill_normals(&mut r, &mut z);
        let x = Matrix2::new(
            T::lit(z[0]),
            T::lit(z[1]),
            T::lit(sd2 * z[2]),
            T::lit(sd2 * z[3]),
        );
        // A zero midpoint has probability zero; redraw from the same stream.
        let Ok(alpha) = angle_alpha(&x) else { continue };
        let eta = gen_noise(alpha, T::lit(z[4]), a).expect("alpha folded into (0, π)");
        return ToySample {
            x,
            y: x.det().abs() + eta,
        };
    }
}

/// Samples `n` i.i.d. draws with spurious strength `a`.
///
/// `X⁽¹⁾ ~ N(0, I₂)`, `X⁽²⁾ ~ N(0, 2I₂)`, `ε ~ N(0, 1)`. Sample `i` comes
/// from stream `i` of `seed`, so the result is a pure function of
/// `(n, a, seed)`.
pub fn sample_dataset<T: Real>(n: usize, a: T, seed: u64) -> Result<ToyDataset<T>> {
    if n == 0 {
        return Err(Error::Domain("dataset size must be at least 1".into()));
    }
    if !a.is_finite() {
        return Err(Error::Domain(format!(
            "spurious strength must be finite, got {a}"
        )));
    }
    let samples = (0..n as u64).map(|i| sample_one(a, seed, i)).collect();
    Ok(ToyDataset { samples, a, seed })
}
