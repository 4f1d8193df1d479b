//! Causal feature of the matrix model and the transformations that keep it.
//!
//! The causal feature is `g(X) = |det X|`, the (doubled) area of the
//! triangle spanned by the two columns and the origin. Every transform here
//! multiplies the determinant by ±1.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::scm_toy::Matrix2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform<T> {
    /// Left-multiplication by the rotation matrix of angle `theta`.
    Rotate {
        theta: T,
    },
    /// Right-multiplication by `diag(a, 1/a)`.
    ScaleCols {
        a: T,
    },
    /// Right-multiplication by `diag(-1, 1)`.
    MirrorX,
    /// Right-multiplication by `[[1, 1], [0, 1]]`.
    ShearCols,
    /// Right-multiplication by `-I`.
    NegateBoth,
    Identity,
}

impl<T: Real> Transform<T> {
    /// Rotation restricted to `theta ∈ [0, π/4]`.
    pub fn rotate(theta: T) -> Result<Self> {
        if !(theta >= T::zero() && theta <= T::FRAC_PI_4()) {
            return Err(Error::Domain(format!(
                "rotation angle {theta} outside [0, π/4]"
            )));
        }
        Ok(Transform::Rotate { theta })
    }

    /// Column scaling restricted to `a ∈ [2/3, 3/2]`.
    pub fn scale_cols(a: T) -> Result<Self> {
        if !(a >= T::lit(2.0 / 3.0) && a <= T::lit(1.5)) {
            return Err(Error::Domain(format!(
                "column scale {a} outside [2/3, 3/2]"
            )));
        }
        Ok(Transform::ScaleCols { a })
    }

    /// The matrix `M` of the action, together with the side it acts from.
    fn action(&self) -> (Side, Matrix2<T>) {
        let (o, z) = (T::one(), T::zero());
        match *self {
            Transform::Rotate { theta } => {
                let (s, c) = theta.sin_cos();
                (Side::Left, Matrix2::from_rows([[c, -s], [s, c]]))
            }
            Transform::ScaleCols { a } => (Side::Right, Matrix2::diag(a, o / a)),
            Transform::MirrorX => (Side::Right, Matrix2::diag(-o, o)),
            Transform::ShearCols => (Side::Right, Matrix2::from_rows([[o, o], [z, o]])),
            Transform::NegateBoth => (Side::Right, Matrix2::diag(-o, -o)),
            Transform::Identity => (Side::Right, Matrix2::identity()),
        }
    }

    pub fn apply(&self, x: &Matrix2<T>) -> Matrix2<T> {
        match *self {
            Transform::Identity => *x,
            Transform::MirrorX => Matrix2::new(-x.x11, -x.x21, x.x12, x.x22),
            Transform::NegateBoth => -*x,
            Transform::ShearCols => Matrix2::new(x.x11, x.x21, x.x11 + x.x12, x.x21 + x.x22),
            _ => match self.action() {
                (Side::Left, m) => m * *x,
                (Side::Right, m) => *x * m,
            },
        }
    }

    /// Whether the parameters lie in the default ranges.
    pub fn in_default_range(&self) -> bool {
        match *self {
            Transform::Rotate { theta } => Transform::rotate(theta).is_ok(),
            Transform::ScaleCols { a } => Transform::scale_cols(a).is_ok(),
            _ => true,
        }
    }

    /// Parses the config-file form; `strict` enforces the default ranges.
    pub fn parse(s: &str, strict: bool) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s, None),
        };
        let num = |arg: Option<&str>| -> Result<T> {
            let raw =
                arg.ok_or_else(|| Error::Config(format!("transform `{s}` needs a parameter")))?;
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::Config(format!("bad transform parameter in `{s}`")))?;
            Ok(T::lit(v))
        };
        let no_arg = |t: Transform<T>| -> Result<Transform<T>> {
            match arg {
                None => Ok(t),
                Some(_) => Err(Error::Config(format!("transform `{s}` takes no parameter"))),
            }
        };
        let t = match head {
            "rotate" => Transform::Rotate { theta: num(arg)? },
            "scale" => Transform::ScaleCols { a: num(arg)? },
            "mirror" => no_arg(Transform::MirrorX)?,
            "shear" => no_arg(Transform::ShearCols)?,
            "negate" => no_arg(Transform::NegateBoth)?,
            "identity" => no_arg(Transform::Identity)?,
            _ => return Err(Error::Config(format!("unknown transform `{s}`"))),
        };
        if strict && !t.in_default_range() {
            return Err(Error::Domain(format!(
                "transform `{s}` outside its default range"
            )));
        }
        if let Transform::ScaleCols { a } = t {
            if a == T::zero() || !a.is_finite() {
                return Err(Error::Domain(format!(
                    "column scale must be finite and nonzero in `{s}`"
                )));
            }
        }
        Ok(t)
    }
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

impl<T: Real> fmt::Display for Transform<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Rotate { theta } => write!(f, "rotate:{theta}"),
            Transform::ScaleCols { a } => write!(f, "scale:{a}"),
            Transform::MirrorX => f.write_str("mirror"),
            Transform::ShearCols => f.write_str("shear"),
            Transform::NegateBoth => f.write_str("negate"),
            Transform::Identity => f.write_str("identity"),
        }
    }
}

impl<T: Real> FromStr for Transform<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Transform::parse(s, true)
    }
}

/// Composition `T₁ ∘ … ∘ T_K`; the last element is applied first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransformChain<T> {
    pub steps: Vec<Transform<T>>,
}

impl<T: Real> TransformChain<T> {
    pub fn new(steps: Vec<Transform<T>>) -> Self {
        TransformChain { steps }
    }

    pub fn apply(&self, x: &Matrix2<T>) -> Matrix2<T> {
        self.steps.iter().rev().fold(*x, |acc, t| t.apply(&acc))
    }
}

pub fn apply<T: Real>(t: &Transform<T>, x: &Matrix2<T>) -> Matrix2<T> {
    t.apply(x)
}

pub fn apply_chain<T: Real>(c: &TransformChain<T>, x: &Matrix2<T>) -> Matrix2<T> {
    c.apply(x)
}

/// `g(X) = |x11·x22 − x21·x12|`.
pub fn causal_feature<T: Real>(x: &Matrix2<T>) -> T {
    x.det().abs()
}

/// Whether `f` leaves the causal feature unchanged on every sample within `tol`.
pub fn is_invariant<T: Real, F>(f: F, samples: &[Matrix2<T>], tol: T) -> bool
where
    F: Fn(&Matrix2<T>) -> Matrix2<T>,
{
    samples
        .iter()
        .all(|x| (causal_feature(&f(x)) - causal_feature(x)).abs() <= tol)
}

pub fn is_cit<T: Real>(t: &Transform<T>, samples: &[Matrix2<T>], tol: T) -> bool {
    is_invariant(|x| t.apply(x), samples, tol)
}

/// The five fixed representatives used by the toy experiment, in order:
/// rotation by π/12, column scaling by 1.1, mirror, shear, negation.
pub fn toy_essential_set<T: Real>() -> Vec<Transform<T>> {
    vec![
        Transform::Rotate {
            theta: T::PI() / T::lit(12.0),
        },
        Transform::ScaleCols { a: T::lit(1.1) },
        Transform::MirrorX,
        Transform::ShearCols,
        Transform::NegateBoth,
    ]
}

/// Identity followed by [`toy_essential_set`]: the family `T₀, …, T₅`.
pub fn toy_transform_family<T: Real>() -> Vec<Transform<T>> {
    let mut v = vec![Transform::Identity];
    v.extend(toy_essential_set());
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm_toy::sample_dataset;
    use std::f64::consts::PI;

    fn gaussian_matrices(n: usize, seed: u64) -> Vec<Matrix2<f64>> {
        sample_dataset(n, 0.0, seed)
            .unwrap()
            .samples
            .into_iter()
            .map(|s| s.x)
            .collect()
    }

    #[test]
    fn apply_examples() {
        let i = Matrix2::<f64>::identity();
        assert_eq!(
            Transform::ShearCols.apply(&i),
            Matrix2::from_cols([1.0, 0.0], [1.0, 1.0])
        );
        let x = Matrix2::from_cols([1.0, 3.0], [2.0, 4.0]);
        assert_eq!(
            Transform::MirrorX.apply(&x),
            Matrix2::from_cols([-1.0, -3.0], [2.0, 4.0])
        );
        let r = Transform::Rotate { theta: PI / 12.0 }.apply(&i);
        let (s, c) = (PI / 12.0).sin_cos();
        assert!(r.max_abs_diff(&Matrix2::from_cols([c, s], [-s, c])) < 1e-15);
        assert_eq!(Transform::Identity.apply(&x), x);
        assert_eq!(Transform::NegateBoth.apply(&x), -x);
    }

    #[test]
    fn specialised_paths_match_matrix_action() {
        for x in gaussian_matrices(50, 3) {
            for t in toy_transform_family::<f64>() {
                let (side, m) = t.action();
                let generic = match side {
                    Side::Left => m * x,
                    Side::Right => x * m,
                };
                assert!(t.apply(&x).max_abs_diff(&generic) < 1e-14);
            }
        }
    }

    #[test]
    fn causal_feature_examples() {
        assert_eq!(causal_feature(&Matrix2::<f64>::identity()), 1.0);
        assert_eq!(causal_feature(&Matrix2::diag(2.0, 3.0)), 6.0);
        assert_eq!(
            causal_feature(&Matrix2::from_cols([1.0, 2.0], [2.0, 4.0])),
            0.0
        );
    }

    #[test]
    fn toy_set_is_cit() {
        let xs = gaussian_matrices(10_000, 9);
        let set = toy_essential_set::<f64>();
        assert_eq!(set.len(), 5);
        assert_eq!(set[0], Transform::Rotate { theta: PI / 12.0 });
        for t in &set {
            assert!(is_cit(t, &xs, 1e-9), "{t}");
        }
        assert!(is_cit(&Transform::Identity, &xs, 1e-300));
        assert!(!is_invariant(|x| x.scale(2.0), &xs, 1e-9));
        let fam = toy_transform_family::<f64>();
        assert_eq!(fam.len(), 6);
        assert_eq!(fam[0], Transform::Identity);
    }

    #[test]
    fn chains() {
        let x = Matrix2::new(0.3, -1.2, 2.5, 0.7);
        assert_eq!(apply_chain(&TransformChain::default(), &x), x);
        let nn = TransformChain::new(vec![Transform::NegateBoth, Transform::NegateBoth]);
        assert_eq!(nn.apply(&x), x);
        // rotate ∘ scale: scale first (right factor), then rotate (left factor)
        let c = TransformChain::new(vec![
            Transform::Rotate { theta: PI / 12.0 },
            Transform::ScaleCols { a: 1.1 },
        ]);
        let (s, co) = (PI / 12.0).sin_cos();
        let r = [[co, -s], [s, co]];
        let xm = [[x.x11, x.x12], [x.x21, x.x22]];
        let d = [[1.1, 0.0], [0.0, 1.0 / 1.1]];
        let mut xd = [[0.0; 2]; 2];
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                xd[i][j] = (0..2).map(|k| xm[i][k] * d[k][j]).sum();
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = (0..2).map(|k| r[i][k] * xd[k][j]).sum();
            }
        }
        assert!(c.apply(&x).max_abs_diff(&Matrix2::from_rows(out)) < 1e-14);
    }

    #[test]
    fn strict_ranges() {
        assert!(Transform::<f64>::rotate(PI / 12.0).is_ok());
        assert!(Transform::<f64>::rotate(PI / 3.0).is_err());
        assert!(Transform::<f64>::rotate(-0.1).is_err());
        assert!(Transform::<f64>::scale_cols(1.1).is_ok());
        assert!(Transform::<f64>::scale_cols(2.0).is_err());
        assert!(Transform::<f64>::parse("rotate:1.0", true).is_err());
        assert_eq!(
            Transform::<f64>::parse("rotate:1.0", false).unwrap(),
            Transform::Rotate { theta: 1.0 }
        );
        assert!(Transform::<f64>::parse("scale:0", false).is_err());
    }

    #[test]
    fn parse_and_display() {
        for s in [
            "rotate:0.25",
            "scale:1.1",
            "mirror",
            "shear",
            "negate",
            "identity",
        ] {
            let t: Transform<f64> = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
        }
        assert!("mirror:1".parse::<Transform<f64>>().is_err());
        assert!("rotate".parse::<Transform<f64>>().is_err());
        assert!("spin:1".parse::<Transform<f64>>().is_err());
    }
}
