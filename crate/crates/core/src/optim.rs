//! First-order optimizers over flat parameter slices.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind<T> {
    Sgd,
    Adam { b1: T, b2: T, eps: T },
}

impl<T: Real> OptimizerKind<T> {
    /// Adam with `β₁ = 0.9`, `β₂ = 0.999`, `ε = 1e-8`.
    pub fn adam_default() -> Self {
        OptimizerKind::Adam {
            b1: T::lit(0.9),
            b2: T::lit(0.999),
            eps: T::lit(1e-8),
        }
    }
}

/// Adam moment estimates and step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(dim: usize) -> Self {
        AdamState {
            m: vec![T::zero(); dim],
            v: vec![T::zero(); dim],
            t: 0,
        }
    }
}

/// One bias-corrected Adam step, updating `params` and `state` in place.
pub fn adam_update<T: Real>(
    state: &mut AdamState<T>,
    params: &mut [T],
    grads: &[T],
    lr: T,
    b1: T,
    b2: T,
    eps: T,
) -> Result<()> {
    let dim = state.m.len();
    if params.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: params.len(),
        });
    }
    if grads.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: grads.len(),
        });
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    for i in 0..dim {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (T::one() - b1) * g;
        state.v[i] = b2 * state.v[i] + (T::one() - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

pub fn sgd_update<T: Real>(params: &mut [T], grads: &[T], lr: T) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            got: grads.len(),
        });
    }
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= lr * *g;
    }
    Ok(())
}

/// Optimizer with owned state.
#[derive(Debug, Clone)]
pub enum Optimizer<T> {
    Sgd {
        lr: T,
    },
    Adam {
        lr: T,
        b1: T,
        b2: T,
        eps: T,
        state: AdamState<T>,
    },
}

impl<T: Real> Optimizer<T> {
    pub fn new(kind: OptimizerKind<T>, lr: T, dim: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
            OptimizerKind::Adam { b1, b2, eps } => Optimizer::Adam {
                lr,
                b1,
                b2,
                eps,
                state: AdamState::new(dim),
            },
        }
    }

    pub fn step(&mut self, params: &mut [T], grads: &[T]) -> Result<()> {
        match self {
            Optimizer::Sgd { lr } => sgd_update(params, grads, *lr),
            Optimizer::Adam {
                lr,
                b1,
                b2,
                eps,
                state,
            } => adam_update(state, params, grads, *lr, *b1, *b2, *eps),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_params() {
        let mut st = AdamState::new(3);
        let mut p = vec![1.0, -2.0, 3.0];
        for _ in 0..50 {
            adam_update(&mut st, &mut p, &[0.0; 3], 0.1, 0.9, 0.999, 1e-8).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_closed_form() {
        let mut st = AdamState::new(2);
        let mut p = vec![0.0f64, 0.0];
        let g = [0.5f64, -4.0];
        adam_update(&mut st, &mut p, &g, 0.01, 0.9, 0.999, 1e-8).unwrap();
        for i in 0..2 {
            let expect = -0.01 * g[i] / (g[i].abs() + 1e-8);
            assert!((p[i] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let mut st = AdamState::new(2);
        let mut p = vec![0.0; 3];
        assert!(matches!(
            adam_update(&mut st, &mut p, &[0.0; 3], 0.1, 0.9, 0.999, 1e-8),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut p = vec![0.0; 2];
        assert!(adam_update(&mut st, &mut p, &[0.0; 1], 0.1, 0.9, 0.999, 1e-8).is_err());
        assert!(sgd_update(&mut p, &[0.0; 1], 0.1).is_err());
    }

    #[test]
    fn convex_quadratic() {
        // f(p) = ½ Σ c_i (p_i − t_i)²
        let c = [1.0, 4.0, 0.25];
        let target = [1.0, -2.0, 0.5];
        let f = |p: &[f64]| {
            (0..3)
                .map(|i| 0.5 * c[i] * (p[i] - target[i]).powi(2))
                .sum::<f64>()
        };
        let mut p = vec![0.0; 3];
        let mut st = AdamState::new(3);
        let mut losses = vec![f(&p)];
        let mut grad = vec![0.0; 3];
        for _ in 0..100 {
            for i in 0..3 {
                grad[i] = c[i] * (p[i] - target[i]);
            }
            adam_update(&mut st, &mut p, &grad, 0.1, 0.9, 0.999, 1e-8).unwrap();
            losses.push(f(&p));
        }
        assert!(losses[100] < 1e-3 * losses[0]);
    }

    #[test]
    fn sgd_reaches_stationary_point() {
        let c = [1.0, 4.0, 0.25];
        let target = [1.0, -2.0, 0.5];
        let mut p = vec![0.0f64; 3];
        let mut grad = vec![0.0; 3];
        let mut sgd = Optimizer::new(OptimizerKind::Sgd, 0.2, 3);
        for _ in 0..500 {
            for i in 0..3 {
                grad[i] = c[i] * (p[i] - target[i]);
            }
            sgd.step(&mut p, &grad).unwrap();
        }
        for i in 0..3 {
            assert!((p[i] - target[i]).abs() < 1e-4);
        }
    }
}
