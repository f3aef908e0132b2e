use super::ParameterSet;
use crate::error::{Error, Result};

/// SGD with classical momentum: `v <- momentum*v - lr*g; theta <- theta + v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sgd {
    pub lr: f64,
    pub momentum: f64,
}

impl Sgd {
    pub fn new(lr: f64, momentum: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Validation(format!("learning rate must be > 0, got {lr}")));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::Validation(format!("momentum must be in [0, 1), got {momentum}")));
        }
        Ok(Self { lr, momentum })
    }

    /// Applies one update in place. `velocity` must be shaped like `params`
    /// (start from `params.zeros_like()`). Nothing is modified when any
    /// gradient entry is non-finite.
    pub fn step(&self, params: &mut ParameterSet, grads: &ParameterSet, velocity: &mut ParameterSet) -> Result<()> {
        if !params.same_shape(grads) || !params.same_shape(velocity) {
            return Err(Error::dim(
                "sgd_step",
                "gradients and velocity shaped like parameters",
                "mismatched shapes",
            ));
        }
        for (i, g) in grads.layers.iter().enumerate() {
            if !g.weights.is_finite() || g.biases.iter().any(|v| !v.is_finite()) {
                return Err(Error::Training(format!("non-finite gradient in layer {i}")));
            }
        }
        for ((p, g), v) in params
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(velocity.layers.iter_mut())
        {
            update(
                p.weights.as_mut_slice(),
                g.weights.as_slice(),
                v.weights.as_mut_slice(),
                self,
            );
            update(&mut p.biases, &g.biases, &mut v.biases, self);
        }
        Ok(())
    }
}

fn update(theta: &mut [f64], grad: &[f64], vel: &mut [f64], opt: &Sgd) {
    for ((t, g), v) in theta.iter_mut().zip(grad).zip(vel.iter_mut()) {
        *v = opt.momentum * *v - opt.lr * g;
        *t += *v;
    }
}
