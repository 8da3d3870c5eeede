use super::SolverConfig;
use crate::error::{Error, Result};

const ADAM_EPS: f64 = 1e-8;

/// Moment estimates of a clipped Adam optimizer over a flat parameter
/// vector. Each entry has its own learning rate so parameter groups can
/// move at different speeds.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(lr: Vec<f64>) -> Self {
        let n = lr.len();
        Self {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn uniform(n: usize, lr: f64) -> Self {
        Self::new(vec![lr; n])
    }

    pub fn len(&self) -> usize {
        self.lr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lr.is_empty()
    }

    pub fn steps(&self) -> i32 {
        self.t
    }
}

/// One Adam update of `x` after clipping `grad` to the configured global
/// norm. Returns the gradient norm before clipping.
pub fn optimizer_step(state: &mut Adam, x: &mut [f64], grad: &[f64], config: &SolverConfig) -> Result<f64> {
    optimizer_step_scaled(state, x, grad, config, 1.0)
}

/// [`optimizer_step`] with every learning rate multiplied by `lr_scale`.
pub(crate) fn optimizer_step_scaled(
    state: &mut Adam,
    x: &mut [f64],
    grad: &[f64],
    config: &SolverConfig,
    lr_scale: f64,
) -> Result<f64> {
    if x.len() != state.len() || grad.len() != state.len() {
        return Err(Error::invalid("optimizer state and parameter sizes differ"));
    }
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if !norm.is_finite() {
        return Err(Error::invalid("non-finite gradient"));
    }
    let clip = if norm > config.clip_norm {
        config.clip_norm / norm
    } else {
        1.0
    };
    state.t += 1;
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powi(state.t);
    let c2 = 1.0 - b2.powi(state.t);
    for i in 0..x.len() {
        let g = grad[i] * clip;
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        x[i] -= state.lr[i] * lr_scale * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
    Ok(norm)
}
