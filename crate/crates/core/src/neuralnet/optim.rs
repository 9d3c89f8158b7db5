use serde::{Deserialize, Serialize};

use super::linalg::Real;
use super::params::BiGruAttParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment buffers of bias-corrected Adam.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub m: BiGruAttParams<T>,
    pub v: BiGruAttParams<T>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(params: &BiGruAttParams<T>, config: AdamConfig) -> Self {
        AdamState {
            config,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    /// One update of `params` in place.
    pub fn step(&mut self, params: &mut BiGruAttParams<T>, grads: &BiGruAttParams<T>, lr: f64) {
        self.t += 1;
        let c = self.config;
        let t = self.t as i32;
        let (b1, b2) = (T::from_f64_lossy(c.beta1), T::from_f64_lossy(c.beta2));
        let corr1 = T::from_f64_lossy(1.0 - c.beta1.powi(t));
        let corr2 = T::from_f64_lossy(1.0 - c.beta2.powi(t));
        let (lr, eps, one) = (T::from_f64_lossy(lr), T::from_f64_lossy(c.eps), T::one());
        for (((p, g), m), v) in params
            .blocks_mut()
            .into_iter()
            .zip(grads.blocks())
            .zip(self.m.blocks_mut())
            .zip(self.v.blocks_mut())
        {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                let m_hat = m[i] / corr1;
                let v_hat = v[i] / corr2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

pub fn global_norm<T: Real>(grads: &BiGruAttParams<T>) -> f64 {
    grads
        .blocks()
        .iter()
        .flat_map(|b| b.iter())
        .map(|&g| {
            let g = g.as_f64();
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_gradients<T: Real>(grads: &mut BiGruAttParams<T>, max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm {
        let scale = T::from_f64_lossy(max_norm / norm);
        for block in grads.blocks_mut() {
            for g in block.iter_mut() {
                *g *= scale;
            }
        }
    }
    norm
}

/// Step decay: the rate is multiplied by `factor` every `every` epochs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub initial: f64,
    pub factor: f64,
    pub every: usize,
}

impl LrSchedule {
    /// Rate for zero-based `epoch`.
    pub fn at(&self, epoch: usize) -> f64 {
        self.initial * self.factor.powi((epoch / self.every.max(1)) as i32)
    }
}
