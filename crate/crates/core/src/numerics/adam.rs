use serde::{Deserialize, Serialize};

use super::ParamStore;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(self, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.beta1) || !open_unit(self.beta2) {
            return Err(Error::config(format!(
                "Adam betas must lie in (0, 1), got {} / {}",
                self.beta1, self.beta2
            )));
        }
        if !(self.learning_rate > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::config(format!(
                "Adam learning rate and epsilon must be positive, got {} / {}",
                self.learning_rate, self.epsilon
            )));
        }
        Ok(())
    }
}

/// One bias-corrected Adam update over every parameter, then clears gradients.
///
/// Gradients are validated before anything is written, so a failed step leaves
/// the store untouched.
pub fn adam_step(store: &mut ParamStore, cfg: &AdamConfig) -> Result<()> {
    cfg.validate()?;
    if let Some(p) = store.iter().find(|p| !p.grad.is_finite()) {
        return Err(Error::Numeric {
            param: p.name.clone(),
        });
    }

    store.bump_step();
    let t = store.step() as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);

    for p in store.iter_mut() {
        let value = p.value.as_mut_slice();
        let grad = p.grad.as_mut_slice();
        let m = p.m.as_mut_slice();
        let v = p.v.as_mut_slice();
        for i in 0..value.len() {
            let g = grad[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            value[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            grad[i] = 0.0;
        }
    }
    Ok(())
}
