use serde::{Deserialize, Serialize};

use super::{BnnError, BnnModel, Gradients, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Adam,
    /// Adam with decoupled weight decay.
    AdamW,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl AdamHyper {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub hyper: AdamHyper,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, hyper: AdamHyper) -> Self {
        Self {
            kind,
            hyper,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            step: 0,
        }
    }

    pub fn adam(learning_rate: f64) -> Self {
        Self::new(OptimizerKind::Adam, AdamHyper::new(learning_rate, 0.0))
    }

    pub fn adamw(learning_rate: f64, weight_decay: f64) -> Self {
        Self::new(OptimizerKind::AdamW, AdamHyper::new(learning_rate, weight_decay))
    }

    /// `λ = 0` selects plain Adam, anything else AdamW.
    pub fn for_weight_decay(learning_rate: f64, weight_decay: f64) -> Self {
        if weight_decay == 0.0 {
            Self::adam(learning_rate)
        } else {
            Self::adamw(learning_rate, weight_decay)
        }
    }

    /// One bias-corrected Adam update. AdamW first shrinks every trainable
    /// tensor by `1 - lr·λ`.
    pub fn step(&mut self, model: &mut BnnModel, grads: &Gradients) -> Result<()> {
        let grads = grads.slices();
        let mut params = model.parameters_mut();
        if grads.len() != params.len() || grads.iter().zip(&params).any(|(g, p)| g.len() != p.len()) {
            return Err(BnnError::GradientShape);
        }
        if self.first_moment.is_empty() {
            self.first_moment = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.second_moment = self.first_moment.clone();
        } else if self.first_moment.len() != params.len() {
            return Err(BnnError::GradientShape);
        }

        self.step += 1;
        let h = self.hyper;
        let bc1 = 1.0 - h.beta1.powf(self.step as f64);
        let bc2 = 1.0 - h.beta2.powf(self.step as f64);
        let decay = match self.kind {
            OptimizerKind::Adam => None,
            OptimizerKind::AdamW => Some(1.0 - h.learning_rate * h.weight_decay),
        };

        for (((p, g), m), v) in params
            .iter_mut()
            .zip(&grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for i in 0..p.len() {
                if let Some(d) = decay {
                    p[i] *= d;
                }
                m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
                v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= h.learning_rate * m_hat / (v_hat.sqrt() + h.eps);
            }
        }
        Ok(())
    }
}
