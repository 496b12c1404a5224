use serde::{Deserialize, Serialize};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment accumulators for bias-corrected Adam over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self {
            config,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        for g in [3.7, -0.02, 1e4] {
            let mut s = AdamState::new(1, AdamConfig::default());
            let mut p = [0.5];
            s.step(&mut p, &[g]);
            let delta = p[0] - 0.5;
            assert!((delta + 0.01 * f64::signum(g)).abs() < 1e-6, "g={g} delta={delta}");
        }
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut s = AdamState::new(3, AdamConfig::default());
        let mut p = [1.0, -2.0, 0.25];
        for _ in 0..100 {
            s.step(&mut p, &[0.0; 3]);
        }
        assert_eq!(p, [1.0, -2.0, 0.25]);
        assert_eq!(s.steps(), 100);
    }

    #[test]
    fn descends_on_quadratic() {
        let mut s = AdamState::new(1, AdamConfig::default());
        let mut theta = [1.0];
        for _ in 0..10 {
            let g = 2.0 * theta[0];
            s.step(&mut theta, &[g]);
        }
        assert!(theta[0].abs() < 1.0);
        // ten lr-sized steps toward zero
        assert!((theta[0] - 0.9).abs() < 1e-3, "{}", theta[0]);
    }
}
