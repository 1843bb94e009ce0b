//! Bias-corrected adaptive-moment gradient update.

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    /// Zero-initialized state for parameters with the given element counts.
    pub fn new(sizes: &[usize]) -> Self {
        Self {
            m: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            t: 0,
        }
    }

    /// One update over all parameters in place.
    pub fn step(&mut self, params: &mut [crate::numcore::Tensor], grads: &[Vec<f64>], lr: f64) {
        assert_eq!(params.len(), grads.len());
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for (i, value) in param.data_mut().iter_mut().enumerate() {
                let g = grad[i];
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g;
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                *value -= lr * m_hat / (v_hat.sqrt() + EPS);
            }
        }
    }
}
