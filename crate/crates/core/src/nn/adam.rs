use serde::{Deserialize, Serialize};

use super::float::Float;
use super::matrix::Matrix;
use super::param::ParamSet;
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
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

/// Adam moments for every parameter of one [`ParamSet`].
#[derive(Debug, Clone)]
pub struct Adam<F> {
    pub config: AdamConfig,
    m: Vec<Matrix<F>>,
    v: Vec<Matrix<F>>,
    steps: u64,
}

impl<F: Float> Adam<F> {
    pub fn new(config: AdamConfig, params: &ParamSet<F>) -> Self {
        let zeros = || {
            params
                .iter()
                .map(|(_, p)| Matrix::zeros(p.value.rows(), p.value.cols()))
                .collect()
        };
        Self {
            config,
            m: zeros(),
            v: zeros(),
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one bias-corrected Adam update from the accumulated
    /// gradients, then zeroes them. Nothing is modified if any gradient is
    /// non-finite.
    pub fn step(&mut self, params: &mut ParamSet<F>) -> Result<(), NnError> {
        if params.len() != self.m.len() {
            return Err(NnError::Contract(format!(
                "optimizer holds {} moment arrays but the model has {} parameters",
                self.m.len(),
                params.len()
            )));
        }
        if let Some((_, p)) = params.iter().find(|(_, p)| !p.grad.all_finite()) {
            return Err(NnError::NonFiniteGradient {
                param: p.name.clone(),
            });
        }
        self.steps += 1;
        let c = &self.config;
        let t = self.steps as i32;
        let f = F::from_f64_lossy;
        let (b1, b2) = (f(c.beta1), f(c.beta2));
        let corr1 = f(1.0 - c.beta1.powi(t));
        let corr2 = f(1.0 - c.beta2.powi(t));
        let (lr, eps) = (f(c.learning_rate), f(c.epsilon));
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let grads = p.grad.data();
            let values = p.value.data_mut();
            for (((x, &g), m), v) in values
                .iter_mut()
                .zip(grads)
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *m = b1 * *m + (F::one() - b1) * g;
                *v = b2 * *v + (F::one() - b2) * g * g;
                let m_hat = *m / corr1;
                let v_hat = *v / corr2;
                *x -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            p.grad.fill(F::zero());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::param::Init;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_set(x: f64) -> ParamSet<f64> {
        let mut ps = ParamSet::new();
        ps.insert("x", Matrix::from_f64(1, 1, &[x]));
        ps
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut ps = ParamSet::<f64>::new();
        ps.add("w", 3, 4, Init::Glorot, &mut ChaCha8Rng::seed_from_u64(0));
        let before = ps.clone();
        let mut adam = Adam::new(AdamConfig::default(), &ps);
        adam.step(&mut ps).unwrap();
        assert!(ps.bit_identical(&before));
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [0.5, -3.0, 1e-3] {
            let mut ps = scalar_set(1.0);
            ps.get_mut(crate::nn::ParamId(0)).grad.fill(g);
            let mut adam = Adam::new(AdamConfig::default(), &ps);
            adam.step(&mut ps).unwrap();
            let delta = ps.value(crate::nn::ParamId(0)).scalar() - 1.0;
            // closed form: m̂ = g, v̂ = g², update = lr·g/(|g| + ε)
            let expect = -1e-3 * g / (g.abs() + 1e-8);
            assert!((delta - expect).abs() < 1e-15);
            assert!((delta.abs() - 1e-3).abs() < 1e-7);
            assert_eq!(ps.grad(crate::nn::ParamId(0)).scalar(), 0.0);
        }
    }

    #[test]
    fn scripted_two_step_trace() {
        let id = crate::nn::ParamId(0);
        let mut ps = scalar_set(0.5);
        let mut adam = Adam::new(AdamConfig::default(), &ps);
        let grads = [0.2, -0.1];
        let (mut x, mut m, mut v) = (0.5f64, 0.0f64, 0.0f64);
        for (t, &g) in grads.iter().enumerate() {
            ps.get_mut(id).grad.fill(g);
            adam.step(&mut ps).unwrap();
            let t = (t + 1) as i32;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            x -= 1e-3 * (m / (1.0 - 0.9f64.powi(t))) / ((v / (1.0 - 0.999f64.powi(t))).sqrt() + 1e-8);
            assert!((ps.value(id).scalar() - x).abs() < 1e-15);
        }
        assert_eq!(adam.steps(), 2);
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut ps = scalar_set(0.5);
        ps.insert("bad", Matrix::from_f64(1, 2, &[0.0, 0.0]));
        ps.get_mut(crate::nn::ParamId(1)).grad.set(0, 1, f64::NAN);
        let mut adam = Adam::new(AdamConfig::default(), &ps);
        match adam.step(&mut ps) {
            Err(NnError::NonFiniteGradient { param }) => assert_eq!(param, "bad"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
