//! Bias-corrected Adam over a [`ParamSet`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const DEFAULT_LEARNING_RATE: f64 = 5e-4;
pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    first_moment: BTreeMap<String, Tensor<T>>,
    second_moment: BTreeMap<String, Tensor<T>>,
    step: u64,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> AdamState<T> {
    /// Zeroed moments shaped like `params`, with the default betas and epsilon.
    pub fn new(params: &ParamSet<T>) -> Self {
        Self::with_hyper(
            params,
            T::lit(DEFAULT_BETA1),
            T::lit(DEFAULT_BETA2),
            T::lit(DEFAULT_EPSILON),
        )
    }

    pub fn with_hyper(params: &ParamSet<T>, beta1: T, beta2: T, epsilon: T) -> Self {
        let zeros: BTreeMap<_, _> = params
            .iter()
            .map(|(k, v)| (k.to_string(), Tensor::zeros(v.shape())))
            .collect();
        AdamState {
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
            beta1,
            beta2,
            epsilon,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, name: &str) -> Option<&Tensor<T>> {
        self.first_moment.get(name)
    }

    pub fn second_moment(&self, name: &str) -> Option<&Tensor<T>> {
        self.second_moment.get(name)
    }
}

/// One in-place Adam step. Nothing is modified unless every name and shape matches.
pub fn adam_update<T: Scalar>(
    params: &mut ParamSet<T>,
    grads: &ParamSet<T>,
    state: &mut AdamState<T>,
    lr: T,
) -> Result<()> {
    params.check_compatible(grads)?;
    for (name, p) in params.iter() {
        let m = state
            .first_moment
            .get(name)
            .ok_or_else(|| Error::Params(format!("optimizer state lacks {name:?}")))?;
        if m.shape() != p.shape() {
            return Err(Error::Params(format!(
                "optimizer state for {name:?} has shape {:?}, parameter {:?}",
                m.shape(),
                p.shape()
            )));
        }
    }
    if state.first_moment.len() != params.len() {
        return Err(Error::Params("optimizer state has extra parameters".into()));
    }
    for (_, g) in grads.iter() {
        g.ensure_finite("adam_update gradient")?;
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let one = T::one();
    let bias1 = one - b1.powi(t);
    let bias2 = one - b2.powi(t);
    for (name, p) in params.iter_mut() {
        let g = grads.get(name)?;
        let m = state.first_moment.get_mut(name).expect("checked above");
        let v = state.second_moment.get_mut(name).expect("checked above");
        for (((pv, &gv), mv), vv) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *mv = b1 * *mv + (one - b1) * gv;
            *vv = b2 * *vv + (one - b2) * gv * gv;
            let m_hat = *mv / bias1;
            let v_hat = *vv / bias2;
            *pv -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_set(v: f64) -> ParamSet<f64> {
        let mut p = ParamSet::new();
        p.insert("theta", Tensor::vector(vec![v]).unwrap()).unwrap();
        p
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = scalar_set(1.25);
        let g = p.zeros_like();
        let mut s = AdamState::new(&p);
        for _ in 0..5 {
            adam_update(&mut p, &g, &mut s, 5e-4).unwrap();
        }
        assert_eq!(p.get("theta").unwrap().data(), &[1.25]);
        assert_eq!(s.step(), 5);
    }

    #[test]
    fn one_step_matches_hand_oracle() {
        // m = 0.1, v = 0.001; bias-corrected both are 1, so the step is lr / (1 + eps).
        let theta0 = 2.0f64;
        let m = (1.0 - 0.9) * 1.0;
        let v = (1.0 - 0.999) * 1.0 * 1.0;
        let m_hat = m / (1.0 - 0.9f64);
        let v_hat = v / (1.0 - 0.999f64);
        let expected = theta0 - 5e-4 * m_hat / (v_hat.sqrt() + 1e-8);

        let mut p = scalar_set(theta0);
        let g = scalar_set(1.0);
        let mut s = AdamState::new(&p);
        adam_update(&mut p, &g, &mut s, DEFAULT_LEARNING_RATE).unwrap();
        let got = p.get("theta").unwrap().data()[0];
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
        assert!((got - (2.0 - 4.99999995e-4)).abs() < 1e-12);
        assert_eq!(s.step(), 1);
    }

    #[test]
    fn mismatch_names_offending_parameter() {
        let mut p = scalar_set(0.0);
        let mut g = ParamSet::new();
        g.insert("other", Tensor::vector(vec![1.0]).unwrap()).unwrap();
        let mut s = AdamState::new(&p);
        let msg = adam_update(&mut p, &g, &mut s, 1e-3).unwrap_err().to_string();
        assert!(msg.contains("theta"), "{msg}");
        assert_eq!(s.step(), 0);
    }

    #[test]
    fn default_learning_rate() {
        assert_eq!(DEFAULT_LEARNING_RATE, 5e-4);
    }
}
