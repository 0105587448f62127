//! Single-layer GRU cell.
//!
//! ```text
//! r  = σ(W_r x + U_r h + b_r)
//! z  = σ(W_z x + U_z h + b_z)
//! n  = tanh(W_n x + U_n (r ⊙ h) + b_n)
//! h' = (1 − z) ⊙ n + z ⊙ h
//! ```
//!
//! The update gate `z` weights the *previous* state.

use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::rng::{uniform_init, SeededRng};
use crate::scalar::Scalar;
use crate::tensor::{sigmoid, Tensor};

const GATE_TENSORS: [&str; 9] = [
    "w_reset",
    "u_reset",
    "b_reset",
    "w_update",
    "u_update",
    "b_update",
    "w_candidate",
    "u_candidate",
    "b_candidate",
];

#[derive(Clone, Debug, PartialEq)]
pub struct GruParams<T> {
    pub w_reset: Tensor<T>,
    pub u_reset: Tensor<T>,
    pub b_reset: Tensor<T>,
    pub w_update: Tensor<T>,
    pub u_update: Tensor<T>,
    pub b_update: Tensor<T>,
    pub w_candidate: Tensor<T>,
    pub u_candidate: Tensor<T>,
    pub b_candidate: Tensor<T>,
}

impl<T: Scalar> GruParams<T> {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = || Tensor::zeros(&[hidden, input]);
        let u = || Tensor::zeros(&[hidden, hidden]);
        let b = || Tensor::zeros(&[hidden]);
        GruParams {
            w_reset: w(),
            u_reset: u(),
            b_reset: b(),
            w_update: w(),
            u_update: u(),
            b_update: b(),
            w_candidate: w(),
            u_candidate: u(),
            b_candidate: b(),
        }
    }

    /// Uniform ±1/√fan_in weights, zero biases. Draw order: W_r, U_r, W_z, U_z, W_n, U_n.
    pub fn init(input: usize, hidden: usize, rng: &mut SeededRng) -> Self {
        let mut p = Self::zeros(input, hidden);
        p.w_reset = uniform_init(&[hidden, input], input, rng);
        p.u_reset = uniform_init(&[hidden, hidden], hidden, rng);
        p.w_update = uniform_init(&[hidden, input], input, rng);
        p.u_update = uniform_init(&[hidden, hidden], hidden, rng);
        p.w_candidate = uniform_init(&[hidden, input], input, rng);
        p.u_candidate = uniform_init(&[hidden, hidden], hidden, rng);
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w_reset.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.b_reset.len()
    }

    fn tensors(&self) -> [&Tensor<T>; 9] {
        [
            &self.w_reset,
            &self.u_reset,
            &self.b_reset,
            &self.w_update,
            &self.u_update,
            &self.b_update,
            &self.w_candidate,
            &self.u_candidate,
            &self.b_candidate,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Tensor<T>; 9] {
        [
            &mut self.w_reset,
            &mut self.u_reset,
            &mut self.b_reset,
            &mut self.w_update,
            &mut self.u_update,
            &mut self.b_update,
            &mut self.w_candidate,
            &mut self.u_candidate,
            &mut self.b_candidate,
        ]
    }

    /// Checks that all gates agree on input and hidden sizes.
    pub fn validate(&self) -> Result<()> {
        let (h, i) = (self.hidden_dim(), self.input_dim());
        for (name, t) in GATE_TENSORS.iter().zip(self.tensors()) {
            let expected: Vec<usize> = match name.as_bytes()[0] {
                b'w' => vec![h, i],
                b'u' => vec![h, h],
                _ => vec![h],
            };
            if t.shape() != expected.as_slice() {
                return Err(Error::Shape {
                    op: "gru params",
                    left: expected,
                    right: t.shape().to_vec(),
                });
            }
        }
        Ok(())
    }

    pub fn shapes(input: usize, hidden: usize) -> Vec<(&'static str, Vec<usize>)> {
        GATE_TENSORS
            .iter()
            .map(|&n| {
                let s = match n.as_bytes()[0] {
                    b'w' => vec![hidden, input],
                    b'u' => vec![hidden, hidden],
                    _ => vec![hidden],
                };
                (n, s)
            })
            .collect()
    }

    pub fn insert_into(self, prefix: &str, set: &mut ParamSet<T>) -> Result<()> {
        let GruParams {
            w_reset,
            u_reset,
            b_reset,
            w_update,
            u_update,
            b_update,
            w_candidate,
            u_candidate,
            b_candidate,
        } = self;
        let all = [
            w_reset,
            u_reset,
            b_reset,
            w_update,
            u_update,
            b_update,
            w_candidate,
            u_candidate,
            b_candidate,
        ];
        for (name, t) in GATE_TENSORS.iter().zip(all) {
            set.insert(format!("{prefix}.{name}"), t)?;
        }
        Ok(())
    }

    pub fn take_from(prefix: &str, set: &mut ParamSet<T>) -> Result<Self> {
        let mut take = |n: &str| set.take(&format!("{prefix}.{n}"));
        let p = GruParams {
            w_reset: take("w_reset")?,
            u_reset: take("u_reset")?,
            b_reset: take("b_reset")?,
            w_update: take("w_update")?,
            u_update: take("u_update")?,
            b_update: take("b_update")?,
            w_candidate: take("w_candidate")?,
            u_candidate: take("u_candidate")?,
            b_candidate: take("b_candidate")?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn accumulate(&mut self, other: &Self) -> Result<()> {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b)?;
        }
        Ok(())
    }
}

/// Values saved by the forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct GruCache<T> {
    pub x: Vec<T>,
    pub h_prev: Vec<T>,
    pub reset: Vec<T>,
    pub update: Vec<T>,
    pub candidate: Vec<T>,
}

fn check_dims<T: Scalar>(x: &[T], h: &[T], p: &GruParams<T>) -> Result<()> {
    if x.len() != p.input_dim() || h.len() != p.hidden_dim() {
        return Err(Error::Shape {
            op: "gru_step",
            left: vec![p.input_dim(), p.hidden_dim()],
            right: vec![x.len(), h.len()],
        });
    }
    Ok(())
}

/// One GRU step from state `h` on input `x`.
pub fn gru_step<T: Scalar>(x: &[T], h: &[T], p: &GruParams<T>) -> Result<Vec<T>> {
    check_dims(x, h, p)?;
    Ok(gru_forward(x, h, p).0)
}

pub(crate) fn gru_forward<T: Scalar>(x: &[T], h: &[T], p: &GruParams<T>) -> (Vec<T>, GruCache<T>) {
    let hd = h.len();
    let mut a_r = p.b_reset.data().to_vec();
    p.w_reset.matvec_acc(x, &mut a_r);
    p.u_reset.matvec_acc(h, &mut a_r);
    let reset: Vec<T> = a_r.into_iter().map(sigmoid).collect();

    let mut a_z = p.b_update.data().to_vec();
    p.w_update.matvec_acc(x, &mut a_z);
    p.u_update.matvec_acc(h, &mut a_z);
    let update: Vec<T> = a_z.into_iter().map(sigmoid).collect();

    let rh: Vec<T> = reset.iter().zip(h).map(|(&r, &hv)| r * hv).collect();
    let mut a_n = p.b_candidate.data().to_vec();
    p.w_candidate.matvec_acc(x, &mut a_n);
    p.u_candidate.matvec_acc(&rh, &mut a_n);
    let candidate: Vec<T> = a_n.into_iter().map(|v| v.tanh()).collect();

    let mut out = Vec::with_capacity(hd);
    for i in 0..hd {
        out.push((T::one() - update[i]) * candidate[i] + update[i] * h[i]);
    }
    (
        out,
        GruCache {
            x: x.to_vec(),
            h_prev: h.to_vec(),
            reset,
            update,
            candidate,
        },
    )
}

/// Backpropagates `d_out` (gradient w.r.t. the new state) through one step.
/// Parameter gradients accumulate into `grads`; returns `(d_x, d_h_prev)`.
pub(crate) fn gru_backward<T: Scalar>(
    d_out: &[T],
    cache: &GruCache<T>,
    p: &GruParams<T>,
    grads: &mut GruParams<T>,
) -> (Vec<T>, Vec<T>) {
    let one = T::one();
    let hd = d_out.len();
    let h = &cache.h_prev;
    let (r, z, n) = (&cache.reset, &cache.update, &cache.candidate);

    let mut d_x = vec![T::zero(); cache.x.len()];
    let mut d_h: Vec<T> = (0..hd).map(|i| d_out[i] * z[i]).collect();

    // candidate branch
    let d_an: Vec<T> = (0..hd)
        .map(|i| d_out[i] * (one - z[i]) * (one - n[i] * n[i]))
        .collect();
    let rh: Vec<T> = (0..hd).map(|i| r[i] * h[i]).collect();
    grads.w_candidate.outer_acc(&d_an, &cache.x);
    grads.u_candidate.outer_acc(&d_an, &rh);
    for (g, &v) in grads.b_candidate.data_mut().iter_mut().zip(&d_an) {
        *g += v;
    }
    p.w_candidate.matvec_t_acc(&d_an, &mut d_x);
    let mut d_rh = vec![T::zero(); hd];
    p.u_candidate.matvec_t_acc(&d_an, &mut d_rh);
    for i in 0..hd {
        d_h[i] += d_rh[i] * r[i];
    }

    // update gate
    let d_az: Vec<T> = (0..hd)
        .map(|i| d_out[i] * (h[i] - n[i]) * z[i] * (one - z[i]))
        .collect();
    grads.w_update.outer_acc(&d_az, &cache.x);
    grads.u_update.outer_acc(&d_az, h);
    for (g, &v) in grads.b_update.data_mut().iter_mut().zip(&d_az) {
        *g += v;
    }
    p.w_update.matvec_t_acc(&d_az, &mut d_x);
    p.u_update.matvec_t_acc(&d_az, &mut d_h);

    // reset gate
    let d_ar: Vec<T> = (0..hd)
        .map(|i| d_rh[i] * h[i] * r[i] * (one - r[i]))
        .collect();
    grads.w_reset.outer_acc(&d_ar, &cache.x);
    grads.u_reset.outer_acc(&d_ar, h);
    for (g, &v) in grads.b_reset.data_mut().iter_mut().zip(&d_ar) {
        *g += v;
    }
    p.w_reset.matvec_t_acc(&d_ar, &mut d_x);
    p.u_reset.matvec_t_acc(&d_ar, &mut d_h);

    (d_x, d_h)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::gradcheck::{compare_grads, finite_diff_grad};

    /// Scalar-by-scalar reference cell, written without any of the tensor kernels.
    pub(crate) fn oracle_step(x: &[f64], h: &[f64], p: &GruParams<f64>) -> Vec<f64> {
        let (hd, id) = (h.len(), x.len());
        let at = |t: &Tensor<f64>, i: usize, j: usize, cols: usize| t.data()[i * cols + j];
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut r = vec![0.0; hd];
        let mut z = vec![0.0; hd];
        for i in 0..hd {
            let mut ar = p.b_reset.data()[i];
            let mut az = p.b_update.data()[i];
            for j in 0..id {
                ar += at(&p.w_reset, i, j, id) * x[j];
                az += at(&p.w_update, i, j, id) * x[j];
            }
            for j in 0..hd {
                ar += at(&p.u_reset, i, j, hd) * h[j];
                az += at(&p.u_update, i, j, hd) * h[j];
            }
            r[i] = sig(ar);
            z[i] = sig(az);
        }
        let mut out = vec![0.0; hd];
        for i in 0..hd {
            let mut an = p.b_candidate.data()[i];
            for j in 0..id {
                an += at(&p.w_candidate, i, j, id) * x[j];
            }
            for j in 0..hd {
                an += at(&p.u_candidate, i, j, hd) * r[j] * h[j];
            }
            let n = an.tanh();
            out[i] = (1.0 - z[i]) * n + z[i] * h[i];
        }
        out
    }

    pub(crate) fn random_params(input: usize, hidden: usize, seed: u64) -> GruParams<f64> {
        let mut rng = SeededRng::new(seed);
        let mut p = GruParams::init(input, hidden, &mut rng);
        for b in [&mut p.b_reset, &mut p.b_update, &mut p.b_candidate] {
            for v in b.data_mut() {
                *v = rng.uniform_range(-0.5, 0.5);
            }
        }
        p
    }

    fn to_set(p: &GruParams<f64>) -> ParamSet<f64> {
        let mut s = ParamSet::new();
        p.clone().insert_into("gru", &mut s).unwrap();
        s
    }

    #[test]
    fn zero_params_zero_state_stays_zero() {
        let p = GruParams::<f64>::zeros(3, 4);
        let h = gru_step(&[1.0, -2.0, 3.0], &[0.0; 4], &p).unwrap();
        assert_eq!(h, vec![0.0; 4]);
    }

    #[test]
    fn saturated_update_gate_carries_state() {
        let mut p = random_params(2, 3, 1);
        for v in p.b_update.data_mut() {
            *v = 20.0;
        }
        let mut w = p.w_update.clone();
        w.data_mut().iter_mut().for_each(|v| *v = 0.0);
        p.w_update = w;
        p.u_update = Tensor::zeros(&[3, 3]);
        let h = [0.3, -0.7, 0.9];
        let out = gru_step(&[5.0, -4.0], &h, &p).unwrap();
        for (a, b) in out.iter().zip(&h) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn matches_scalar_oracle() {
        for seed in 0..5 {
            let p = random_params(2, 2, seed);
            let x = [0.4, -1.1];
            let h = [0.2, -0.3];
            let got = gru_step(&x, &h, &p).unwrap();
            for (a, b) in got.iter().zip(oracle_step(&x, &h, &p)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let p = GruParams::<f64>::zeros(3, 4);
        assert!(matches!(gru_step(&[1.0], &[0.0; 4], &p), Err(Error::Shape { .. })));
    }

    #[test]
    fn backward_matches_finite_differences() {
        for seed in 0..20 {
            let mut rng = SeededRng::new(1000 + seed);
            let (input, hidden) = (1 + rng.index(4), 1 + rng.index(6));
            let p = random_params(input, hidden, seed);
            let x: Vec<f64> = (0..input).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            let h: Vec<f64> = (0..hidden).map(|_| rng.uniform_range(-0.9, 0.9)).collect();
            let w: Vec<f64> = (0..hidden).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            // loss = w · h'
            let loss = |s: &ParamSet<f64>| {
                let q = GruParams::take_from("gru", &mut s.clone()).unwrap();
                gru_step(&x, &h, &q).unwrap().iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
            };
            let (_, cache) = gru_forward(&x, &h, &p);
            let mut g = GruParams::zeros(input, hidden);
            let (dx, dh) = gru_backward(&w, &cache, &p, &mut g);
            let numeric = finite_diff_grad(loss, &to_set(&p), 1e-5).unwrap();
            let worst = compare_grads(&to_set(&g), &numeric).unwrap();
            assert!(worst.max_relative_error < 1e-4, "seed {seed}: {worst:?}");

            // input and state gradients against central differences too
            let f = |xv: &[f64], hv: &[f64]| {
                gru_step(xv, hv, &p).unwrap().iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
            };
            for i in 0..input {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[i] += 1e-5;
                xm[i] -= 1e-5;
                let n = (f(&xp, &h) - f(&xm, &h)) / 2e-5;
                assert!(crate::gradcheck::relative_error(dx[i], n) < 1e-4);
            }
            for i in 0..hidden {
                let (mut hp, mut hm) = (h.clone(), h.clone());
                hp[i] += 1e-5;
                hm[i] -= 1e-5;
                let n = (f(&x, &hp) - f(&x, &hm)) / 2e-5;
                assert!(crate::gradcheck::relative_error(dh[i], n) < 1e-4);
            }
        }
    }
}
