//! Central finite differences, the oracle every hand-written backward pass is checked against.

use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::scalar::Scalar;

/// Gradient of `loss_fn` at `params` by `(f(θ+h) − f(θ−h)) / 2h` per coordinate.
pub fn finite_diff_grad<T: Scalar>(
    loss_fn: impl Fn(&ParamSet<T>) -> T,
    params: &ParamSet<T>,
    step: T,
) -> Result<ParamSet<T>> {
    let two = T::lit(2.0);
    probe_each(params, step, |probe, name, i| {
        let plus = shifted(&loss_fn, probe, name, i, step)?;
        let minus = shifted(&loss_fn, probe, name, i, -step)?;
        Ok((plus - minus) / (two * step))
    })
}

/// Central differences at `step` and `step/2` combined by Richardson extrapolation,
/// `(4·D(h/2) − D(h)) / 3`. Truncation error drops to O(h⁴), so a coarser step keeps
/// rounding noise well below the smallest gradient entries of a recurrent rollout.
pub fn finite_diff_grad_extrapolated<T: Scalar>(
    loss_fn: impl Fn(&ParamSet<T>) -> T,
    params: &ParamSet<T>,
    step: T,
) -> Result<ParamSet<T>> {
    let two = T::lit(2.0);
    let half = step / two;
    probe_each(params, step, |probe, name, i| {
        let wide = (shifted(&loss_fn, probe, name, i, step)? - shifted(&loss_fn, probe, name, i, -step)?) / (two * step);
        let narrow = (shifted(&loss_fn, probe, name, i, half)? - shifted(&loss_fn, probe, name, i, -half)?) / step;
        Ok((T::lit(4.0) * narrow - wide) / T::lit(3.0))
    })
}

fn shifted<T: Scalar>(
    loss_fn: &impl Fn(&ParamSet<T>) -> T,
    probe: &mut ParamSet<T>,
    name: &str,
    i: usize,
    delta: T,
) -> Result<T> {
    let orig = probe.get(name)?.data()[i];
    probe.get_mut(name)?.data_mut()[i] = orig + delta;
    let value = loss_fn(probe);
    probe.get_mut(name)?.data_mut()[i] = orig;
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("loss while perturbing {name}[{i}]")));
    }
    Ok(value)
}

fn probe_each<T: Scalar>(
    params: &ParamSet<T>,
    step: T,
    mut derivative: impl FnMut(&mut ParamSet<T>, &str, usize) -> Result<T>,
) -> Result<ParamSet<T>> {
    if !(step > T::zero()) {
        return Err(Error::InvalidArgument(format!("finite-difference step {step} must be > 0")));
    }
    let mut probe = params.clone();
    let mut grads = params.zeros_like();
    let names: Vec<String> = params.names().map(str::to_string).collect();
    for name in &names {
        for i in 0..params.get(name)?.len() {
            grads.get_mut(name)?.data_mut()[i] = derivative(&mut probe, name, i)?;
        }
    }
    Ok(grads)
}

/// `|a − b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error<T: Scalar>(a: T, b: T) -> T {
    let denom = a.abs().max(b.abs()).max(T::lit(1e-8));
    (a - b).abs() / denom
}

/// Worst coordinate-wise relative error between two gradient sets.
#[derive(Clone, Debug, PartialEq)]
pub struct GradDiscrepancy<T> {
    pub max_relative_error: T,
    pub parameter: String,
    pub index: usize,
    pub analytic: T,
    pub numeric: T,
}

pub fn compare_grads<T: Scalar>(analytic: &ParamSet<T>, numeric: &ParamSet<T>) -> Result<GradDiscrepancy<T>> {
    analytic.check_compatible(numeric)?;
    let mut worst = GradDiscrepancy {
        max_relative_error: T::zero(),
        parameter: String::new(),
        index: 0,
        analytic: T::zero(),
        numeric: T::zero(),
    };
    for (name, a) in analytic.iter() {
        let n = numeric.get(name)?;
        for (i, (&av, &nv)) in a.data().iter().zip(n.data()).enumerate() {
            let e = relative_error(av, nv);
            if e > worst.max_relative_error || worst.parameter.is_empty() {
                worst = GradDiscrepancy {
                    max_relative_error: e,
                    parameter: name.to_string(),
                    index: i,
                    analytic: av,
                    numeric: nv,
                };
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn single(name: &str, v: Vec<f64>) -> ParamSet<f64> {
        let mut p = ParamSet::new();
        p.insert(name, Tensor::vector(v).unwrap()).unwrap();
        p
    }

    #[test]
    fn square_at_three() {
        let p = single("x", vec![3.0]);
        let g = finite_diff_grad(|q| q.get("x").unwrap().data()[0].powi(2), &p, 1e-5).unwrap();
        assert!((g.get("x").unwrap().data()[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn constant_loss_zero_gradient() {
        let p = single("x", vec![1.0, -2.0]);
        let g = finite_diff_grad(|_| 4.0, &p, 1e-5).unwrap();
        assert!(g.get("x").unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadratic_form_matches_analytic() {
        // f(θ) = θᵀAθ with symmetric A, so ∇f = 2Aθ.
        let a = [[2.0, 0.5], [0.5, -1.0]];
        let theta = [0.7, -1.3];
        let p = single("t", theta.to_vec());
        let f = |q: &ParamSet<f64>| {
            let t = q.get("t").unwrap().data();
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += t[i] * a[i][j] * t[j];
                }
            }
            s
        };
        let g = finite_diff_grad(f, &p, 1e-5).unwrap();
        let analytic = [
            2.0 * (a[0][0] * theta[0] + a[0][1] * theta[1]),
            2.0 * (a[1][0] * theta[0] + a[1][1] * theta[1]),
        ];
        for (n, e) in g.get("t").unwrap().data().iter().zip(analytic) {
            assert!(relative_error(*n, e) < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_step_and_nonfinite_loss() {
        let p = single("x", vec![1.0]);
        assert!(finite_diff_grad(|_| 0.0, &p, 0.0).is_err());
        assert!(finite_diff_grad(|_| f64::NAN, &p, 1e-5).is_err());
    }

    #[test]
    fn extrapolation_cancels_cubic_truncation() {
        // d/dx sin(x) at 0.4 with a coarse step: plain central differences are off by ~h²/6.
        let p = single("x", vec![0.4]);
        let f = |q: &ParamSet<f64>| q.get("x").unwrap().data()[0].sin();
        let plain = finite_diff_grad(f, &p, 1e-2).unwrap().get("x").unwrap().data()[0];
        let rich = finite_diff_grad_extrapolated(f, &p, 1e-2).unwrap().get("x").unwrap().data()[0];
        let exact = 0.4f64.cos();
        assert!((plain - exact).abs() > 1e-6);
        assert!((rich - exact).abs() < 1e-10);
        assert!(finite_diff_grad_extrapolated(f, &p, -1.0).is_err());
    }
}
