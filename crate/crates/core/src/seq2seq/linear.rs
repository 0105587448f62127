use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::rng::{uniform_init, SeededRng};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Affine map `y = W x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn zeros(input: usize, output: usize) -> Self {
        Linear {
            weight: Tensor::zeros(&[output, input]),
            bias: Tensor::zeros(&[output]),
        }
    }

    pub fn init(input: usize, output: usize, rng: &mut SeededRng) -> Self {
        Linear {
            weight: uniform_init(&[output, input], input, rng),
            bias: Tensor::zeros(&[output]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.weight.rank() != 2 || self.bias.rank() != 1 || self.weight.rows() != self.bias.len() {
            return Err(Error::Shape {
                op: "linear",
                left: self.weight.shape().to_vec(),
                right: self.bias.shape().to_vec(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape {
                op: "linear",
                left: self.weight.shape().to_vec(),
                right: vec![x.len()],
            });
        }
        Ok(self.apply(x))
    }

    pub(crate) fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = self.bias.data().to_vec();
        self.weight.matvec_acc(x, &mut y);
        y
    }

    /// Accumulates parameter gradients for input `x` and output gradient `d_y`; returns `d_x`.
    pub(crate) fn backward(&self, x: &[T], d_y: &[T], grads: &mut Linear<T>) -> Vec<T> {
        grads.weight.outer_acc(d_y, x);
        for (g, &d) in grads.bias.data_mut().iter_mut().zip(d_y) {
            *g += d;
        }
        let mut d_x = vec![T::zero(); x.len()];
        self.weight.matvec_t_acc(d_y, &mut d_x);
        d_x
    }

    pub fn insert_into(self, prefix: &str, set: &mut ParamSet<T>) -> Result<()> {
        set.insert(format!("{prefix}.weight"), self.weight)?;
        set.insert(format!("{prefix}.bias"), self.bias)
    }

    pub fn take_from(prefix: &str, set: &mut ParamSet<T>) -> Result<Self> {
        let l = Linear {
            weight: set.take(&format!("{prefix}.weight"))?,
            bias: set.take(&format!("{prefix}.bias"))?,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn accumulate(&mut self, other: &Self) -> Result<()> {
        self.weight.add_assign(&other.weight)?;
        self.bias.add_assign(&other.bias)
    }
}
