//! Symmetric pooling of person embeddings into one shared social feature.
//!
//! Callers pass embeddings already sorted by person id. With that fixed order the
//! sum and mean are bit-identical under any permutation of the input scene, and
//! max-pool ties resolve to the smallest id.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PoolingStrategy {
    #[default]
    Max,
    Sum,
    Average,
}

impl PoolingStrategy {
    pub const ALL: [PoolingStrategy; 3] = [PoolingStrategy::Max, PoolingStrategy::Sum, PoolingStrategy::Average];

    pub fn name(self) -> &'static str {
        match self {
            PoolingStrategy::Max => "max",
            PoolingStrategy::Sum => "sum",
            PoolingStrategy::Average => "average",
        }
    }
}

impl fmt::Display for PoolingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PoolingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(PoolingStrategy::Max),
            "sum" => Ok(PoolingStrategy::Sum),
            "average" | "avg" | "mean" => Ok(PoolingStrategy::Average),
            other => Err(Error::InvalidArgument(format!("unknown pooling strategy {other:?}"))),
        }
    }
}

/// The pooled social feature `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct SocialFeature<T>(pub Vec<T>);

fn check<T: Scalar, E: AsRef<[T]>>(embeddings: &[E]) -> Result<usize> {
    let first = embeddings
        .first()
        .ok_or_else(|| Error::InvalidArgument("social pooling over an empty set".into()))?;
    let dim = first.as_ref().len();
    if let Some(bad) = embeddings.iter().find(|e| e.as_ref().len() != dim) {
        return Err(Error::Shape {
            op: "social_pool",
            left: vec![dim],
            right: vec![bad.as_ref().len()],
        });
    }
    Ok(dim)
}

/// Elementwise max / sum / mean across embeddings, reduced in the given order.
pub fn social_pool<T: Scalar, E: AsRef<[T]>>(embeddings: &[E], strategy: PoolingStrategy) -> Result<SocialFeature<T>> {
    let dim = check(embeddings)?;
    let mut out = embeddings[0].as_ref().to_vec();
    for e in &embeddings[1..] {
        for (o, &v) in out.iter_mut().zip(e.as_ref()) {
            match strategy {
                PoolingStrategy::Max => {
                    if v > *o {
                        *o = v
                    }
                }
                PoolingStrategy::Sum | PoolingStrategy::Average => *o += v,
            }
        }
    }
    if strategy == PoolingStrategy::Average {
        let n = T::from_usize_exact(embeddings.len());
        out.iter_mut().for_each(|v| *v /= n);
    }
    debug_assert_eq!(out.len(), dim);
    Ok(SocialFeature(out))
}

/// Pools `(person_id, embedding)` pairs after sorting them by id.
pub fn social_pool_by_id<T: Scalar>(members: &[(&str, &[T])], strategy: PoolingStrategy) -> Result<SocialFeature<T>> {
    let mut sorted: Vec<&(&str, &[T])> = members.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(b.0));
    let embs: Vec<&[T]> = sorted.iter().map(|m| m.1).collect();
    social_pool(&embs, strategy)
}

/// Gradient of the pooled feature with respect to each embedding.
/// Max routes to the first (smallest-id) argmax; sum copies; mean copies scaled by 1/N.
pub fn social_pool_backward<T: Scalar, E: AsRef<[T]>>(
    embeddings: &[E],
    strategy: PoolingStrategy,
    d_social: &[T],
) -> Result<Vec<Vec<T>>> {
    let dim = check(embeddings)?;
    if d_social.len() != dim {
        return Err(Error::Shape {
            op: "social_pool_backward",
            left: vec![dim],
            right: vec![d_social.len()],
        });
    }
    let n = embeddings.len();
    let mut grads = vec![vec![T::zero(); dim]; n];
    match strategy {
        PoolingStrategy::Max => {
            for k in 0..dim {
                let mut best = 0;
                for j in 1..n {
                    if embeddings[j].as_ref()[k] > embeddings[best].as_ref()[k] {
                        best = j;
                    }
                }
                grads[best][k] = d_social[k];
            }
        }
        PoolingStrategy::Sum => grads.iter_mut().for_each(|g| g.copy_from_slice(d_social)),
        PoolingStrategy::Average => {
            let scale = T::from_usize_exact(n);
            for g in &mut grads {
                for (gv, &d) in g.iter_mut().zip(d_social) {
                    *gv = d / scale;
                }
            }
        }
    }
    Ok(grads)
}
