//! Sequence-to-sequence core: the GRU encoder that turns a person's observed offsets into an
//! embedding, and the autoregressive decoder that rolls out future offsets.

pub mod gru;
pub mod linear;

pub use gru::{gru_step, GruCache, GruParams};
pub use linear::Linear;

use crate::data::pose::OffsetSequence;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use gru::{gru_backward, gru_forward};

/// Final encoder state for one person.
#[derive(Clone, Debug, PartialEq)]
pub struct PersonEmbedding<T>(pub Vec<T>);

impl<T> PersonEmbedding<T> {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}

/// Initial decoder state `[h; S; C]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderConditioning<T> {
    pub init_hidden: Vec<T>,
}

impl<T: Scalar> DecoderConditioning<T> {
    pub fn concat(embedding: &[T], social: &[T], context: &[T]) -> Self {
        let mut init_hidden = Vec::with_capacity(embedding.len() + social.len() + context.len());
        init_hidden.extend_from_slice(embedding);
        init_hidden.extend_from_slice(social);
        init_hidden.extend_from_slice(context);
        DecoderConditioning { init_hidden }
    }
}

pub(crate) struct EncodeTrace<T> {
    pub steps: Vec<GruCache<T>>,
}

pub(crate) fn encode_forward<T: Scalar>(inputs: &[Vec<T>], p: &GruParams<T>) -> (Vec<T>, EncodeTrace<T>) {
    let mut h = vec![T::zero(); p.hidden_dim()];
    let mut steps = Vec::with_capacity(inputs.len());
    for x in inputs {
        let (next, cache) = gru_forward(x, &h, p);
        steps.push(cache);
        h = next;
    }
    (h, EncodeTrace { steps })
}

/// Backpropagates the embedding gradient through every encoder step.
pub(crate) fn encode_backward<T: Scalar>(
    d_embedding: &[T],
    trace: &EncodeTrace<T>,
    p: &GruParams<T>,
    grads: &mut GruParams<T>,
) {
    let mut d_h = d_embedding.to_vec();
    for cache in trace.steps.iter().rev() {
        let (_, d_prev) = gru_backward(&d_h, cache, p, grads);
        d_h = d_prev;
    }
}

fn check_width<T: Scalar>(inputs: &[Vec<T>], p: &GruParams<T>, op: &'static str) -> Result<()> {
    if let Some(bad) = inputs.iter().find(|x| x.len() != p.input_dim()) {
        return Err(Error::Shape {
            op,
            left: vec![p.input_dim()],
            right: vec![bad.len()],
        });
    }
    Ok(())
}

/// Folds the GRU over the offsets from a zero state; the last state is the embedding.
pub fn encode_person<T: Scalar>(offsets: &OffsetSequence<T>, p: &GruParams<T>) -> Result<PersonEmbedding<T>> {
    encode_inputs(offsets.deltas(), p)
}

/// [`encode_person`] on raw flattened input vectors.
pub fn encode_inputs<T: Scalar>(inputs: &[Vec<T>], p: &GruParams<T>) -> Result<PersonEmbedding<T>> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("cannot encode an empty offset sequence".into()));
    }
    p.validate()?;
    check_width(inputs, p, "encode_person")?;
    Ok(PersonEmbedding(encode_forward(inputs, p).0))
}

pub(crate) struct DecodeTrace<T> {
    pub steps: Vec<GruCache<T>>,
    pub hiddens: Vec<Vec<T>>,
}

pub(crate) fn decode_forward<T: Scalar>(
    init_hidden: &[T],
    first_input: &[T],
    steps: usize,
    p: &GruParams<T>,
    out: &Linear<T>,
) -> (Vec<Vec<T>>, DecodeTrace<T>) {
    let mut h = init_hidden.to_vec();
    let mut input = first_input.to_vec();
    let mut preds = Vec::with_capacity(steps);
    let mut trace = DecodeTrace {
        steps: Vec::with_capacity(steps),
        hiddens: Vec::with_capacity(steps),
    };
    for _ in 0..steps {
        let (next, cache) = gru_forward(&input, &h, p);
        let y = out.apply(&next);
        trace.steps.push(cache);
        trace.hiddens.push(next.clone());
        h = next;
        input = y.clone();
        preds.push(y);
    }
    (preds, trace)
}

/// Reverse pass through the rollout, including the prediction fed back as the next input.
/// Returns the gradient with respect to the initial hidden state.
pub(crate) fn decode_backward<T: Scalar>(
    d_preds: &[Vec<T>],
    trace: &DecodeTrace<T>,
    p: &GruParams<T>,
    out: &Linear<T>,
    grads: &mut GruParams<T>,
    out_grads: &mut Linear<T>,
) -> Vec<T> {
    let hd = p.hidden_dim();
    let mut d_h_next = vec![T::zero(); hd];
    let mut d_input_next = vec![T::zero(); out.output_dim()];
    for k in (0..trace.steps.len()).rev() {
        let d_y: Vec<T> = d_preds[k]
            .iter()
            .zip(&d_input_next)
            .map(|(&a, &b)| a + b)
            .collect();
        let mut d_h = out.backward(&trace.hiddens[k], &d_y, out_grads);
        for (a, &b) in d_h.iter_mut().zip(&d_h_next) {
            *a += b;
        }
        let (d_x, d_prev) = gru_backward(&d_h, &trace.steps[k], p, grads);
        d_input_next = d_x;
        d_h_next = d_prev;
    }
    d_h_next
}

/// Autoregressive rollout: each step's projected offset becomes the next step's input.
pub fn decode_offsets<T: Scalar>(
    cond: &DecoderConditioning<T>,
    last_observed_offset: &[T],
    steps: usize,
    p: &GruParams<T>,
    out: &Linear<T>,
) -> Result<Vec<Vec<T>>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("decoder needs at least one step".into()));
    }
    p.validate()?;
    out.validate()?;
    if cond.init_hidden.len() != p.hidden_dim() {
        return Err(Error::Shape {
            op: "decode_offsets hidden",
            left: vec![p.hidden_dim()],
            right: vec![cond.init_hidden.len()],
        });
    }
    if out.input_dim() != p.hidden_dim() || out.output_dim() != p.input_dim() {
        return Err(Error::Shape {
            op: "decode_offsets projection",
            left: vec![p.input_dim(), p.hidden_dim()],
            right: out.weight.shape().to_vec(),
        });
    }
    check_width(std::slice::from_ref(&last_observed_offset.to_vec()), p, "decode_offsets input")?;
    Ok(decode_forward(&cond.init_hidden, last_observed_offset, steps, p, out).0)
}
