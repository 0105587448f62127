//! Scene-context branch: raw descriptor providers and the two-layer projection MLP.
//!
//! The MLP is `linear → tanh → dropout → linear`. Dropout is inverted (kept units
//! are scaled by `1/(1−p)` during training) so evaluation needs no rescaling.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::data::scene::Scene;
use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::rng::SeededRng;
use crate::scalar::Scalar;
use crate::seq2seq::Linear;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Raw descriptor and its projection `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextFeature<T> {
    pub raw: Vec<T>,
    pub value: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContextMlp<T> {
    pub hidden: Linear<T>,
    pub output: Linear<T>,
}

pub(crate) struct MlpTrace<T> {
    raw: Vec<T>,
    activation: Vec<T>,
    mask: Option<Vec<T>>,
    dropped: Vec<T>,
}

pub fn check_dropout(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("dropout probability {p} must be in [0, 1)")));
    }
    Ok(())
}

/// Inverted-dropout mask: each unit kept (value `1/(1−p)`) when its uniform draw is `>= p`.
pub fn dropout_mask<T: Scalar>(len: usize, p: f64, rng: &mut SeededRng) -> Vec<T> {
    let keep = T::lit(1.0 / (1.0 - p));
    (0..len)
        .map(|_| if rng.uniform() >= p { keep } else { T::zero() })
        .collect()
}

impl<T: Scalar> ContextMlp<T> {
    pub fn zeros(raw_dim: usize, hidden_dim: usize, out_dim: usize) -> Self {
        ContextMlp {
            hidden: Linear::zeros(raw_dim, hidden_dim),
            output: Linear::zeros(hidden_dim, out_dim),
        }
    }

    pub fn init(raw_dim: usize, hidden_dim: usize, out_dim: usize, rng: &mut SeededRng) -> Self {
        ContextMlp {
            hidden: Linear::init(raw_dim, hidden_dim, rng),
            output: Linear::init(hidden_dim, out_dim, rng),
        }
    }

    pub fn raw_dim(&self) -> usize {
        self.hidden.input_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.output.output_dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.hidden.validate()?;
        self.output.validate()?;
        if self.output.input_dim() != self.hidden.output_dim() {
            return Err(Error::Shape {
                op: "context mlp",
                left: self.hidden.weight.shape().to_vec(),
                right: self.output.weight.shape().to_vec(),
            });
        }
        Ok(())
    }

    pub(crate) fn forward_masked(&self, raw: &[T], mask: Option<Vec<T>>) -> (Vec<T>, MlpTrace<T>) {
        let activation: Vec<T> = self.hidden.apply(raw).into_iter().map(|v| v.tanh()).collect();
        let dropped: Vec<T> = match &mask {
            Some(m) => activation.iter().zip(m).map(|(&a, &k)| a * k).collect(),
            None => activation.clone(),
        };
        let out = self.output.apply(&dropped);
        (
            out,
            MlpTrace {
                raw: raw.to_vec(),
                activation,
                mask,
                dropped,
            },
        )
    }

    pub(crate) fn backward(&self, d_out: &[T], trace: &MlpTrace<T>, grads: &mut ContextMlp<T>) {
        let d_dropped = self.output.backward(&trace.dropped, d_out, &mut grads.output);
        let d_pre: Vec<T> = d_dropped
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let d = match &trace.mask {
                    Some(m) => d * m[i],
                    None => d,
                };
                let a = trace.activation[i];
                d * (T::one() - a * a)
            })
            .collect();
        self.hidden.backward(&trace.raw, &d_pre, &mut grads.hidden);
    }

    /// Projects a raw descriptor. Training mode draws a dropout mask from `rng`.
    pub fn forward(&self, raw: &[T], mode: Mode, dropout_p: f64, rng: &mut SeededRng) -> Result<ContextFeature<T>> {
        check_dropout(dropout_p)?;
        self.validate()?;
        if raw.len() != self.raw_dim() {
            return Err(Error::Shape {
                op: "context_mlp_forward",
                left: vec![self.raw_dim()],
                right: vec![raw.len()],
            });
        }
        let mask = match mode {
            Mode::Train => Some(dropout_mask(self.hidden.output_dim(), dropout_p, rng)),
            Mode::Eval => None,
        };
        let (value, _) = self.forward_masked(raw, mask);
        Ok(ContextFeature {
            raw: raw.to_vec(),
            value,
        })
    }

    pub fn insert_into(self, prefix: &str, set: &mut ParamSet<T>) -> Result<()> {
        self.hidden.insert_into(&format!("{prefix}.hidden"), set)?;
        self.output.insert_into(&format!("{prefix}.output"), set)
    }

    pub fn take_from(prefix: &str, set: &mut ParamSet<T>) -> Result<Self> {
        let m = ContextMlp {
            hidden: Linear::take_from(&format!("{prefix}.hidden"), set)?,
            output: Linear::take_from(&format!("{prefix}.output"), set)?,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn accumulate(&mut self, other: &Self) -> Result<()> {
        self.hidden.accumulate(&other.hidden)?;
        self.output.accumulate(&other.output)
    }
}

/// Free-function form of [`ContextMlp::forward`].
pub fn context_mlp_forward<T: Scalar>(
    raw: &[T],
    params: &ContextMlp<T>,
    mode: Mode,
    dropout_p: f64,
    rng: &mut SeededRng,
) -> Result<ContextFeature<T>> {
    params.forward(raw, mode, dropout_p, rng)
}

/// Where a scene's raw context descriptor comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum ContextProvider<T> {
    /// Zero vector for every scene; the branch then contributes only its bias response.
    Zero { dim: usize },
    /// Precomputed per-scene vectors loaded from a feature file.
    Table { dim: usize, features: BTreeMap<String, Vec<T>> },
    /// Mean of the scene's own `context_raw` over the observed frames.
    SceneMean { dim: usize },
}

pub fn zero_context_provider<T>(dim: usize) -> ContextProvider<T> {
    ContextProvider::Zero { dim }
}

impl<T: Scalar> ContextProvider<T> {
    pub fn dim(&self) -> usize {
        match self {
            ContextProvider::Zero { dim } | ContextProvider::Table { dim, .. } | ContextProvider::SceneMean { dim } => {
                *dim
            }
        }
    }

    /// Raw descriptor for `scene`, using only its first `observed` frames.
    pub fn raw_features(&self, scene: &Scene<T>, observed: usize) -> Result<Vec<T>> {
        match self {
            ContextProvider::Zero { dim } => Ok(vec![T::zero(); *dim]),
            ContextProvider::Table { features, .. } => features
                .get(scene.id())
                .cloned()
                .ok_or_else(|| Error::UnknownScene(scene.id().to_string())),
            ContextProvider::SceneMean { dim } => {
                let ctx = scene.context_raw().ok_or_else(|| {
                    Error::InvalidArgument(format!("scene {} has no context_raw sequence", scene.id()))
                })?;
                if ctx[0].len() != *dim {
                    return Err(Error::Shape {
                        op: "scene context",
                        left: vec![*dim],
                        right: vec![ctx[0].len()],
                    });
                }
                let frames = observed.min(ctx.len()).max(1);
                let mut mean = vec![T::zero(); *dim];
                for row in &ctx[..frames] {
                    for (m, &v) in mean.iter_mut().zip(row) {
                        *m += v;
                    }
                }
                let n = T::from_usize_exact(frames);
                mean.iter_mut().for_each(|m| *m /= n);
                Ok(mean)
            }
        }
    }

    /// Parses a provider spec: `zero`, `scene`, or a feature-file path.
    pub fn from_spec(spec: &str, dim: usize) -> Result<Self> {
        match spec {
            "zero" => Ok(ContextProvider::Zero { dim }),
            "scene" => Ok(ContextProvider::SceneMean { dim }),
            path => {
                let p = load_context_features(path)?;
                if p.dim() != dim {
                    return Err(Error::Config(format!(
                        "context file {path} has dimension {}, model expects {dim}",
                        p.dim()
                    )));
                }
                Ok(p)
            }
        }
    }
}

/// Parses a feature document `{"scene_id": [f, ...], ...}`.
pub fn parse_context_features<T: Scalar>(bytes: &[u8]) -> Result<ContextProvider<T>> {
    let raw: BTreeMap<String, Vec<f64>> =
        serde_json::from_slice(bytes).map_err(|e| Error::parse("$", e.to_string()))?;
    let dim = raw.values().next().map_or(0, Vec::len);
    if dim == 0 {
        return Err(Error::parse("$", "feature file has no non-empty vectors"));
    }
    let mut features = BTreeMap::new();
    for (id, v) in raw {
        if v.len() != dim {
            return Err(Error::parse(format!("$.{id}"), format!("dimension {}, expected {dim}", v.len())));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::parse(format!("$.{id}"), "non-finite value"));
        }
        features.insert(id, v.into_iter().map(T::lit).collect());
    }
    Ok(ContextProvider::Table { dim, features })
}

pub fn load_context_features<T: Scalar>(path: impl AsRef<Path>) -> Result<ContextProvider<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_context_features(&bytes)
}

pub fn serialize_context_features<T: Scalar>(features: &BTreeMap<String, Vec<T>>) -> Vec<u8> {
    let mut s = String::from("{\n");
    for (i, (id, v)) in features.iter().enumerate() {
        let nums: Vec<String> = v
            .iter()
            .map(|x| serde_json::to_string(&x.as_f64()).expect("finite"))
            .collect();
        let sep = if i + 1 < features.len() { "," } else { "" };
        let _ = writeln!(
            s,
            "  {}: [{}]{sep}",
            serde_json::to_string(id).expect("string"),
            nums.join(", ")
        );
    }
    s.push_str("}\n");
    s.into_bytes()
}

pub fn write_context_features<T: Scalar>(path: impl AsRef<Path>, features: &BTreeMap<String, Vec<T>>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_context_features(features)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{compare_grads, finite_diff_grad};

    fn random_mlp(seed: u64, f: usize, h: usize, o: usize) -> ContextMlp<f64> {
        let mut rng = SeededRng::new(seed);
        let mut m = ContextMlp::init(f, h, o, &mut rng);
        for b in [&mut m.hidden.bias, &mut m.output.bias] {
            b.data_mut().iter_mut().for_each(|v| *v = rng.uniform_range(-0.5, 0.5));
        }
        m
    }

    #[test]
    fn zero_weights_zero_output() {
        let m = ContextMlp::<f64>::zeros(4, 4, 2);
        let mut rng = SeededRng::new(0);
        for mode in [Mode::Train, Mode::Eval] {
            let c = m.forward(&[1.0, 2.0, 3.0, 4.0], mode, 0.7, &mut rng).unwrap();
            assert_eq!(c.value, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn eval_mode_is_deterministic() {
        let m = random_mlp(1, 5, 5, 3);
        let raw = [0.1, 0.2, -0.3, 0.4, 0.5];
        let a = m.forward(&raw, Mode::Eval, 0.7, &mut SeededRng::new(1)).unwrap();
        let b = m.forward(&raw, Mode::Eval, 0.7, &mut SeededRng::new(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn train_mode_matches_seeded_mask_oracle() {
        let (f, h, o, p) = (3, 4, 2, 0.5);
        let m = random_mlp(3, f, h, o);
        let raw = [0.7, -0.2, 0.4];
        let got = m.forward(&raw, Mode::Train, p, &mut SeededRng::new(77)).unwrap();

        // independent replay: same draws, hand-rolled layers
        let mut rng = SeededRng::new(77);
        let keep: Vec<f64> = (0..h).map(|_| if rng.uniform() >= p { 2.0 } else { 0.0 }).collect();
        let w1 = m.hidden.weight.data();
        let w2 = m.output.weight.data();
        let mut hidden = vec![0.0; h];
        for i in 0..h {
            let mut a = m.hidden.bias.data()[i];
            for j in 0..f {
                a += w1[i * f + j] * raw[j];
            }
            hidden[i] = a.tanh() * keep[i];
        }
        for k in 0..o {
            let mut y = m.output.bias.data()[k];
            for i in 0..h {
                y += w2[k * h + i] * hidden[i];
            }
            assert!((got.value[k] - y).abs() < 1e-14);
        }
    }

    #[test]
    fn dropout_probability_checked() {
        let m = ContextMlp::<f64>::zeros(2, 2, 2);
        let mut rng = SeededRng::new(0);
        assert!(m.forward(&[0.0, 0.0], Mode::Train, 1.0, &mut rng).is_err());
        assert!(m.forward(&[0.0, 0.0], Mode::Eval, -0.1, &mut rng).is_err());
    }

    #[test]
    fn backward_matches_finite_differences_with_fixed_mask() {
        for seed in 0..20 {
            let mut rng = SeededRng::new(seed);
            let (f, h, o) = (1 + rng.index(8), 1 + rng.index(8), 1 + rng.index(8));
            let m = random_mlp(seed, f, h, o);
            let raw: Vec<f64> = (0..f).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            let mask: Vec<f64> = dropout_mask(h, 0.3, &mut rng);
            let w: Vec<f64> = (0..o).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            let loss = |s: &ParamSet<f64>| {
                let m = ContextMlp::take_from("ctx", &mut s.clone()).unwrap();
                let (y, _) = m.forward_masked(&raw, Some(mask.clone()));
                y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
            };
            let (_, trace) = m.forward_masked(&raw, Some(mask.clone()));
            let mut g = ContextMlp::zeros(f, h, o);
            m.backward(&w, &trace, &mut g);
            let mut set = ParamSet::new();
            m.clone().insert_into("ctx", &mut set).unwrap();
            let mut gset = ParamSet::new();
            g.insert_into("ctx", &mut gset).unwrap();
            let worst = compare_grads(&gset, &finite_diff_grad(loss, &set, 1e-5).unwrap()).unwrap();
            assert!(worst.max_relative_error < 1e-4, "{worst:?}");
        }
    }

    #[test]
    fn zero_provider_gives_bias_determined_constant() {
        let m = random_mlp(4, 3, 3, 2);
        let provider = zero_context_provider::<f64>(3);
        let scene = crate::data::generate_synthetic::<f64>(&crate::data::SyntheticConfig::new(crate::data::Scenario::Approach), 0).unwrap();
        let raw = provider.raw_features(&scene, 5).unwrap();
        let c = m.forward(&raw, Mode::Eval, 0.7, &mut SeededRng::new(0)).unwrap();
        let expected = m.forward(&[0.0; 3], Mode::Eval, 0.7, &mut SeededRng::new(0)).unwrap();
        assert_eq!(c.value, expected.value);
    }

    #[test]
    fn feature_file_lookup_and_round_trip() {
        let text = br#"{"b": [3.0, 4.0], "a": [1.0, 2.5]}"#;
        let p: ContextProvider<f64> = parse_context_features(text).unwrap();
        let ContextProvider::Table { features, dim } = &p else { panic!() };
        assert_eq!(*dim, 2);
        assert_eq!(features["a"], vec![1.0, 2.5]);
        assert_eq!(features["b"], vec![3.0, 4.0]);
        let again: ContextProvider<f64> = parse_context_features(&serialize_context_features(features)).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn feature_file_errors() {
        assert!(parse_context_features::<f64>(br#"{"a": [1.0], "b": [1.0, 2.0]}"#).is_err());
        let p: ContextProvider<f64> = parse_context_features(br#"{"a": [1.0]}"#).unwrap();
        let scene = crate::data::generate_synthetic::<f64>(&crate::data::SyntheticConfig::new(crate::data::Scenario::Approach), 0).unwrap();
        assert!(matches!(p.raw_features(&scene, 3), Err(Error::UnknownScene(_))));
    }

    #[test]
    fn scene_mean_uses_observed_frames_only() {
        let cfg = crate::data::SyntheticConfig {
            context_dim: Some(2),
            ..crate::data::SyntheticConfig::new(crate::data::Scenario::Approach)
        };
        let scene = crate::data::generate_synthetic::<f64>(&cfg, 1).unwrap();
        let p = ContextProvider::SceneMean { dim: 2 };
        let ctx = scene.context_raw().unwrap();
        let m = p.raw_features(&scene, 3).unwrap();
        for k in 0..2 {
            let expected = (ctx[0][k] + ctx[1][k] + ctx[2][k]) / 3.0;
            assert!((m[k] - expected).abs() < 1e-15);
        }
    }
}
