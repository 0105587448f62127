//! Versioned binary checkpoint.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes  "SPFCKPT\0"
//! version    u32
//! config     u64 byte length, then UTF-8 TOML
//! history    u32 count, then per epoch: u32 epoch, f64 train, f64 val, f64 lr
//! best       u32 epoch
//! params     u32 count, then per tensor:
//!            u32 name length, name, u32 rank, rank × u64 dims, f64 payload
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::forecast::Forecaster;
use crate::model::params::ModelParams;
use crate::model::train::EpochRecord;
use crate::params::ParamSet;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"SPFCKPT\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub config: ModelConfig,
    pub params: ParamSet<T>,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch whose parameters are stored; 0 for an untrained model.
    pub best_epoch: usize,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn new(config: ModelConfig, params: ParamSet<T>, history: Vec<EpochRecord>, best_epoch: usize) -> Result<Self> {
        config.validate()?;
        ModelParams::from_param_set(&params, &config)?;
        if best_epoch > history.len() {
            return Err(Error::Checkpoint(format!(
                "best epoch {best_epoch} beyond a {}-epoch history",
                history.len()
            )));
        }
        Ok(Checkpoint {
            config,
            params,
            history,
            best_epoch,
        })
    }

    pub fn from_forecaster(f: &Forecaster<T>) -> Result<Self> {
        Checkpoint::new(f.config.clone(), f.params.clone().into_param_set(), Vec::new(), 0)
    }

    pub fn forecaster(&self) -> Result<Forecaster<T>> {
        Forecaster::new(self.config.clone(), ModelParams::from_param_set(&self.params, &self.config)?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let cfg = self.config.to_toml();
        out.extend_from_slice(&(cfg.len() as u64).to_le_bytes());
        out.extend_from_slice(cfg.as_bytes());
        out.extend_from_slice(&(self.history.len() as u32).to_le_bytes());
        for r in &self.history {
            out.extend_from_slice(&(r.epoch as u32).to_le_bytes());
            for v in [r.train_loss, r.val_loss, r.lr] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(&(self.best_epoch as u32).to_le_bytes());
        out.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        for (name, t) in self.params.iter() {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.as_f64().to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len(), "magic")? != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
        }
        let version = r.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {version} (this build reads version {FORMAT_VERSION})"
            )));
        }
        let cfg_len = r.u64("config length")? as usize;
        let cfg_text = std::str::from_utf8(r.take(cfg_len, "config")?)
            .map_err(|e| Error::Checkpoint(format!("config block is not UTF-8: {e}")))?;
        let config = ModelConfig::from_toml(cfg_text)
            .map_err(|e| Error::Checkpoint(format!("config block: {e}")))?;

        let n_hist = r.u32("history count")? as usize;
        let mut history = Vec::with_capacity(n_hist.min(1 << 16));
        for _ in 0..n_hist {
            history.push(EpochRecord {
                epoch: r.u32("history epoch")? as usize,
                train_loss: r.f64("history")?,
                val_loss: r.f64("history")?,
                lr: r.f64("history")?,
            });
        }
        let best_epoch = r.u32("best epoch")? as usize;

        let n_params = r.u32("parameter count")? as usize;
        let mut params = ParamSet::new();
        for _ in 0..n_params {
            let name_len = r.u32("parameter name length")? as usize;
            let name = std::str::from_utf8(r.take(name_len, "parameter name")?)
                .map_err(|e| Error::Checkpoint(format!("parameter name is not UTF-8: {e}")))?
                .to_string();
            let rank = r.u32("rank")? as usize;
            let mut shape = Vec::with_capacity(rank.min(8));
            for _ in 0..rank {
                shape.push(r.u64("shape")? as usize);
            }
            let count = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .ok_or_else(|| Error::Checkpoint(format!("parameter {name}: shape overflows")))?;
            let raw = r.take(count.checked_mul(8).unwrap_or(usize::MAX), &name)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
                .collect();
            let t = Tensor::new(shape, data).map_err(|e| Error::Checkpoint(format!("parameter {name}: {e}")))?;
            params
                .insert(&name, t)
                .map_err(|e| Error::Checkpoint(e.to_string()))?;
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes after the last parameter",
                bytes.len() - r.pos
            )));
        }
        ModelParams::from_param_set(&params, &config).map_err(|e| Error::Checkpoint(e.to_string()))?;
        Checkpoint::new(config, params, history, best_epoch)
    }

    /// Writes via a temporary sibling file so a failed write leaves no partial checkpoint.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".partial");
        let tmp = std::path::PathBuf::from(tmp);
        std::fs::write(&tmp, self.to_bytes()).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_bytes(&bytes)
    }
}

pub fn save_checkpoint<T: Scalar>(c: &Checkpoint<T>, path: impl AsRef<Path>) -> Result<()> {
    c.save(path)
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<Checkpoint<T>> {
    Checkpoint::load(path)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Checkpoint(format!(
                "truncated file: {what} needs {n} bytes at offset {}, {} available",
                self.pos,
                self.bytes.len() - self.pos
            ))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::Variant;
    use crate::rng::SeededRng;

    fn sample() -> Checkpoint<f64> {
        let config = ModelConfig {
            joints: 3,
            dims: 2,
            hidden: 3,
            context_dim: 2,
            context_raw_dim: 4,
            variant: Variant::JointSocialContext,
            ..ModelConfig::default()
        };
        let params = ModelParams::init(&config, &mut SeededRng::new(8)).into_param_set();
        let history = vec![
            EpochRecord { epoch: 1, train_loss: 0.5, val_loss: 0.25, lr: 5e-4 },
            EpochRecord { epoch: 2, train_loss: 0.4, val_loss: 0.3, lr: 4.75e-4 },
        ];
        Checkpoint::new(config, params, history, 1).unwrap()
    }

    #[test]
    fn bytes_round_trip_exactly() {
        let c = sample();
        let bytes = c.to_bytes();
        assert_eq!(&bytes[..8], MAGIC);
        let back = Checkpoint::<f64>::from_bytes(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn every_truncation_is_rejected() {
        let bytes = sample().to_bytes();
        for len in 0..bytes.len() {
            assert!(Checkpoint::<f64>::from_bytes(&bytes[..len]).is_err(), "prefix {len}");
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(Checkpoint::<f64>::from_bytes(&long).unwrap_err().to_string().contains("trailing"));
    }

    #[test]
    fn version_checked() {
        let mut bytes = sample().to_bytes();
        bytes[8] = 2;
        assert!(Checkpoint::<f64>::from_bytes(&bytes).unwrap_err().to_string().contains("version 2"));
    }

    #[test]
    fn parameter_names_checked_against_config() {
        let c = sample();
        let mut bytes = c.to_bytes();
        // first parameter in canonical order is context.hidden.bias; corrupt its name
        let needle = b"context.hidden.bias";
        let at = bytes.windows(needle.len()).position(|w| w == needle).unwrap();
        bytes[at] = b'k';
        let err = Checkpoint::<f64>::from_bytes(&bytes).unwrap_err().to_string();
        assert!(err.contains("context.hidden.bias"), "{err}");
    }
}
