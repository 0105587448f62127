//! Deterministic train/validation/test assignment and the manifest file format.
//!
//! Manifest lines are `<scene_id> <split>` with split one of `train`, `val`,
//! `test`; blank lines and `#` comments are ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    /// 60% train, the rest halved between validation and test.
    fn default() -> Self {
        SplitSpec {
            train: 0.6,
            validation: 0.2,
            test: 0.2,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::InvalidArgument(format!("split fractions {parts:?} must be positive")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("split fractions {parts:?} must sum to 1")));
        }
        Ok(())
    }

    /// Shuffles the sorted ids with the seed, then cuts rounded train and validation counts.
    pub fn assign<S: AsRef<str>>(&self, ids: &[S]) -> Result<SplitManifest> {
        self.validate()?;
        let mut sorted: Vec<String> = ids.iter().map(|s| s.as_ref().to_string()).collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate scene ids in split".into()));
        }
        SeededRng::new(self.seed).shuffle(&mut sorted);
        let n = sorted.len();
        let n_train = ((self.train * n as f64).round() as usize).min(n);
        let n_val = ((self.validation * n as f64).round() as usize).min(n - n_train);
        let mut assignment = BTreeMap::new();
        for (i, id) in sorted.into_iter().enumerate() {
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_val {
                Split::Validation
            } else {
                Split::Test
            };
            assignment.insert(id, split);
        }
        Ok(SplitManifest { assignment })
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SplitManifest {
    assignment: BTreeMap<String, Split>,
}

impl SplitManifest {
    pub fn get(&self, scene_id: &str) -> Option<Split> {
        self.assignment.get(scene_id).copied()
    }

    pub fn ids(&self, split: Split) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, s)| **s == split)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Split)> {
        self.assignment.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut assignment = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(id), Some(split), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(format!("manifest line {}", n + 1), "expected `<scene_id> <split>`"));
            };
            let split = split
                .parse()
                .map_err(|e: Error| Error::parse(format!("manifest line {}", n + 1), e.to_string()))?;
            if assignment.insert(id.to_string(), split).is_some() {
                return Err(Error::parse(format!("manifest line {}", n + 1), format!("scene {id:?} listed twice")));
            }
        }
        Ok(SplitManifest { assignment })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# scene_id split\n");
        for (id, split) in &self.assignment {
            out.push_str(id);
            out.push(' ');
            out.push_str(split.as_str());
            out.push('\n');
        }
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
