use std::fs;
use std::path::Path;

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliResult};

pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text =
        fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        usage(format!("config {}: at `{at}`: {}", path.display(), e.inner()))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Zeros,
    Random,
    Critical,
}

/// Initial history, oldest first: explicit values or one of the named choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitSpec {
    Values(Vec<f64>),
    Named(InitKind),
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Named(InitKind::Zeros)
    }
}

impl InitSpec {
    pub fn resolve<R: Rng>(&self, len: usize, k: Option<usize>, rng: &mut R) -> CliResult<Vec<f64>> {
        match self {
            InitSpec::Values(v) if v.len() == len => Ok(v.clone()),
            InitSpec::Values(v) => Err(usage(format!(
                "init has {} values, filter length is {len}",
                v.len()
            ))),
            InitSpec::Named(InitKind::Zeros) => Ok(vec![0.0; len]),
            InitSpec::Named(InitKind::Random) => Ok((0..len).map(|_| rng.random_range(-1.0..=1.0)).collect()),
            InitSpec::Named(InitKind::Critical) => match k {
                Some(k) => Ok(sigdelta::trajectory::critical_trigger(k)?),
                None => Err(usage("the critical init needs a minimal filter")),
            },
        }
    }
}
