//! Run configuration: a JSON document with every section optional, plus
//! dotted-path overrides (`cnn.window.future=8`).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::baselines::*;
use crate::convex::{CineConvex, Lambdas, SolverParams};
use crate::error::{Error, Result};
use crate::neuro::{CineCnn, TrainConfig, Weights};
use crate::trajectory::{FilterKind, FilterSession, StreamFilter, WindowConfig};

/// Lambdas given either by preset name or explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Preset(String),
    Values(Lambdas),
}

impl LambdaSpec {
    pub fn resolve(&self) -> Result<Lambdas> {
        match self {
            LambdaSpec::Preset(name) => Lambdas::preset(name),
            LambdaSpec::Values(l) => {
                l.validate()?;
                Ok(*l)
            }
        }
    }
}

impl Default for LambdaSpec {
    fn default() -> Self {
        LambdaSpec::Preset("synthetic".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CnnConfig {
    pub window: WindowConfig,
    /// Overrides the front-end TV weight stored with the weights.
    pub tv_lam: Option<f64>,
    pub weights: Option<PathBuf>,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self {
            window: WindowConfig::CINECNN,
            tv_lam: None,
            weights: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub sg: SgParams,
    pub kalman: KalmanParams,
    pub bilateral: BilateralParams,
    pub meshflow: MeshflowParams,
    pub movavg: MovAvgParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub filter: FilterKind,
    pub lambdas: LambdaSpec,
    /// CineConvex window.
    pub window: WindowConfig,
    pub solver: SolverParams,
    pub cnn: CnnConfig,
    pub baselines: BaselineConfig,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            filter: FilterKind::CineConvex,
            lambdas: LambdaSpec::default(),
            window: WindowConfig::CINECONVEX,
            solver: SolverParams::default(),
            cnn: CnnConfig::default(),
            baselines: BaselineConfig::default(),
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

impl Config {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Config = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.lambdas.resolve()?;
        self.window.validate()?;
        self.solver.validate()?;
        self.cnn.window.validate()?;
        if let Some(l) = self.cnn.tv_lam {
            crate::tv::TvParams::new(l)?;
        }
        let b = &self.baselines;
        b.sg.validate()?;
        b.kalman.validate()?;
        b.bilateral.validate()?;
        b.meshflow.validate()?;
        self.train.validate()
    }

    pub fn lambdas(&self) -> Result<Lambdas> {
        self.lambdas.resolve()
    }

    /// Applies `key=value` overrides. `key` is a dotted path to an existing
    /// field; `value` is parsed as JSON, falling back to a plain string.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        let mut doc = serde_json::to_value(&*self)?;
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("override `{o}` is not key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut doc, key, value)?;
        }
        let c: Config = serde_json::from_value(doc).map_err(|e| Error::Schema(e.to_string()))?;
        c.validate()?;
        *self = c;
        Ok(())
    }

    /// The weights file named in the config, if any.
    pub fn load_weights(&self) -> Result<Option<Arc<Weights>>> {
        match &self.cnn.weights {
            Some(p) => Ok(Some(Arc::new(Weights::load(p)?))),
            None => Ok(None),
        }
    }

    /// A fresh streaming filter of kind `kind`. CineCNN needs `weights`.
    pub fn filter(&self, kind: FilterKind, weights: Option<&Arc<Weights>>) -> Result<Box<dyn StreamFilter>> {
        let b = &self.baselines;
        Ok(match kind {
            FilterKind::CineConvex => Box::new(CineConvex::new(self.window, self.lambdas()?, self.solver)?),
            FilterKind::CineCnn => {
                let w = weights.ok_or_else(|| {
                    Error::MissingWeights("cinecnn needs a weights file (cnn.weights or --weights)".into())
                })?;
                let tv_lam = self.cnn.tv_lam.unwrap_or(w.front_end.tv_lam);
                Box::new(CineCnn::new(Arc::new(w.model.clone()), self.cnn.window, tv_lam)?)
            }
            FilterKind::Sg => Box::new(SavitzkyGolay::new(b.sg)?),
            FilterKind::Kalman => Box::new(Kalman::new(b.kalman)?),
            FilterKind::Bilateral => Box::new(Bilateral::new(b.bilateral)?),
            FilterKind::Meshflow => Box::new(Meshflow::new(b.meshflow)?),
            FilterKind::MovAvg => Box::new(MovAvg::new(b.movavg)?),
        })
    }

    pub fn session(&self, kind: FilterKind, weights: Option<&Arc<Weights>>) -> Result<FilterSession> {
        Ok(FilterSession::new(self.filter(kind, weights)?))
    }
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    let unknown = || Error::InvalidParameter(format!("unknown config key `{key}`"));
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = doc;
    for (i, part) in parts.iter().enumerate() {
        // a preset name becomes its values once a single weight is set
        if let Value::String(name) = cur {
            if i > 0 && parts[i - 1] == "lambdas" {
                *cur = serde_json::to_value(Lambdas::preset(name)?)?;
            }
        }
        let obj = cur.as_object_mut().ok_or_else(unknown)?;
        let slot = obj.get_mut(*part).ok_or_else(unknown)?;
        if i + 1 == parts.len() {
            *slot = value;
            return Ok(());
        }
        cur = slot;
    }
    Err(unknown())
}
