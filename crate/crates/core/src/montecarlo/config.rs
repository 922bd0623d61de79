use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{classify_case, law_for_case, AsymptoticLaw, CaseLabel, ScalingSpec};
use crate::error::{Error, Result};
use crate::model::{BdiParams, SirsParams, SirsState};
use crate::ssa::DEFAULT_EVENT_CAP;
use crate::tau::TauConfig;

pub const DEFAULT_REPLICATIONS: u32 = 700;

/// The chain whose extinction time is sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// SIRS with parameters and initial state given as functions of N.
    Sirs { scaling: ScalingSpec },
    /// SIRS with the same rates and initial state for every N.
    SirsFixed { lambda: f64, gamma: f64, i0: u64, r0: u64 },
    /// Linear birth-death(-immigration) chain; N only labels the runs.
    Bdp {
        beta: f64,
        mu: f64,
        #[serde(default)]
        alpha: f64,
        l0: u64,
    },
}

/// A model instantiated at one population size.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelInstance {
    Sirs { params: SirsParams, state: SirsState },
    Bdp { params: BdiParams, l0: u64 },
}

impl ModelSpec {
    pub fn instantiate(&self, n: u64) -> Result<ModelInstance> {
        match self {
            Self::Sirs { scaling } => {
                let (params, state) = scaling.instantiate(n)?;
                Ok(ModelInstance::Sirs { params, state })
            }
            Self::SirsFixed { lambda, gamma, i0, r0 } => {
                let params = SirsParams::new(n, *lambda, *gamma)?;
                let state = SirsState::new(&params, *i0, *r0)?;
                Ok(ModelInstance::Sirs { params, state })
            }
            Self::Bdp { beta, mu, alpha, l0 } => Ok(ModelInstance::Bdp {
                params: BdiParams::new(*beta, *mu, *alpha, false)?,
                l0: *l0,
            }),
        }
    }

    pub fn scaling(&self) -> Option<&ScalingSpec> {
        match self {
            Self::Sirs { scaling } => Some(scaling),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Ssa,
    Tau,
}

impl EngineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ssa => "ssa",
            Self::Tau => "tau",
        }
    }
}

impl std::str::FromStr for EngineKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ssa" => Ok(Self::Ssa),
            "tau" => Ok(Self::Tau),
            other => Err(Error::Config(format!("engine: unknown kind {other:?} (expected ssa or tau)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSpec {
    pub kind: EngineKind,
    /// With `kind = "ssa"`, switch to τ-leaping for populations above this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_above: Option<u64>,
    #[serde(default)]
    pub tau: TauConfig,
}

impl Default for EngineSpec {
    fn default() -> Self {
        Self {
            kind: EngineKind::Ssa,
            tau_above: None,
            tau: TauConfig::default(),
        }
    }
}

impl EngineSpec {
    /// Engine used at population `n`.
    pub fn kind_for(&self, n: u64) -> EngineKind {
        match (self.kind, self.tau_above) {
            (EngineKind::Ssa, Some(m)) if n > m => EngineKind::Tau,
            (kind, _) => kind,
        }
    }

    /// Forces one engine for every population.
    pub fn force(&mut self, kind: EngineKind) {
        self.kind = kind;
        self.tau_above = None;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    /// Runs that exceed this many steps are recorded as censored.
    pub event_cap: u64,
}

impl Default for StopSpec {
    fn default() -> Self {
        Self {
            event_cap: DEFAULT_EVENT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

fn default_replications() -> u32 {
    DEFAULT_REPLICATIONS
}

/// A replication experiment: one model, several population sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_replications")]
    pub replications: u32,
    pub populations: Vec<u64>,
    pub model: ModelSpec,
    #[serde(default)]
    pub engine: EngineSpec,
    #[serde(default)]
    pub stop: StopSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications: must be >= 1".into()));
        }
        if self.populations.is_empty() {
            return Err(Error::Config("populations: at least one N is required".into()));
        }
        if self.populations.contains(&0) {
            return Err(Error::Config("populations: N must be >= 1".into()));
        }
        if self.populations.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("populations: N values must be strictly increasing".into()));
        }
        if self.stop.event_cap == 0 {
            return Err(Error::Config("stop.event_cap: must be >= 1".into()));
        }
        self.engine
            .tau
            .validate()
            .map_err(|e| Error::Config(format!("engine.tau: {e}")))?;
        for &n in &self.populations {
            self.model
                .instantiate(n)
                .map_err(|e| Error::Config(format!("model at N = {n}: {e}")))?;
        }
        Ok(())
    }

    /// Case of the model's scaling, when the model has one.
    pub fn case_label(&self) -> Option<CaseLabel> {
        self.model.scaling().map(classify_case)
    }

    /// Limit law for each population size; `None` where the model has no
    /// scaling or the scaling falls outside the classified cases.
    pub fn asymptotic_laws(&self) -> Result<Vec<Option<AsymptoticLaw>>> {
        let (Some(spec), Some(label)) = (self.model.scaling(), self.case_label()) else {
            return Ok(vec![None; self.populations.len()]);
        };
        if !label.is_case() {
            return Ok(vec![None; self.populations.len()]);
        }
        self.populations
            .iter()
            .map(|&n| law_for_case(&label, spec, n).map(Some))
            .collect()
    }

    /// SHA-256 over the canonical JSON form of everything that affects the
    /// samples except the seed: `seed`, `workers` and `output` are excluded.
    pub fn fingerprint(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            for key in ["seed", "workers", "output"] {
                map.remove(key);
            }
        }
        let canonical = serde_json::to_string(&value).expect("json value serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
