//! Experiment configuration: a flat `key = value` document with a
//! fixed schema, canonical serialization, and a content hash that every
//! output file embeds so results can be traced back to their exact
//! configuration.

use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use coupled_rl::nonlinear::OptimizerKind;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvName {
    Chain3,
    Gridworld12,
    CartPole,
    Acrobot,
}

impl EnvName {
    pub fn is_tabular(self) -> bool {
        matches!(self, EnvName::Chain3 | EnvName::Gridworld12)
    }
}

impl FromStr for EnvName {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain3" => Ok(EnvName::Chain3),
            "gridworld12" => Ok(EnvName::Gridworld12),
            "cartpole" => Ok(EnvName::CartPole),
            "acrobot" => Ok(EnvName::Acrobot),
            other => bail!("unknown env: {other}"),
        }
    }
}

impl fmt::Display for EnvName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EnvName::Chain3 => "chain3",
            EnvName::Gridworld12 => "gridworld12",
            EnvName::CartPole => "cartpole",
            EnvName::Acrobot => "acrobot",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgoName {
    QLearning,
    DistCdfQ,
    DistPmfQ,
    DqnLite,
    C51Lite,
    S51LiteCdf,
    S51LitePmf,
}

impl AlgoName {
    pub fn is_tabular(self) -> bool {
        matches!(
            self,
            AlgoName::QLearning | AlgoName::DistCdfQ | AlgoName::DistPmfQ
        )
    }
}

impl FromStr for AlgoName {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "q-learning" => Ok(AlgoName::QLearning),
            "dist-cdf-q" => Ok(AlgoName::DistCdfQ),
            "dist-pmf-q" => Ok(AlgoName::DistPmfQ),
            "dqn-lite" => Ok(AlgoName::DqnLite),
            "c51-lite" => Ok(AlgoName::C51Lite),
            "s51-lite-cdf" => Ok(AlgoName::S51LiteCdf),
            "s51-lite-pmf" => Ok(AlgoName::S51LitePmf),
            other => bail!("unknown algo: {other}"),
        }
    }
}

impl fmt::Display for AlgoName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AlgoName::QLearning => "q-learning",
            AlgoName::DistCdfQ => "dist-cdf-q",
            AlgoName::DistPmfQ => "dist-pmf-q",
            AlgoName::DqnLite => "dqn-lite",
            AlgoName::C51Lite => "c51-lite",
            AlgoName::S51LiteCdf => "s51-lite-cdf",
            AlgoName::S51LitePmf => "s51-lite-pmf",
        };
        write!(f, "{s}")
    }
}

/// One experiment: environment, algorithm, budgets, and every numeric
/// choice the run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub env: EnvName,
    pub algo: AlgoName,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    /// Tabular step size.
    pub alpha: f64,
    /// Network step size.
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    /// 0 feeds the raw observation to the network.
    pub fourier_order: usize,
    /// Hidden ReLU widths; empty is a linear model.
    pub hidden: Vec<usize>,
    pub support_atoms: usize,
    /// Discount for the classic-control tasks (finite MDPs carry their
    /// own).
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
    /// Step cap per episode on the tabular environments.
    pub episode_cap: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: "default".to_string(),
            env: EnvName::Gridworld12,
            algo: AlgoName::QLearning,
            episodes: 200,
            seeds: vec![0, 1, 2, 3, 4],
            alpha: 0.1,
            learning_rate: 0.001,
            optimizer: OptimizerKind::Sgd,
            fourier_order: 0,
            hidden: vec![],
            support_atoms: 51,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 10_000,
            episode_cap: 10_000,
        }
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_list<T: FromStr>(value: &str, key: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    if value.trim().is_empty() {
        return Ok(vec![]);
    }
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|e| anyhow!("bad {key} entry {v:?}: {e}"))
        })
        .collect()
}

impl ExperimentConfig {
    /// Canonical flat serialization: all keys, sorted, one `key = value`
    /// per line. The config hash is the SHA-256 of exactly this text.
    pub fn canonical(&self) -> String {
        let optimizer = match self.optimizer {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        };
        let mut pairs = vec![
            ("algo", self.algo.to_string()),
            ("alpha", self.alpha.to_string()),
            ("env", self.env.to_string()),
            ("episode_cap", self.episode_cap.to_string()),
            ("episodes", self.episodes.to_string()),
            ("epsilon_decay_steps", self.epsilon_decay_steps.to_string()),
            ("epsilon_end", self.epsilon_end.to_string()),
            ("epsilon_start", self.epsilon_start.to_string()),
            ("experiment", self.experiment.clone()),
            ("fourier_order", self.fourier_order.to_string()),
            ("gamma", self.gamma.to_string()),
            ("hidden", join(&self.hidden)),
            ("learning_rate", self.learning_rate.to_string()),
            ("optimizer", optimizer.to_string()),
            ("seeds", join(&self.seeds)),
            ("support_atoms", self.support_atoms.to_string()),
        ];
        pairs.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = String::new();
        for (k, v) in pairs {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// First 16 hex characters of the SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    /// The stored form: canonical text plus the hash as a trailing
    /// comment line.
    pub fn to_document(&self) -> String {
        format!("{}# config_hash = {}\n", self.canonical(), self.hash())
    }

    /// Parses a flat key-value document. Unknown keys are errors; the
    /// optional `# config_hash` comment is checked against the content.
    pub fn from_document(text: &str) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        let mut stored_hash = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(h) = rest.trim().strip_prefix("config_hash =") {
                    stored_hash = Some(h.trim().to_string());
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key = value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "experiment" => config.experiment = value.to_string(),
                "env" => config.env = value.parse()?,
                "algo" => config.algo = value.parse()?,
                "episodes" => config.episodes = value.parse()?,
                "seeds" => config.seeds = parse_list(value, key)?,
                "alpha" => config.alpha = value.parse()?,
                "learning_rate" => config.learning_rate = value.parse()?,
                "optimizer" => {
                    config.optimizer = match value {
                        "sgd" => OptimizerKind::Sgd,
                        "adam" => OptimizerKind::Adam,
                        other => bail!("unknown optimizer: {other}"),
                    }
                }
                "fourier_order" => config.fourier_order = value.parse()?,
                "hidden" => config.hidden = parse_list(value, key)?,
                "support_atoms" => config.support_atoms = value.parse()?,
                "gamma" => config.gamma = value.parse()?,
                "epsilon_start" => config.epsilon_start = value.parse()?,
                "epsilon_end" => config.epsilon_end = value.parse()?,
                "epsilon_decay_steps" => config.epsilon_decay_steps = value.parse()?,
                "episode_cap" => config.episode_cap = value.parse()?,
                other => bail!("unknown config key: {other}"),
            }
        }
        config.validate()?;
        if let Some(h) = stored_hash {
            let actual = config.hash();
            if h != actual {
                bail!("stored config_hash {h} does not match content hash {actual}");
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        if self.episodes == 0 {
            bail!("episodes must be positive");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            bail!("gamma must lie in [0, 1)");
        }
        if self.algo.is_tabular() != self.env.is_tabular() {
            bail!(
                "algo {} does not run on env {} (tabular algorithms pair with \
                 tabular environments)",
                self.algo,
                self.env
            );
        }
        if !self.algo.is_tabular() && self.support_atoms < 2 && self.algo != AlgoName::DqnLite {
            bail!("distributional heads need at least two atoms");
        }
        Ok(())
    }
}
