//! Strict JSON experiment configuration.

use std::path::{Path, PathBuf};

use ntkt_core::metrics::ProbeMeasure;
use ntkt_core::targets::{ContinuityProfile, TargetFunction};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "NTKT_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Ntk,
    Relu,
    Threshold,
    ReluDirect,
    All,
}

impl Mode {
    pub fn uses_transport(self) -> bool {
        matches!(self, Self::Ntk | Self::Relu | Self::All)
    }

    pub fn includes(self, other: Mode) -> bool {
        self == Self::All || self == other
    }
}

/// Probe measure selector: `"uniform:<n>"` or `"grid"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProbeSpec {
    Uniform(usize),
    Grid,
}

impl TryFrom<String> for ProbeSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        if s == "grid" {
            return Ok(Self::Grid);
        }
        let n = s
            .strip_prefix("uniform:")
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| format!("probe must be \"grid\" or \"uniform:<n>\", got {s:?}"))?;
        if n < 10 {
            return Err(format!("uniform probe needs at least 10 points, got {n}"));
        }
        Ok(Self::Uniform(n))
    }
}

impl From<ProbeSpec> for String {
    fn from(p: ProbeSpec) -> String {
        match p {
            ProbeSpec::Uniform(n) => format!("uniform:{n}"),
            ProbeSpec::Grid => "grid".into(),
        }
    }
}

fn default_eta() -> f64 {
    0.05
}

fn default_trials() -> usize {
    1
}

fn default_probe() -> ProbeSpec {
    ProbeSpec::Uniform(2000)
}

fn default_mode() -> Mode {
    Mode::All
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: String,
    pub d: usize,
    pub delta: f64,
    pub eps: f64,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub m_list: Option<Vec<usize>>,
    #[serde(default)]
    pub delta_list: Option<Vec<f64>>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_probe")]
    pub probe: ProbeSpec,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub save_nets: bool,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn target_fn(&self) -> Result<TargetFunction, CliError> {
        Ok(TargetFunction::parse(&self.target, self.d)?)
    }

    /// Widths to run: the list if given, else the single `m`.
    pub fn widths(&self) -> Vec<usize> {
        match (&self.m_list, self.m) {
            (Some(list), _) => list.clone(),
            (None, Some(m)) => vec![m],
            (None, None) => Vec::new(),
        }
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.delta_list.clone().unwrap_or_else(|| vec![self.delta])
    }

    pub fn probe_measure(&self, seed: u64) -> Result<ProbeMeasure, CliError> {
        Ok(match self.probe {
            ProbeSpec::Grid => ProbeMeasure::grid(self.d),
            ProbeSpec::Uniform(n) => {
                let mut rng = ntkt_core::rng::RngStream::new(seed, ntkt_core::rng::tags::PROBES);
                ProbeMeasure::uniform_ball(self.d, n, &mut rng)?
            }
        })
    }

    /// Full validation, run before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(1..=3).contains(&self.d) {
            return bad(format!("d must be 1, 2 or 3, got {}", self.d));
        }
        let f = self.target_fn()?;
        for &delta in &self.deltas() {
            if !(delta > 0.0 && delta <= 1.0) {
                return bad(format!("delta must lie in (0, 1], got {delta}"));
            }
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let Some(list) = &self.m_list {
            if list.is_empty() {
                return bad("m_list must not be empty".into());
            }
        }
        if self.widths().iter().any(|&m| m < 2) {
            return bad("every width must be at least 2".into());
        }
        if let Some(list) = &self.delta_list {
            if list.is_empty() {
                return bad("delta_list must not be empty".into());
            }
        }
        if self.mode.uses_transport() {
            for &delta in &self.deltas() {
                let omega = ContinuityProfile::new(&f, delta)?.omega;
                if self.eps < omega {
                    return bad(format!("eps = {} is below omega_f(delta = {delta}) = {omega}", self.eps));
                }
            }
        }
        Ok(())
    }

    /// Seed after the environment override, with its source.
    pub fn effective_seed(&self) -> Result<(u64, SeedSource), CliError> {
        match std::env::var(SEED_ENV) {
            Ok(v) => {
                let s = v.trim().parse::<u64>().map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not a u64")))?;
                Ok((s, SeedSource::Env))
            }
            Err(_) => Ok((self.seed, SeedSource::Config)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Config,
    Env,
    Flag,
}
