use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use qkdd_core::optimizer::PlanInputs;
use qkdd_core::protocol::{plan_inputs, FaultSpec, SessionParams};

/// How the basis bias of a session is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasMode {
    /// Search `p_x` and run the session with the optimum.
    #[default]
    Optimize,
    /// Keep `session.p_x` and optimize everything else around it.
    Fixed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanOptions {
    /// Raw key length to plan for; defaults to `n_pulses * eta`.
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default)]
    pub bias: BiasMode,
    /// Previously written plan JSON to use instead of optimizing.
    #[serde(default)]
    pub plan_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    #[default]
    Inmem,
    Tcp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportOptions {
    #[serde(default)]
    pub kind: TransportKind,
    /// `host:port` Bob listens on and Alice connects to.
    #[serde(default)]
    pub address: Option<String>,
    /// Seconds Alice keeps retrying the connection.
    #[serde(default = "default_connect_timeout")]
    pub connect_timeout_s: f64,
}

fn default_connect_timeout() -> f64 {
    10.0
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions {
            kind: TransportKind::default(),
            address: None,
            connect_timeout_s: default_connect_timeout(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Where `simulate` writes the frame transcript.
    #[serde(default)]
    pub transcript: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum CurveKind {
    /// Key rate against raw key length, one series per epsilon.
    RateVsN,
    /// Smallest raw key length with a positive key, per epsilon.
    MinNVsEps,
    /// Key length against the sifted X fraction at fixed n.
    KeyVsBias,
    /// Optimal bias against raw key length.
    OptbiasVsN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveOptions {
    pub kind: CurveKind,
    #[serde(default)]
    pub ns: Vec<u64>,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub qs: Vec<f64>,
}

/// Top-level configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub session: SessionParams,
    #[serde(default)]
    pub plan: PlanOptions,
    #[serde(default)]
    pub transport: TransportOptions,
    #[serde(default)]
    pub output: OutputOptions,
    /// Corrupt every outgoing frame of one type (testing aborts).
    #[serde(default)]
    pub fault: Option<FaultSpec>,
    #[serde(default)]
    pub curve: Option<CurveOptions>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.session.validate()?;
        if let Some(n) = self.plan.n {
            if n < 2 {
                bail!("plan.n must be at least 2");
            }
        }
        if !(self.transport.connect_timeout_s >= 0.0 && self.transport.connect_timeout_s.is_finite()) {
            bail!("transport.connect_timeout_s must be a non-negative number");
        }
        self.plan_inputs().validate()?;
        Ok(())
    }

    /// Seeds the three session streams from one value.
    pub fn apply_seed(&mut self, seed: u64) {
        self.session.rng_seed_alice = seed;
        self.session.rng_seed_bob = seed.wrapping_add(1);
        self.session.rng_seed_channel = seed.wrapping_add(2);
    }

    pub fn plan_inputs(&self) -> PlanInputs {
        let mut inputs = plan_inputs(&self.session);
        if let Some(n) = self.plan.n {
            inputs.n = n;
        }
        inputs
    }
}
