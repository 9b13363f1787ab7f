//! JSON run configuration.
//!
//! Every section uses `deny_unknown_fields`, and parse errors carry the JSON
//! path of the offending value. Node labels are 1-based throughout.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::continuation::{FreeParam, ParamSpec};
use crate::error::{Error, Result};
use crate::network::{build_network, fixtures, DampingState, NetworkModel, Regime};
use crate::simulator::{Burst, ScenarioConfig};
use crate::slowflow::trigger::TriggerMethod;

/// Network description as stored in network files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    #[serde(rename = "Q")]
    pub q: usize,
    pub nu: f64,
    pub eta: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub regime: Regime,
}

impl NetworkFile {
    pub fn build(&self) -> Result<NetworkModel> {
        for (name, value) in [("nu", self.nu), ("eta", self.eta), ("epsilon", self.epsilon)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(
                    format!("network.{name}"),
                    format!("must be positive and finite, got {value}"),
                ));
            }
        }
        if self.q < 1 || self.q > self.n {
            return Err(Error::config(
                "network.Q",
                format!("must lie in 1..={}, got {}", self.n, self.q),
            ));
        }
        build_network(&self.edges, self.n, self.q, self.nu, self.eta, self.epsilon)
    }
}

/// A network given inline, as a file path, or as `bundled:<name>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkSource {
    Inline(NetworkFile),
    Reference(String),
}

/// `[node, value]` pairs with 1-based node labels.
pub type NodeValues = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurstSection {
    pub amplitude: NodeValues,
    #[serde(default)]
    pub carrier: Option<f64>,
    #[serde(default = "one")]
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub delta: f64,
    pub tau: f64,
    pub burst: BurstSection,
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationSection {
    /// `mu` (every linear node) or `zeta_<k>`.
    #[serde(default = "default_free")]
    pub free: String,
    pub range: (f64, f64),
    /// Raw damping of the nodes the parameter does not drive.
    #[serde(default)]
    pub fixed_zeta: NodeValues,
    /// Same, given as large-regime rescaled values.
    #[serde(default)]
    pub fixed_zeta_tilde: NodeValues,
    #[serde(default = "default_ds")]
    pub ds: f64,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    #[serde(default = "default_shooting_steps")]
    pub shooting_steps: usize,
    #[serde(default = "default_eq_points")]
    pub equilibrium_points: usize,
    #[serde(default)]
    pub geometric: bool,
    #[serde(default = "default_seed_amplitude")]
    pub seed_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub eps_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerSection {
    pub delta: f64,
    /// Forcing shape; defaults to a unit push on node Q.
    #[serde(default)]
    pub forcing: NodeValues,
    /// Scale factors applied to the forcing, one table row each.
    #[serde(default = "default_amplitudes")]
    pub amplitudes: Vec<f64>,
    #[serde(default)]
    pub method: TriggerMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    /// δ used for the trigger threshold in each row.
    #[serde(default = "default_design_delta")]
    pub delta: f64,
    /// Magnitude of the reference forcing `f = a·e_Q`.
    #[serde(default = "one")]
    pub forcing: f64,
}

impl Default for DesignSection {
    fn default() -> Self {
        DesignSection {
            delta: default_design_delta(),
            forcing: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlowflowSection {
    /// Nullcline samples over `[0, zeta_max]`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub zeta_max: Option<f64>,
    /// Rate-law parameters for the equilibria table.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
}

impl Default for SlowflowSection {
    fn default() -> Self {
        SlowflowSection {
            samples: default_samples(),
            zeta_max: None,
            delta: None,
            tau: None,
        }
    }
}

/// Full run configuration. After [`parse_config`] the network is always
/// inline and every default is filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub network: NetworkSource,
    /// Overrides the regime stored with the network.
    #[serde(default)]
    pub regime: Option<Regime>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scenario: Option<ScenarioSection>,
    #[serde(default)]
    pub continuation: Option<ContinuationSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub trigger: Option<TriggerSection>,
    #[serde(default)]
    pub design: Option<DesignSection>,
    #[serde(default)]
    pub slowflow: Option<SlowflowSection>,
}

fn one() -> f64 {
    1.0
}
fn default_noise() -> f64 {
    1e-3
}
fn default_sample_every() -> usize {
    10
}
fn default_free() -> String {
    "mu".into()
}
fn default_ds() -> f64 {
    0.05
}
fn default_max_points() -> usize {
    300
}
fn default_shooting_steps() -> usize {
    256
}
fn default_eq_points() -> usize {
    200
}
fn default_seed_amplitude() -> f64 {
    1e-3
}
fn default_amplitudes() -> Vec<f64> {
    vec![1.0]
}
fn default_design_delta() -> f64 {
    0.1
}
fn default_samples() -> usize {
    200
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path == "." { "<root>".into() } else { path }, e.inner().to_string())
    })
}

fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "four_node" => Some(fixtures::FOUR_NODE_JSON),
        "fifteen_node" => Some(fixtures::FIFTEEN_NODE_JSON),
        _ => None,
    }
}

/// Loads a network file given by path or `bundled:<name>`.
pub fn load_network_file(reference: &str, base: &Path) -> Result<NetworkFile> {
    let text = if let Some(name) = reference.strip_prefix("bundled:") {
        bundled(name)
            .ok_or_else(|| Error::config("network", format!("unknown bundled network `{name}`")))?
            .to_string()
    } else {
        let path = base.join(reference);
        std::fs::read_to_string(&path).map_err(|e| Error::io(path, e))?
    };
    from_json(&text).map_err(|e| match e {
        Error::Config { path, message } => Error::config(format!("network.{path}"), message),
        other => other,
    })
}

/// Parses configuration text.
///
/// Accepts a full configuration, a bare network file, or a run manifest (its
/// `config` member is used). Relative network paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<Config> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::config("<root>", format!("malformed JSON: {e}")))?;
    let mut config: Config = if value.get("edges").is_some() {
        let network: NetworkFile = from_json(text)?;
        Config {
            network: NetworkSource::Inline(network),
            regime: None,
            seed: 0,
            scenario: None,
            continuation: None,
            sweep: None,
            trigger: None,
            design: None,
            slowflow: None,
        }
    } else if let Some(inner) = value.get("config").filter(|_| value.get("subcommand").is_some()) {
        from_json(&inner.to_string())?
    } else {
        from_json(text)?
    };
    if let NetworkSource::Reference(r) = &config.network {
        config.network = NetworkSource::Inline(load_network_file(r, base)?);
    }
    config.validate()?;
    Ok(config)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_else(PathBuf::new);
    parse_config(&text, &base)
}

fn positive(path: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be positive and finite, got {value}")))
    }
}

fn node_values(path: &str, values: &NodeValues, n: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n];
    for (i, &(node, v)) in values.iter().enumerate() {
        if node < 1 || node > n {
            return Err(Error::config(
                format!("{path}[{i}]"),
                format!("node {node} outside 1..={n}"),
            ));
        }
        if !v.is_finite() {
            return Err(Error::config(format!("{path}[{i}]"), "value must be finite"));
        }
        out[node - 1] = v;
    }
    Ok(out)
}

impl Config {
    pub fn network_file(&self) -> &NetworkFile {
        match &self.network {
            NetworkSource::Inline(n) => n,
            NetworkSource::Reference(_) => panic!("network reference left unresolved"),
        }
    }

    pub fn model(&self) -> Result<NetworkModel> {
        self.network_file().build()
    }

    pub fn regime(&self) -> Regime {
        self.regime.unwrap_or(self.network_file().regime)
    }

    fn validate(&self) -> Result<()> {
        let model = self.model()?;
        let n = model.n;
        if let Some(s) = &self.scenario {
            positive("scenario.delta", s.delta)?;
            positive("scenario.tau", s.tau)?;
            node_values("scenario.burst.amplitude", &s.burst.amplitude, n)?;
            if !(s.burst.duration >= 0.0 && s.burst.duration.is_finite()) {
                return Err(Error::config("scenario.burst.duration", "must be non-negative"));
            }
            if let Some(c) = s.burst.carrier {
                positive("scenario.burst.carrier", c)?;
            }
            if !(s.noise >= 0.0 && s.noise.is_finite()) {
                return Err(Error::config("scenario.noise", "must be non-negative"));
            }
            if let Some(dt) = s.dt {
                positive("scenario.dt", dt)?;
            }
            if let Some(t) = s.t_end {
                positive("scenario.t_end", t)?;
            }
            if s.sample_every == 0 {
                return Err(Error::config("scenario.sample_every", "must be at least 1"));
            }
        }
        if let Some(c) = &self.continuation {
            FreeParam::parse(&c.free, n, model.q)?;
            if !(c.range.0.is_finite() && c.range.1.is_finite() && c.range.0 < c.range.1) {
                return Err(Error::config("continuation.range", "expected [a, b] with a < b"));
            }
            node_values("continuation.fixed_zeta", &c.fixed_zeta, n)?;
            for (i, &(_, v)) in c.fixed_zeta_tilde.iter().enumerate() {
                positive(&format!("continuation.fixed_zeta_tilde[{i}]"), v)?;
            }
            node_values("continuation.fixed_zeta_tilde", &c.fixed_zeta_tilde, n)?;
            positive("continuation.ds", c.ds)?;
            positive("continuation.seed_amplitude", c.seed_amplitude)?;
            if c.shooting_steps < 8 || c.max_points < 2 || c.equilibrium_points < 2 {
                return Err(Error::config(
                    "continuation",
                    "shooting_steps ≥ 8, max_points ≥ 2 and equilibrium_points ≥ 2 required",
                ));
            }
        }
        if let Some(s) = &self.sweep {
            if s.eps_grid.is_empty() {
                return Err(Error::config("sweep.eps_grid", "must not be empty"));
            }
            for (i, &e) in s.eps_grid.iter().enumerate() {
                positive(&format!("sweep.eps_grid[{i}]"), e)?;
            }
        }
        if let Some(t) = &self.trigger {
            positive("trigger.delta", t.delta)?;
            node_values("trigger.forcing", &t.forcing, n)?;
            for (i, &a) in t.amplitudes.iter().enumerate() {
                positive(&format!("trigger.amplitudes[{i}]"), a)?;
            }
        }
        if let Some(d) = &self.design {
            positive("design.delta", d.delta)?;
            positive("design.forcing", d.forcing)?;
        }
        if let Some(s) = &self.slowflow {
            if s.samples < 2 {
                return Err(Error::config("slowflow.samples", "must be at least 2"));
            }
            for (name, v) in [("zeta_max", s.zeta_max), ("delta", s.delta), ("tau", s.tau)] {
                if let Some(v) = v {
                    positive(&format!("slowflow.{name}"), v)?;
                }
            }
        }
        Ok(())
    }

    /// Simulator settings from the `scenario` section.
    pub fn scenario_config(&self) -> Result<ScenarioConfig> {
        let s = self
            .scenario
            .as_ref()
            .ok_or_else(|| Error::config("scenario", "section required"))?;
        let n = self.network_file().n;
        let burst = Burst {
            amplitude: node_values("scenario.burst.amplitude", &s.burst.amplitude, n)?,
            carrier: s.burst.carrier,
            duration: s.burst.duration,
        };
        let mut cfg = ScenarioConfig::new(self.regime(), s.delta, s.tau, burst);
        cfg.noise = s.noise;
        cfg.dt = s.dt;
        cfg.t_end = s.t_end;
        cfg.sample_every = s.sample_every;
        cfg.seed = self.seed;
        Ok(cfg)
    }

    pub fn continuation_section(&self) -> Result<&ContinuationSection> {
        self.continuation
            .as_ref()
            .ok_or_else(|| Error::config("continuation", "section required"))
    }

    /// Parameter mapping from the `continuation` section.
    pub fn param_spec(&self) -> Result<ParamSpec> {
        let c = self.continuation_section()?;
        let model = self.model()?;
        let free = FreeParam::parse(&c.free, model.n, model.q)?;
        let raw = node_values("continuation.fixed_zeta", &c.fixed_zeta, model.n)?;
        let mut zetas = raw;
        for &(node, v) in &c.fixed_zeta_tilde {
            zetas[node - 1] = 1.0 / (model.epsilon * model.epsilon * v);
        }
        Ok(ParamSpec {
            free,
            template: DampingState {
                zetas: nalgebra::DVector::from_vec(zetas),
                regime: Regime::Small,
            },
        })
    }

    /// Forcing vector of the `trigger` section (unit push on Q by default).
    pub fn trigger_forcing(&self) -> Result<Vec<f64>> {
        let t = self
            .trigger
            .as_ref()
            .ok_or_else(|| Error::config("trigger", "section required"))?;
        let file = self.network_file();
        if t.forcing.is_empty() {
            let mut f = vec![0.0; file.n];
            f[file.q - 1] = 1.0;
            Ok(f)
        } else {
            node_values("trigger.forcing", &t.forcing, file.n)
        }
    }
}
