//! Run configuration: JSON file, then `--set` overrides, then defaults.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use parallel_spectra::lattice::CustomGraph;
use parallel_spectra::{CouplingParams, ModelSpec, Tolerances};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("bad override `{0}`: expected key=value")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    Uniform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        chain_length: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        total_sites: Option<usize>,
    },
    Ssh {
        sites: usize,
        delta: f64,
    },
    Custom {
        sites: usize,
        edges: Vec<(usize, usize, f64)>,
        a: usize,
        b: usize,
        coupling: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mirror: Option<Vec<usize>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub v: f64,
    #[serde(default = "one")]
    pub j: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eig: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matching: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ep: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    /// Defaults to N_total/3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_k() -> f64 {
    FRAC_PI_2
}

fn default_alpha() -> f64 {
    0.2
}

impl Default for PacketConfig {
    fn default() -> Self {
        PacketConfig { center: None, k: default_k(), alpha: default_alpha() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Gamma,
    Kappa,
    V,
    Delta,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Gamma => "gamma",
            SweepParam::Kappa => "kappa",
            SweepParam::V => "v",
            SweepParam::Delta => "delta",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub packet: PacketConfig,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_dump_times")]
    pub dump_times: Vec<f64>,
    /// Largest accepted ‖ψ(0) − Σ c_n ψ_n‖.
    #[serde(default = "default_truncation")]
    pub truncation_threshold: f64,
    #[serde(default = "default_audit")]
    pub audit_threshold: f64,
    /// Horizon for comparing each evolution with the bare skeleton.
    #[serde(default = "default_bulk_time")]
    pub bulk_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_dt() -> f64 {
    0.5
}
fn default_t_max() -> f64 {
    200.0
}
fn default_dump_times() -> Vec<f64> {
    vec![0.0, 50.0, 100.0, 150.0, 200.0]
}
fn default_truncation() -> f64 {
    1e-6
}
fn default_audit() -> f64 {
    1e-8
}
fn default_bulk_time() -> f64 {
    40.0
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            packet: PacketConfig::default(),
            dt: default_dt(),
            t_max: default_t_max(),
            dump_times: default_dump_times(),
            truncation_threshold: default_truncation(),
            audit_threshold: default_audit(),
            bulk_time: default_bulk_time(),
            sweep: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub params: ParamsConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub scenario: ScenarioConfig,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        let mut value: Value = serde_json::from_str(&text)?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: RunConfig = serde_json::from_value(value)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        let s = &self.scenario;
        let mut finite = vec![p.gamma, p.kappa, p.v, p.j, s.packet.k, s.packet.alpha, s.dt, s.t_max, s.bulk_time];
        finite.extend(s.packet.center);
        finite.extend(&s.dump_times);
        finite.extend([s.truncation_threshold, s.audit_threshold]);
        if let Some(sw) = &s.sweep {
            finite.extend([sw.from, sw.to]);
        }
        if let ModelConfig::Ssh { delta, .. } = self.model {
            finite.push(delta);
        }
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(ConfigError::Invalid("all physical values must be finite".into()));
        }
        if let ModelConfig::Uniform { chain_length, total_sites } = self.model {
            if chain_length.is_some() == total_sites.is_some() {
                return Err(ConfigError::Invalid(
                    "uniform model needs exactly one of chain_length, total_sites".into(),
                ));
            }
        }
        self.tolerances().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn model_spec(&self) -> ModelSpec {
        match &self.model {
            ModelConfig::Uniform { chain_length: Some(n), .. } => ModelSpec::uniform(*n, self.params.j),
            ModelConfig::Uniform { total_sites, .. } => {
                ModelSpec::uniform_total(total_sites.unwrap_or(0), self.params.j)
            }
            ModelConfig::Ssh { sites, delta } => ModelSpec::ssh(*sites, self.params.j, *delta),
            ModelConfig::Custom { sites, edges, a, b, coupling, mirror } => ModelSpec::CustomGraph(CustomGraph {
                sites: *sites,
                edges: edges.clone(),
                a: *a,
                b: *b,
                coupling: *coupling,
                mirror: mirror.clone(),
            }),
        }
    }

    pub fn coupling(&self) -> CouplingParams {
        CouplingParams::new(self.params.gamma, self.params.kappa, self.params.v)
    }

    pub fn tolerances(&self) -> Tolerances {
        let d = Tolerances::default();
        let t = &self.tolerances;
        Tolerances {
            eig: t.eig.unwrap_or(d.eig),
            real: t.real.unwrap_or(d.real),
            matching: t.matching.unwrap_or(d.matching),
            norm: t.norm.unwrap_or(d.norm),
            ep: t.ep.unwrap_or(d.ep),
        }
    }
}

/// `a.b.c=value`; the value is parsed as JSON, falling back to a string.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError::Override(spec.to_string()))?;
    if key.is_empty() {
        return Err(ConfigError::Override(spec.to_string()));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        if !node.is_object() {
            return Err(ConfigError::Override(spec.to_string()));
        }
        node = node
            .as_object_mut()
            .expect("object")
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node.as_object_mut().ok_or_else(|| ConfigError::Override(spec.to_string()))?;
    obj.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn minimal_uniform() {
        let c = parse(r#"{"model": {"kind": "uniform", "total_sites": 300}, "params": {"gamma": 0.75}}"#).unwrap();
        assert_eq!(c.model_spec().dimension(), 300);
        assert_eq!(c.params.j, 1.0);
        assert_eq!(c.scenario.dump_times, vec![0.0, 50.0, 100.0, 150.0, 200.0]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse(r#"{"model": {"kind": "uniform", "total_sites": 4}, "params": {}, "extra": 1}"#).is_err());
        assert!(parse(r#"{"model": {"kind": "uniform", "total_sites": 4, "x": 1}, "params": {}}"#).is_err());
        assert!(parse(r#"{"model": {"kind": "uniform", "total_sites": 4}, "params": {"gama": 1}}"#).is_err());
    }

    #[test]
    fn uniform_needs_one_size() {
        assert!(parse(r#"{"model": {"kind": "uniform"}, "params": {}}"#).is_err());
        assert!(parse(r#"{"model": {"kind": "uniform", "chain_length": 2, "total_sites": 4}, "params": {}}"#).is_err());
    }

    #[test]
    fn overrides_create_and_replace() {
        let mut v: Value = serde_json::from_str(r#"{"params": {"gamma": 1}}"#).unwrap();
        apply_override(&mut v, "params.gamma=0.5").unwrap();
        apply_override(&mut v, "scenario.sweep.param=gamma").unwrap();
        assert_eq!(v["params"]["gamma"], serde_json::json!(0.5));
        assert_eq!(v["scenario"]["sweep"]["param"], serde_json::json!("gamma"));
        assert!(apply_override(&mut v, "novalue").is_err());
        assert!(apply_override(&mut v, "params.gamma.x=1").is_err());
    }
}
