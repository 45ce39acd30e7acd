//! Experiment configuration in TOML.
//!
//! ```toml
//! units = "g0"
//!
//! [lattice]
//! n = 4
//! v = 1.5
//! dispersion = "cosine-of-sum"      # or "sum-of-cosines"
//!
//! [sites.default]
//! g = 1.0
//! delta1 = 15.0
//! delta2 = 15.2
//!
//! [[sites.site]]
//! at = [1, 1]
//! omega = 1.0
//!
//! [initial]
//! f = [[1, 1]]
//!
//! [run]
//! model = "both"
//! t_end = 1300.0
//! observables = ["initial", "f(4,4)", "norm"]
//!
//! [run.propagator]
//! method = "rk4"
//! step = 1e-3
//! sample_interval = 0.5
//!
//! [protocol]
//! kind = "entangle"
//! pairs = [[[1, 1], [4, 4]]]
//! ```
//!
//! Every frequency is in units of the reference coupling `g0` and every time
//! in `1/g0`.

use std::collections::BTreeSet;
use std::fmt;

use cavarray_core::dynamics::{Method, PropagatorConfig};
use cavarray_core::hamiltonian::SiteParams;
use cavarray_core::protocols::GateKind;
use cavarray_core::{Dispersion, LatticeSpec, SiteIndex, C64};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    #[serde(rename = "g0")]
    G0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispersionName {
    #[default]
    CosineOfSum,
    SumOfCosines,
}

impl From<DispersionName> for Dispersion {
    fn from(d: DispersionName) -> Self {
        match d {
            DispersionName::CosineOfSum => Dispersion::CosineOfSum,
            DispersionName::SumOfCosines => Dispersion::SumOfCosines,
        }
    }
}

impl From<Dispersion> for DispersionName {
    fn from(d: Dispersion) -> Self {
        match d {
            Dispersion::CosineOfSum => DispersionName::CosineOfSum,
            Dispersion::SumOfCosines => DispersionName::SumOfCosines,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub n: usize,
    pub v: f64,
    #[serde(default)]
    pub dispersion: DispersionName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteDefaults {
    pub g: f64,
    pub delta1: f64,
    pub delta2: f64,
    #[serde(default)]
    pub omega: f64,
}

/// Per-site values replacing the defaults. A site without `omega` keeps the
/// default drive, which is zero unless set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteOverride {
    pub at: [i64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitesConfig {
    pub default: SiteDefaults,
    #[serde(default, rename = "site", skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<SiteOverride>,
}

/// Atoms listed under `f` or `e` start in that level, all others in `|g⟩`;
/// every cavity starts in vacuum.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialConfig {
    #[serde(default)]
    pub f: Vec<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub e: Vec<[i64; 2]>,
    /// Largest photon number per cavity; defaults to the excitation number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon_cap: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Full,
    Effective,
    Both,
}

impl Model {
    pub fn runs_full(self) -> bool {
        matches!(self, Model::Full | Model::Both)
    }

    pub fn runs_effective(self) -> bool {
        matches!(self, Model::Effective | Model::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    #[default]
    Rk4,
    DormandPrince,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagatorSection {
    #[serde(default)]
    pub method: MethodName,
    /// RK4 step.
    #[serde(default = "default_step")]
    pub step: f64,
    /// Dormand–Prince local error tolerance.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
    #[serde(default)]
    pub renormalize: bool,
}

fn default_step() -> f64 {
    1e-3
}

fn default_tolerance() -> f64 {
    1e-10
}

fn default_sample_interval() -> f64 {
    0.5
}

impl Default for PropagatorSection {
    fn default() -> Self {
        Self {
            method: MethodName::Rk4,
            step: default_step(),
            tolerance: default_tolerance(),
            sample_interval: default_sample_interval(),
            renormalize: false,
        }
    }
}

impl PropagatorSection {
    pub fn to_config(&self) -> PropagatorConfig {
        let method = match self.method {
            MethodName::Rk4 => Method::rk4(self.step),
            MethodName::DormandPrince => Method::dormand_prince(self.tolerance),
        };
        PropagatorConfig {
            method,
            renormalize: self.renormalize,
            sample_interval: self.sample_interval,
            store_states: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputSection {
    /// Output directory, overridden by `--output-dir`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: Model,
    pub t_end: f64,
    #[serde(default)]
    pub propagator: PropagatorSection,
    #[serde(default = "default_observables")]
    pub observables: Vec<String>,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_observables() -> Vec<String> {
    vec!["initial".into(), "norm".into()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolName {
    Entangle,
    Transfer,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateName {
    Entangle,
    Transfer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub kind: ProtocolName,
    pub pairs: Vec<[[i64; 2]; 2]>,
    /// `[[re, im], [re, im]]` for the amplitudes on `|f⟩` and `|g⟩` of the
    /// transferred qubit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<[[f64; 2]; 2]>,
    /// Gate per pair for `parallel`; entangling gates when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gates: Option<Vec<GateName>>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    cavarray_core::hamiltonian::DEFAULT_SELECTIVITY_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub units: Units,
    pub lattice: LatticeConfig,
    pub sites: SitesConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolConfig>,
}

/// A recorded quantity, parsed from strings such as `initial`, `f(1,1)`,
/// `e(2,3)`, `photons`, `target` or `norm`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObservableSpec {
    /// Occupation of the initial state.
    Initial,
    /// Population of `|f⟩` at a site.
    LevelF([i64; 2]),
    /// Population of `|e⟩` at a site.
    LevelE([i64; 2]),
    /// Population with at least one photon.
    Photons,
    /// Fidelity to the state predicted by the protocol plan.
    Target,
    Norm,
}

impl ObservableSpec {
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        match s {
            "initial" => return Some(Self::Initial),
            "photons" => return Some(Self::Photons),
            "target" => return Some(Self::Target),
            "norm" => return Some(Self::Norm),
            _ => {}
        }
        let (level, rest) = s.split_at_checked(1)?;
        let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
        let (j, k) = inner.split_once(',')?;
        let at = [j.trim().parse().ok()?, k.trim().parse().ok()?];
        match level {
            "f" => Some(Self::LevelF(at)),
            "e" => Some(Self::LevelE(at)),
            _ => None,
        }
    }

    /// Column name in trajectory tables.
    pub fn column(&self) -> String {
        match self {
            Self::Initial => "P_initial".into(),
            Self::LevelF([j, k]) => format!("f_{j}_{k}"),
            Self::LevelE([j, k]) => format!("e_{j}_{k}"),
            Self::Photons => "photons".into(),
            Self::Target => "F_target".into(),
            Self::Norm => "norm".into(),
        }
    }
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Initial => f.write_str("initial"),
            Self::LevelF([j, k]) => write!(f, "f({j},{k})"),
            Self::LevelE([j, k]) => write!(f, "e({j},{k})"),
            Self::Photons => f.write_str("photons"),
            Self::Target => f.write_str("target"),
            Self::Norm => f.write_str("norm"),
        }
    }
}

/// Parses and validates a config, rejecting unknown keys.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let mut unknown = Vec::new();
    let cfg: ExperimentConfig = serde_ignored::deserialize(de, |path| {
        unknown.push(path.to_string().replace(".?", ""));
    })
    .map_err(|e| CliError::Parse(e.to_string()))?;
    if !unknown.is_empty() {
        return Err(CliError::UnknownKeys(unknown));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn finite(path: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(CliError::field(path, format!("must be finite, got {x}")))
    }
}

fn positive(path: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::field(path, format!("must be positive, got {x}")))
    }
}

impl ExperimentConfig {
    /// Canonical TOML with every default written out.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Serialize(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lattice.n;
        if n < 1 {
            return Err(CliError::field("lattice.n", "must be at least 1"));
        }
        finite("lattice.v", self.lattice.v)?;
        let d = &self.sites.default;
        for (name, x) in [
            ("g", d.g),
            ("delta1", d.delta1),
            ("delta2", d.delta2),
            ("omega", d.omega),
        ] {
            finite(&format!("sites.default.{name}"), x)?;
        }
        let mut seen = BTreeSet::new();
        for (i, o) in self.sites.overrides.iter().enumerate() {
            let path = format!("sites.site[{i}]");
            self.site(&format!("{path}.at"), o.at)?;
            if !seen.insert(o.at) {
                return Err(CliError::field(
                    format!("{path}.at"),
                    format!("site ({},{}) is listed more than once", o.at[0], o.at[1]),
                ));
            }
            for (name, x) in [
                ("g", o.g),
                ("omega", o.omega),
                ("delta1", o.delta1),
                ("delta2", o.delta2),
            ] {
                if let Some(x) = x {
                    finite(&format!("{path}.{name}"), x)?;
                }
            }
        }

        let mut occupied = BTreeSet::new();
        for (level, list) in [("f", &self.initial.f), ("e", &self.initial.e)] {
            for (i, &at) in list.iter().enumerate() {
                let path = format!("initial.{level}[{i}]");
                self.site(&path, at)?;
                if !occupied.insert(at) {
                    return Err(CliError::field(
                        path,
                        format!("site ({},{}) is listed more than once", at[0], at[1]),
                    ));
                }
            }
        }

        let run = &self.run;
        positive("run.t_end", run.t_end)?;
        let p = &run.propagator;
        positive("run.propagator.step", p.step)?;
        positive("run.propagator.tolerance", p.tolerance)?;
        positive("run.propagator.sample_interval", p.sample_interval)?;
        if run.model.runs_effective() && !self.initial.e.is_empty() {
            return Err(CliError::field(
                "initial.e",
                "the effective model has no excited level; use model = \"full\"",
            ));
        }
        for (i, s) in run.observables.iter().enumerate() {
            let path = format!("run.observables[{i}]");
            let spec = ObservableSpec::parse(s)
                .ok_or_else(|| CliError::field(&path, format!("unknown observable {s:?}")))?;
            match spec {
                ObservableSpec::LevelF(at) | ObservableSpec::LevelE(at) => {
                    self.site(&path, at)?;
                }
                ObservableSpec::Target => {
                    let ok = matches!(
                        self.protocol.as_ref().map(|p| p.kind),
                        Some(ProtocolName::Entangle | ProtocolName::Transfer)
                    );
                    if !ok {
                        return Err(CliError::field(
                            path,
                            "\"target\" needs an entangle or transfer [protocol]",
                        ));
                    }
                }
                _ => {}
            }
        }

        if let Some(proto) = &self.protocol {
            if proto.pairs.is_empty() {
                return Err(CliError::field(
                    "protocol.pairs",
                    "at least one pair is required",
                ));
            }
            if proto.kind != ProtocolName::Parallel && proto.pairs.len() != 1 {
                return Err(CliError::field(
                    "protocol.pairs",
                    format!("{:?} takes exactly one pair", proto.kind).to_lowercase(),
                ));
            }
            for (i, pair) in proto.pairs.iter().enumerate() {
                self.site(&format!("protocol.pairs[{i}][0]"), pair[0])?;
                self.site(&format!("protocol.pairs[{i}][1]"), pair[1])?;
            }
            positive("protocol.threshold", proto.threshold)?;
            let needs_amplitudes = match proto.kind {
                ProtocolName::Transfer => true,
                ProtocolName::Parallel => proto
                    .gates
                    .iter()
                    .flatten()
                    .any(|g| *g == GateName::Transfer),
                ProtocolName::Entangle => false,
            };
            if needs_amplitudes && proto.amplitudes.is_none() {
                return Err(CliError::field(
                    "protocol.amplitudes",
                    "required for transfer gates",
                ));
            }
            if let Some(a) = proto.amplitudes {
                for x in a.iter().flatten() {
                    finite("protocol.amplitudes", *x)?;
                }
            }
            if let Some(g) = &proto.gates {
                if proto.kind != ProtocolName::Parallel {
                    return Err(CliError::field(
                        "protocol.gates",
                        "only used with kind = \"parallel\"",
                    ));
                }
                if g.len() != proto.pairs.len() {
                    return Err(CliError::field(
                        "protocol.gates",
                        format!("{} gates for {} pairs", g.len(), proto.pairs.len()),
                    ));
                }
            }
        }
        Ok(())
    }

    fn site(&self, path: &str, at: [i64; 2]) -> Result<SiteIndex> {
        SiteIndex::new(at[0], at[1], self.lattice.n)
            .map_err(|e| CliError::field(path, e.to_string()))
    }

    pub fn dispersion(&self) -> Dispersion {
        self.lattice.dispersion.into()
    }

    pub fn lattice_spec(&self) -> Result<LatticeSpec> {
        LatticeSpec::new(self.lattice.n, self.lattice.v, self.dispersion())
            .map_err(|e| CliError::field("lattice", e.to_string()))
    }

    /// Site parameters in row-major order.
    pub fn site_params(&self) -> Vec<SiteParams> {
        let n = self.lattice.n;
        let d = &self.sites.default;
        let mut params = vec![SiteParams::new(d.g, d.omega, d.delta1, d.delta2); n * n];
        for o in &self.sites.overrides {
            let p = &mut params[linear(o.at, n)];
            p.g = o.g.unwrap_or(p.g);
            p.omega_rabi = o.omega.unwrap_or(p.omega_rabi);
            p.delta1 = o.delta1.unwrap_or(p.delta1);
            p.delta2 = o.delta2.unwrap_or(p.delta2);
        }
        params
    }

    pub fn sites_of(&self, list: &[[i64; 2]]) -> Result<Vec<SiteIndex>> {
        list.iter().map(|&at| self.site("site", at)).collect()
    }

    pub fn excitation(&self) -> u32 {
        (self.initial.f.len() + self.initial.e.len()) as u32
    }

    pub fn photon_cap(&self) -> u32 {
        self.initial
            .photon_cap
            .unwrap_or_else(|| self.excitation().max(1))
    }

    pub fn observables(&self) -> Vec<ObservableSpec> {
        self.run
            .observables
            .iter()
            .filter_map(|s| ObservableSpec::parse(s))
            .collect()
    }

    /// Pairs and gates of the protocol block, if any.
    pub fn protocol_pairs(&self) -> Result<Vec<(SiteIndex, SiteIndex, GateKind)>> {
        let Some(p) = &self.protocol else {
            return Ok(Vec::new());
        };
        let transfer = || {
            let [c0, c1] = p.amplitudes.unwrap_or([[1.0, 0.0], [0.0, 0.0]]);
            GateKind::Transfer {
                c0: C64::new(c0[0], c0[1]),
                c1: C64::new(c1[0], c1[1]),
            }
        };
        p.pairs
            .iter()
            .enumerate()
            .map(|(i, pair)| {
                let gate = match (p.kind, p.gates.as_ref().map(|g| g[i])) {
                    (ProtocolName::Transfer, _) | (_, Some(GateName::Transfer)) => transfer(),
                    _ => GateKind::Entangle,
                };
                Ok((
                    self.site("protocol.pairs", pair[0])?,
                    self.site("protocol.pairs", pair[1])?,
                    gate,
                ))
            })
            .collect()
    }
}

/// Row-major index of a 1-based site already checked against the lattice.
pub fn linear(at: [i64; 2], n: usize) -> usize {
    (at[0] as usize - 1) * n + (at[1] as usize - 1)
}

/// Replaces every value at a dotted path (`sites.site.omega`) in a parsed
/// config tree. Arrays of tables are updated element-wise.
pub fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<usize> {
    fn walk(node: &mut toml::Value, keys: &[&str], value: &toml::Value) -> usize {
        match node {
            toml::Value::Array(items) => items.iter_mut().map(|x| walk(x, keys, value)).sum(),
            toml::Value::Table(t) => {
                let (head, rest) = (keys[0], &keys[1..]);
                if rest.is_empty() {
                    t.insert(head.to_string(), value.clone());
                    1
                } else {
                    match t.get_mut(head) {
                        Some(child) => walk(child, rest, value),
                        None => 0,
                    }
                }
            }
            _ => 0,
        }
    }
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Usage(format!("malformed field path {path:?}")));
    }
    let hits = walk(root, &keys, &value);
    if hits == 0 {
        return Err(CliError::Usage(format!(
            "field {path} does not exist in the config"
        )));
    }
    Ok(hits)
}
