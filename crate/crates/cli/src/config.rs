//! Scenario configuration: one model, one initial state, a time grid and
//! the outputs to write. Loaded from TOML or JSON.

use std::{collections::BTreeSet, f64::consts::TAU, fmt, path::Path};

use qdkerr::{phasespace::Axis, Frame, ModelParams, StateSpec, TruncationPolicy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A validation or parse failure, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub model: ModelConfig,
    pub initial: StateSpec,
    #[serde(default)]
    pub truncation: TruncationPolicy,
    pub time: TimeConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub frame: Frame,
    #[serde(default)]
    pub outputs: Vec<OutputSpec>,
}

/// A single Kerr strength or a scan over several.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KerrValues {
    One(f64),
    Scan(Vec<f64>),
}

impl KerrValues {
    pub fn values(&self) -> Vec<f64> {
        match self {
            KerrValues::One(g) => vec![*g],
            KerrValues::Scan(v) => v.clone(),
        }
    }
}

/// Frequencies in units of `scale` (Ω = 1 by default).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub omega: f64,
    /// Defaults to `omega`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    pub g: KerrValues,
    pub coupling: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl ModelConfig {
    pub fn params(&self, g: f64) -> ModelParams {
        ModelParams {
            omega: self.scale * self.omega,
            omega0: self.scale * self.omega0.unwrap_or(self.omega),
            g: self.scale * g,
            coupling: self.scale * self.coupling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    /// `Ωt/2π`.
    RabiPeriods,
    /// `t/T` with `T = 2π/g`.
    KerrPeriods,
    #[default]
    Absolute,
}

impl TimeUnit {
    pub fn label(&self) -> &'static str {
        match self {
            TimeUnit::RabiPeriods => "rabi_periods",
            TimeUnit::KerrPeriods => "kerr_periods",
            TimeUnit::Absolute => "absolute",
        }
    }
}

/// `steps` intervals from `start` to `stop`, so `steps + 1` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default)]
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    #[serde(default)]
    pub unit: TimeUnit,
    /// Kerr strength defining `T` for `kerr_periods`; defaults to the
    /// largest `|g|` of the scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_g: Option<f64>,
    /// Times (same unit) for Wigner and photon-distribution outputs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub x: Axis,
    #[serde(default)]
    pub p: Axis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Excitation,
    PhotonNumber,
    MeanX,
    Variance,
    /// `Var[x]` over the shot-noise level 1/2.
    NormalizedVariance,
    /// Closed-form Kerr variance; coherent input with zero coupling only.
    AnalyticVariance,
    Schmidt,
    FieldPurity,
    Carpet,
    Zones,
    Wigner,
    PhotonDistribution,
}

impl Observable {
    pub fn name(&self) -> &'static str {
        match self {
            Observable::Excitation => "excitation",
            Observable::PhotonNumber => "photon_number",
            Observable::MeanX => "mean_x",
            Observable::Variance => "variance",
            Observable::NormalizedVariance => "normalized_variance",
            Observable::AnalyticVariance => "analytic_variance",
            Observable::Schmidt => "schmidt",
            Observable::FieldPurity => "field_purity",
            Observable::Carpet => "carpet",
            Observable::Zones => "zones",
            Observable::Wigner => "wigner",
            Observable::PhotonDistribution => "photon_distribution",
        }
    }

    pub fn is_series(&self) -> bool {
        !matches!(
            self,
            Observable::Carpet | Observable::Zones | Observable::Wigner | Observable::PhotonDistribution
        )
    }

    pub fn needs_snapshots(&self) -> bool {
        matches!(self, Observable::Wigner | Observable::PhotonDistribution)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub const DEFAULT_ZONE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub observable: Observable,
    /// Relative to the output directory.
    pub path: String,
    #[serde(default)]
    pub format: Format,
    /// Zones only: FWHM ratio below which a row counts as a zone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

fn parse_error<E: fmt::Display>(err: serde_path_to_error::Error<E>) -> ConfigError {
    ConfigError::new(err.path().to_string(), err.inner().to_string())
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::new("", e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(parse_error)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(&mut de).map_err(parse_error)?;
        de.end().map_err(|e| ConfigError::new("", e.to_string()))?;
        Ok(cfg)
    }

    /// Reads a `.json` file as JSON and anything else as TOML, then validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        let cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text)?,
            _ => Self::from_toml(&text)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    /// SHA-256 of the canonical JSON form, as lowercase hex.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config is plain data");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn kerr_values(&self) -> Vec<f64> {
        self.model.g.values()
    }

    /// Absolute time of a value given in the configured unit.
    pub fn to_absolute(&self, value: f64) -> f64 {
        match self.time.unit {
            TimeUnit::Absolute => value,
            TimeUnit::RabiPeriods => value * TAU / (self.model.scale * self.model.coupling),
            TimeUnit::KerrPeriods => value * TAU / (self.model.scale * self.reference_g().abs()),
        }
    }

    fn reference_g(&self) -> f64 {
        self.time.reference_g.unwrap_or_else(|| {
            self.kerr_values()
                .into_iter()
                .fold(0.0, |m: f64, g| if g.abs() > m.abs() { g } else { m })
        })
    }

    /// Sample times in the configured unit.
    pub fn unit_times(&self) -> Vec<f64> {
        let TimeConfig { start, stop, steps, .. } = self.time;
        (0..=steps)
            .map(|i| {
                if i == steps {
                    stop
                } else {
                    start + (stop - start) * i as f64 / steps as f64
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |path: &str, msg: String| Err(ConfigError::new(path, msg));
        if self.name.trim().is_empty() {
            return err("name", "must not be empty".into());
        }
        let m = &self.model;
        for (path, v) in [
            ("model.omega", m.omega),
            ("model.coupling", m.coupling),
            ("model.scale", m.scale),
        ] {
            if !v.is_finite() {
                return err(path, format!("must be finite, got {v}"));
            }
        }
        if m.coupling < 0.0 {
            return err("model.coupling", format!("must be non-negative, got {}", m.coupling));
        }
        if m.scale <= 0.0 {
            return err("model.scale", format!("must be positive, got {}", m.scale));
        }
        if let Some(w0) = m.omega0 {
            if !w0.is_finite() {
                return err("model.omega0", format!("must be finite, got {w0}"));
            }
            if !m.params(0.0).is_resonant() {
                return err(
                    "model.omega0",
                    format!("must equal model.omega ({}); only the resonant case is solved", m.omega),
                );
            }
        }
        let gs = self.kerr_values();
        if gs.is_empty() {
            return err("model.g", "scan must list at least one value".into());
        }
        if let Some((i, g)) = gs.iter().enumerate().find(|(_, g)| !g.is_finite()) {
            return err(&format!("model.g[{i}]"), format!("must be finite, got {g}"));
        }

        if let Err(e) = self.initial.squeezing_parameter() {
            return err("initial", e.to_string());
        }
        let t = &self.truncation;
        if !(t.tail_eps > 0.0 && t.tail_eps < 1.0) {
            return err("truncation.tail_eps", format!("must lie in (0, 1), got {}", t.tail_eps));
        }
        if t.max_dim == 0 {
            return err("truncation.max_dim", "must be at least 1".into());
        }
        if t.dim == Some(0) {
            return err("truncation.dim", "must be at least 1".into());
        }

        let tc = &self.time;
        if tc.steps < 1 {
            return err("time.steps", "must be at least 1".into());
        }
        if !(tc.start.is_finite() && tc.stop.is_finite()) {
            return err("time", "start and stop must be finite".into());
        }
        if tc.stop <= tc.start {
            return err("time.stop", format!("must exceed time.start ({}), got {}", tc.start, tc.stop));
        }
        match tc.unit {
            TimeUnit::RabiPeriods if m.coupling == 0.0 => {
                return err("time.unit", "rabi_periods needs a nonzero model.coupling".into())
            }
            TimeUnit::KerrPeriods if self.reference_g() == 0.0 || !self.reference_g().is_finite() => {
                return err(
                    "time.unit",
                    "kerr_periods needs a nonzero time.reference_g or a nonzero g in the scan".into(),
                )
            }
            _ => {}
        }
        if let Some((i, s)) = tc.snapshots.iter().enumerate().find(|(_, s)| !s.is_finite()) {
            return err(&format!("time.snapshots[{i}]"), format!("must be finite, got {s}"));
        }

        for (name, axis) in [("grid.x", self.grid.x), ("grid.p", self.grid.p)] {
            if !axis.is_valid() {
                return err(name, "needs finite min < max and at least 2 points".into());
            }
        }

        let mut seen = BTreeSet::new();
        for (i, out) in self.outputs.iter().enumerate() {
            let at = |field: &str| format!("outputs[{i}].{field}");
            let path = Path::new(&out.path);
            if out.path.is_empty()
                || path.is_absolute()
                || path
                    .components()
                    .any(|c| !matches!(c, std::path::Component::Normal(_)))
            {
                return err(&at("path"), format!("must be a plain relative path, got {:?}", out.path));
            }
            if !seen.insert(out.path.clone()) {
                return err(&at("path"), format!("{:?} is used twice", out.path));
            }
            if out.observable.needs_snapshots() && tc.snapshots.is_empty() {
                return err(
                    &at("observable"),
                    format!("{} needs time.snapshots", out.observable.name()),
                );
            }
            if out.observable == Observable::AnalyticVariance {
                if m.coupling != 0.0 {
                    return err(&at("observable"), "analytic_variance needs model.coupling = 0".into());
                }
                if !matches!(self.initial, StateSpec::Coherent { .. }) {
                    return err(&at("observable"), "analytic_variance needs a coherent initial state".into());
                }
            }
            if let Some(th) = out.threshold {
                if out.observable != Observable::Zones {
                    return err(&at("threshold"), "only applies to zones".into());
                }
                if !(th > 0.0 && th.is_finite()) {
                    return err(&at("threshold"), format!("must be positive, got {th}"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
name = "basic"
[model]
omega = 100.0
g = [0.0, 0.1]
coupling = 1.0
[initial]
kind = "coherent"
alpha = 4.0
[time]
stop = 4.0
steps = 100
unit = "rabi_periods"
[[outputs]]
observable = "excitation"
path = "p.csv"
"#;

    #[test]
    fn parses_and_validates() {
        let cfg = ScenarioConfig::from_toml(BASIC).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.kerr_values(), vec![0.0, 0.1]);
        assert_eq!(cfg.unit_times().len(), 101);
        assert!((cfg.to_absolute(1.0) - TAU).abs() < 1e-15);
        assert_eq!(cfg.model.params(0.1).omega0, 100.0);
    }

    #[test]
    fn round_trips_through_toml_and_json() {
        let cfg = ScenarioConfig::from_toml(BASIC).unwrap();
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_json(&json).unwrap(), cfg);
    }

    #[test]
    fn parse_errors_carry_field_paths() {
        let bad = BASIC.replace("observable = \"excitation\"", "observable = \"entropy\"");
        let e = ScenarioConfig::from_toml(&bad).unwrap_err();
        assert_eq!(e.path, "outputs[0].observable");
        let bad = BASIC.replace("steps = 100", "steps = 100\nstpe = 3");
        let e = ScenarioConfig::from_toml(&bad).unwrap_err();
        assert_eq!(e.path, "time.stpe");
        assert!(e.message.contains("stpe"));
    }

    #[test]
    fn validation_errors_carry_field_paths() {
        let cases = [
            ("steps = 100", "steps = 0", "time.steps"),
            ("stop = 4.0", "stop = -1.0", "time.stop"),
            ("coupling = 1.0", "coupling = 1.0\nomega0 = 90.0", "model.omega0"),
            ("path = \"p.csv\"", "path = \"../p.csv\"", "outputs[0].path"),
            ("observable = \"excitation\"", "observable = \"wigner\"", "outputs[0].observable"),
            ("alpha = 4.0", "alpha = 4.0\nR = 2.0", "initial"),
        ];
        for (from, to, path) in cases {
            let cfg = ScenarioConfig::from_toml(&BASIC.replace(from, to));
            let e = match cfg {
                Ok(c) => c.validate().unwrap_err(),
                Err(e) => e,
            };
            assert_eq!(e.path, path, "{to}: {e}");
        }
    }

    #[test]
    fn kerr_periods_need_a_reference() {
        let text = BASIC.replace("g = [0.0, 0.1]", "g = 0.0").replace("rabi_periods", "kerr_periods");
        let e = ScenarioConfig::from_toml(&text).unwrap().validate().unwrap_err();
        assert_eq!(e.path, "time.unit");
    }

    #[test]
    fn hash_tracks_content() {
        let a = ScenarioConfig::from_toml(BASIC).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.frame = Frame::Rotating;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
