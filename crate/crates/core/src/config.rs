//! Scenario configuration, read from TOML.
//!
//! ```toml
//! [protocol]
//! z_khz = 2.886751345948129        # optional, defaults to 5/√3
//! x_max_khz = 5.0
//! schedule = { kind = "cosine-ramp" }
//! # schedule = { kind = "piecewise-linear", knots = [[0.0, 0.0], [1.0, 1.0]] }
//!
//! [scenario]
//! tau_grid_ms = [0.05, 0.8]
//! beta_z = [0.6, 0.8]              # βZ, converted with the configured Z
//! sta = "both"                     # off | on | both
//! # n_steps = 4000                 # fixed step count for every propagation
//!
//! [readout]                        # optional
//! matrix = [[0.980, 0.045], [0.020, 0.955]]
//! # shots = 100000                 # finite-shot measurement; exact if absent
//!
//! [sampling]
//! n_grid = [10, 100, 1000, 10000]
//! replicas = 10000
//! seed = 7
//!
//! [waveform]                       # optional
//! tau_ms = 0.05
//! points = 201
//!
//! [output]                         # optional
//! dir = "out"
//! format = "csv"                   # csv | json
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{reference_z, DriveKind, DriveProtocol, Schedule, REFERENCE_X_MAX};
use crate::readout::ReadoutModel;

/// Configuration shipped with the binary.
pub const BUNDLED: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub protocol: ProtocolConfig,
    pub scenario: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<ReadoutConfig>,
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub waveform: WaveformConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_khz: Option<f64>,
    #[serde(default = "default_x_max")]
    pub x_max_khz: f64,
    #[serde(default = "default_schedule")]
    pub schedule: Schedule,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            z_khz: None,
            x_max_khz: REFERENCE_X_MAX,
            schedule: Schedule::CosineRamp,
        }
    }
}

fn default_x_max() -> f64 {
    REFERENCE_X_MAX
}

fn default_schedule() -> Schedule {
    Schedule::CosineRamp
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StaMode {
    Off,
    On,
    Both,
}

impl StaMode {
    /// Drive kinds covered, bare first.
    pub fn kinds(self) -> Vec<DriveKind> {
        match self {
            StaMode::Off => vec![DriveKind::Bare],
            StaMode::On => vec![DriveKind::CounterDiabatic],
            StaMode::Both => vec![DriveKind::Bare, DriveKind::CounterDiabatic],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub tau_grid_ms: Vec<f64>,
    pub beta_z: Vec<f64>,
    #[serde(default = "default_sta")]
    pub sta: StaMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
}

fn default_sta() -> StaMode {
    StaMode::Both
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutConfig {
    /// Row-major, `matrix[i][j] = p(report i | state j)`.
    pub matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub n_grid: Vec<usize>,
    pub replicas: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformConfig {
    pub tau_ms: f64,
    pub points: usize,
}

impl Default for WaveformConfig {
    fn default() -> Self {
        Self {
            tau_ms: 0.05,
            points: 201,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            format: default_format(),
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_format() -> OutputFormat {
    OutputFormat::Csv
}

/// Command-line overrides applied after loading.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_steps: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

fn field(path: &str, reason: impl fmt::Display) -> Error {
    Error::Config(format!("{path}: {reason}"))
}

impl ScenarioConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(describe_toml_error(text, &e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED).expect("bundled config is valid")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.sampling.seed = seed;
        }
        if let Some(n) = o.n_steps {
            self.scenario.n_steps = Some(n);
        }
        if let Some(dir) = &o.out_dir {
            self.output.dir = dir.clone();
        }
        if let Some(fmt) = o.format {
            self.output.format = fmt;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(z) = self.protocol.z_khz {
            if !(z > 0.0 && z.is_finite()) {
                return Err(field("protocol.z_khz", format!("must be positive and finite, got {z}")));
            }
        }
        if !self.protocol.x_max_khz.is_finite() {
            return Err(field("protocol.x_max_khz", "must be finite"));
        }
        DriveProtocol::new(
            self.z(),
            self.protocol.x_max_khz,
            1.0,
            DriveKind::Bare,
            self.protocol.schedule.clone(),
        )
        .map_err(|e| field("protocol.schedule", e))?;

        let g = &self.scenario;
        if g.tau_grid_ms.is_empty() {
            return Err(field("scenario.tau_grid_ms", "must not be empty"));
        }
        if let Some(t) = g.tau_grid_ms.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(field(
                "scenario.tau_grid_ms",
                format!("durations must be positive, got {t}"),
            ));
        }
        if g.beta_z.is_empty() {
            return Err(field("scenario.beta_z", "must not be empty"));
        }
        if let Some(b) = g.beta_z.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(field("scenario.beta_z", format!("values must be positive, got {b}")));
        }
        if g.n_steps == Some(0) {
            return Err(field("scenario.n_steps", "must be at least 1"));
        }

        if let Some(r) = &self.readout {
            let model = ReadoutModel::new(r.matrix.clone()).map_err(|e| field("readout.matrix", e))?;
            if model.dim() != 2 {
                return Err(field(
                    "readout.matrix",
                    format!("expected a 2x2 matrix, got {0}x{0}", model.dim()),
                ));
            }
            if r.shots == Some(0) {
                return Err(field("readout.shots", "must be at least 1"));
            }
        }

        let s = &self.sampling;
        if s.n_grid.is_empty() {
            return Err(field("sampling.n_grid", "must not be empty"));
        }
        if s.n_grid[0] == 0 || s.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(field(
                "sampling.n_grid",
                "sample counts must be positive and strictly increasing",
            ));
        }
        if s.replicas < 2 {
            return Err(field("sampling.replicas", "need at least two replicas"));
        }

        if !(self.waveform.tau_ms > 0.0 && self.waveform.tau_ms.is_finite()) {
            return Err(field("waveform.tau_ms", "must be positive"));
        }
        if self.waveform.points < 2 {
            return Err(field("waveform.points", "need at least two points"));
        }
        Ok(())
    }

    /// Longitudinal field, kHz.
    pub fn z(&self) -> f64 {
        self.protocol.z_khz.unwrap_or_else(reference_z)
    }

    /// Inverse temperature in 1/kHz for a dimensionless `βZ`.
    pub fn beta(&self, beta_z: f64) -> f64 {
        beta_z / self.z()
    }

    pub fn drive(&self, tau_ms: f64, kind: DriveKind) -> Result<DriveProtocol> {
        DriveProtocol::new(
            self.z(),
            self.protocol.x_max_khz,
            tau_ms,
            kind,
            self.protocol.schedule.clone(),
        )
    }

    pub fn readout_model(&self) -> Option<ReadoutModel> {
        self.readout
            .as_ref()
            .map(|r| ReadoutModel::new(r.matrix.clone()).expect("validated"))
    }

    /// Everything that determines results. The output directory is left out
    /// so runs into different directories stay byte-identical.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(out) = v.get_mut("output").and_then(|o| o.as_object_mut()) {
            out.remove("dir");
        }
        v
    }
}

fn describe_toml_error(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message().trim_end();
    match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            format!("line {line}, column {col}: {msg}")
        }
        None => msg.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_loads() {
        let c = ScenarioConfig::bundled();
        assert_eq!(c.scenario.tau_grid_ms, vec![0.05, 0.1, 0.2, 0.3, 0.8]);
        assert_eq!(c.scenario.beta_z, vec![0.6, 0.8]);
        assert_eq!(c.scenario.sta, StaMode::Both);
        assert!((c.z() - 5.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.readout_model().unwrap(), ReadoutModel::reference());
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ScenarioConfig::bundled();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), c);
    }

    fn with(replace: &str, by: &str) -> Result<ScenarioConfig> {
        assert!(BUNDLED.contains(replace), "{replace}");
        ScenarioConfig::from_toml_str(&BUNDLED.replacen(replace, by, 1))
    }

    fn message(r: Result<ScenarioConfig>) -> String {
        match r {
            Err(Error::Config(m)) => m,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_tau_grid_is_rejected() {
        let m = message(with("tau_grid_ms = [0.05, 0.1, 0.2, 0.3, 0.8]", "tau_grid_ms = []"));
        assert!(m.starts_with("scenario.tau_grid_ms"), "{m}");
    }

    #[test]
    fn non_positive_beta_is_rejected() {
        let m = message(with("beta_z = [0.6, 0.8]", "beta_z = [0.6, -0.8]"));
        assert!(m.starts_with("scenario.beta_z"), "{m}");
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let m = message(with("sta = \"both\"", "sta = both"));
        let line = BUNDLED.lines().position(|l| l.starts_with("sta =")).unwrap() + 1;
        assert!(m.contains(&format!("line {line}, column")), "{m}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let m = message(with("[sampling]", "[sampling]\nsed = 3"));
        assert!(m.contains("sed"), "{m}");
    }

    #[test]
    fn bad_readout_is_rejected() {
        let m = message(with("[0.020, 0.955]", "[0.030, 0.955]"));
        assert!(m.starts_with("readout.matrix"), "{m}");
    }

    #[test]
    fn overrides_apply() {
        let mut c = ScenarioConfig::bundled();
        c.apply(&Overrides {
            seed: Some(9),
            n_steps: Some(4000),
            format: Some(OutputFormat::Json),
            out_dir: None,
        })
        .unwrap();
        assert_eq!(c.sampling.seed, 9);
        assert_eq!(c.scenario.n_steps, Some(4000));
        assert_eq!(c.output.format, OutputFormat::Json);
        assert!(c
            .apply(&Overrides {
                n_steps: Some(0),
                ..Default::default()
            })
            .is_err());
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ScenarioConfig::from_toml_str(
            "[scenario]\ntau_grid_ms = [0.1]\nbeta_z = [0.6]\n[sampling]\nn_grid = [10]\nreplicas = 2\nseed = 1\n",
        )
        .unwrap();
        assert_eq!(c.protocol, ProtocolConfig::default());
        assert_eq!(c.output.format, OutputFormat::Csv);
        assert!(c.readout.is_none());
    }

    #[test]
    fn piecewise_schedule_parses() {
        let c = with(
            "schedule = { kind = \"cosine-ramp\" }",
            "schedule = { kind = \"piecewise-linear\", knots = [[0.0, 0.0], [0.5, 0.2], [1.0, 1.0]] }",
        )
        .unwrap();
        assert!(matches!(c.protocol.schedule, Schedule::PiecewiseLinear { ref knots } if knots.len() == 3));
    }
}
