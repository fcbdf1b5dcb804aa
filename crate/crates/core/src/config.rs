//! JSON run configuration shared by the command-line tool and the demos.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::analysis::ScanBase;
use crate::dynamics::{Frame, Propagation, Stepping, DEFAULT_SPAN_SIGMAS};
use crate::error::{Error, Result};
use crate::model::{derive_modes, LevelSystem, ModeSet, TargetSuperposition};
use crate::pulse::window::WindowShape;
use crate::pulse::{ChirpParams, GridSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Model file, relative to the config file's directory.
    pub model: PathBuf,
    pub target: TargetSpec,
    pub pulse: PulseSpec,
    #[serde(default)]
    pub propagator: PropagatorSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrogram: Option<SpectrogramSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
    #[serde(default)]
    pub bloch: BlochSpec,
    /// Output directory, relative to the output root.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// Rescale the amplitudes to unit norm instead of requiring it.
    #[serde(default)]
    pub normalize: bool,
    pub coeffs: Vec<CoeffSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffSpec {
    pub label: String,
    pub amplitude: f64,
    /// radians
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    /// rad/fs
    pub sigma_w: f64,
    /// fs²
    pub alpha_w: f64,
    /// fs
    #[serde(default)]
    pub t0: f64,
    /// Overall field strength: ε_n μ_n = scale × c_n.
    pub scale: f64,
    #[serde(default = "default_floor")]
    pub suppression_floor: f64,
    #[serde(default)]
    pub window: WindowShape,
}

fn default_floor() -> f64 {
    1e-6
}

impl PulseSpec {
    pub fn chirp(&self) -> Result<ChirpParams> {
        ChirpParams { sigma_w: self.sigma_w, alpha_w: self.alpha_w, t0: self.t0, suppression_floor: self.suppression_floor }
            .validated()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorSpec {
    #[serde(default = "default_frame")]
    pub frame: Frame,
    #[serde(default)]
    pub stepping: Stepping,
    /// Half-span of a run in units of σ_t.
    #[serde(default = "default_span")]
    pub span_sigmas: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Bare-frame runs only: the central mode is moved to this carrier (rad/fs).
    #[serde(default = "default_scaled_carrier")]
    pub scaled_carrier: f64,
}

fn default_frame() -> Frame {
    Frame::RwaAveraged
}
fn default_span() -> f64 {
    DEFAULT_SPAN_SIGMAS
}
fn default_samples() -> usize {
    2001
}
fn default_scaled_carrier() -> f64 {
    0.6
}

impl Default for PropagatorSpec {
    fn default() -> Self {
        Self {
            frame: default_frame(),
            stepping: Stepping::default(),
            span_sigmas: default_span(),
            samples: default_samples(),
            scaled_carrier: default_scaled_carrier(),
        }
    }
}

/// Either an explicit list or `count` evenly spaced values from `from` to `to`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    List(Vec<f64>),
    Range { from: f64, to: f64, count: usize },
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            AxisSpec::List(v) => v.clone(),
            AxisSpec::Range { from, to, count } => match *count {
                0 => vec![],
                1 => vec![*from],
                n => (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrogramSpec {
    /// Probe width σ_t^(p) in fs.
    pub probe_width: f64,
    /// Probe-time axis in fs.
    pub times: AxisSpec,
    /// Probe-frequency axis in rad/fs.
    pub freqs: AxisSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    /// Chirp axis in fs².
    pub alphas: AxisSpec,
    /// Amplitude-scale axis.
    pub scales: AxisSpec,
    /// Window widths as fractions of the half-spacing between adjacent
    /// resonances; used by the width scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_fractions: Option<AxisSpec>,
    /// Samples stored per cell (only the final state enters the metrics).
    #[serde(default = "default_scan_samples")]
    pub samples: usize,
}

fn default_scan_samples() -> usize {
    401
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlochSource {
    /// The shipped demonstration schedule.
    Reconstructed,
    /// Derived from the configured shaped field.
    Field,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlochSpec {
    #[serde(default = "default_pulses")]
    pub pulses: usize,
    #[serde(default = "default_source")]
    pub source: BlochSource,
}

fn default_pulses() -> usize {
    20
}
fn default_source() -> BlochSource {
    BlochSource::Reconstructed
}

impl Default for BlochSpec {
    fn default() -> Self {
        Self { pulses: default_pulses(), source: default_source() }
    }
}

/// A loaded config with its model resolved and validated.
#[derive(Clone, Debug)]
pub struct Run {
    pub config: RunConfig,
    /// Directory relative paths in the config are resolved against.
    pub base_dir: PathBuf,
    pub model_path: PathBuf,
    pub sys: LevelSystem,
    pub target: TargetSuperposition,
    pub chirp: ChirpParams,
    pub modes: ModeSet,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(origin, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Run> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read config: {e}")))?;
        let config = Self::from_json(&text, &path.display().to_string())?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.resolve(&base_dir)
    }

    /// Checks ranges, reads the model and builds the target, chirp and modes.
    pub fn resolve(self, base_dir: &Path) -> Result<Run> {
        let model_path = base_dir.join(&self.model);
        let text = std::fs::read_to_string(&model_path)
            .map_err(|e| Error::config("model", format!("cannot read {}: {e}", model_path.display())))?;
        self.resolve_with_model(&text, base_dir)
    }

    /// Like [`RunConfig::resolve`], with the model text supplied rather than read from disk.
    pub fn resolve_with_model(self, text: &str, base_dir: &Path) -> Result<Run> {
        self.check_ranges()?;
        let model_path = base_dir.join(&self.model);
        let sys = LevelSystem::from_json(text).map_err(|e| match e {
            Error::Config { path, msg } => Error::config(format!("{}: {path}", model_path.display()), msg),
            other => other,
        })?;
        let coeffs: Vec<(String, C64)> = self
            .target
            .coeffs
            .iter()
            .map(|c| (c.label.clone(), C64::from_polar(c.amplitude, c.phase)))
            .collect();
        let target = if self.target.normalize {
            TargetSuperposition::normalized(&sys, coeffs)?
        } else {
            TargetSuperposition::new(&sys, coeffs)?
        };
        let chirp = self.pulse.chirp().map_err(|e| Error::config("pulse", e.to_string()))?;
        let modes = derive_modes(&sys, &target, self.pulse.scale)?;
        Ok(Run { config: self, base_dir: base_dir.to_path_buf(), model_path, sys, target, chirp, modes })
    }

    fn check_ranges(&self) -> Result<()> {
        let p = &self.pulse;
        let positive = |v: f64, key: &str| {
            if v > 0.0 && v.is_finite() { Ok(()) } else { Err(Error::config(key, format!("must be positive, got {v}"))) }
        };
        positive(p.sigma_w, "pulse.sigma_w")?;
        if !p.alpha_w.is_finite() || !p.t0.is_finite() {
            return Err(Error::config("pulse", "alpha_w and t0 must be finite"));
        }
        if !(p.scale >= 0.0 && p.scale.is_finite()) {
            return Err(Error::config("pulse.scale", "must be non-negative"));
        }
        if !(0.0..1e-3).contains(&p.suppression_floor) {
            return Err(Error::config("pulse.suppression_floor", "must lie in [0, 1e-3)"));
        }
        let pr = &self.propagator;
        if !(pr.span_sigmas >= 3.0) {
            return Err(Error::config("propagator.span_sigmas", "must be at least 3"));
        }
        if pr.samples < 2 {
            return Err(Error::config("propagator.samples", "must be at least 2"));
        }
        positive(pr.scaled_carrier, "propagator.scaled_carrier")?;
        if let Some(s) = &self.spectrogram {
            positive(s.probe_width, "spectrogram.probe_width")?;
            for (key, axis) in [("spectrogram.times", &s.times), ("spectrogram.freqs", &s.freqs)] {
                let v = axis.values();
                if v.len() < 2 || v.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::config(key, "needs at least two increasing values"));
                }
            }
        }
        if let Some(s) = &self.scan {
            if s.alphas.values().is_empty() || s.scales.values().is_empty() {
                return Err(Error::config("scan", "axes must be non-empty"));
            }
            if s.samples < 2 {
                return Err(Error::config("scan.samples", "must be at least 2"));
            }
        }
        if self.bloch.pulses < 2 {
            return Err(Error::config("bloch.pulses", "must be at least 2"));
        }
        Ok(())
    }
}

impl Run {
    pub fn propagation(&self) -> Propagation {
        let p = &self.config.propagator;
        Propagation::around(&self.chirp, p.span_sigmas, p.samples).with_stepping(p.stepping)
    }

    pub fn scan_base(&self) -> ScanBase {
        let p = &self.config.pulse;
        ScanBase {
            sigma_w: p.sigma_w,
            alpha_w: p.alpha_w,
            scale: p.scale,
            t0: p.t0,
            span_sigmas: self.config.propagator.span_sigmas,
            samples: self.config.scan.as_ref().map_or(default_scan_samples(), |s| s.samples),
            stepping: self.config.propagator.stepping,
        }
    }
}
