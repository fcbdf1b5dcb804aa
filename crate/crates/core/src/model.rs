//! Level systems, target superpositions and the inversion of a target into
//! field-mode amplitudes and phases.
//!
//! Energies are angular frequencies in rad/fs with ħ = 1.

use std::collections::HashSet;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelKind {
    Target,
    Spectator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Level {
    pub label: String,
    /// rad/fs
    pub energy: f64,
    /// Transition dipole to the ground level, arbitrary units.
    pub dipole: f64,
    pub kind: LevelKind,
}

/// On-disk schema of a model file. Validation happens in [`LevelSystem::new`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// rad/fs
    pub ground_energy: f64,
    pub levels: Vec<Level>,
}

/// A ground level coupled to an ordered manifold of excited levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSystem {
    ground_energy: f64,
    excited: Vec<Level>,
}

impl LevelSystem {
    pub fn new(ground_energy: f64, excited: Vec<Level>) -> Result<Self> {
        if !ground_energy.is_finite() {
            return Err(Error::config("ground_energy", "must be finite"));
        }
        if excited.is_empty() {
            return Err(Error::config("levels", "at least one excited level is required"));
        }
        let mut seen = HashSet::new();
        for (i, lvl) in excited.iter().enumerate() {
            let path = |field: &str| format!("levels[{i}].{field}");
            if lvl.label.is_empty() {
                return Err(Error::config(path("label"), "empty label"));
            }
            if !seen.insert(lvl.label.as_str()) {
                return Err(Error::config(path("label"), format!("duplicate label '{}'", lvl.label)));
            }
            if !lvl.energy.is_finite() || lvl.energy <= ground_energy {
                return Err(Error::config(path("energy"), "must be finite and above the ground energy"));
            }
            if i > 0 && lvl.energy <= excited[i - 1].energy {
                return Err(Error::config(path("energy"), "excited energies must be strictly increasing"));
            }
            if !lvl.dipole.is_finite() || lvl.dipole < 0.0 {
                return Err(Error::config(path("dipole"), "negative or non-finite dipole"));
            }
            if lvl.kind == LevelKind::Target && lvl.dipole == 0.0 {
                return Err(Error::config(path("dipole"), "target levels need a nonzero dipole"));
            }
        }
        if !excited.iter().any(|l| l.kind == LevelKind::Target) {
            return Err(Error::config("levels", "no target level"));
        }
        Ok(Self { ground_energy, excited })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::config("model", e.to_string()))?;
        Self::new(file.ground_energy, file.levels)
    }

    pub fn to_model_file(&self) -> ModelFile {
        ModelFile { description: None, ground_energy: self.ground_energy, levels: self.excited.clone() }
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    pub fn excited(&self) -> &[Level] {
        &self.excited
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.excited.iter().position(|l| l.label == label)
    }

    /// Resonance E_k − E_0 of excited level `k`.
    pub fn resonance(&self, k: usize) -> f64 {
        self.excited[k].energy - self.ground_energy
    }

    /// Indices (into [`Self::excited`]) of the target levels, in energy order.
    pub fn target_indices(&self) -> Vec<usize> {
        self.excited
            .iter()
            .enumerate()
            .filter(|(_, l)| l.kind == LevelKind::Target)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn n_targets(&self) -> usize {
        self.excited.iter().filter(|l| l.kind == LevelKind::Target).count()
    }

    /// Same system with every excited energy lowered by `offset`.
    ///
    /// Used to run the no-RWA propagator at a reduced carrier frequency: all
    /// level spacings, and hence detunings relative to the field modes, are
    /// unchanged.
    pub fn with_energy_offset(&self, offset: f64) -> Result<Self> {
        let excited = self
            .excited
            .iter()
            .map(|l| Level { energy: l.energy - offset, ..l.clone() })
            .collect();
        Self::new(self.ground_energy, excited)
    }

    /// SHA-256 of the canonical JSON form, for run manifests.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(&self.to_model_file()).expect("model serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Normalized complex amplitudes on target levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TargetSuperposition {
    coeffs: Vec<(String, C64)>,
}

const NORM_TOL: f64 = 1e-12;

impl TargetSuperposition {
    pub fn new(sys: &LevelSystem, coeffs: Vec<(String, C64)>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::config("target", "empty target superposition"));
        }
        let mut seen = HashSet::new();
        for (i, (label, c)) in coeffs.iter().enumerate() {
            let path = format!("target[{i}]");
            let k = sys
                .index_of(label)
                .ok_or_else(|| Error::config(&path, format!("unknown level '{label}'")))?;
            if sys.excited()[k].kind != LevelKind::Target {
                return Err(Error::config(&path, format!("level '{label}' is not a target level")));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::config(&path, format!("level '{label}' listed twice")));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::config(&path, "non-finite amplitude"));
            }
        }
        let norm: f64 = coeffs.iter().map(|(_, c)| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::config("target", format!("sum of |c|^2 is {norm}, expected 1")));
        }
        Ok(Self { coeffs })
    }

    /// Like [`Self::new`] but rescales the amplitudes to unit norm first.
    pub fn normalized(sys: &LevelSystem, coeffs: Vec<(String, C64)>) -> Result<Self> {
        let norm = coeffs.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::config("target", "all amplitudes are zero"));
        }
        Self::new(sys, coeffs.into_iter().map(|(l, c)| (l, c / norm)).collect())
    }

    pub fn coeffs(&self) -> &[(String, C64)] {
        &self.coeffs
    }

    pub fn amplitude(&self, label: &str) -> C64 {
        self.coeffs
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, c)| *c)
            .unwrap_or_default()
    }
}

/// One field mode, resonant with one target level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub label: String,
    /// Index into [`LevelSystem::excited`].
    pub level: usize,
    /// rad/fs
    pub resonance: f64,
    pub amplitude: f64,
    /// radians, in (−π, π]
    pub phase: f64,
}

impl Mode {
    /// ε_n e^{−iφ_n}
    pub fn complex_amplitude(&self) -> C64 {
        C64::from_polar(self.amplitude, -self.phase)
    }
}

/// The shaped comb: exactly one mode per target level, in level order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    modes: Vec<Mode>,
}

impl ModeSet {
    pub fn new(sys: &LevelSystem, modes: Vec<Mode>) -> Result<Self> {
        let targets = sys.target_indices();
        if modes.len() != targets.len() {
            return Err(Error::invalid(format!(
                "{} modes for {} target levels",
                modes.len(),
                targets.len()
            )));
        }
        for (m, &k) in modes.iter().zip(&targets) {
            if m.level != k || m.label != sys.excited()[k].label {
                return Err(Error::invalid(format!("mode '{}' is not assigned to target level {k}", m.label)));
            }
            if (m.resonance - sys.resonance(k)).abs() > 1e-12 {
                return Err(Error::invalid(format!("mode '{}' is off resonance", m.label)));
            }
            if !(m.amplitude >= 0.0) || !m.amplitude.is_finite() {
                return Err(Error::invalid(format!("mode '{}' has an invalid amplitude", m.label)));
            }
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&Mode> {
        self.modes.iter().find(|m| m.label == label)
    }

    /// Copy with one mode's amplitude set to zero.
    pub fn without(&self, label: &str) -> Result<Self> {
        if self.get(label).is_none() {
            return Err(Error::invalid(format!("no mode for level '{label}'")));
        }
        let modes = self
            .modes
            .iter()
            .map(|m| if m.label == label { Mode { amplitude: 0.0, ..m.clone() } } else { m.clone() })
            .collect();
        Ok(Self { modes })
    }

    /// Copy with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            modes: self.modes.iter().map(|m| Mode { amplitude: m.amplitude * factor, ..m.clone() }).collect(),
        }
    }

    /// Re-targets the resonances onto `sys` (same labels), keeping amplitudes and phases.
    pub fn retarget(&self, sys: &LevelSystem) -> Result<Self> {
        let modes = self
            .modes
            .iter()
            .map(|m| {
                let k = sys
                    .index_of(&m.label)
                    .ok_or_else(|| Error::invalid(format!("level '{}' missing", m.label)))?;
                Ok(Mode { level: k, resonance: sys.resonance(k), ..m.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sys, modes)
    }

    /// Effective Rabi frequency per unit envelope, √Σ|ε_n μ_n0|².
    pub fn coupling_norm(&self, sys: &LevelSystem) -> f64 {
        self.modes
            .iter()
            .map(|m| (m.amplitude * sys.excited()[m.level].dipole).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Normalized bright direction b_f over the target levels, ∝ ε_n μ_n0 e^{−iφ_n}.
    ///
    /// The global phase is fixed so that the largest component (lowest index
    /// on ties) is real and positive. `None` if every mode is dark.
    pub fn bright_direction(&self, sys: &LevelSystem) -> Option<Vec<C64>> {
        let raw: Vec<C64> = self
            .modes
            .iter()
            .map(|m| m.complex_amplitude() * sys.excited()[m.level].dipole)
            .collect();
        let norm = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let mut lead = 0;
        for (i, c) in raw.iter().enumerate() {
            if c.norm() > raw[lead].norm() * (1.0 + 1e-12) {
                lead = i;
            }
        }
        let pin = C64::from_polar(1.0, -raw[lead].arg());
        Some(raw.iter().map(|c| c * pin / norm).collect())
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Inverts a target superposition into mode amplitudes and phases:
/// ε_n e^{−iφ_n} = scale · c_n / μ_n0.
///
/// Target levels absent from `target` get a zero-amplitude mode.
pub fn derive_modes(sys: &LevelSystem, target: &TargetSuperposition, scale: f64) -> Result<ModeSet> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(Error::invalid("mode scale must be non-negative"));
    }
    let mut modes = Vec::with_capacity(sys.n_targets());
    for k in sys.target_indices() {
        let lvl = &sys.excited()[k];
        let c = target.amplitude(&lvl.label);
        if lvl.dipole == 0.0 {
            return Err(Error::invalid(format!("target level '{}' has zero dipole", lvl.label)));
        }
        let w = scale * c / lvl.dipole;
        let phase = if w.norm() == 0.0 { 0.0 } else { wrap_phase(-w.arg()) };
        modes.push(Mode {
            label: lvl.label.clone(),
            level: k,
            resonance: sys.resonance(k),
            amplitude: w.norm(),
            phase,
        });
    }
    ModeSet::new(sys, modes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(label: &str, energy: f64, dipole: f64, kind: LevelKind) -> Level {
        Level { label: label.into(), energy, dipole, kind }
    }

    fn three_level() -> LevelSystem {
        LevelSystem::new(
            0.0,
            vec![
                level("a", 1.0, 0.5, LevelKind::Target),
                level("b", 1.1, 1.0, LevelKind::Target),
                level("s", 1.2, 0.3, LevelKind::Spectator),
            ],
        )
        .unwrap()
    }

    #[test]
    fn demo_config_loads() {
        let text = include_str!("../../../configs/demo_model.json");
        let sys = LevelSystem::from_json(text).unwrap();
        assert_eq!(sys.excited().len(), 10);
        assert_eq!(sys.n_targets(), 6);
    }

    #[test]
    fn duplicate_label_rejected() {
        let err = LevelSystem::new(
            0.0,
            vec![level("a", 1.0, 1.0, LevelKind::Target), level("a", 1.1, 1.0, LevelKind::Target)],
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("duplicate label"), "{msg}");
        assert!(msg.contains("levels[1].label"), "{msg}");
    }

    #[test]
    fn non_monotone_and_negative_dipole_rejected() {
        let e = LevelSystem::new(
            0.0,
            vec![level("a", 1.1, 1.0, LevelKind::Target), level("b", 1.0, 1.0, LevelKind::Target)],
        )
        .unwrap_err();
        assert!(e.to_string().contains("levels[1].energy"));
        let e = LevelSystem::new(0.0, vec![level("a", 1.0, -1.0, LevelKind::Target)]).unwrap_err();
        assert!(e.to_string().contains("levels[0].dipole"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"ground_energy":0,"levels":[{"label":"a","energy":1,"dipole":1,"kind":"target","x":1}]}"#;
        assert!(LevelSystem::from_json(text).is_err());
    }

    #[test]
    fn minimal_two_level_system() {
        let text = r#"{"ground_energy":0,"levels":[{"label":"e","energy":2.9,"dipole":1,"kind":"target"}]}"#;
        let sys = LevelSystem::from_json(text).unwrap();
        assert_eq!(sys.excited().len(), 1);
    }

    #[test]
    fn target_must_reference_target_levels() {
        let sys = three_level();
        assert!(TargetSuperposition::new(&sys, vec![("s".into(), C64::new(1.0, 0.0))]).is_err());
        assert!(TargetSuperposition::new(&sys, vec![("a".into(), C64::new(0.9, 0.0))]).is_err());
    }

    #[test]
    fn single_level_target_gives_single_mode() {
        let sys = three_level();
        let t = TargetSuperposition::new(&sys, vec![("a".into(), C64::new(1.0, 0.0))]).unwrap();
        let modes = derive_modes(&sys, &t, 2.0).unwrap();
        assert_eq!(modes.len(), 2);
        assert!((modes.modes()[0].amplitude - 4.0).abs() < 1e-15);
        assert_eq!(modes.modes()[0].phase, 0.0);
        assert_eq!(modes.modes()[1].amplitude, 0.0);
        assert_eq!(modes.modes()[0].resonance, 1.0);
    }

    #[test]
    fn equal_weights_equal_dipoles_equal_amplitudes() {
        let sys = LevelSystem::new(
            0.0,
            vec![level("a", 1.0, 0.7, LevelKind::Target), level("b", 1.1, 0.7, LevelKind::Target)],
        )
        .unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let t = TargetSuperposition::new(
            &sys,
            vec![("a".into(), C64::new(h, 0.0)), ("b".into(), C64::new(0.0, h))],
        )
        .unwrap();
        let m = derive_modes(&sys, &t, 1.0).unwrap();
        assert!((m.modes()[0].amplitude - m.modes()[1].amplitude).abs() < 1e-15);
        assert!((m.modes()[1].phase + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn energy_offset_preserves_spacings() {
        let sys = three_level();
        let shifted = sys.with_energy_offset(0.5).unwrap();
        assert!((shifted.resonance(1) - shifted.resonance(0) - 0.1).abs() < 1e-12);
        assert!(sys.with_energy_offset(1.0).is_err());
    }
}
