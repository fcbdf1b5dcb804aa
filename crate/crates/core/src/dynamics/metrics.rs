use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{Frame, Trajectory, GROUND_LABEL};
use crate::error::{Error, Result};
use crate::model::{wrap_phase, LevelKind, LevelSystem, TargetSuperposition};

/// Envelope level (relative to its peak) past which a run counts as finished.
pub const END_ENVELOPE_LIMIT: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelPopulation {
    pub label: String,
    pub target: bool,
    pub population: f64,
    /// |c_n|² scaled by the transferred total; zero for spectators.
    pub predicted: f64,
    /// arg b_n − arg c_n after removing the best global phase; `None` where c_n = 0.
    pub phase_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransferMetrics {
    pub frame: Frame,
    pub ground: f64,
    /// Σ over target levels of |b_n|².
    pub transferred: f64,
    /// |⟨target|ψ⟩|, maximized over a global phase.
    pub overlap: f64,
    pub fidelity: f64,
    pub spectator_leakage: f64,
    pub levels: Vec<LevelPopulation>,
    pub max_norm_error: f64,
    /// Filled in by callers that track the dark subspace.
    pub dark_max: Option<f64>,
}

pub fn metrics(traj: &Trajectory, target: &TargetSuperposition, sys: &LevelSystem) -> Result<TransferMetrics> {
    if traj.frame == Frame::Bare {
        return Err(Error::invalid("convert the bare trajectory to the rotating frame before computing metrics"));
    }
    if traj.end_envelope > END_ENVELOPE_LIMIT {
        return Err(Error::invalid(format!(
            "trajectory ends mid-pulse (envelope at the ends is {:.2e} of peak)",
            traj.end_envelope
        )));
    }
    let psi = traj.final_state();
    if psi.is_empty() {
        return Err(Error::invalid("empty trajectory"));
    }
    let ground = traj.final_population(GROUND_LABEL);

    let mut proj = C64::default();
    for (label, c) in target.coeffs() {
        if let Some(i) = traj.index_of(label) {
            proj += c.conj() * psi[i];
        }
    }
    let global = proj.arg();

    let mut transferred = 0.0;
    let mut spectator_leakage = 0.0;
    let mut levels = Vec::new();
    for lvl in sys.excited() {
        let Some(i) = traj.index_of(&lvl.label) else { continue };
        let p = psi[i].norm_sqr();
        match lvl.kind {
            LevelKind::Target => transferred += p,
            LevelKind::Spectator => spectator_leakage += p,
        }
        let c = target.amplitude(&lvl.label);
        levels.push(LevelPopulation {
            label: lvl.label.clone(),
            target: lvl.kind == LevelKind::Target,
            population: p,
            predicted: 0.0,
            phase_error: (c.norm() > 0.0 && p > 0.0).then(|| wrap_phase(psi[i].arg() - c.arg() - global)),
        });
    }
    for l in levels.iter_mut() {
        l.predicted = target.amplitude(&l.label).norm_sqr() * transferred;
    }
    let overlap = proj.norm();
    Ok(TransferMetrics {
        frame: traj.frame,
        ground,
        transferred,
        overlap,
        fidelity: overlap * overlap,
        spectator_leakage,
        levels,
        max_norm_error: traj.max_norm_error(),
        dark_max: None,
    })
}

impl TransferMetrics {
    /// Largest |p_n/P − |c_n|²| over target levels, the deviation from the
    /// predicted population law.
    pub fn law_deviation(&self) -> f64 {
        if self.transferred == 0.0 {
            return f64::INFINITY;
        }
        self.levels
            .iter()
            .filter(|l| l.target)
            .map(|l| ((l.population - l.predicted) / self.transferred).abs())
            .fold(0.0, f64::max)
    }

    pub fn population(&self, label: &str) -> f64 {
        self.levels.iter().find(|l| l.label == label).map(|l| l.population).unwrap_or(0.0)
    }
}
