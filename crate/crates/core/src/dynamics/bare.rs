use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::ode::{integrate, OdeSystem};
use super::{basis_labels, ground_state, ode_error, Frame, Propagation, Trajectory};
use crate::error::{Error, Result};
use crate::model::{LevelSystem, ModeSet};
use crate::pulse::TemporalField;

pub const MIN_SAMPLES_PER_CYCLE: f64 = 20.0;

/// Full dipole coupling to the real field, in the interaction picture
/// a_k = c_k e^{iE_k t}: i ȧ_0 = ε(t) Σ μ_k e^{−iω_k t} a_k, i ȧ_k = ε(t) μ_k e^{iω_k t} a_0.
#[derive(Clone, Debug)]
pub struct BareModel<'a> {
    field: &'a TemporalField,
    dipoles: Vec<f64>,
    resonances: Vec<f64>,
}

impl<'a> BareModel<'a> {
    pub fn new(sys: &LevelSystem, field: &'a TemporalField) -> Result<Self> {
        let n = sys.excited().len();
        let resonances: Vec<f64> = (0..n).map(|k| sys.resonance(k)).collect();
        let top = resonances.iter().cloned().fold(0.0, f64::max);
        let per_cycle = 2.0 * PI / (top * field.grid.step);
        if per_cycle < MIN_SAMPLES_PER_CYCLE {
            return Err(Error::invalid(format!(
                "under-resolved carrier: {per_cycle:.1} samples per optical cycle (need {MIN_SAMPLES_PER_CYCLE})"
            )));
        }
        Ok(Self { field, dipoles: sys.excited().iter().map(|l| l.dipole).collect(), resonances })
    }
}

impl OdeSystem for BareModel<'_> {
    fn dim(&self) -> usize {
        self.dipoles.len() + 1
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let e = self.field.value_at(t);
        let mut acc = C64::default();
        for (k, (mu, w)) in self.dipoles.iter().zip(&self.resonances).enumerate() {
            let u = C64::from_polar(e * mu, w * t);
            acc += u.conj() * y[k + 1];
            let v = u * y[0];
            dy[k + 1] = C64::new(v.im, -v.re);
        }
        dy[0] = C64::new(acc.im, -acc.re);
    }
}

/// Integrates the bare-basis model from the ground state.
pub fn propagate_bare(sys: &LevelSystem, field: &TemporalField, prop: &Propagation) -> Result<Trajectory> {
    let model = BareModel::new(sys, field)?;
    let times = prop.times()?;
    let n = sys.excited().len();
    let mut traj = Trajectory::with_capacity(Frame::Bare, basis_labels(sys, 0..n), times.len());
    let res = integrate(&model, &ground_state(model.dim()), &times, prop.stepping, |_, t, y| traj.push(t, y));
    traj.end_envelope = edge_ratio(field, prop);
    match res {
        Ok(stats) => {
            traj.stats = stats;
            Ok(traj)
        }
        Err(f) => Err(ode_error(f, traj)),
    }
}

/// Largest |ε| in the outer 1% of the run on either side, relative to the field maximum.
fn edge_ratio(field: &TemporalField, prop: &Propagation) -> f64 {
    let peak = field.samples.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    let (lo, hi) = (prop.start.min(prop.end), prop.start.max(prop.end));
    let w = 0.01 * (hi - lo);
    let edge = field
        .grid
        .values()
        .zip(&field.samples)
        .filter(|(t, _)| *t <= lo + w || *t >= hi - w)
        .fold(0.0_f64, |m, (_, x)| m.max(x.abs()));
    edge / peak
}

/// A copy of the system and modes with every excited energy lowered by `offset`.
///
/// Level spacings, mode detunings, Rabi frequencies and chirp rates are all
/// unchanged, so the rotating-frame dynamics are identical; only the carrier
/// shrinks, which makes the bare model affordable.
#[derive(Clone, Debug)]
pub struct ScaledCarrier {
    pub sys: LevelSystem,
    pub modes: ModeSet,
    pub offset: f64,
}

pub fn scaled_carrier(sys: &LevelSystem, modes: &ModeSet, center: f64) -> Result<ScaledCarrier> {
    if !(center > 0.0) {
        return Err(Error::invalid("scaled carrier must be positive"));
    }
    let reference = modes.modes()[(modes.len() - 1) / 2].resonance;
    let offset = reference - center;
    let shifted = sys.with_energy_offset(offset)?;
    let modes = modes.retarget(&shifted)?;
    Ok(ScaledCarrier { sys: shifted, modes, offset })
}
