use num_complex::Complex64 as C64;

use super::ode::{integrate, OdeSystem};
use super::{basis_labels, ground_state, ode_error, Frame, Propagation, Trajectory};
use crate::error::{Error, Result};
use crate::model::{LevelSystem, ModeSet};
use crate::pulse::{ChirpParams, TimeParams};

/// First-stage averaged model over every excited level.
///
/// Each level k rotates with its own resonance plus the common chirp, so all
/// share Δ(t), and couples to every mode l through
/// f μ_k ε_l e^{i(ω_k − ω_l)τ − iφ_l}. Frequencies are kept relative to a
/// reference to avoid large phase arguments.
#[derive(Clone, Debug)]
pub struct ModalModel {
    dipoles: Vec<f64>,
    level_offsets: Vec<f64>,
    mode_amps: Vec<C64>,
    mode_offsets: Vec<f64>,
    labels: Vec<String>,
    tp: TimeParams,
    t0: f64,
}

impl ModalModel {
    pub fn new(sys: &LevelSystem, modes: &ModeSet, chirp: &ChirpParams) -> Result<Self> {
        let chirp = chirp.validated()?;
        if modes.is_empty() {
            return Err(Error::invalid("empty mode set"));
        }
        let reference = modes.modes()[(modes.len() - 1) / 2].resonance;
        let n = sys.excited().len();
        Ok(Self {
            dipoles: sys.excited().iter().map(|l| l.dipole).collect(),
            level_offsets: (0..n).map(|k| sys.resonance(k) - reference).collect(),
            mode_amps: modes.modes().iter().map(|m| m.complex_amplitude()).collect(),
            mode_offsets: modes.modes().iter().map(|m| m.resonance - reference).collect(),
            labels: basis_labels(sys, 0..n),
            tp: chirp.time_params(),
            t0: chirp.t0,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Couplings cpl_k(t) of every excited level to the ground level.
    pub fn couplings(&self, t: f64) -> Vec<C64> {
        let tau = t - self.t0;
        let s = self.comb(tau) * self.tp.envelope(tau);
        self.dipoles
            .iter()
            .zip(&self.level_offsets)
            .map(|(mu, w)| s * C64::from_polar(*mu, w * tau))
            .collect()
    }

    fn comb(&self, tau: f64) -> C64 {
        self.mode_amps
            .iter()
            .zip(&self.mode_offsets)
            .map(|(a, w)| a * C64::from_polar(1.0, -w * tau))
            .sum()
    }

    pub fn propagate_from(&self, initial: &[C64], prop: &Propagation) -> Result<Trajectory> {
        if initial.len() != self.dim() {
            return Err(Error::invalid("initial state has the wrong dimension"));
        }
        let times = prop.times()?;
        let mut traj = Trajectory::with_capacity(Frame::Modal, self.labels.clone(), times.len());
        let res = integrate(self, initial, &times, prop.stepping, |_, t, y| traj.push(t, y));
        let edge = |t: f64| self.tp.envelope(t - self.t0) / self.tp.peak;
        traj.end_envelope = edge(prop.start).max(edge(prop.end));
        match res {
            Ok(stats) => {
                traj.stats = stats;
                Ok(traj)
            }
            Err(f) => Err(ode_error(f, traj)),
        }
    }
}

impl OdeSystem for ModalModel {
    fn dim(&self) -> usize {
        self.dipoles.len() + 1
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let tau = t - self.t0;
        let s = self.comb(tau) * self.tp.envelope(tau);
        let d = self.tp.detuning(tau);
        let mut acc = C64::default();
        for (k, (mu, w)) in self.dipoles.iter().zip(&self.level_offsets).enumerate() {
            let cpl = s * C64::from_polar(*mu, w * tau);
            acc += cpl.conj() * y[k + 1];
            let v = y[k + 1] * d + cpl * y[0];
            dy[k + 1] = C64::new(v.im, -v.re);
        }
        dy[0] = C64::new(acc.im, -acc.re);
    }
}

pub fn propagate_modal(
    sys: &LevelSystem,
    modes: &ModeSet,
    chirp: &ChirpParams,
    prop: &Propagation,
) -> Result<Trajectory> {
    prop.check_covers(chirp, 3.0)?;
    let model = ModalModel::new(sys, modes, chirp)?;
    model.propagate_from(&ground_state(model.dim()), prop)
}
