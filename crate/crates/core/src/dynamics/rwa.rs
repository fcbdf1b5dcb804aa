use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::ode::{integrate, OdeSystem};
use super::{basis_labels, ground_state, ode_error, Frame, Propagation, Trajectory};
use crate::error::{Error, Result};
use crate::model::{LevelSystem, ModeSet};
use crate::pulse::{ChirpParams, TimeParams};

/// Fully averaged model over ground + target levels, H00 = 0, Hn0 = Ω_n(t),
/// Hnn = Δ_n(t).
#[derive(Clone, Debug)]
pub struct RwaModel {
    /// ε_n μ_n e^{−iφ_n}, so Ω_n(t) = f(t) × coupling.
    couplings: Vec<C64>,
    labels: Vec<String>,
    tp: TimeParams,
    t0: f64,
    /// Relative detuning error per level: Δ_n = Δ (1 + skew_n). Zero for the ideal tuning.
    skew: Vec<f64>,
}

impl RwaModel {
    pub fn new(sys: &LevelSystem, modes: &ModeSet, chirp: &ChirpParams) -> Result<Self> {
        let chirp = chirp.validated()?;
        let targets = sys.target_indices();
        if modes.len() != targets.len() {
            return Err(Error::invalid("modes do not cover the target levels"));
        }
        let couplings = modes
            .modes()
            .iter()
            .map(|m| m.complex_amplitude() * sys.excited()[m.level].dipole)
            .collect();
        Ok(Self {
            couplings,
            labels: basis_labels(sys, targets),
            tp: chirp.time_params(),
            t0: chirp.t0,
            skew: vec![0.0; modes.len()],
        })
    }

    /// Mis-tunes the per-level chirp; used as a negative control for the dark-state theorem.
    pub fn with_detuning_skew(mut self, skew: Vec<f64>) -> Result<Self> {
        if skew.len() != self.couplings.len() {
            return Err(Error::invalid("one skew value per target level is required"));
        }
        self.skew = skew;
        Ok(self)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn time_params(&self) -> &TimeParams {
        &self.tp
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn couplings(&self) -> &[C64] {
        &self.couplings
    }

    pub fn rabi(&self, t: f64) -> Vec<C64> {
        let f = self.tp.envelope(t - self.t0);
        self.couplings.iter().map(|c| c * f).collect()
    }

    pub fn detunings(&self, t: f64) -> Vec<f64> {
        let d = self.tp.detuning(t - self.t0);
        self.skew.iter().map(|s| d * (1.0 + s)).collect()
    }

    pub fn hamiltonian(&self, t: f64) -> DMatrix<C64> {
        let n = self.couplings.len() + 1;
        let mut h = DMatrix::zeros(n, n);
        for (k, (om, d)) in self.rabi(t).into_iter().zip(self.detunings(t)).enumerate() {
            h[(0, k + 1)] = om.conj();
            h[(k + 1, 0)] = om;
            h[(k + 1, k + 1)] = C64::new(d, 0.0);
        }
        h
    }

    /// Propagates `initial` over `prop`'s output times.
    pub fn propagate_from(&self, initial: &[C64], prop: &Propagation) -> Result<Trajectory> {
        if initial.len() != self.dim() {
            return Err(Error::invalid("initial state has the wrong dimension"));
        }
        let times = prop.times()?;
        let mut traj = Trajectory::with_capacity(Frame::RwaAveraged, self.labels.clone(), times.len());
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

impl OdeSystem for RwaModel {
    fn dim(&self) -> usize {
        self.couplings.len() + 1
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let tau = t - self.t0;
        let f = self.tp.envelope(tau);
        let d = self.tp.detuning(tau);
        let mut acc = C64::default();
        for (k, (c, s)) in self.couplings.iter().zip(&self.skew).enumerate() {
            let om = c * f;
            acc += om.conj() * y[k + 1];
            // −i(Δ b_k + Ω_k b_0)
            let v = y[k + 1] * (d * (1.0 + s)) + om * y[0];
            dy[k + 1] = C64::new(v.im, -v.re);
        }
        dy[0] = C64::new(acc.im, -acc.re);
    }
}

pub fn rwa_hamiltonian(sys: &LevelSystem, modes: &ModeSet, chirp: &ChirpParams, t: f64) -> Result<DMatrix<C64>> {
    Ok(RwaModel::new(sys, modes, chirp)?.hamiltonian(t))
}

/// Integrates the averaged model from the ground state.
pub fn propagate_rwa(sys: &LevelSystem, modes: &ModeSet, chirp: &ChirpParams, prop: &Propagation) -> Result<Trajectory> {
    prop.check_covers(chirp, 3.0)?;
    let model = RwaModel::new(sys, modes, chirp)?;
    model.propagate_from(&ground_state(model.dim()), prop)
}
