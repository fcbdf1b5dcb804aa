//! Time propagation under three models of decreasing approximation:
//! the fully averaged rotating-wave model, the modal model that keeps the
//! inter-mode beat terms and spectator levels, and the bare-basis model
//! driven by the real field without any rotating-wave approximation.

mod bare;
mod metrics;
mod modal;
pub mod ode;
mod rwa;

pub use bare::{propagate_bare, scaled_carrier, BareModel, ScaledCarrier};
pub use metrics::{metrics, LevelPopulation, TransferMetrics};
pub use modal::{propagate_modal, ModalModel};
pub use ode::{OdeStats, Stepping, Tolerances};
pub use rwa::{propagate_rwa, rwa_hamiltonian, RwaModel};

use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LevelSystem;
use crate::pulse::ChirpParams;

pub const GROUND_LABEL: &str = "ground";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    /// Rotating frame of the mode phases, fully averaged (ground + targets).
    #[serde(alias = "rwa")]
    RwaAveraged,
    /// Rotating frame of the mode phases, every excited level.
    Modal,
    /// Bare eigenbasis in the interaction picture, a_k = c_k e^{iE_k t}.
    Bare,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::RwaAveraged => "rwa-averaged",
            Frame::Modal => "modal",
            Frame::Bare => "bare",
        }
    }
}

/// Output times and stepping for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Propagation {
    pub start: f64,
    pub end: f64,
    /// Number of stored times, including both ends.
    pub samples: usize,
    pub stepping: Stepping,
}

/// Default half-span in units of σ_t; f(t0 ± 5σ_t) / peak ≈ 3.7e-6.
pub const DEFAULT_SPAN_SIGMAS: f64 = 5.0;

impl Propagation {
    pub fn around(chirp: &ChirpParams, sigmas: f64, samples: usize) -> Self {
        let half = sigmas * chirp.time_params().sigma_t;
        Self { start: chirp.t0 - half, end: chirp.t0 + half, samples, stepping: Stepping::default() }
    }

    pub fn with_stepping(mut self, stepping: Stepping) -> Self {
        self.stepping = stepping;
        self
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        if self.samples < 2 || !(self.end != self.start) || !self.start.is_finite() || !self.end.is_finite() {
            return Err(Error::invalid("propagation needs two distinct finite endpoints and >= 2 samples"));
        }
        let n = self.samples;
        let mut t: Vec<f64> =
            (0..n).map(|i| self.start + (self.end - self.start) * i as f64 / (n - 1) as f64).collect();
        t[n - 1] = self.end;
        Ok(t)
    }

    /// Same span traversed in the opposite direction.
    pub fn reversed(&self) -> Self {
        Self { start: self.end, end: self.start, ..self.clone() }
    }

    pub(crate) fn check_covers(&self, chirp: &ChirpParams, sigmas: f64) -> Result<()> {
        let half = sigmas * chirp.time_params().sigma_t;
        let (lo, hi) = (self.start.min(self.end), self.start.max(self.end));
        if lo > chirp.t0 - half * (1.0 - 1e-12) || hi < chirp.t0 + half * (1.0 - 1e-12) {
            return Err(Error::invalid(format!("time span must cover t0 ± {sigmas}σ_t")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub frame: Frame,
    /// Basis labels, ground first.
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub coeffs: Vec<Vec<C64>>,
    /// Envelope at the ends of the run relative to its peak.
    pub end_envelope: f64,
    pub stats: OdeStats,
}

impl Trajectory {
    pub(crate) fn with_capacity(frame: Frame, labels: Vec<String>, n: usize) -> Self {
        Self {
            frame,
            labels,
            times: Vec::with_capacity(n),
            coeffs: Vec::with_capacity(n),
            end_envelope: 0.0,
            stats: OdeStats::default(),
        }
    }

    pub(crate) fn push(&mut self, t: f64, y: &[C64]) {
        self.times.push(t);
        self.coeffs.push(y.to_vec());
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn final_state(&self) -> &[C64] {
        self.coeffs.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Final population of `label`, zero if it is not in the basis.
    pub fn final_population(&self, label: &str) -> f64 {
        self.index_of(label).map(|i| self.final_state()[i].norm_sqr()).unwrap_or(0.0)
    }

    pub fn population_series(&self, label: &str) -> Option<Vec<f64>> {
        let i = self.index_of(label)?;
        Some(self.coeffs.iter().map(|c| c[i].norm_sqr()).collect())
    }

    /// max_t | ‖b(t)‖² − 1 |
    pub fn max_norm_error(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| (c.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Re-expresses a bare-basis trajectory in the rotating frame of the mode phases,
    /// b_k = a_k exp[i(α_tτ²/2 − φ_c − ω_k t0)], τ = t − t0.
    pub fn to_rotating(&self, sys: &LevelSystem, chirp: &ChirpParams) -> Result<Trajectory> {
        if self.frame != Frame::Bare {
            return Err(Error::invalid(format!("{} trajectory is already rotating", self.frame.name())));
        }
        let tp = chirp.time_params();
        let omegas: Vec<Option<f64>> = self.labels[1..]
            .iter()
            .map(|l| sys.index_of(l).map(|k| sys.resonance(k)))
            .collect();
        if omegas.iter().any(Option::is_none) {
            return Err(Error::invalid("trajectory basis does not match the level system"));
        }
        let mut out = self.clone();
        out.frame = Frame::Modal;
        for (t, c) in out.times.iter().zip(out.coeffs.iter_mut()) {
            let tau = t - chirp.t0;
            let common = 0.5 * tp.alpha_t * tau * tau - tp.phi_c;
            for (z, w) in c[1..].iter_mut().zip(&omegas) {
                *z *= C64::from_polar(1.0, common - w.unwrap() * chirp.t0);
            }
        }
        Ok(out)
    }

    /// CSV with t, then population and phase of every basis state.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t_fs")?;
        for l in &self.labels {
            write!(w, ",pop_{l},arg_{l}")?;
        }
        writeln!(w)?;
        for (t, c) in self.times.iter().zip(&self.coeffs) {
            write!(w, "{t:.6}")?;
            for z in c {
                write!(w, ",{:.12e},{:.9}", z.norm_sqr(), z.arg())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub(crate) fn ode_error(f: ode::OdeFailure, partial: Trajectory) -> Error {
    Error::Integrator { t: f.t, msg: f.msg, partial: Some(Box::new(partial)) }
}

pub(crate) fn basis_labels(sys: &LevelSystem, levels: impl IntoIterator<Item = usize>) -> Vec<String> {
    std::iter::once(GROUND_LABEL.to_string())
        .chain(levels.into_iter().map(|k| sys.excited()[k].label.clone()))
        .collect()
}

pub(crate) fn ground_state(dim: usize) -> Vec<C64> {
    let mut y = vec![C64::default(); dim];
    y[0] = C64::new(1.0, 0.0);
    y
}
