//! The shaped driving field in the frequency and time domains.
//!
//! Convention: a real field and its spectrum are related by
//! ε(t) = 2 Re ∫₀^∞ A(ω) e^{−iωt} dω, so a window A ∝ e^{i(ωt0 − φ)} puts a
//! pulse at t0 with carrier phase cos(ω(t−t0) + φ).

mod spectrum;
mod synth;
mod train;
pub mod window;

pub use spectrum::{block_window, build_spectrum, build_spectrum_on, sample_modes, single_chirp_pulse, GridSpec};
pub use synth::{analytic_signal, synthesize_time, to_spectrum};
pub use train::{analytic_train, fit_phase_law, train_features, PhaseLaw, SubPulse, TrainFeatures};

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChirpParams {
    /// Per-window spectral width, rad/fs.
    pub sigma_w: f64,
    /// Spectral chirp, fs².
    pub alpha_w: f64,
    /// Train center, fs.
    pub t0: f64,
    /// Relative level below which the spectrum is zeroed between windows.
    pub suppression_floor: f64,
}

pub const DEFAULT_SUPPRESSION_FLOOR: f64 = 1e-6;

impl ChirpParams {
    pub fn new(sigma_w: f64, alpha_w: f64, t0: f64) -> Result<Self> {
        Self { sigma_w, alpha_w, t0, suppression_floor: DEFAULT_SUPPRESSION_FLOOR }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.sigma_w > 0.0) || !self.sigma_w.is_finite() {
            return Err(Error::invalid("sigma_w must be positive"));
        }
        if !self.alpha_w.is_finite() || !self.t0.is_finite() {
            return Err(Error::invalid("alpha_w and t0 must be finite"));
        }
        if !(0.0..1e-3).contains(&self.suppression_floor) {
            return Err(Error::invalid("suppression_floor must lie in [0, 1e-3)"));
        }
        Ok(self)
    }

    pub fn time_params(&self) -> TimeParams {
        time_params_unchecked(self.sigma_w, self.alpha_w)
    }
}

/// Temporal envelope parameters of a chirped Gaussian window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeParams {
    /// fs
    pub sigma_t: f64,
    /// Temporal chirp rate, rad/fs².
    pub alpha_t: f64,
    /// Constant phase of the chirped window, radians.
    pub phi_c: f64,
    /// Prefactor of the envelope f(t).
    pub peak: f64,
}

impl TimeParams {
    /// f(t0 + tau)
    pub fn envelope(&self, tau: f64) -> f64 {
        self.peak * (-0.5 * (tau / self.sigma_t).powi(2)).exp()
    }

    /// Common detuning Δ(t0 + tau) = −α_t tau.
    pub fn detuning(&self, tau: f64) -> f64 {
        -self.alpha_t * tau
    }
}

pub fn time_params(sigma_w: f64, alpha_w: f64) -> Result<TimeParams> {
    if !(sigma_w > 0.0) || !sigma_w.is_finite() || !alpha_w.is_finite() {
        return Err(Error::invalid("time_params needs sigma_w > 0 and finite alpha_w"));
    }
    Ok(time_params_unchecked(sigma_w, alpha_w))
}

fn time_params_unchecked(sigma_w: f64, alpha_w: f64) -> TimeParams {
    let s2 = sigma_w * sigma_w;
    let x = alpha_w * s2;
    let q = 1.0 + x * x;
    TimeParams {
        sigma_t: (q / s2).sqrt(),
        alpha_t: alpha_w * s2 * s2 / q,
        // −arg(1 − ix)/2 with arg in (−π/2, π/2)
        phi_c: x.atan() / 2.0,
        peak: sigma_w * (2.0 * PI).sqrt() / q.powf(0.25),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !start.is_finite() {
            return Err(Error::invalid("grid step must be positive and finite"));
        }
        if len == 0 {
            return Err(Error::invalid("empty grid"));
        }
        Ok(Self { start, step, len })
    }

    /// Grid of `len` points from `a` to `b` inclusive.
    pub fn linspace(a: f64, b: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Self::new(a, 1.0, len);
        }
        Self::new(a, (b - a) / (len - 1) as f64, len)
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn last(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.at(i))
    }

    /// Fractional index of `x`.
    pub fn position(&self, x: f64) -> f64 {
        (x - self.start) / self.step
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Fft,
    Analytic,
}

/// Carrier reference used to demodulate a pulse train: ω0 and the train center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    pub omega0: f64,
    pub t0: f64,
}

/// Complex spectral amplitude on a uniform positive-frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    pub grid: UniformGrid,
    pub amps: Vec<C64>,
    /// Center of the time window this spectrum synthesizes into, fs.
    pub t_center: f64,
    pub carrier: Option<Carrier>,
    pub warnings: Vec<String>,
}

impl SpectralField {
    /// 4π ∫|A|² dω, equal to ∫ε² dt of the synthesized field.
    pub fn energy(&self) -> f64 {
        4.0 * PI * self.grid.step * self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    /// Linearly interpolated amplitude at ω (zero outside the grid).
    pub fn amplitude_at(&self, omega: f64) -> C64 {
        let p = self.grid.position(omega);
        if p < 0.0 || p > (self.grid.len - 1) as f64 {
            return C64::default();
        }
        let i = (p.floor() as usize).min(self.grid.len.saturating_sub(2));
        let frac = p - i as f64;
        if self.grid.len == 1 {
            return self.amps[0];
        }
        self.amps[i] * (1.0 - frac) + self.amps[i + 1] * frac
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "omega_rad_per_fs,amplitude_re,amplitude_im")?;
        for (omega, a) in self.grid.values().zip(&self.amps) {
            writeln!(w, "{omega:.9},{:.9e},{:.9e}", a.re, a.im)?;
        }
        Ok(())
    }
}

/// Real field samples on a uniform time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalField {
    pub grid: UniformGrid,
    pub samples: Vec<f64>,
    pub provenance: Provenance,
    pub carrier: Option<Carrier>,
}

impl TemporalField {
    /// ∫ε² dt
    pub fn energy(&self) -> f64 {
        self.grid.step * self.samples.iter().map(|x| x * x).sum::<f64>()
    }

    /// Nyquist angular frequency π/Δt.
    pub fn nyquist(&self) -> f64 {
        PI / self.grid.step
    }

    /// Four-point Lagrange interpolation; zero outside the record.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.samples.len();
        let p = self.grid.position(t);
        if p < 0.0 || p > (n - 1) as f64 {
            return 0.0;
        }
        if n < 4 {
            let i = (p.floor() as usize).min(n.saturating_sub(2));
            let frac = p - i as f64;
            return if n == 1 { self.samples[0] } else { self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac };
        }
        let i = (p.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let x = p - i as f64;
        let y = &self.samples[i..i + 4];
        let (x0, x1, x2, x3) = (x, x - 1.0, x - 2.0, x - 3.0);
        -y[0] * x1 * x2 * x3 / 6.0 + y[1] * x0 * x2 * x3 / 2.0 - y[2] * x0 * x1 * x3 / 2.0
            + y[3] * x0 * x1 * x2 / 6.0
    }

    /// Relative L2 distance to `other` on the common grid.
    pub fn relative_l2(&self, other: &TemporalField) -> Result<f64> {
        if self.grid.len != other.grid.len
            || (self.grid.start - other.grid.start).abs() > 1e-9 * self.grid.step
            || (self.grid.step - other.grid.step).abs() > 1e-12 * self.grid.step
        {
            return Err(Error::invalid("fields are on different time grids"));
        }
        let num: f64 = self.samples.iter().zip(&other.samples).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = other.samples.iter().map(|b| b * b).sum();
        Ok((num / den).sqrt())
    }

    /// Time-reversed copy about the record center.
    pub fn reversed(&self) -> Self {
        let t_mid = 0.5 * (self.grid.start + self.grid.last());
        let mut samples = self.samples.clone();
        samples.reverse();
        Self {
            grid: self.grid,
            samples,
            provenance: self.provenance,
            carrier: self.carrier.map(|c| Carrier { t0: 2.0 * t_mid - c.t0, ..c }),
        }
    }

    pub fn shifted(&self, dt: f64) -> Self {
        Self {
            grid: UniformGrid { start: self.grid.start + dt, ..self.grid },
            carrier: self.carrier.map(|c| Carrier { t0: c.t0 + dt, ..c }),
            ..self.clone()
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_fs,field")?;
        for (t, x) in self.grid.values().zip(&self.samples) {
            writeln!(w, "{t:.6},{x:.9e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unchirped_limit() {
        let tp = time_params(0.01, 0.0).unwrap();
        assert!((tp.sigma_t - 100.0).abs() < 1e-12);
        assert_eq!(tp.alpha_t, 0.0);
        assert_eq!(tp.phi_c, 0.0);
    }

    #[test]
    fn strong_chirp_values() {
        // x = α σ² = 80, so σ_t = √6401 / 0.02 and α_t = 0.032 / 6401.
        let tp = time_params(0.02, 2e5).unwrap();
        assert!((tp.sigma_t - 4000.312_487_79).abs() < 1e-6, "{}", tp.sigma_t);
        assert!((tp.alpha_t - 4.999_219_e-6).abs() < 1e-11, "{}", tp.alpha_t);
        assert!((tp.alpha_t * 2e5 - 6400.0 / 6401.0).abs() < 1e-12);
    }

    #[test]
    fn chirp_parity() {
        let a = time_params(0.004, 3e5).unwrap();
        let b = time_params(0.004, -3e5).unwrap();
        assert_eq!(a.sigma_t, b.sigma_t);
        assert_eq!(a.alpha_t, -b.alpha_t);
        assert_eq!(a.phi_c, -b.phi_c);
    }

    #[test]
    fn bad_chirp_params() {
        assert!(ChirpParams::new(0.0, 1.0, 0.0).is_err());
        let c = ChirpParams { sigma_w: 0.01, alpha_w: 0.0, t0: 0.0, suppression_floor: 1e-2 };
        assert!(c.validated().is_err());
    }

    #[test]
    fn lagrange_is_exact_for_cubics() {
        let grid = UniformGrid::new(-1.0, 0.25, 12).unwrap();
        let f = |t: f64| 2.0 * t * t * t - t + 0.5;
        let field = TemporalField {
            grid,
            samples: grid.values().map(f).collect(),
            provenance: Provenance::Analytic,
            carrier: None,
        };
        for t in [-0.9, -0.13, 0.4, 1.6] {
            assert!((field.value_at(t) - f(t)).abs() < 1e-12);
        }
    }
}
