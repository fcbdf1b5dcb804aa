use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::spectrum::central_mode;
use super::synth::analytic_signal;
use super::{Carrier, ChirpParams, Provenance, TemporalField, UniformGrid};
use crate::error::{Error, Result};
use crate::model::{wrap_phase, ModeSet};

/// Closed-form time-domain train: the chirped envelope times the comb factor
/// 2 Σ ε_n exp[i(ω_n − ω0)τ + iφ_n], with ω0 the central mode.
pub fn analytic_train(modes: &ModeSet, chirp: &ChirpParams, grid: UniformGrid) -> Result<TemporalField> {
    if modes.is_empty() {
        return Err(Error::invalid("empty mode set"));
    }
    let chirp = chirp.validated()?;
    let tp = chirp.time_params();
    let omega0 = central_mode(modes).resonance;
    let samples = grid
        .values()
        .map(|t| {
            let tau = t - chirp.t0;
            let comb: C64 = modes
                .modes()
                .iter()
                .map(|m| C64::from_polar(2.0 * m.amplitude, (m.resonance - omega0) * tau + m.phase))
                .sum();
            let phase = omega0 * tau + 0.5 * tp.alpha_t * tau * tau - tp.phi_c;
            (tp.envelope(tau) * C64::from_polar(1.0, phase) * comb).re
        })
        .collect();
    Ok(TemporalField {
        grid,
        samples,
        provenance: Provenance::Analytic,
        carrier: Some(Carrier { omega0, t0: chirp.t0 }),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubPulse {
    /// Pulse number relative to the one nearest the train center.
    pub index: i64,
    /// fs
    pub center: f64,
    /// ∫ε² dt over one spacing around the center.
    pub energy: f64,
    /// Peak of the analytic-signal envelope.
    pub peak: f64,
    /// Carrier phase at the center after demodulation by ω0, wrapped.
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainFeatures {
    /// Mean spacing between detected sub-pulses, fs.
    pub spacing: f64,
    pub carrier: Carrier,
    pub pulses: Vec<SubPulse>,
}

const DETECTION_THRESHOLD: f64 = 0.05;

/// Detects the sub-pulses of a pulse train.
///
/// The repetition period is read off the first major peak of the intensity
/// autocorrelation; peaks of |z| above 5% of the maximum are then kept if
/// they dominate ±half a period, which rejects the comb's side lobes.
pub fn train_features(field: &TemporalField) -> Result<TrainFeatures> {
    let n = field.samples.len();
    if n < 8 {
        return Err(Error::invalid("field record too short"));
    }
    let dt = field.grid.step;
    let z = analytic_signal(&field.samples);
    let env: Vec<f64> = z.iter().map(|c| c.norm()).collect();
    let carrier = field.carrier.unwrap_or_else(|| estimate_carrier(field, &z));

    let period = autocorrelation_period(&env).ok_or_else(no_train)? * dt;
    let radius = ((0.5 * period / dt).round() as usize).max(1);
    let max_env = env.iter().cloned().fold(0.0, f64::max);
    let threshold = DETECTION_THRESHOLD * max_env;

    let mut centers = Vec::new();
    for i in 1..n - 1 {
        if env[i] < threshold || env[i] < env[i - 1] || env[i] < env[i + 1] {
            continue;
        }
        let lo = i.saturating_sub(radius);
        let hi = (i + radius).min(n - 1);
        // ties broken toward the first sample so plateaus yield one peak
        let dominant = (lo..=hi).all(|j| env[j] < env[i] || (env[j] == env[i] && j >= i));
        if dominant {
            let (a, b, c) = (env[i - 1], env[i], env[i + 1]);
            let den = a - 2.0 * b + c;
            let shift = if den != 0.0 { 0.5 * (a - c) / den } else { 0.0 };
            centers.push((field.grid.at(i) + shift * dt, b - 0.25 * (a - c) * shift));
        }
    }
    if centers.len() < 2 {
        return Err(no_train());
    }
    let spacing = (centers.last().unwrap().0 - centers[0].0) / (centers.len() - 1) as f64;

    let demod = |p: f64| {
        let i = (p.floor() as usize).min(n - 2);
        let frac = p - i as f64;
        let w = |k: usize| z[k] * C64::from_polar(1.0, -carrier.omega0 * (field.grid.at(k) - carrier.t0));
        w(i) * (1.0 - frac) + w(i + 1) * frac
    };
    let pulses = centers
        .iter()
        .map(|&(center, peak)| {
            let a = field.grid.position(center - 0.5 * spacing).ceil().max(0.0) as usize;
            let b = (field.grid.position(center + 0.5 * spacing).ceil().max(0.0) as usize).min(n);
            let energy = dt * field.samples[a.min(n)..b].iter().map(|x| x * x).sum::<f64>();
            SubPulse {
                index: ((center - carrier.t0) / spacing).round() as i64,
                center,
                energy,
                peak,
                phase: wrap_phase(demod(field.grid.position(center)).arg()),
            }
        })
        .collect();
    Ok(TrainFeatures { spacing, carrier, pulses })
}

fn no_train() -> Error {
    Error::Numeric("no pulse train found (fewer than two resolvable sub-pulses)".into())
}

fn estimate_carrier(field: &TemporalField, z: &[C64]) -> Carrier {
    let (mut wsum, mut tsum, mut fsum) = (0.0, 0.0, 0.0);
    for k in 1..z.len() {
        let w = z[k].norm_sqr();
        wsum += w;
        tsum += w * field.grid.at(k);
        fsum += w * (z[k] * z[k - 1].conj()).arg() / field.grid.step;
    }
    Carrier { omega0: fsum / wsum, t0: tsum / wsum }
}

/// Lag (in samples, parabolically refined) of the first autocorrelation peak
/// of |z|² beyond the central lobe, if it reaches half the zero-lag value.
fn autocorrelation_period(env: &[f64]) -> Option<f64> {
    let n = env.len();
    let m = (2 * n).next_power_of_two();
    let mut buf = vec![C64::default(); m];
    for (slot, e) in buf.iter_mut().zip(env) {
        *slot = C64::new(e * e, 0.0);
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for z in buf.iter_mut() {
        *z = C64::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let ac: Vec<f64> = buf[..n].iter().map(|z| z.re).collect();
    let half = 0.5 * ac[0];
    let mut k = 1;
    while k < n && ac[k] >= half {
        k += 1;
    }
    while k + 1 < n {
        if ac[k] >= half && ac[k] >= ac[k - 1] && ac[k] > ac[k + 1] {
            let (a, b, c) = (ac[k - 1], ac[k], ac[k + 1]);
            let den = a - 2.0 * b + c;
            return Some(k as f64 + if den != 0.0 { 0.5 * (a - c) / den } else { 0.0 });
        }
        k += 1;
    }
    None
}

/// Least-squares quadratic φ(l) ≈ c0 + c1 l + c2 l² over unwrapped sub-pulse phases.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseLaw {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_residual: f64,
    /// Unwrapped phases in pulse order.
    pub phases: Vec<f64>,
    pub indices: Vec<i64>,
}

impl PhaseLaw {
    /// Second difference 2·c2, the pulse-to-pulse change of the phase increment.
    pub fn curvature(&self) -> f64 {
        2.0 * self.c2
    }

    pub fn eval(&self, l: f64) -> f64 {
        self.c0 + self.c1 * l + self.c2 * l * l
    }
}

pub fn fit_phase_law(features: &TrainFeatures) -> Result<PhaseLaw> {
    let p = &features.pulses;
    if p.len() < 3 {
        return Err(Error::invalid("a quadratic phase law needs at least three sub-pulses"));
    }
    let mut phases = vec![p[0].phase];
    for w in p.windows(2) {
        let prev = *phases.last().unwrap();
        phases.push(prev + wrap_phase(w[1].phase - w[0].phase));
    }
    let indices: Vec<i64> = p.iter().map(|s| s.index).collect();
    let xs: Vec<f64> = indices.iter().map(|&l| l as f64).collect();
    let (c0, c1, c2) = quadratic_fit(&xs, &phases)?;
    let max_residual = xs
        .iter()
        .zip(&phases)
        .map(|(x, y)| (y - (c0 + c1 * x + c2 * x * x)).abs())
        .fold(0.0, f64::max);
    Ok(PhaseLaw { c0, c1, c2, max_residual, phases, indices })
}

pub(crate) fn quadratic_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    use nalgebra::{Matrix3, Vector3};
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for (&x, &y) in xs.iter().zip(ys) {
        let v = Vector3::new(1.0, x, x * x);
        a += v * v.transpose();
        b += v * y;
    }
    let c = a.lu().solve(&b).ok_or_else(|| Error::Numeric("degenerate quadratic fit".into()))?;
    Ok((c[0], c[1], c[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_modes, Level, LevelKind, LevelSystem, TargetSuperposition};

    #[test]
    fn single_pulse_is_rejected() {
        let sys = LevelSystem::new(
            0.0,
            vec![Level { label: "e".into(), energy: 1.0, dipole: 1.0, kind: LevelKind::Target }],
        )
        .unwrap();
        let t = TargetSuperposition::new(&sys, vec![("e".into(), C64::new(1.0, 0.0))]).unwrap();
        let modes = derive_modes(&sys, &t, 1.0).unwrap();
        let chirp = ChirpParams::new(0.02, 3e3, 0.0).unwrap();
        let grid = UniformGrid::new(-600.0, 0.5, 2400).unwrap();
        let f = analytic_train(&modes, &chirp, grid).unwrap();
        assert!(train_features(&f).is_err());
    }

    #[test]
    fn quadratic_fit_exact() {
        let xs: Vec<f64> = (-4..=4).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 - 0.2 * x + 0.07 * x * x).collect();
        let (a, b, c) = quadratic_fit(&xs, &ys).unwrap();
        assert!((a - 0.5).abs() < 1e-12 && (b + 0.2).abs() < 1e-12 && (c - 0.07).abs() < 1e-12);
    }
}
