use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use super::{Provenance, SpectralField, TemporalField, UniformGrid};
use crate::error::{Error, Result};

/// Samples the real field of a spectrum on a power-of-two time grid.
///
/// The time window is T = 2π/Δω centered on `t_center`. The step is chosen so
/// that the Nyquist frequency exceeds 1.5× the top of the spectral grid and,
/// if given, does not exceed `max_dt`. Every sample is the exact discrete sum
/// 2 Re Σ_j A_j e^{−iω_j t} Δω, evaluated with one FFT.
pub fn synthesize_time(field: &SpectralField, max_dt: Option<f64>) -> Result<TemporalField> {
    let g = field.grid;
    if field.amps.len() != g.len {
        return Err(Error::invalid("spectral amplitudes do not match the grid"));
    }
    if g.start < 0.0 {
        return Err(Error::invalid("spectral grid must be non-negative"));
    }
    let span = 2.0 * PI / g.step;
    let mut dt_req = PI / (1.5 * g.last().max(g.step));
    if let Some(m) = max_dt {
        if !(m > 0.0) {
            return Err(Error::invalid("max_dt must be positive"));
        }
        dt_req = dt_req.min(m);
    }
    let n = ((span / dt_req).ceil() as usize).max(g.len).next_power_of_two();
    let dt = span / n as f64;
    let t_start = field.t_center - 0.5 * span;

    let mut buf = vec![C64::default(); n];
    for (j, (a, slot)) in field.amps.iter().zip(buf.iter_mut()).enumerate() {
        *slot = a * C64::from_polar(g.step, -g.at(j) * t_start);
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let samples = buf
        .iter()
        .enumerate()
        .map(|(m, y)| 2.0 * (y * C64::from_polar(1.0, -g.start * m as f64 * dt)).re)
        .collect();
    Ok(TemporalField {
        grid: UniformGrid::new(t_start, dt, n)?,
        samples,
        provenance: Provenance::Fft,
        carrier: field.carrier,
    })
}

/// Positive-frequency spectrum A(ω_j) = (Δt/2π) Σ_m ε(t_m) e^{iω_j t_m} on `grid`,
/// whose step must equal 2π/(NΔt).
pub fn to_spectrum(field: &TemporalField, grid: UniformGrid, t_center: f64) -> Result<SpectralField> {
    let n = field.samples.len();
    let dt = field.grid.step;
    let expected = 2.0 * PI / (n as f64 * dt);
    if (grid.step - expected).abs() > 1e-9 * expected {
        return Err(Error::invalid(format!(
            "spectral step {} does not match the time record (2π/NΔt = {expected})",
            grid.step
        )));
    }
    if grid.len > n {
        return Err(Error::invalid("spectral grid longer than the time record"));
    }
    let t_start = field.grid.start;
    let mut buf: Vec<C64> = field
        .samples
        .iter()
        .enumerate()
        .map(|(m, &x)| C64::from_polar(x, grid.start * m as f64 * dt))
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let amps = buf[..grid.len]
        .iter()
        .enumerate()
        .map(|(j, z)| z * C64::from_polar(dt / (2.0 * PI), grid.at(j) * t_start))
        .collect();
    Ok(SpectralField { grid, amps, t_center, carrier: field.carrier, warnings: Vec::new() })
}

/// Analytic signal z = x + iH[x], so cos Φ maps to e^{iΦ}.
pub fn analytic_signal(samples: &[f64]) -> Vec<C64> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<C64> = samples.iter().map(|&x| C64::new(x, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (k, z) in buf.iter_mut().enumerate() {
        let w = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *z *= w / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{single_chirp_pulse, ChirpParams, GridSpec};

    #[test]
    fn unchirped_window_gives_gaussian_pulse() {
        // no suppression floor, so the window tails are kept out to the grid edge
        let chirp = ChirpParams { suppression_floor: 0.0, ..ChirpParams::new(0.02, 0.0, 300.0).unwrap() };
        let spec = single_chirp_pulse(1.5, 1.0, &chirp, &GridSpec::default()).unwrap();
        let f = synthesize_time(&spec, None).unwrap();
        let tp = chirp.time_params();
        // Envelope 2 f(t): the carrier peak at t0 equals 2·peak.
        let at_t0 = f.value_at(300.0);
        assert!((at_t0 - 2.0 * tp.peak).abs() < 1e-9, "{at_t0} {}", 2.0 * tp.peak);
        let z = analytic_signal(&f.samples);
        let m = f.grid.position(300.0 + tp.sigma_t).round() as usize;
        let expected = 2.0 * tp.envelope(f.grid.at(m) - 300.0);
        assert!((z[m].norm() - expected).abs() < 1e-9);
    }

    #[test]
    fn round_trip_and_parseval() {
        let chirp = ChirpParams::new(0.01, 5e4, -40.0).unwrap();
        let spec = single_chirp_pulse(0.8, 0.7, &chirp, &GridSpec::default()).unwrap();
        let f = synthesize_time(&spec, None).unwrap();
        assert!(f.nyquist() > 1.5 * spec.grid.last());
        let back = to_spectrum(&f, spec.grid, spec.t_center).unwrap();
        let num: f64 = back.amps.iter().zip(&spec.amps).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = spec.amps.iter().map(|b| b.norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-10);
        assert!((f.energy() / spec.energy() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn analytic_signal_of_cosine() {
        let n = 256;
        let x: Vec<f64> = (0..n).map(|m| (2.0 * PI * 5.0 * m as f64 / n as f64 + 0.3).cos()).collect();
        let z = analytic_signal(&x);
        for (m, zm) in z.iter().enumerate() {
            let want = C64::from_polar(1.0, 2.0 * PI * 5.0 * m as f64 / n as f64 + 0.3);
            assert!((zm - want).norm() < 1e-12);
        }
    }
}
