use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::window::WindowShape;
use super::{Carrier, ChirpParams, SpectralField, UniformGrid};
use crate::error::{Error, Result};
use crate::model::{wrap_phase, LevelSystem, Mode, ModeSet};

/// Sizing of the automatic spectral grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Half-width of the synthesized time window around t0, in units of σ_t.
    pub time_span_sigmas: f64,
    /// Frequency margin beyond the outermost windows, in units of σ_ω.
    pub freq_margin_sigmas: f64,
    /// Lower bound on the half time window, fs.
    pub min_half_span: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        // ±7σ_t keeps the periodic image of the Gaussian tails below 1e-10.
        Self { time_span_sigmas: 7.0, freq_margin_sigmas: 8.0, min_half_span: 0.0 }
    }
}

impl GridSpec {
    /// Spectral grid covering `[lo, hi]` plus margins, with bin spacing 2π/T
    /// for a time window T centered on the train.
    pub fn spectral_grid(&self, lo: f64, hi: f64, sigma_w: f64, sigma_t: f64) -> Result<UniformGrid> {
        if !(self.time_span_sigmas > 0.0) || !(self.freq_margin_sigmas >= 5.0) {
            return Err(Error::invalid("grid spec needs time_span_sigmas > 0 and freq_margin_sigmas >= 5"));
        }
        let half = (self.time_span_sigmas * sigma_t).max(self.min_half_span);
        let step = 2.0 * PI / (2.0 * half);
        let a = lo - self.freq_margin_sigmas * sigma_w;
        let b = hi + self.freq_margin_sigmas * sigma_w;
        if a <= 0.0 {
            return Err(Error::invalid("spectral windows extend to non-positive frequencies"));
        }
        let i0 = (a / step).floor();
        let len = ((b / step).ceil() - i0) as usize + 1;
        UniformGrid::new(i0 * step, step, len)
    }
}

fn check_coverage(grid: &UniformGrid, lo: f64, hi: f64, margin: f64) -> Result<()> {
    if grid.start > lo - margin || grid.last() < hi + margin {
        return Err(Error::invalid(format!(
            "spectral grid [{:.6}, {:.6}] does not cover all windows (±5σ_ω for Gaussians)",
            grid.start,
            grid.last()
        )));
    }
    Ok(())
}

fn resonance_range(modes: &ModeSet) -> (f64, f64) {
    let lo = modes.modes().iter().map(|m| m.resonance).fold(f64::INFINITY, f64::min);
    let hi = modes.modes().iter().map(|m| m.resonance).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Central mode used as the carrier reference.
pub(crate) fn central_mode(modes: &ModeSet) -> &Mode {
    &modes.modes()[(modes.len() - 1) / 2]
}

/// Shaped spectrum: one chirped Gaussian window per mode, on an automatically sized grid.
pub fn build_spectrum(modes: &ModeSet, chirp: &ChirpParams, spec: &GridSpec) -> Result<SpectralField> {
    let (lo, hi) = resonance_range(modes);
    let grid = spec.spectral_grid(lo, hi, chirp.sigma_w, chirp.time_params().sigma_t)?;
    build_spectrum_on(modes, chirp, WindowShape::Gaussian, grid)
}

/// Shaped spectrum on a caller-supplied grid with a chosen window shape.
pub fn build_spectrum_on(
    modes: &ModeSet,
    chirp: &ChirpParams,
    shape: WindowShape,
    grid: UniformGrid,
) -> Result<SpectralField> {
    let chirp = chirp.validated()?;
    if modes.is_empty() {
        return Err(Error::invalid("empty mode set"));
    }
    let (lo, hi) = resonance_range(modes);
    let reach = shape.reach(chirp.sigma_w);
    check_coverage(&grid, lo, hi, shape.required_cover(chirp.sigma_w))?;

    let mut warnings = Vec::new();
    let mut res: Vec<f64> = modes.modes().iter().map(|m| m.resonance).collect();
    res.sort_by(f64::total_cmp);
    for w in res.windows(2) {
        if w[1] - w[0] < 2.0 * chirp.sigma_w {
            warnings.push(format!(
                "windows at {:.6} and {:.6} rad/fs overlap (spacing < 2σ_ω)",
                w[0], w[1]
            ));
        }
    }

    let mut amps = vec![C64::default(); grid.len];
    for m in modes.modes().iter().filter(|m| m.amplitude > 0.0) {
        let first = grid.position(m.resonance - reach).floor().max(0.0) as usize;
        let last = (grid.position(m.resonance + reach).ceil().max(0.0) as usize).min(grid.len - 1);
        for (i, a) in amps.iter_mut().enumerate().take(last + 1).skip(first) {
            let omega = grid.at(i);
            let d = omega - m.resonance;
            let phase = 0.5 * chirp.alpha_w * d * d + omega * chirp.t0 - m.phase;
            *a += m.amplitude * shape.profile(d, chirp.sigma_w) * C64::from_polar(1.0, phase);
        }
    }
    let peak = modes.modes().iter().map(|m| m.amplitude).fold(0.0, f64::max);
    let floor = chirp.suppression_floor * peak;
    for a in amps.iter_mut() {
        if a.norm() < floor {
            *a = C64::default();
        }
    }

    Ok(SpectralField {
        grid,
        amps,
        t_center: chirp.t0,
        carrier: Some(Carrier { omega0: central_mode(modes).resonance, t0: chirp.t0 }),
        warnings,
    })
}

/// Zeroes the spectrum strictly within `half_width` of the labelled mode's resonance.
pub fn block_window(field: &SpectralField, modes: &ModeSet, label: &str, half_width: f64) -> Result<SpectralField> {
    let mode = modes.get(label).ok_or_else(|| Error::invalid(format!("no mode for level '{label}'")))?;
    if !(half_width >= 0.0) {
        return Err(Error::invalid("block half-width must be non-negative"));
    }
    let mut out = field.clone();
    for (i, a) in out.amps.iter_mut().enumerate() {
        if (field.grid.at(i) - mode.resonance).abs() < half_width {
            *a = C64::default();
        }
    }
    Ok(out)
}

/// Single chirped Gaussian window of peak amplitude `amplitude` (the unshaped, chirped reference pulse).
pub fn single_chirp_pulse(
    omega_center: f64,
    amplitude: f64,
    chirp: &ChirpParams,
    spec: &GridSpec,
) -> Result<SpectralField> {
    let chirp = chirp.validated()?;
    let grid = spec.spectral_grid(omega_center, omega_center, chirp.sigma_w, chirp.time_params().sigma_t)?;
    let mut amps = Vec::with_capacity(grid.len);
    for omega in grid.values() {
        let d = omega - omega_center;
        let g = (-0.5 * (d / chirp.sigma_w).powi(2)).exp();
        amps.push(if g < chirp.suppression_floor {
            C64::default()
        } else {
            amplitude * g * C64::from_polar(1.0, 0.5 * chirp.alpha_w * d * d + omega * chirp.t0)
        });
    }
    Ok(SpectralField {
        grid,
        amps,
        t_center: chirp.t0,
        carrier: Some(Carrier { omega0: omega_center, t0: chirp.t0 }),
        warnings: Vec::new(),
    })
}

/// Reads mode amplitudes and phases back off a spectrum at each target resonance.
///
/// The spectrum is demodulated by e^{−iω t_center} before interpolation so
/// that the window phase varies slowly across bins.
pub fn sample_modes(field: &SpectralField, sys: &LevelSystem) -> Result<ModeSet> {
    let g = field.grid;
    if g.len < 2 {
        return Err(Error::invalid("spectrum too short to sample"));
    }
    // The grid spectrum is that of a field confined to the record
    // t_center ± T/2 with T = 2π/Δω, so between bins it follows the
    // band-limited (sinc) interpolant exactly.
    let half_t = PI / g.step;
    let base: Vec<C64> =
        field.amps.iter().enumerate().map(|(i, a)| a * C64::from_polar(1.0, -g.at(i) * field.t_center)).collect();
    let mut modes = Vec::new();
    for k in sys.target_indices() {
        let omega = sys.resonance(k);
        let p = g.position(omega);
        let a = if p < 0.0 || p > (g.len - 1) as f64 {
            C64::default()
        } else {
            base.iter()
                .enumerate()
                .map(|(i, b)| {
                    let x = (omega - g.at(i)) * half_t;
                    b * if x.abs() < 1e-12 { 1.0 } else { x.sin() / x }
                })
                .sum()
        };
        let amplitude = a.norm();
        modes.push(Mode {
            label: sys.excited()[k].label.clone(),
            level: k,
            resonance: omega,
            amplitude,
            phase: if amplitude == 0.0 { 0.0 } else { wrap_phase(-a.arg()) },
        });
    }
    ModeSet::new(sys, modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_modes, Level, LevelKind, TargetSuperposition};

    fn two_level_pair(spacing: f64) -> (LevelSystem, ModeSet) {
        let sys = LevelSystem::new(
            0.0,
            vec![
                Level { label: "a".into(), energy: 2.0, dipole: 1.0, kind: LevelKind::Target },
                Level { label: "b".into(), energy: 2.0 + spacing, dipole: 0.5, kind: LevelKind::Target },
            ],
        )
        .unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let t = TargetSuperposition::new(
            &sys,
            vec![("a".into(), C64::new(h, 0.0)), ("b".into(), C64::from_polar(h, 0.7))],
        )
        .unwrap();
        let m = derive_modes(&sys, &t, 1.0).unwrap();
        (sys, m)
    }

    #[test]
    fn overlap_warning() {
        let (_, modes) = two_level_pair(0.01);
        let chirp = ChirpParams::new(0.01, 1e4, 0.0).unwrap();
        let f = build_spectrum(&modes, &chirp, &GridSpec::default()).unwrap();
        assert_eq!(f.warnings.len(), 1);
        let (_, modes) = two_level_pair(0.1);
        let f = build_spectrum(&modes, &chirp, &GridSpec::default()).unwrap();
        assert!(f.warnings.is_empty());
    }

    #[test]
    fn unchirped_single_window_has_flat_phase() {
        let chirp = ChirpParams::new(0.02, 0.0, 0.0).unwrap();
        let f = single_chirp_pulse(2.0, 1.0, &chirp, &GridSpec::default()).unwrap();
        let (imax, amax) = f
            .amps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert!((f.grid.at(imax) - 2.0).abs() <= f.grid.step);
        assert!(amax.norm() > 0.99);
        assert!(f.amps.iter().all(|a| a.im.abs() < 1e-15 && a.re >= 0.0));
    }

    #[test]
    fn coverage_error() {
        let (_, modes) = two_level_pair(0.1);
        let chirp = ChirpParams::new(0.01, 0.0, 0.0).unwrap();
        let grid = UniformGrid::new(1.99, 0.001, 100).unwrap();
        assert!(build_spectrum_on(&modes, &chirp, WindowShape::Gaussian, grid).is_err());
    }

    #[test]
    fn sampled_modes_round_trip() {
        let (sys, modes) = two_level_pair(0.1);
        let chirp = ChirpParams::new(0.01, 3e4, 120.0).unwrap();
        let f = build_spectrum(&modes, &chirp, &GridSpec::default()).unwrap();
        let back = sample_modes(&f, &sys).unwrap();
        for (a, b) in modes.modes().iter().zip(back.modes()) {
            assert!((a.amplitude - b.amplitude).abs() < 1e-6 * a.amplitude, "{} {}", a.amplitude, b.amplitude);
            assert!(wrap_phase(a.phase - b.phase).abs() < 1e-6);
        }
    }

    #[test]
    fn block_zero_width_is_identity_and_full_block_is_zero() {
        let (_, modes) = two_level_pair(0.1);
        let chirp = ChirpParams::new(0.01, 1e4, 0.0).unwrap();
        let f = build_spectrum(&modes, &chirp, &GridSpec::default()).unwrap();
        assert_eq!(block_window(&f, &modes, "a", 0.0).unwrap(), f);
        let g = block_window(&f, &modes, "a", 0.2).unwrap();
        let g = block_window(&g, &modes, "b", 0.2).unwrap();
        assert!(g.amps.iter().all(|a| a.norm() == 0.0));
        assert!(block_window(&f, &modes, "zz", 0.01).is_err());
    }
}
