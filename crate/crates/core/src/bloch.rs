//! Two-level rotation picture of the pulse train: each sub-pulse tilts the
//! Bloch vector about y, each carrier-phase step turns it about z, and free
//! evolution between pulses leaves the orientation alone.
//!
//! Conventions: right-handed active rotations, |i⟩ at +z.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LevelSystem, ModeSet};
use crate::pulse::{analytic_train, fit_phase_law, train_features, ChirpParams, UniformGrid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    /// Rotation angle about y (pulse area on the Bloch sphere).
    pub area: f64,
    /// Rotation angle about z (carrier-phase increment).
    pub phase_step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    steps: Vec<Rotation>,
}

impl PulseSchedule {
    pub fn new(steps: Vec<Rotation>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::invalid("a schedule needs at least one pulse"));
        }
        for (i, s) in steps.iter().enumerate() {
            if !s.area.is_finite() || !s.phase_step.is_finite() {
                return Err(Error::invalid(format!("steps[{i}]: non-finite rotation")));
            }
            if s.area < 0.0 {
                return Err(Error::invalid(format!("steps[{i}].area: must be non-negative")));
            }
            if s.area >= PI || s.phase_step.abs() >= PI {
                return Err(Error::invalid(format!(
                    "steps[{i}]: rotations must stay below π for piecewise following"
                )));
            }
        }
        Ok(Self { steps })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(area, phase_step)| Rotation { area, phase_step }).collect())
    }

    /// The shipped 20-pulse demonstration: a Gaussian area profile peaking at
    /// 0.45 rad with a width of 7 pulses, and a phase step swept linearly
    /// from +0.65 to −0.65 rad. It is a reconstruction, tuned so the vector
    /// ends within a few degrees of the south pole.
    pub fn reconstructed(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("the reconstructed schedule needs at least 2 pulses"));
        }
        let mid = 0.5 * (n as f64 - 1.0);
        let steps = (0..n)
            .map(|l| {
                let x = l as f64 - mid;
                Rotation { area: 0.45 * (-x * x / 98.0).exp(), phase_step: -0.65 * x / mid }
            })
            .collect();
        Self::new(steps)
    }

    pub fn steps(&self) -> &[Rotation] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochState {
    pub const GROUND: Self = Self { x: 0.0, y: 0.0, z: 1.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("Bloch vector norm {n} is not 1")));
        }
        Ok(Self { x, y, z })
    }

    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self { x: theta.sin() * phi.cos(), y: theta.sin() * phi.sin(), z: theta.cos() }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Population left in |i⟩.
    pub fn ground_population(&self) -> f64 {
        0.5 * (1.0 + self.z)
    }

    fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Unit quaternion (w, v).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub v: [f64; 3],
}

impl Quaternion {
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Self { w: c, v: [axis[0] * s, axis[1] * s, axis[2] * s] }
    }

    /// Hamilton product: (self ∘ rhs) applies rhs first.
    pub fn mul(self, rhs: Self) -> Self {
        let (a, b) = (self.v, rhs.v);
        Self {
            w: self.w * rhs.w - dot3(a, b),
            v: [
                self.w * b[0] + rhs.w * a[0] + a[1] * b[2] - a[2] * b[1],
                self.w * b[1] + rhs.w * a[1] + a[2] * b[0] - a[0] * b[2],
                self.w * b[2] + rhs.w * a[2] + a[0] * b[1] - a[1] * b[0],
            ],
        }
    }

    pub fn rotate(self, p: [f64; 3]) -> [f64; 3] {
        // p' = p + 2w (v × p) + 2 v × (v × p)
        let t = cross(self.v, p).map(|c| 2.0 * c);
        let u = cross(self.v, t);
        [p[0] + self.w * t[0] + u[0], p[1] + self.w * t[1] + u[1], p[2] + self.w * t[2] + u[2]]
    }

    /// Axis and angle in [0, π]; the identity maps to (z, 0).
    pub fn axis_angle(self) -> ([f64; 3], f64) {
        let s = dot3(self.v, self.v).sqrt();
        if s == 0.0 {
            return ([0.0, 0.0, 1.0], 0.0);
        }
        let sign = if self.w < 0.0 { -1.0 } else { 1.0 };
        let angle = 2.0 * s.atan2(self.w * sign);
        (self.v.map(|c| sign * c / s), angle)
    }
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

const Y: [f64; 3] = [0.0, 1.0, 0.0];
const Z: [f64; 3] = [0.0, 0.0, 1.0];

/// One pulse followed by its phase step: R_z(phase_step)·R_y(area).
pub fn step_rotation(area: f64, phase_step: f64) -> Quaternion {
    Quaternion::from_axis_angle(Z, phase_step).mul(Quaternion::from_axis_angle(Y, area))
}

/// Exact axis and angle of R_z(phase_step)·R_y(area).
pub fn compose_rotations(area: f64, phase_step: f64) -> ([f64; 3], f64) {
    step_rotation(area, phase_step).axis_angle()
}

/// Axis of a composed rotation as polar and azimuthal angles.
pub fn axis_angles(axis: [f64; 3]) -> (f64, f64) {
    (axis[2].clamp(-1.0, 1.0).acos(), axis[1].atan2(axis[0]))
}

/// Lowest-order closed-form axis and angle; both branches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ApproxAxis {
    /// polar angle on the + and − branches
    pub theta: [f64; 2],
    pub phi: [f64; 2],
    pub angle: f64,
}

/// Literal small-angle formulas: tanθ₀ = ±α_P/α_F, φ₀ = ±π/2 − α_F/2,
/// α₀ = √((α_P² + α_F²)/2).
///
/// The polar angle is taken in [0, π], so α_F = 0 gives θ₀ = π/2 by limit.
/// The closed-form azimuth belongs to the R_y·R_z ordering (phase step applied
/// first); for R_z·R_y the exact expansion gives π/2 + α_F/2, see
/// [`approx_axis_pulse_first`]. The closed-form angle is smaller than the exact
/// √(α_P² + α_F²) by √2.
pub fn approx_axis(area: f64, phase_step: f64) -> ApproxAxis {
    let polar = |num: f64| {
        let t = num.atan2(phase_step);
        if t < 0.0 { t + PI } else { t }
    };
    ApproxAxis {
        theta: [polar(area), polar(-area)],
        phi: [FRAC_PI_2 - 0.5 * phase_step, -FRAC_PI_2 - 0.5 * phase_step],
        angle: ((area * area + phase_step * phase_step) / 2.0).sqrt(),
    }
}

/// Small-angle axis of R_z(α_F)·R_y(α_P): same polar angle as
/// [`approx_axis`], azimuth π/2 + α_F/2, angle √(α_P² + α_F²).
pub fn approx_axis_pulse_first(area: f64, phase_step: f64) -> ApproxAxis {
    let lit = approx_axis(area, phase_step);
    ApproxAxis {
        theta: lit.theta,
        phi: [FRAC_PI_2 + 0.5 * phase_step, -FRAC_PI_2 + 0.5 * phase_step],
        angle: lit.angle * 2f64.sqrt(),
    }
}

/// Orientation after every pulse (the initial state is not included).
pub fn run_schedule(schedule: &PulseSchedule, initial: BlochState) -> Vec<BlochState> {
    let mut p = initial.to_array();
    schedule
        .steps
        .iter()
        .map(|s| {
            p = step_rotation(s.area, s.phase_step).rotate(p);
            // Renormalize so round-off cannot accumulate over long schedules.
            let n = dot3(p, p).sqrt();
            p = p.map(|c| c / n);
            BlochState { x: p[0], y: p[1], z: p[2] }
        })
        .collect()
}

/// Exact group inverse of [`run_schedule`]: R_y(−α_P)·R_z(−α_F) in reverse
/// pulse order. Returns the orientation after each undone pulse.
pub fn run_inverse(schedule: &PulseSchedule, initial: BlochState) -> Vec<BlochState> {
    let mut p = initial.to_array();
    schedule
        .steps
        .iter()
        .rev()
        .map(|s| {
            let q = Quaternion::from_axis_angle(Y, -s.area).mul(Quaternion::from_axis_angle(Z, -s.phase_step));
            p = q.rotate(p);
            BlochState { x: p[0], y: p[1], z: p[2] }
        })
        .collect()
}

/// Largest Δθ₀ between consecutive pulses relative to the closed-form per-pulse
/// angle √((α_P² + α_F²)/2), averaged over the two pulses.
pub fn adiabaticity_piecewise(schedule: &PulseSchedule) -> Result<f64> {
    if schedule.len() < 2 {
        return Err(Error::invalid("axis drift needs at least 2 pulses"));
    }
    let polar: Vec<f64> = schedule
        .steps
        .iter()
        .map(|s| axis_angles(compose_rotations(s.area, s.phase_step).0).0)
        .collect();
    let approx: Vec<f64> = schedule.steps.iter().map(|s| approx_axis(s.area, s.phase_step).angle).collect();
    let mut worst = 0.0_f64;
    for l in 1..schedule.len() {
        let drift = (polar[l] - polar[l - 1]).abs();
        if drift == 0.0 {
            continue;
        }
        let scale = 0.5 * (approx[l] + approx[l - 1]);
        worst = worst.max(if scale == 0.0 { f64::INFINITY } else { drift / scale });
    }
    Ok(worst)
}

/// Maps the train of a shaped field to a schedule.
///
/// Sub-pulse positions, spacing and the quadratic carrier-phase law come from
/// the field itself. The schedule then covers the whole envelope out to
/// ±5σ_t in steps of the spacing, so weak edge pulses below the detection
/// threshold still contribute. Each step's area is twice the integral of
/// Ω_eff over its period (a two-level Rabi cycle turns the Bloch vector by
/// 2∫Ω dt). Its phase step is the increment of the law's quadratic part,
/// centred on t0, to the next pulse. The linear part only reflects the
/// demodulation reference (and, without chirp, the envelope pulling the
/// sub-pulse peaks inward), so it is dropped.
pub fn schedule_from_field(modes: &ModeSet, sys: &LevelSystem, chirp: &ChirpParams) -> Result<PulseSchedule> {
    Ok(train_schedule(modes, sys, chirp)?.schedule)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSchedule {
    pub schedule: PulseSchedule,
    /// Sub-pulse centers in fs.
    pub centers: Vec<f64>,
    pub spacing: f64,
}

pub fn train_schedule(modes: &ModeSet, sys: &LevelSystem, chirp: &ChirpParams) -> Result<TrainSchedule> {
    let chirp = chirp.validated()?;
    let tp = chirp.time_params();
    let mean_spacing = mean_level_spacing(modes)?;
    let top = modes.modes().iter().map(|m| m.resonance).fold(0.0, f64::max);
    let span = 6.0 * tp.sigma_t + 4.0 * PI / mean_spacing;
    let step = (0.1 * 2.0 * PI / top).min(1.0);
    let len = (2.0 * span / step).ceil() as usize + 1;
    let grid = UniformGrid::new(chirp.t0 - span, step, len)?;
    let field = analytic_train(modes, &chirp, grid)?;
    let feats = train_features(&field)?;
    let law = fit_phase_law(&feats)?;

    // Anchor the lattice on the detected pulse nearest t0.
    let anchor = feats
        .pulses
        .iter()
        .min_by(|a, b| (a.center - chirp.t0).abs().total_cmp(&(b.center - chirp.t0).abs()))
        .ok_or_else(|| Error::Numeric("no sub-pulses".into()))?;
    let spacing = feats.spacing;
    let reach = 5.0 * tp.sigma_t;
    let lo = -(((reach + (anchor.center - chirp.t0)) / spacing).floor() as i64);
    let hi = ((reach - (anchor.center - chirp.t0)) / spacing).floor() as i64;
    let strength = modes.coupling_norm(sys);

    let mut steps = Vec::new();
    let mut centers = Vec::new();
    for l in lo..=hi {
        let c = anchor.center + l as f64 * spacing;
        let area = 2.0 * strength * integrate_envelope(&tp, c - chirp.t0, spacing);
        let u = (c - chirp.t0) / spacing;
        let phase_step = law.c2 * (2.0 * u + 1.0);
        steps.push(Rotation { area, phase_step });
        centers.push(c);
    }
    Ok(TrainSchedule { schedule: PulseSchedule::new(steps)?, centers, spacing })
}

fn mean_level_spacing(modes: &ModeSet) -> Result<f64> {
    let m = modes.modes();
    if m.len() < 2 {
        return Err(Error::invalid("a pulse train needs at least two modes"));
    }
    Ok((m[m.len() - 1].resonance - m[0].resonance) / (m.len() - 1) as f64)
}

/// ∫ f(τ) dτ over [center − width/2, center + width/2] by composite Simpson.
fn integrate_envelope(tp: &crate::pulse::TimeParams, center: f64, width: f64) -> f64 {
    let n = 64;
    let h = width / n as f64;
    let a = center - 0.5 * width;
    let mut s = tp.envelope(a) + tp.envelope(a + width);
    for i in 1..n {
        s += tp.envelope(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// CSV (pulse, x, y, z); row 0 is the initial state.
pub fn write_trajectory_csv<W: Write>(mut w: W, initial: BlochState, states: &[BlochState]) -> Result<()> {
    writeln!(w, "pulse,x,y,z")?;
    for (i, s) in std::iter::once(&initial).chain(states).enumerate() {
        writeln!(w, "{i},{:.12},{:.12},{:.12}", s.x, s.y, s.z)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        (0..3).all(|i| (a[i] - b[i]).abs() < tol)
    }

    #[test]
    fn pure_rotations() {
        let (axis, angle) = compose_rotations(FRAC_PI_2, 0.0);
        assert!(close(axis, Y, 1e-15));
        assert!((angle - FRAC_PI_2).abs() < 1e-15);
        let (axis, angle) = compose_rotations(0.0, 0.3);
        assert!(close(axis, Z, 1e-15));
        assert!((angle - 0.3).abs() < 1e-15);
        assert_eq!(compose_rotations(0.0, 0.0), (Z, 0.0));
    }

    #[test]
    fn rotation_direction_is_right_handed() {
        // +z about +y by π/2 lands on +x
        let p = Quaternion::from_axis_angle(Y, FRAC_PI_2).rotate(Z);
        assert!(close(p, [1.0, 0.0, 0.0], 1e-15));
    }

    #[test]
    fn piecewise_rabi_pi_pulse() {
        let s = PulseSchedule::from_pairs(&[(PI / 20.0, 0.0); 20]).unwrap();
        let last = *run_schedule(&s, BlochState::GROUND).last().unwrap();
        assert!(close(last.to_array(), [0.0, 0.0, -1.0], 1e-12));
    }

    #[test]
    fn reconstructed_schedule_reaches_south_pole() {
        let s = PulseSchedule::reconstructed(20).unwrap();
        let last = *run_schedule(&s, BlochState::GROUND).last().unwrap();
        assert!(last.z < -0.99, "z = {}", last.z);
    }

    #[test]
    fn approx_axis_limits() {
        let a = approx_axis(0.0, 0.2);
        assert_eq!(a.theta[0], 0.0);
        let a = approx_axis(0.1, 0.0);
        assert!((a.theta[0] - FRAC_PI_2).abs() < 1e-15);
        let a = approx_axis(0.1, 0.1);
        assert!((a.theta[0].tan() - 1.0).abs() < 1e-12);
        assert!((a.angle - 0.1).abs() < 1e-15);
    }

    #[test]
    fn schedule_validation() {
        assert!(PulseSchedule::new(vec![]).is_err());
        assert!(PulseSchedule::from_pairs(&[(-0.1, 0.0)]).is_err());
        assert!(PulseSchedule::from_pairs(&[(0.1, 3.2)]).is_err());
        assert!(adiabaticity_piecewise(&PulseSchedule::from_pairs(&[(0.1, 0.1)]).unwrap()).is_err());
    }

    #[test]
    fn drift_ratio() {
        let constant = PulseSchedule::from_pairs(&[(0.1, 0.2); 10]).unwrap();
        assert_eq!(adiabaticity_piecewise(&constant).unwrap(), 0.0);
        let flip = PulseSchedule::from_pairs(&[(0.01, 0.1), (0.01, -0.1)]).unwrap();
        assert!(adiabaticity_piecewise(&flip).unwrap() > 1.0);
        let slow: Vec<(f64, f64)> = (0..2000).map(|l| (0.2, 0.5 - l as f64 / 1999.0)).collect();
        let slow = PulseSchedule::from_pairs(&slow).unwrap();
        assert!(adiabaticity_piecewise(&slow).unwrap() < 0.1);
    }
}
