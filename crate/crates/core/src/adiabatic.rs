//! Instantaneous eigenstructure of the averaged Hamiltonian under equal
//! detunings: two bright states mixing the initial level with the fixed
//! bright direction, and N−1 dark states at quasi-energy Δ that never couple
//! to them.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::dynamics::{Frame, Trajectory};
use crate::error::{Error, Result};
use crate::model::{LevelSystem, ModeSet};
use crate::pulse::{ChirpParams, TimeParams};

/// The time-independent part of the eigenbasis: the bright direction b_f over
/// the target levels and an orthonormal basis of its complement.
#[derive(Clone, Debug, PartialEq)]
pub struct DarkBasis {
    /// Unnormalized couplings ε_n μ_n e^{−iφ_n}.
    couplings: Vec<C64>,
    /// √Σ|ε_n μ_n|²
    strength: f64,
    bright: Vec<C64>,
    dark: Vec<Vec<C64>>,
}

impl DarkBasis {
    pub fn new(modes: &ModeSet, sys: &LevelSystem) -> Result<Self> {
        let couplings: Vec<C64> = modes
            .modes()
            .iter()
            .map(|m| m.complex_amplitude() * sys.excited()[m.level].dipole)
            .collect();
        Self::from_couplings(couplings)
    }

    pub fn from_couplings(couplings: Vec<C64>) -> Result<Self> {
        let strength = norm(&couplings);
        if strength == 0.0 {
            return Err(Error::invalid("all couplings vanish; the bright direction is undefined"));
        }
        let bright: Vec<C64> = couplings.iter().map(|c| c / strength).collect();
        let n = bright.len();
        let mut kept: Vec<Vec<C64>> = vec![bright.clone()];
        let mut dark = Vec::with_capacity(n.saturating_sub(1));
        for k in 0..n {
            let mut v = vec![C64::default(); n];
            v[k] = C64::new(1.0, 0.0);
            // two passes of modified Gram–Schmidt
            for _ in 0..2 {
                for u in &kept {
                    let p = dot(u, &v);
                    for (vi, ui) in v.iter_mut().zip(u) {
                        *vi -= p * ui;
                    }
                }
            }
            let r = norm(&v);
            if r > 1e-6 && dark.len() < n - 1 {
                v.iter_mut().for_each(|x| *x /= r);
                kept.push(v.clone());
                dark.push(v);
            }
        }
        debug_assert_eq!(dark.len(), n - 1);
        Ok(Self { couplings, strength, bright, dark })
    }

    pub fn bright(&self) -> &[C64] {
        &self.bright
    }

    /// Dark vectors over the target levels (the ground component is zero).
    pub fn dark(&self) -> &[Vec<C64>] {
        &self.dark
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn couplings(&self) -> &[C64] {
        &self.couplings
    }

    /// Population of `excited` (target-level amplitudes) in the dark subspace.
    pub fn dark_population(&self, excited: &[C64]) -> f64 {
        self.dark.iter().map(|d| dot(d, excited).norm_sqr()).sum()
    }
}

/// ⟨u|v⟩
fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BrightDark {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
    pub detuning: f64,
    pub omega_eff: f64,
    #[serde(skip)]
    pub b_plus: DVector<C64>,
    #[serde(skip)]
    pub b_minus: DVector<C64>,
    /// Dark vectors embedded in the full (1+N) space.
    #[serde(skip)]
    pub dark: Vec<DVector<C64>>,
}

impl BrightDark {
    /// U with columns (b₊, b₋, dark…), each phase-fixed so that its largest
    /// component is real and positive.
    pub fn unitary(&self) -> DMatrix<C64> {
        let n = self.b_plus.len();
        let mut u = DMatrix::zeros(n, n);
        u.set_column(0, &canonical_phase(&self.b_plus));
        u.set_column(1, &canonical_phase(&self.b_minus));
        for (j, d) in self.dark.iter().enumerate() {
            u.set_column(j + 2, &canonical_phase(d));
        }
        u
    }
}

fn canonical_phase(v: &DVector<C64>) -> DVector<C64> {
    let mut lead = 0;
    for i in 1..v.len() {
        if v[i].norm() > v[lead].norm() * (1.0 + 1e-12) {
            lead = i;
        }
    }
    let a = v[lead].arg();
    v * C64::from_polar(1.0, -a)
}

/// Analytic eigenpairs at detuning Δ and envelope value f.
pub fn bright_dark(modes: &ModeSet, sys: &LevelSystem, detuning: f64, f_value: f64) -> Result<BrightDark> {
    bright_dark_with(&DarkBasis::new(modes, sys)?, detuning, f_value)
}

/// As [`bright_dark`] with a precomputed, reusable dark basis.
pub fn bright_dark_with(basis: &DarkBasis, detuning: f64, f_value: f64) -> Result<BrightDark> {
    if !(f_value >= 0.0) || !detuning.is_finite() {
        return Err(Error::invalid("envelope value must be non-negative and Δ finite"));
    }
    let omega = f_value * basis.strength;
    if omega == 0.0 && detuning == 0.0 {
        return Err(Error::Numeric("fully degenerate point (Ω_eff = 0, Δ = 0): eigenbasis undefined".into()));
    }
    let root = (0.25 * detuning * detuning + omega * omega).sqrt();
    let lambda_plus = 0.5 * detuning + root;
    let lambda_minus = 0.5 * detuning - root;
    let theta_plus = lambda_plus.atan2(omega);
    let theta_minus = lambda_minus.atan2(omega);

    let n = basis.bright.len() + 1;
    let embed = |c0: f64, cf: f64| {
        let mut v = DVector::zeros(n);
        v[0] = C64::new(c0, 0.0);
        for (k, b) in basis.bright.iter().enumerate() {
            v[k + 1] = b * cf;
        }
        v
    };
    let dark = basis
        .dark
        .iter()
        .map(|d| {
            let mut v = DVector::zeros(n);
            for (k, x) in d.iter().enumerate() {
                v[k + 1] = *x;
            }
            v
        })
        .collect();
    Ok(BrightDark {
        lambda_plus,
        lambda_minus,
        theta_plus,
        theta_minus,
        detuning,
        omega_eff: omega,
        b_plus: embed(theta_plus.cos(), theta_plus.sin()),
        b_minus: embed(theta_minus.cos(), theta_minus.sin()),
        dark,
    })
}

/// Finite-difference U†U̇ at `t` with central differences of half-width `dt`.
///
/// Columns of U(t ± dt) are phase-aligned to those of U(t) before
/// differencing. Fails if Ω_eff is too small for the bright states to stay
/// separated from the dark quasi-energy within the stencil.
pub fn nonadiabatic_matrix(
    modes: &ModeSet,
    sys: &LevelSystem,
    chirp: &ChirpParams,
    t: f64,
    dt: f64,
) -> Result<DMatrix<C64>> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    let basis = DarkBasis::new(modes, sys)?;
    let tp = chirp.time_params();
    let at = |s: f64| -> Result<BrightDark> {
        let tau = s - chirp.t0;
        let bd = bright_dark_with(&basis, tp.detuning(tau), tp.envelope(tau))?;
        let gap = (bd.lambda_plus - bd.detuning).abs().min((bd.lambda_minus - bd.detuning).abs());
        if gap <= 1e-12 * bd.detuning.abs().max(bd.omega_eff) || bd.omega_eff == 0.0 {
            return Err(Error::Numeric(format!("bright/dark degeneracy near t = {s:.3} fs")));
        }
        Ok(bd)
    };
    let u0 = at(t)?.unitary();
    let align = |u: DMatrix<C64>| {
        let mut u = u;
        for j in 0..u.ncols() {
            let p = u0.column(j).dotc(&u.column(j));
            let phase = if p.norm() > 0.0 { p.conj() / p.norm() } else { C64::new(1.0, 0.0) };
            let col = u.column(j) * phase;
            u.set_column(j, &col);
        }
        u
    };
    let up = align(at(t + dt)?.unitary());
    let um = align(at(t - dt)?.unitary());
    let du = (up - um) / C64::new(2.0 * dt, 0.0);
    Ok(u0.adjoint() * du)
}

/// Dark-subspace population at every stored time of a rotating-frame trajectory.
pub fn dark_population(traj: &Trajectory, modes: &ModeSet, sys: &LevelSystem) -> Result<Vec<f64>> {
    if traj.frame == Frame::Bare {
        return Err(Error::invalid("dark populations need a rotating-frame trajectory"));
    }
    let basis = DarkBasis::new(modes, sys)?;
    let idx: Vec<usize> = modes
        .modes()
        .iter()
        .map(|m| traj.index_of(&m.label).ok_or_else(|| Error::invalid(format!("level '{}' missing", m.label))))
        .collect::<Result<_>>()?;
    let mut buf = vec![C64::default(); idx.len()];
    Ok(traj
        .coeffs
        .iter()
        .map(|c| {
            for (b, &i) in buf.iter_mut().zip(&idx) {
                *b = c[i];
            }
            basis.dark_population(&buf)
        })
        .collect())
}

/// |θ̇| / (λ₊ − λ₋) at time t, from the analytic derivative of θ₊.
pub fn adiabaticity(modes: &ModeSet, sys: &LevelSystem, chirp: &ChirpParams, t: f64) -> Result<f64> {
    let strength = modes
        .modes()
        .iter()
        .map(|m| (m.amplitude * sys.excited()[m.level].dipole).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(adiabaticity_ratio(&chirp.time_params(), strength, t - chirp.t0))
}

pub(crate) fn adiabaticity_ratio(tp: &TimeParams, strength: f64, tau: f64) -> f64 {
    let om = tp.envelope(tau) * strength;
    let om_dot = -tau / (tp.sigma_t * tp.sigma_t) * om;
    let d = tp.detuning(tau);
    let d_dot = -tp.alpha_t;
    let root = (0.25 * d * d + om * om).sqrt();
    if root == 0.0 {
        return f64::INFINITY;
    }
    let lam = 0.5 * d + root;
    let lam_dot = 0.5 * d_dot + (0.25 * d * d_dot + om * om_dot) / root;
    let den = om * om + lam * lam;
    let theta_dot = if den == 0.0 { 0.0 } else { (lam_dot * om - lam * om_dot) / den };
    theta_dot.abs() / (2.0 * root)
}

/// Time series of the eigenstructure along a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdiabaticSeries {
    pub times: Vec<f64>,
    pub lambda_plus: Vec<f64>,
    pub lambda_minus: Vec<f64>,
    pub detuning: Vec<f64>,
    pub omega_eff: Vec<f64>,
    pub dark_population: Vec<f64>,
    pub adiabaticity: Vec<f64>,
}

impl AdiabaticSeries {
    pub fn new(traj: &Trajectory, modes: &ModeSet, sys: &LevelSystem, chirp: &ChirpParams) -> Result<Self> {
        let dark_population = dark_population(traj, modes, sys)?;
        let tp = chirp.time_params();
        let strength = modes.coupling_norm(sys);
        let mut s = Self {
            times: traj.times.clone(),
            lambda_plus: vec![],
            lambda_minus: vec![],
            detuning: vec![],
            omega_eff: vec![],
            dark_population,
            adiabaticity: vec![],
        };
        for &t in &traj.times {
            let tau = t - chirp.t0;
            let d = tp.detuning(tau);
            let om = tp.envelope(tau) * strength;
            let root = (0.25 * d * d + om * om).sqrt();
            s.lambda_plus.push(0.5 * d + root);
            s.lambda_minus.push(0.5 * d - root);
            s.detuning.push(d);
            s.omega_eff.push(om);
            s.adiabaticity.push(adiabaticity_ratio(&tp, strength, tau));
        }
        Ok(s)
    }

    pub fn max_dark(&self) -> f64 {
        self.dark_population.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest adiabaticity ratio where Ω_eff exceeds 1% of its peak.
    pub fn max_adiabaticity(&self) -> f64 {
        let peak = self.omega_eff.iter().cloned().fold(0.0, f64::max);
        self.omega_eff
            .iter()
            .zip(&self.adiabaticity)
            .filter(|(om, _)| **om >= 0.01 * peak)
            .map(|(_, r)| *r)
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_fs,lambda_plus,lambda_minus,detuning,omega_eff,dark_population,adiabaticity")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{:.6},{:.9e},{:.9e},{:.9e},{:.9e},{:.6e},{:.6e}",
                self.times[i],
                self.lambda_plus[i],
                self.lambda_minus[i],
                self.detuning[i],
                self.omega_eff[i],
                self.dark_population[i],
                self.adiabaticity[i]
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn basis() -> DarkBasis {
        DarkBasis::from_couplings(vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.5), C64::new(0.0, 0.0), C64::new(0.4, 0.0)])
            .unwrap()
    }

    #[test]
    fn zero_detuning_limit() {
        let bd = bright_dark_with(&basis(), 0.0, 2.0).unwrap();
        assert!((bd.lambda_plus - bd.omega_eff).abs() < 1e-15);
        assert!((bd.lambda_minus + bd.omega_eff).abs() < 1e-15);
        assert!((bd.theta_plus - FRAC_PI_4).abs() < 1e-15);
        assert!((bd.theta_minus + FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn zero_field_limit() {
        let bd = bright_dark_with(&basis(), 0.3, 0.0).unwrap();
        assert_eq!(bd.lambda_plus, 0.3);
        assert_eq!(bd.lambda_minus, 0.0);
        assert!(bright_dark_with(&basis(), 0.0, 0.0).is_err());
    }

    #[test]
    fn dark_vectors_orthonormal_and_dark() {
        let b = basis();
        assert_eq!(b.dark().len(), 3);
        for (i, u) in b.dark().iter().enumerate() {
            assert!(dot(b.bright(), u).norm() < 1e-14);
            for (j, v) in b.dark().iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(u, v) - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_field_adiabaticity_vanishes() {
        let tp = crate::pulse::time_params(0.005, 1e5).unwrap();
        assert_eq!(adiabaticity_ratio(&tp, 0.0, 500.0), 0.0);
        assert!(adiabaticity_ratio(&tp, 0.0, 0.0).is_infinite());
    }
}
