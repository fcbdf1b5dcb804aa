//! Runge–Kutta integration of complex linear systems ẏ = f(t, y).
//!
//! Dormand–Prince 5(4) with FSAL and a standard step controller, plus
//! classical RK4 at a fixed step for bit-reproducible runs. Both integrate
//! in either time direction and land exactly on every requested output time.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |h|, fs. `None` leaves only the output spacing as a bound.
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-13, max_step: None, max_steps: 20_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepping {
    Adaptive(Tolerances),
    /// Classical RK4; each output interval is split into ⌈Δ/dt⌉ equal steps.
    Fixed { dt: f64 },
}

impl Default for Stepping {
    fn default() -> Self {
        Stepping::Adaptive(Tolerances::default())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdeFailure {
    pub t: f64,
    pub msg: String,
    /// Outputs reached before the failure.
    pub completed: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

// Dormand–Prince coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b − b̂ (5th minus embedded 4th order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Work {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
}

impl Work {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![C64::default(); n]),
            tmp: vec![C64::default(); n],
            y_new: vec![C64::default(); n],
        }
    }
}

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..y.len() {
        let mut acc = C64::default();
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates from `outputs[0]` through every later output time, calling
/// `observe(index, t, y)` at each (including the initial point).
///
/// `outputs` must be strictly monotone (either direction).
pub fn integrate<S, F>(
    sys: &S,
    y0: &[C64],
    outputs: &[f64],
    stepping: Stepping,
    mut observe: F,
) -> Result<OdeStats, OdeFailure>
where
    S: OdeSystem + ?Sized,
    F: FnMut(usize, f64, &[C64]),
{
    let n = sys.dim();
    assert_eq!(y0.len(), n, "state dimension mismatch");
    let mut stats = OdeStats::default();
    if outputs.is_empty() {
        return Ok(stats);
    }
    let dir = if outputs.len() > 1 && outputs[1] < outputs[0] { -1.0 } else { 1.0 };
    if outputs.windows(2).any(|w| (w[1] - w[0]) * dir <= 0.0) {
        return Err(OdeFailure { t: outputs[0], msg: "output times not strictly monotone".into(), completed: 0 });
    }
    let mut y = y0.to_vec();
    observe(0, outputs[0], &y);
    match stepping {
        Stepping::Fixed { dt } => {
            if !(dt > 0.0) {
                return Err(OdeFailure { t: outputs[0], msg: "fixed step must be positive".into(), completed: 1 });
            }
            let mut w = Work::new(n);
            for (idx, win) in outputs.windows(2).enumerate() {
                let span = win[1] - win[0];
                let steps = (span.abs() / dt).ceil().max(1.0) as usize;
                let h = span / steps as f64;
                for s in 0..steps {
                    let t = win[0] + h * s as f64;
                    rk4_step(sys, t, h, &mut y, &mut w);
                    stats.accepted += 1;
                    stats.rhs_evals += 4;
                }
                observe(idx + 1, win[1], &y);
            }
            Ok(stats)
        }
        Stepping::Adaptive(tol) => dopri(sys, y, outputs, tol, dir, &mut stats, observe).map(|_| stats),
    }
}

fn rk4_step<S: OdeSystem + ?Sized>(sys: &S, t: f64, h: f64, y: &mut [C64], w: &mut Work) {
    let [k1, k2, k3, k4, ..] = &mut w.k;
    sys.rhs(t, y, k1);
    combine(&mut w.tmp, y, 0.5 * h, &[(1.0, k1)]);
    sys.rhs(t + 0.5 * h, &w.tmp, k2);
    combine(&mut w.tmp, y, 0.5 * h, &[(1.0, k2)]);
    sys.rhs(t + 0.5 * h, &w.tmp, k3);
    combine(&mut w.tmp, y, h, &[(1.0, k3)]);
    sys.rhs(t + h, &w.tmp, k4);
    for i in 0..y.len() {
        y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
    }
}

fn dopri<S, F>(
    sys: &S,
    mut y: Vec<C64>,
    outputs: &[f64],
    tol: Tolerances,
    dir: f64,
    stats: &mut OdeStats,
    mut observe: F,
) -> Result<(), OdeFailure>
where
    S: OdeSystem + ?Sized,
    F: FnMut(usize, f64, &[C64]),
{
    let n = y.len();
    let mut w = Work::new(n);
    let mut t = outputs[0];
    let t_end = *outputs.last().unwrap();
    let max_step = tol.max_step.unwrap_or(f64::INFINITY);
    if !(tol.rtol > 0.0) || !(tol.atol > 0.0) || !(max_step > 0.0) {
        return Err(OdeFailure { t, msg: "tolerances must be positive".into(), completed: 1 });
    }

    sys.rhs(t, &y, &mut w.k[0]);
    stats.rhs_evals += 1;
    let mut h = initial_step(&y, &w.k[0], tol, (t_end - t).abs()).min(max_step);
    let mut next = 1;
    let mut steps = 0usize;
    let mut last_rejected = false;

    while next < outputs.len() {
        let target = outputs[next];
        let remaining = (target - t) * dir;
        let mut landing = false;
        let proposed = h;
        if h * 1.01 >= remaining {
            h = remaining;
            landing = true;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(OdeFailure { t, msg: format!("step size underflow (h = {h:.3e})"), completed: next });
        }
        steps += 1;
        if steps > tol.max_steps {
            return Err(OdeFailure { t, msg: "maximum number of steps exceeded".into(), completed: next });
        }
        let hs = h * dir;
        let err = dopri_trial(sys, t, hs, &y, &mut w, tol);
        stats.rhs_evals += 6;
        if !err.is_finite() {
            return Err(OdeFailure { t, msg: "non-finite state".into(), completed: next });
        }
        if err <= 1.0 {
            stats.accepted += 1;
            t = if landing { target } else { t + hs };
            std::mem::swap(&mut y, &mut w.y_new);
            // FSAL: k7 is f(t + h, y_new)
            w.k.swap(0, 6);
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let fac = if last_rejected { fac.min(1.0) } else { fac };
            if landing {
                observe(next, target, &y);
                next += 1;
                // a landing step may have been artificially short
                h = proposed.max(h * fac).min(max_step);
            } else {
                h = (h * fac).min(max_step);
            }
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            last_rejected = true;
        }
    }
    Ok(())
}

fn dopri_trial<S: OdeSystem + ?Sized>(sys: &S, t: f64, h: f64, y: &[C64], w: &mut Work, tol: Tolerances) -> f64 {
    let Work { k, tmp, y_new } = w;
    let (k1, rest) = k.split_at_mut(1);
    let (k2, rest) = rest.split_at_mut(1);
    let (k3, rest) = rest.split_at_mut(1);
    let (k4, rest) = rest.split_at_mut(1);
    let (k5, rest) = rest.split_at_mut(1);
    let (k6, k7) = rest.split_at_mut(1);
    let (k1, k2, k3, k4, k5, k6, k7) = (&k1[0], &mut k2[0], &mut k3[0], &mut k4[0], &mut k5[0], &mut k6[0], &mut k7[0]);

    combine(tmp, y, h, &[(A21, k1)]);
    sys.rhs(t + C2 * h, tmp, k2);
    combine(tmp, y, h, &[(A31, k1), (A32, k2)]);
    sys.rhs(t + C3 * h, tmp, k3);
    combine(tmp, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
    sys.rhs(t + C4 * h, tmp, k4);
    combine(tmp, y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
    sys.rhs(t + C5 * h, tmp, k5);
    combine(tmp, y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
    sys.rhs(t + h, tmp, k6);
    combine(y_new, y, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
    sys.rhs(t + h, y_new, k7);

    let mut acc = 0.0;
    for i in 0..y.len() {
        let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        let scale = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
        acc += (e.norm() / scale).powi(2);
    }
    (acc / y.len() as f64).sqrt()
}

fn initial_step(y: &[C64], f0: &[C64], tol: Tolerances, span: f64) -> f64 {
    let scale = |i: usize| tol.atol + tol.rtol * y[i].norm();
    let d0 = (y.iter().enumerate().map(|(i, v)| (v.norm() / scale(i)).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let d1 = (f0.iter().enumerate().map(|(i, v)| (v.norm() / scale(i)).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span).max(1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ẏ = −iωy, exact solution e^{−iωt}.
    struct Phase(f64);
    impl OdeSystem for Phase {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = C64::new(0.0, -self.0) * y[0];
        }
    }

    #[test]
    fn adaptive_matches_exact_phase() {
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let mut last = C64::default();
        integrate(&Phase(3.0), &[C64::new(1.0, 0.0)], &times, Stepping::default(), |_, _, y| last = y[0]).unwrap();
        let exact = C64::from_polar(1.0, -30.0);
        assert!((last - exact).norm() < 1e-8, "{last} {exact}");
    }

    #[test]
    fn backward_integration_inverts() {
        let fwd = [0.0, 7.0];
        let mut end = vec![];
        integrate(&Phase(1.3), &[C64::new(0.6, 0.8)], &fwd, Stepping::default(), |_, _, y| end = y.to_vec()).unwrap();
        let mut back = vec![];
        integrate(&Phase(1.3), &end, &[7.0, 0.0], Stepping::default(), |_, _, y| back = y.to_vec()).unwrap();
        assert!((back[0] - C64::new(0.6, 0.8)).norm() < 1e-9);
    }

    #[test]
    fn fixed_step_is_fourth_order() {
        let err = |dt: f64| {
            let mut last = C64::default();
            integrate(&Phase(1.0), &[C64::new(1.0, 0.0)], &[0.0, 4.0], Stepping::Fixed { dt }, |_, _, y| last = y[0])
                .unwrap();
            (last - C64::from_polar(1.0, -4.0)).norm()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.5, "{ratio}");
    }

    #[test]
    fn non_monotone_outputs_rejected() {
        let r = integrate(&Phase(1.0), &[C64::new(1.0, 0.0)], &[0.0, 1.0, 0.5], Stepping::default(), |_, _, _| {});
        assert!(r.is_err());
    }
}
