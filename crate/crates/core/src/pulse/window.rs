//! Spectral window shapes. The Gaussian is the primary family; the compact
//! cos² window (the spectrum-side analogue of a sin²-type pulse) has no
//! closed-form time parameters, so [`numeric_time_params`] measures them from
//! a synthesized single window.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::TimeParams;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WindowShape {
    #[default]
    Gaussian,
    /// cos²(πδ/2w) for |δ| < w, zero outside.
    Cos2 { half_width: f64 },
}

impl WindowShape {
    /// Real profile F(δ) with F(0) = 1.
    pub fn profile(&self, d: f64, sigma_w: f64) -> f64 {
        match *self {
            WindowShape::Gaussian => (-0.5 * (d / sigma_w).powi(2)).exp(),
            WindowShape::Cos2 { half_width } => {
                if d.abs() < half_width {
                    (0.5 * PI * d / half_width).cos().powi(2)
                } else {
                    0.0
                }
            }
        }
    }

    /// Distance from the resonance beyond which the profile is not evaluated.
    pub fn reach(&self, sigma_w: f64) -> f64 {
        match *self {
            WindowShape::Gaussian => 8.0 * sigma_w,
            WindowShape::Cos2 { half_width } => half_width,
        }
    }

    pub fn required_cover(&self, sigma_w: f64) -> f64 {
        match *self {
            WindowShape::Gaussian => 5.0 * sigma_w,
            WindowShape::Cos2 { half_width } => half_width,
        }
    }
}

/// Time parameters of one chirped window, measured numerically.
///
/// Baseband envelope g(τ) = ∫F(δ)e^{iα_ωδ²/2}e^{−iδτ}dδ. σ_t is √2 times the rms
/// width of |g|², α_t is minus the |g|²-weighted curvature of arg g, and φ_c is
/// arg g(0). For the Gaussian these reduce to the closed-form map.
pub fn numeric_time_params(shape: WindowShape, sigma_w: f64, alpha_w: f64) -> Result<TimeParams> {
    if !(sigma_w > 0.0) {
        return Err(Error::invalid("sigma_w must be positive"));
    }
    let reach = shape.reach(sigma_w);
    // Duration estimate from the Gaussian map, generous for either shape.
    let width = match shape {
        WindowShape::Gaussian => sigma_w,
        WindowShape::Cos2 { half_width } => half_width / 2.0,
    };
    let est = ((1.0 + (alpha_w * width * width).powi(2)) / (width * width)).sqrt();
    let half_t = 12.0 * est;
    let n = (4.0 * half_t * reach / PI).max(1024.0).log2().ceil().exp2() as usize * 4;
    let dt = 2.0 * half_t / n as f64;
    let dw = 2.0 * PI / (n as f64 * dt);

    // g(τ_m) with τ_m = −half_t + m dt via one FFT over δ_j = (j − n/2) dw.
    let mut buf: Vec<C64> = (0..n)
        .map(|j| {
            let d = (j as f64 - (n / 2) as f64) * dw;
            let f = shape.profile(d, sigma_w);
            if f == 0.0 {
                return C64::default();
            }
            f * C64::from_polar(dw, 0.5 * alpha_w * d * d + d * half_t)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let shift = |m: usize| {
        // undo the δ offset of −n/2 bins: e^{+iπm}
        if m % 2 == 0 { 1.0 } else { -1.0 }
    };
    let g: Vec<C64> = buf.iter().enumerate().map(|(m, z)| z * shift(m)).collect();
    let tau = |m: usize| -half_t + m as f64 * dt;

    let p: Vec<f64> = g.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = p.iter().sum();
    let mean: f64 = p.iter().enumerate().map(|(m, w)| w * tau(m)).sum::<f64>() / total;
    let var: f64 = p.iter().enumerate().map(|(m, w)| w * (tau(m) - mean).powi(2)).sum::<f64>() / total;
    let sigma_t = (2.0 * var).sqrt();
    let m0 = n / 2;
    let peak = g.iter().map(|z| z.norm()).fold(0.0, f64::max);

    // Weighted second difference of the unwrapped phase within ±σ_t.
    let lo = m0 - ((sigma_t / dt) as usize).min(m0 - 1);
    let hi = (m0 + (sigma_t / dt) as usize).min(n - 2);
    let mut unwrapped = vec![g[lo].arg()];
    for m in lo + 1..=hi + 1 {
        let prev = *unwrapped.last().unwrap();
        let d = (g[m] * g[m - 1].conj()).arg();
        unwrapped.push(prev + d);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for m in lo + 1..=hi {
        let k = m - lo;
        let curv = (unwrapped[k + 1] - 2.0 * unwrapped[k] + unwrapped[k - 1]) / (dt * dt);
        num += p[m] * curv;
        den += p[m];
    }
    Ok(TimeParams { sigma_t, alpha_t: -num / den, phi_c: g[m0].arg(), peak })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::time_params;

    #[test]
    fn gaussian_matches_closed_form() {
        for alpha in [0.0, 4e4, -1.5e5] {
            let exact = time_params(0.01, alpha).unwrap();
            let num = numeric_time_params(WindowShape::Gaussian, 0.01, alpha).unwrap();
            assert!((num.sigma_t / exact.sigma_t - 1.0).abs() < 1e-6, "{alpha}: {num:?} {exact:?}");
            assert!((num.peak / exact.peak - 1.0).abs() < 1e-6);
            assert!((num.phi_c - exact.phi_c).abs() < 1e-6);
            let scale = exact.alpha_t.abs().max(1e-12);
            assert!((num.alpha_t - exact.alpha_t).abs() < 1e-3 * scale + 1e-12, "{} {}", num.alpha_t, exact.alpha_t);
        }
    }

    #[test]
    fn cos2_is_compact_and_chirp_odd() {
        let w = WindowShape::Cos2 { half_width: 0.02 };
        assert_eq!(w.profile(0.021, 0.01), 0.0);
        assert_eq!(w.profile(0.0, 0.01), 1.0);
        let a = numeric_time_params(w, 0.01, 1e5).unwrap();
        let b = numeric_time_params(w, 0.01, -1e5).unwrap();
        assert!((a.sigma_t - b.sigma_t).abs() < 1e-6 * a.sigma_t);
        assert!((a.alpha_t + b.alpha_t).abs() < 1e-6 * a.alpha_t.abs());
        assert!(a.alpha_t > 0.0);
    }
}
