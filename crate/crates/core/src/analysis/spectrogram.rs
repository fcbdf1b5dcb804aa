use std::f64::consts::PI;

use num_complex::Complex64 as C64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pulse::{analytic_signal, TemporalField, UniformGrid};

/// Overlaps of a field with Gaussian probes
/// exp[−(t − t_p)²/2σ_p² − iω_p t + i(ω_p − ω₀)t_p], rows indexed by probe
/// time and columns by probe frequency.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrogram {
    pub times: UniformGrid,
    pub freqs: UniformGrid,
    pub probe_width: f64,
    /// Reference frequency ω₀ in the probe phase.
    pub reference: f64,
    /// Row-major, `times.len` rows of `freqs.len` values.
    pub values: Vec<C64>,
}

impl Spectrogram {
    pub fn at(&self, ti: usize, wi: usize) -> C64 {
        self.values[ti * self.freqs.len + wi]
    }

    pub fn row(&self, ti: usize) -> &[C64] {
        &self.values[ti * self.freqs.len..(ti + 1) * self.freqs.len]
    }

    pub fn max_magnitude(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// |S| divided by its maximum.
    pub fn normalized_magnitude(&self) -> Vec<f64> {
        let m = self.max_magnitude();
        let m = if m > 0.0 { m } else { 1.0 };
        self.values.iter().map(|z| z.norm() / m).collect()
    }

    /// Complex values along the column nearest `omega`.
    pub fn section(&self, omega: f64) -> Vec<C64> {
        let wi = (self.freqs.position(omega).round().max(0.0) as usize).min(self.freqs.len - 1);
        (0..self.times.len).map(|ti| self.at(ti, wi)).collect()
    }

    /// Local maxima along frequency in row `ti` that exceed `rel_threshold`
    /// of the row maximum, with parabolic refinement.
    pub fn row_peaks(&self, ti: usize, rel_threshold: f64) -> Vec<f64> {
        let mags: Vec<f64> = self.row(ti).iter().map(|z| z.norm()).collect();
        let top = mags.iter().cloned().fold(0.0, f64::max);
        if top == 0.0 {
            return vec![];
        }
        let mut out = Vec::new();
        for i in 1..mags.len().saturating_sub(1) {
            if mags[i] >= rel_threshold * top && mags[i] > mags[i - 1] && mags[i] >= mags[i + 1] {
                let (a, b, c) = (mags[i - 1], mags[i], mags[i + 1]);
                let den = a - 2.0 * b + c;
                let shift = if den != 0.0 { 0.5 * (a - c) / den } else { 0.0 };
                out.push(self.freqs.start + (i as f64 + shift) * self.freqs.step);
            }
        }
        out
    }

    /// Ridges traced from the row nearest `t_ref` by following the closest
    /// peak in neighbouring rows.
    pub fn stripes(&self, t_ref: f64, rel_threshold: f64) -> Vec<Stripe> {
        let ti0 = (self.times.position(t_ref).round().max(0.0) as usize).min(self.times.len - 1);
        let reach = 3.0 * self.freqs.step;
        let peaks: Vec<Vec<f64>> = (0..self.times.len).map(|ti| self.row_peaks(ti, rel_threshold)).collect();
        peaks[ti0]
            .iter()
            .map(|&w0| {
                let mut pts = vec![(self.times.at(ti0), w0)];
                for dir in [-1i64, 1] {
                    let mut w = w0;
                    let mut ti = ti0 as i64 + dir;
                    while ti >= 0 && (ti as usize) < self.times.len {
                        let Some(&next) = peaks[ti as usize]
                            .iter()
                            .min_by(|a, b| (*a - w).abs().total_cmp(&(*b - w).abs()))
                        else {
                            break;
                        };
                        if (next - w).abs() > reach {
                            break;
                        }
                        w = next;
                        pts.push((self.times.at(ti as usize), w));
                        ti += dir;
                    }
                }
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                Stripe { points: pts }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stripe {
    /// (probe time, ridge frequency)
    pub points: Vec<(f64, f64)>,
}

impl Stripe {
    /// Least-squares line ω = a + b t through the ridge.
    pub fn line(&self) -> (f64, f64) {
        let n = self.points.len() as f64;
        if self.points.len() < 2 {
            return (self.points.first().map_or(0.0, |p| p.1), 0.0);
        }
        let mt = self.points.iter().map(|p| p.0).sum::<f64>() / n;
        let mw = self.points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = self.points.iter().map(|p| (p.0 - mt) * (p.1 - mw)).sum();
        let sxx: f64 = self.points.iter().map(|p| (p.0 - mt).powi(2)).sum();
        let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        (mw - b * mt, b)
    }

    /// Time at which the fitted ridge passes through `omega`; `None` for a flat ridge.
    pub fn crossing(&self, omega: f64) -> Option<f64> {
        let (a, b) = self.line();
        (b != 0.0).then(|| (omega - a) / b)
    }

    pub fn duration(&self) -> f64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => b.0 - a.0,
            _ => 0.0,
        }
    }
}

/// Probe overlaps on the given grids.
///
/// The positive-frequency part of the field is shifted to baseband around
/// the centre of `freqs` and decimated before the probe sums, which keeps the
/// cost proportional to the field bandwidth rather than the carrier.
pub fn husimi(
    field: &TemporalField,
    probe_width: f64,
    reference: f64,
    times: UniformGrid,
    freqs: UniformGrid,
) -> Result<Spectrogram> {
    if !(probe_width > 0.0) {
        return Err(Error::invalid("probe width must be positive"));
    }
    let rec_lo = field.grid.start;
    let rec_hi = field.grid.last();
    if 6.0 * probe_width > rec_hi - rec_lo {
        return Err(Error::invalid(format!(
            "probe width {probe_width} fs is too wide for a {:.0} fs field record",
            rec_hi - rec_lo
        )));
    }
    if times.start < rec_lo || times.last() > rec_hi {
        return Err(Error::invalid("probe times extend beyond the field record"));
    }
    if freqs.start <= 0.0 {
        return Err(Error::invalid("probe frequencies must be positive"));
    }

    // positive-frequency part p(t) = ∫A e^{−iωt}dω is half the conjugate of
    // the standard analytic signal
    let z = analytic_signal(&field.samples);
    let center = 0.5 * (freqs.start + freqs.last());
    let dt = field.grid.step;
    // decimate so the baseband (field band plus probe band) stays well below Nyquist
    let band = (freqs.last() - freqs.start).max(1e-9) + 10.0 / probe_width;
    let stride = ((PI / (4.0 * band * dt)).floor() as usize).max(1);
    let base: Vec<(f64, C64)> = (0..field.samples.len())
        .step_by(stride)
        .map(|i| {
            let t = field.grid.at(i);
            (t, 0.5 * z[i].conj() * C64::from_polar(1.0, center * t))
        })
        .collect();
    let h = dt * stride as f64;

    let cutoff = 6.0 * probe_width;
    let row = |ti: usize| -> Vec<C64> {
        let tp = times.at(ti);
        let lo = base.partition_point(|(t, _)| *t < tp - cutoff);
        let hi = base.partition_point(|(t, _)| *t <= tp + cutoff);
        let part = &base[lo..hi];
        let weights: Vec<C64> = part
            .iter()
            .map(|(t, u)| u * (-0.5 * ((t - tp) / probe_width).powi(2)).exp() * h)
            .collect();
        (0..freqs.len)
            .map(|wi| {
                let wp = freqs.at(wi);
                let dw = wp - center;
                // e^{i(ω_p−ω_c)t} by recurrence from the first sample
                let Some(&(t_first, _)) = part.first() else { return C64::default() };
                let mut rot = C64::from_polar(1.0, dw * t_first);
                let step = C64::from_polar(1.0, dw * h);
                let mut acc = C64::default();
                for w in &weights {
                    acc += w * rot;
                    rot *= step;
                }
                acc * C64::from_polar(1.0, -(wp - reference) * tp)
            })
            .collect()
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<C64>> = (0..times.len).into_par_iter().map(row).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<C64>> = (0..times.len).map(row).collect();

    Ok(Spectrogram { times, freqs, probe_width, reference, values: rows.concat() })
}
