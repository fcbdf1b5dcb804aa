use pap::config::Run;
use pap::pulse::window::{numeric_time_params, WindowShape};
use pap::pulse::{
    analytic_train, block_window, build_spectrum_on, fit_phase_law, synthesize_time, train_features, SpectralField,
    TemporalField,
};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::session::{flush, Session};
use crate::Common;

#[derive(Serialize)]
struct ShapeSummary {
    window: WindowShape,
    sigma_t: f64,
    alpha_t: f64,
    spectral_energy: f64,
    temporal_energy: f64,
    /// Relative L2 distance between the FFT field and the closed-form train (Gaussian windows only).
    analytic_residual: Option<f64>,
    sub_pulses: Option<usize>,
    spacing: Option<f64>,
    /// Pulse-to-pulse change of the phase increment, rad.
    phase_curvature: Option<f64>,
    blocked: Option<String>,
    warnings: Vec<String>,
}

pub fn shape(common: &Common, block: Option<&str>) -> CliResult<()> {
    let session = Session::open("shape", common, |_| {})?;
    if let Some(label) = block {
        if session.run.modes.get(label).is_none() {
            return Err(CliError::usage(format!("--block: '{label}' is not a target level")));
        }
    }
    session.execute(|s| {
        if let Some(label) = block {
            s.note(format!("--block {label}"));
        }
        let run = s.run.clone();
        let shape = run.config.pulse.window;
        let tp = numeric_time_params(shape, run.chirp.sigma_w, run.chirp.alpha_w)?;
        let (lo, hi) = resonance_range(&run);
        // The margin is in units of σ_ω; reach/8 equals σ_ω for the Gaussian.
        let grid = run.config.grid.spectral_grid(lo, hi, shape.reach(run.chirp.sigma_w) / 8.0, tp.sigma_t)?;
        let spectrum = build_spectrum_on(&run.modes, &run.chirp, shape, grid)?;
        let field = synthesize_time(&spectrum, None)?;

        let mut warnings = spectrum.warnings.clone();
        let analytic_residual = match shape {
            WindowShape::Gaussian => Some(analytic_train(&run.modes, &run.chirp, field.grid)?.relative_l2(&field)?),
            _ => None,
        };
        let features = match train_features(&field) {
            Ok(f) if f.pulses.len() >= 3 => Some(f),
            Ok(_) => None,
            Err(e) => {
                warnings.push(format!("no train features: {e}"));
                None
            }
        };
        let law = features.as_ref().map(fit_phase_law).transpose()?;

        write_fields(s, "", &spectrum, &field)?;
        if let Some(label) = block {
            let cut = block_window(&spectrum, &run.modes, label, 0.45 * nearest_gap(&run, label))?;
            let cut_field = synthesize_time(&cut, None)?;
            write_fields(s, "_blocked", &cut, &cut_field)?;
        }

        let summary = ShapeSummary {
            window: shape,
            sigma_t: tp.sigma_t,
            alpha_t: tp.alpha_t,
            spectral_energy: spectrum.energy(),
            temporal_energy: field.energy(),
            analytic_residual,
            sub_pulses: features.as_ref().map(|f| f.pulses.len()),
            spacing: features.as_ref().map(|f| f.spacing),
            phase_curvature: law.as_ref().map(|l| l.curvature()),
            blocked: block.map(str::to_owned),
            warnings,
        };
        if let Some(r) = summary.analytic_residual {
            println!("analytic residual {r:.3e}");
        }
        s.write_json("shape.json", &summary)?;
        Ok(())
    })
}

fn write_fields(s: &mut Session, suffix: &str, spectrum: &SpectralField, field: &TemporalField) -> CliResult<()> {
    let mut w = s.create(&format!("spectrum{suffix}.csv"))?;
    spectrum.write_csv(&mut w)?;
    flush(w)?;
    let mut w = s.create(&format!("field{suffix}.csv"))?;
    field.write_csv(&mut w)?;
    flush(w)
}

fn resonance_range(run: &Run) -> (f64, f64) {
    let res = run.modes.modes().iter().map(|m| m.resonance);
    (res.clone().fold(f64::INFINITY, f64::min), res.fold(f64::NEG_INFINITY, f64::max))
}

/// Distance from `label`'s resonance to the closest other mode.
fn nearest_gap(run: &Run, label: &str) -> f64 {
    let own = run.modes.get(label).map_or(0.0, |m| m.resonance);
    run.modes
        .modes()
        .iter()
        .filter(|m| m.label != label)
        .map(|m| (m.resonance - own).abs())
        .fold(f64::INFINITY, f64::min)
}
