mod bloch;
mod propagate;
mod scan;
mod shape;

pub use bloch::bloch;
pub use propagate::propagate;
pub use scan::scan;
pub use shape::shape;

use pap::analysis::husimi;
use pap::analysis::report::emit_spectrogram;
use pap::config::Run;
use pap::pulse::window::WindowShape;
use pap::pulse::{build_spectrum, synthesize_time, UniformGrid};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::session::Session;
use crate::Common;

/// Only `shape` handles non-Gaussian windows; the propagators assume the Gaussian map.
fn require_gaussian(run: &Run) -> CliResult<()> {
    match run.config.pulse.window {
        WindowShape::Gaussian => Ok(()),
        _ => Err(CliError::usage("pulse.window: only the shape command supports non-Gaussian windows")),
    }
}

fn axis_grid(values: &[f64]) -> CliResult<UniformGrid> {
    Ok(UniformGrid::linspace(values[0], values[values.len() - 1], values.len())?)
}

#[derive(Serialize)]
struct StripeSummary {
    /// rad/fs at the reference time
    intercept: f64,
    /// rad/fs²
    slope: f64,
    duration: f64,
    points: usize,
}

pub fn spectrogram(common: &Common) -> CliResult<()> {
    let session = Session::open("spectrogram", common, |_| {})?;
    require_gaussian(&session.run)?;
    let spec = session
        .run
        .config
        .spectrogram
        .clone()
        .ok_or_else(|| CliError::usage("spectrogram: the config has no `spectrogram` section"))?;
    session.execute(|s| {
        let run = &s.run;
        let spectrum = build_spectrum(&run.modes, &run.chirp, &run.config.grid)?;
        let field = synthesize_time(&spectrum, None)?;
        let reference = spectrum.carrier.map_or(run.modes.modes()[0].resonance, |c| c.omega0);
        let times = axis_grid(&spec.times.values())?;
        let freqs = axis_grid(&spec.freqs.values())?;
        let map = husimi(&field, spec.probe_width, reference, times, freqs)?;
        let resonances: Vec<f64> = run.modes.modes().iter().map(|m| m.resonance).collect();
        let stripes: Vec<StripeSummary> = map
            .stripes(run.chirp.t0, 0.1)
            .iter()
            .map(|st| {
                let (intercept, slope) = st.line();
                StripeSummary { intercept, slope, duration: st.duration(), points: st.points.len() }
            })
            .collect();
        let written = emit_spectrogram(&s.dir, &map, &resonances, s.format)?;
        s.record(&written);
        s.write_json("stripes.json", &stripes)?;
        println!("{} stripes", stripes.len());
        Ok(())
    })
}

#[derive(Serialize)]
struct Validation {
    model_fingerprint: String,
    levels: usize,
    targets: Vec<String>,
    sigma_t: f64,
    alpha_t: f64,
    coupling_norm: f64,
}

pub fn validate(common: &Common) -> CliResult<()> {
    let session = Session::open("validate", common, |_| {})?;
    session.execute(|s| {
        let run = &s.run;
        let tp = run.chirp.time_params();
        let report = Validation {
            model_fingerprint: run.sys.fingerprint(),
            levels: run.sys.excited().len() + 1,
            targets: run.target.coeffs().iter().map(|(l, _)| l.clone()).collect(),
            sigma_t: tp.sigma_t,
            alpha_t: tp.alpha_t,
            coupling_norm: run.modes.coupling_norm(&run.sys),
        };
        s.write_json("validation.json", &report)?;
        println!("ok");
        Ok(())
    })
}
