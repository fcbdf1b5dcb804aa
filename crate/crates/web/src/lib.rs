//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every call returns a JSON string; the page parses it and draws on canvases.
//! The demo model and run config are compiled in.

use std::path::Path;

use pap::bloch::{run_schedule, BlochState, PulseSchedule};
use pap::config::{Run, RunConfig};
use pap::dynamics::propagate_rwa;
use pap::model::derive_modes;
use pap::pulse::{build_spectrum, synthesize_time, ChirpParams};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MODEL: &str = include_str!("../../../configs/demo_model.json");
const RUN: &str = include_str!("../../../configs/demo_run.json");

/// Points handed to the page per curve.
const PLOT_POINTS: usize = 1500;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(js_err)
}

#[wasm_bindgen]
pub struct Demo {
    run: Run,
}

#[derive(Serialize)]
struct FieldView {
    t: Vec<f64>,
    field: Vec<f64>,
    omega: Vec<f64>,
    spectrum: Vec<f64>,
    resonances: Vec<f64>,
}

#[derive(Serialize)]
struct Populations {
    t: Vec<f64>,
    labels: Vec<String>,
    /// One series per label, ground first.
    series: Vec<Vec<f64>>,
    target: Vec<f64>,
    transferred: f64,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<Demo, JsError> {
        let config = RunConfig::from_json(RUN, "demo_run.json").map_err(js_err)?;
        let run = config.resolve_with_model(MODEL, Path::new("")).map_err(js_err)?;
        Ok(Demo { run })
    }

    fn with_pulse(&self, alpha_w: f64, scale: f64) -> Result<(ChirpParams, pap::model::ModeSet), JsError> {
        let p = &self.run.config.pulse;
        let chirp = ChirpParams::new(p.sigma_w, alpha_w, p.t0).map_err(js_err)?;
        let modes = derive_modes(&self.run.sys, &self.run.target, scale).map_err(js_err)?;
        Ok((chirp, modes))
    }

    /// Time-domain field and spectral magnitude of the shaped pulse.
    pub fn field(&self, alpha_w: f64, scale: f64) -> Result<String, JsError> {
        let (chirp, modes) = self.with_pulse(alpha_w, scale)?;
        let spectrum = build_spectrum(&modes, &chirp, &self.run.config.grid).map_err(js_err)?;
        let field = synthesize_time(&spectrum, None).map_err(js_err)?;
        let keep = field.samples.len().div_ceil(PLOT_POINTS);
        let (t, e): (Vec<f64>, Vec<f64>) =
            field.samples.iter().enumerate().step_by(keep).map(|(i, v)| (field.grid.at(i), *v)).unzip();
        let nonzero: Vec<usize> = (0..spectrum.amps.len()).filter(|&i| spectrum.amps[i].norm() > 0.0).collect();
        let (lo, hi) = match (nonzero.first(), nonzero.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (0, spectrum.amps.len() - 1),
        };
        let (omega, mag) = (lo..=hi).map(|i| (spectrum.grid.at(i), spectrum.amps[i].norm())).unzip();
        to_json(&FieldView {
            t,
            field: e,
            omega,
            spectrum: mag,
            resonances: modes.modes().iter().map(|m| m.resonance).collect(),
        })
    }

    /// Populations under the averaged model.
    pub fn populations(&self, alpha_w: f64, scale: f64) -> Result<String, JsError> {
        let (chirp, modes) = self.with_pulse(alpha_w, scale)?;
        let mut prop = pap::dynamics::Propagation::around(&chirp, self.run.config.propagator.span_sigmas, 601);
        prop.stepping = self.run.config.propagator.stepping;
        let traj = propagate_rwa(&self.run.sys, &modes, &chirp, &prop).map_err(js_err)?;
        let series = traj.labels.iter().map(|l| traj.population_series(l).unwrap_or_default()).collect();
        let target = std::iter::once(0.0)
            .chain(traj.labels[1..].iter().map(|l| {
                self.run.target.coeffs().iter().find(|(k, _)| k == l).map_or(0.0, |(_, c)| c.norm_sqr())
            }))
            .collect();
        let transferred = 1.0 - traj.final_population("ground");
        to_json(&Populations { t: traj.times.clone(), labels: traj.labels.clone(), series, target, transferred })
    }

    /// Bloch-vector path of the reconstructed n-pulse schedule, starting in the ground state.
    pub fn bloch(&self, pulses: usize) -> Result<String, JsError> {
        let schedule = PulseSchedule::reconstructed(pulses).map_err(js_err)?;
        let path: Vec<[f64; 3]> = std::iter::once(BlochState::GROUND)
            .chain(run_schedule(&schedule, BlochState::GROUND))
            .map(|s| [s.x, s.y, s.z])
            .collect();
        to_json(&path)
    }
}
