use pap::bloch::{
    adiabaticity_piecewise, run_schedule, train_schedule, write_trajectory_csv, BlochState, PulseSchedule, Rotation,
};
use pap::config::BlochSource;
use serde::Serialize;

use super::require_gaussian;
use crate::error::CliResult;
use crate::session::{flush, Session};
use crate::Common;

#[derive(Serialize)]
struct BlochSummary {
    source: BlochSource,
    pulses: usize,
    final_state: [f64; 3],
    ground_population: f64,
    /// Absent for a single pulse.
    axis_drift_ratio: Option<f64>,
    steps: Vec<Rotation>,
}

pub fn bloch(common: &Common, pulses: Option<usize>) -> CliResult<()> {
    let session = Session::open("bloch", common, |c| {
        if let Some(n) = pulses {
            c.bloch.pulses = n;
        }
    })?;
    require_gaussian(&session.run)?;
    session.execute(|s| {
        let run = s.run.clone();
        let source = run.config.bloch.source.clone();
        let schedule = match source {
            BlochSource::Reconstructed => PulseSchedule::reconstructed(run.config.bloch.pulses)?,
            BlochSource::Field => train_schedule(&run.modes, &run.sys, &run.chirp)?.schedule,
        };
        let states = run_schedule(&schedule, BlochState::GROUND);
        let mut w = s.create("bloch_trajectory.csv")?;
        write_trajectory_csv(&mut w, BlochState::GROUND, &states)?;
        flush(w)?;

        let end = states.last().copied().unwrap_or(BlochState::GROUND);
        let summary = BlochSummary {
            source,
            pulses: schedule.len(),
            final_state: [end.x, end.y, end.z],
            ground_population: end.ground_population(),
            axis_drift_ratio: adiabaticity_piecewise(&schedule).ok(),
            steps: schedule.steps().to_vec(),
        };
        s.write_json("bloch.json", &summary)?;
        println!("final z {:.6} after {} pulses", end.z, summary.pulses);
        Ok(())
    })
}
