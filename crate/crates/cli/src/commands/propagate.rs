use std::f64::consts::PI;

use pap::adiabatic::AdiabaticSeries;
use pap::analysis::report::emit_trajectory;
use pap::config::Run;
use pap::dynamics::{
    metrics, propagate_bare, propagate_modal, propagate_rwa, scaled_carrier, Frame, Propagation, Trajectory,
};
use pap::pulse::{build_spectrum, synthesize_time};
use serde::Serialize;

use super::require_gaussian;
use crate::error::CliResult;
use crate::session::{flush, Session};
use crate::Common;

#[derive(Serialize)]
struct Adiabaticity {
    max_ratio: f64,
    max_dark_population: f64,
}

pub fn propagate(common: &Common, frame: Option<Frame>) -> CliResult<()> {
    let mut session = Session::open("propagate", common, |c| {
        if let Some(f) = frame {
            c.propagator.frame = f;
        }
    })?;
    require_gaussian(&session.run)?;
    let frame = session.run.config.propagator.frame;
    session.dir = session.dir.join(frame.name());
    session.execute(|s| {
        let run = s.run.clone();
        let prop = run.propagation();
        let traj = match run_frame(&run, &prop) {
            Ok(t) => t,
            Err(pap::Error::Integrator { t, msg, partial: Some(partial) }) => {
                let written = emit_trajectory(&s.dir, &partial, s.format)?;
                s.record(&written);
                s.note(format!("trajectory is partial, integration stopped at t = {t:.3} fs"));
                return Err(pap::Error::Integrator { t, msg, partial: None }.into());
            }
            Err(e) => return Err(e.into()),
        };
        let written = emit_trajectory(&s.dir, &traj, s.format)?;
        s.record(&written);

        let sys = match run.config.propagator.frame {
            Frame::Bare => scaled_carrier(&run.sys, &run.modes, run.config.propagator.scaled_carrier)?.sys,
            _ => run.sys.clone(),
        };
        let mut m = metrics(&traj, &run.target, &sys)?;
        // A silent field has no bright state to define the dark subspace against.
        if run.modes.coupling_norm(&run.sys) > 0.0 {
            let series = AdiabaticSeries::new(&traj, &run.modes, &run.sys, &run.chirp)?;
            m.dark_max = Some(series.max_dark());
            let mut w = s.create("adiabatic.csv")?;
            series.write_csv(&mut w)?;
            flush(w)?;
            s.write_json(
                "adiabaticity.json",
                &Adiabaticity { max_ratio: series.max_adiabaticity(), max_dark_population: series.max_dark() },
            )?;
        } else {
            s.note("zero field: dark-subspace diagnostics skipped");
        }
        s.write_json("metrics.json", &m)?;
        println!("transferred {:.6} overlap {:.6} fidelity {:.6}", m.transferred, m.overlap, m.fidelity);
        Ok(())
    })
}

/// Runs the configured frame; bare runs come back in the rotating frame.
fn run_frame(run: &Run, prop: &Propagation) -> pap::Result<Trajectory> {
    match run.config.propagator.frame {
        Frame::RwaAveraged => propagate_rwa(&run.sys, &run.modes, &run.chirp, prop),
        Frame::Modal => propagate_modal(&run.sys, &run.modes, &run.chirp, prop),
        Frame::Bare => {
            let sc = scaled_carrier(&run.sys, &run.modes, run.config.propagator.scaled_carrier)?;
            let top = sc.modes.modes().iter().map(|m| m.resonance).fold(0.0, f64::max);
            let spectrum = build_spectrum(&sc.modes, &run.chirp, &run.config.grid)?;
            // 25 samples per cycle of the fastest resonance; the bare model insists on 20
            let field = synthesize_time(&spectrum, Some(2.0 * PI / (25.0 * top)))?;
            propagate_bare(&sc.sys, &field, prop)?.to_rotating(&sc.sys, &run.chirp)
        }
    }
}
