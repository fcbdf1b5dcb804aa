use pap::analysis::report::emit_scan;
use pap::analysis::{half_spacing, scan_2d, scan_sigma, ScanResult, Workers};

use super::require_gaussian;
use crate::error::{CliError, CliResult};
use crate::session::Session;
use crate::Common;

pub fn scan(common: &Common, workers: Option<usize>) -> CliResult<()> {
    let session = Session::open("scan", common, |_| {})?;
    require_gaussian(&session.run)?;
    let spec =
        session.run.config.scan.clone().ok_or_else(|| CliError::usage("scan: the config has no `scan` section"))?;
    if workers == Some(0) {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    session.execute(|s| {
        if let Some(n) = workers {
            s.note(format!("--workers {n}"));
        }
        let run = s.run.clone();
        let base = run.scan_base();
        let alphas = spec.alphas.values();
        let seeded = |mut r: ScanResult| {
            r.record.seed = run.config.seed;
            r
        };

        let grid = seeded(scan_2d(&run.sys, &run.target, &alphas, &spec.scales.values(), &base, Workers(workers))?);
        let dir = s.dir.join("chirp_amplitude");
        let written = emit_scan(&dir, &grid, s.format)?;
        s.record(&written);
        s.write_json("chirp_amplitude/scan_record.json", &grid.record)?;
        let mut failed = grid.failures();

        if let Some(fractions) = &spec.width_fractions {
            let hs = half_spacing(&run.sys)
                .ok_or_else(|| CliError::usage("scan.width_fractions needs at least two target levels"))?;
            let sigmas: Vec<f64> = fractions.values().iter().map(|f| f * hs).collect();
            let widths = seeded(scan_sigma(&run.sys, &run.target, &sigmas, &alphas, &base, Workers(workers))?);
            let dir = s.dir.join("window_width");
            let written = emit_scan(&dir, &widths, s.format)?;
            s.record(&written);
            s.write_json("window_width/scan_record.json", &widths.record)?;
            failed += widths.failures();
        }
        if failed > 0 {
            s.note(format!("{failed} scan cells failed; see scan_cells.json"));
        }
        println!("{} cells, {failed} failed", grid.cells.len());
        Ok(())
    })
}
