use serde::{Deserialize, Serialize};

use crate::adiabatic::dark_population;
use crate::dynamics::{
    metrics, propagate_modal, propagate_rwa, Frame, Propagation, Stepping, TransferMetrics, DEFAULT_SPAN_SIGMAS,
};
use crate::error::{Error, Result};
use crate::model::{derive_modes, LevelSystem, TargetSuperposition};
use crate::pulse::ChirpParams;

/// Everything about a pulse and a run that a scan does not vary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBase {
    pub sigma_w: f64,
    pub alpha_w: f64,
    pub scale: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_span")]
    pub span_sigmas: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub stepping: Stepping,
}

fn default_span() -> f64 {
    DEFAULT_SPAN_SIGMAS
}

fn default_samples() -> usize {
    401
}

impl ScanBase {
    pub fn chirp(&self, sigma_w: f64, alpha_w: f64) -> Result<ChirpParams> {
        ChirpParams::new(sigma_w, alpha_w, self.t0)
    }

    pub fn propagation(&self, chirp: &ChirpParams) -> Propagation {
        Propagation::around(chirp, self.span_sigmas, self.samples).with_stepping(self.stepping)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanAxis {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl ScanAxis {
    pub fn new(name: &str, unit: &str, values: Vec<f64>) -> Self {
        Self { name: name.into(), unit: unit.into(), values }
    }

    pub fn label(&self) -> String {
        if self.unit.is_empty() { self.name.clone() } else { format!("{} [{}]", self.name, self.unit) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Cell {
    Done(Box<TransferMetrics>),
    Failed { error: String },
}

impl Cell {
    pub fn metrics(&self) -> Option<&TransferMetrics> {
        match self {
            Cell::Done(m) => Some(m),
            Cell::Failed { .. } => None,
        }
    }
}

/// Parameters recorded alongside a scan so it can be rerun exactly.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRecord {
    pub frame: Frame,
    pub base: ScanBase,
    pub model_fingerprint: String,
    pub target: Vec<(String, [f64; 2])>,
    /// Half the smallest gap between adjacent target resonances, where
    /// neighbouring spectral windows start to overlap; absent for one level.
    pub half_spacing: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub rows: ScanAxis,
    pub cols: ScanAxis,
    /// Row-major.
    pub cells: Vec<Cell>,
    pub record: ScanRecord,
}

impl ScanResult {
    pub fn cell(&self, r: usize, c: usize) -> &Cell {
        &self.cells[r * self.cols.values.len() + c]
    }

    /// One value per cell, NaN where the cell failed.
    pub fn matrix(&self, value: impl Fn(&TransferMetrics) -> f64) -> Vec<f64> {
        self.cells.iter().map(|c| c.metrics().map_or(f64::NAN, &value)).collect()
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.metrics().is_none()).count()
    }
}

/// Execution settings that must not change results.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Workers(pub Option<usize>);

/// Transfer over a grid of chirps (columns) and amplitude scales (rows),
/// each cell an independent averaged-model run.
pub fn scan_2d(
    sys: &LevelSystem,
    target: &TargetSuperposition,
    alphas: &[f64],
    scales: &[f64],
    base: &ScanBase,
    workers: Workers,
) -> Result<ScanResult> {
    if alphas.is_empty() || scales.is_empty() {
        return Err(Error::invalid("scan axes must be non-empty"));
    }
    let jobs: Vec<(f64, f64)> = scales.iter().flat_map(|&s| alphas.iter().map(move |&a| (s, a))).collect();
    let cells = run_cells(&jobs, workers, |&(scale, alpha)| {
        run_cell(sys, target, &base.chirp(base.sigma_w, alpha)?, scale, base, Frame::RwaAveraged)
    })?;
    Ok(ScanResult {
        rows: ScanAxis::new("scale", "", scales.to_vec()),
        cols: ScanAxis::new("alpha_w", "fs^2", alphas.to_vec()),
        cells,
        record: record(sys, target, base, Frame::RwaAveraged),
    })
}

/// Transfer over spectral window widths (rows) and chirps (columns) at a
/// fixed amplitude scale.
///
/// Runs use the modal model: the averaged model drops the cross terms
/// between neighbouring windows, which is exactly the effect this scan
/// probes.
pub fn scan_sigma(
    sys: &LevelSystem,
    target: &TargetSuperposition,
    sigmas: &[f64],
    alphas: &[f64],
    base: &ScanBase,
    workers: Workers,
) -> Result<ScanResult> {
    if sigmas.is_empty() || alphas.is_empty() {
        return Err(Error::invalid("scan axes must be non-empty"));
    }
    if let Some(s) = sigmas.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::invalid(format!("window widths must be positive, got {s}")));
    }
    let jobs: Vec<(f64, f64)> = sigmas.iter().flat_map(|&s| alphas.iter().map(move |&a| (s, a))).collect();
    let cells = run_cells(&jobs, workers, |&(sigma, alpha)| {
        run_cell(sys, target, &base.chirp(sigma, alpha)?, base.scale, base, Frame::Modal)
    })?;
    Ok(ScanResult {
        rows: ScanAxis::new("sigma_w", "rad/fs", sigmas.to_vec()),
        cols: ScanAxis::new("alpha_w", "fs^2", alphas.to_vec()),
        cells,
        record: record(sys, target, base, Frame::Modal),
    })
}

fn record(sys: &LevelSystem, target: &TargetSuperposition, base: &ScanBase, frame: Frame) -> ScanRecord {
    ScanRecord {
        frame,
        base: base.clone(),
        model_fingerprint: sys.fingerprint(),
        target: target.coeffs().iter().map(|(l, c)| (l.clone(), [c.re, c.im])).collect(),
        half_spacing: half_spacing(sys),
        seed: 0,
    }
}

/// Half the smallest gap between adjacent target resonances.
pub fn half_spacing(sys: &LevelSystem) -> Option<f64> {
    let idx = sys.target_indices();
    idx.windows(2).map(|w| 0.5 * (sys.resonance(w[1]) - sys.resonance(w[0]))).reduce(f64::min)
}

/// One scan cell: modes from the target at `scale`, a run in `frame`, and
/// its metrics including the largest dark-subspace population.
pub fn run_cell(
    sys: &LevelSystem,
    target: &TargetSuperposition,
    chirp: &ChirpParams,
    scale: f64,
    base: &ScanBase,
    frame: Frame,
) -> Result<TransferMetrics> {
    let modes = derive_modes(sys, target, scale)?;
    let prop = base.propagation(chirp);
    let traj = match frame {
        Frame::RwaAveraged => propagate_rwa(sys, &modes, chirp, &prop)?,
        Frame::Modal => propagate_modal(sys, &modes, chirp, &prop)?,
        Frame::Bare => return Err(Error::invalid("scans run in a rotating frame")),
    };
    let mut m = metrics(&traj, target, sys)?;
    if scale > 0.0 {
        m.dark_max = Some(dark_population(&traj, &modes, sys)?.into_iter().fold(0.0, f64::max));
    }
    Ok(m)
}

fn run_cells<J, F>(jobs: &[J], workers: Workers, f: F) -> Result<Vec<Cell>>
where
    J: Sync,
    F: Fn(&J) -> Result<TransferMetrics> + Sync,
{
    let cell = |j: &J| match f(j) {
        Ok(m) => Cell::Done(Box::new(m)),
        Err(e) => Cell::Failed { error: e.to_string() },
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || jobs.par_iter().map(cell).collect::<Vec<_>>();
        match workers.0 {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
                Ok(pool.install(run))
            }
            None => Ok(run()),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        Ok(jobs.iter().map(cell).collect())
    }
}
