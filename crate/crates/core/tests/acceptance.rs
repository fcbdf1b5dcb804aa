//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
//!
//! Run with `cargo test -p pap-core --test acceptance`.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use pap::adiabatic::{dark_population, nonadiabatic_matrix};
use pap::analysis::{half_spacing, husimi, scan_2d, scan_sigma, ScanResult, Workers};
use pap::bloch::{
    approx_axis, approx_axis_pulse_first, axis_angles, compose_rotations, run_schedule, BlochState, PulseSchedule,
    Quaternion,
};
use pap::config::Run;
use pap::dynamics::{
    metrics, propagate_bare, propagate_modal, propagate_rwa, rwa_hamiltonian, scaled_carrier, Propagation,
    RwaModel, TransferMetrics,
};
use pap::model::derive_modes;
use pap::pulse::{
    analytic_train, block_window, build_spectrum, fit_phase_law, sample_modes, single_chirp_pulse, synthesize_time,
    train_features, ChirpParams, GridSpec, UniformGrid,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Plateau of the chirp/amplitude scan, shared by criteria 2, 3 and 5.
struct Plateau {
    /// Inclusive row range over the scale axis.
    rows: (usize, usize),
    cols: Vec<usize>,
}

struct Ctx {
    run: Run,
    scan: Option<(ScanResult, f64)>,
}

impl Ctx {
    fn scan(&mut self) -> &(ScanResult, f64) {
        if self.scan.is_none() {
            let spec = self.run.config.scan.clone().expect("demo config has a scan section");
            let start = Instant::now();
            let s = scan_2d(
                &self.run.sys,
                &self.run.target,
                &spec.alphas.values(),
                &spec.scales.values(),
                &self.run.scan_base(),
                Workers(None),
            )
            .expect("scan runs");
            self.scan = Some((s, start.elapsed().as_secs_f64()));
        }
        self.scan.as_ref().unwrap()
    }

    /// Columns with 2e5 ≤ |α_ω| ≤ 4e5 and the widest contiguous scale range
    /// (at least a factor 2) over which every such cell transfers ≥ 0.90 with
    /// a spread below 0.05.
    fn plateau(&mut self) -> (Option<Plateau>, Vec<usize>) {
        let (scan, _) = self.scan();
        let cols: Vec<usize> = scan
            .cols
            .values
            .iter()
            .enumerate()
            .filter(|(_, a)| (2e5 * (1.0 - 1e-9)..=4e5 * (1.0 + 1e-9)).contains(&a.abs()))
            .map(|(i, _)| i)
            .collect();
        let scales = &scan.rows.values;
        let transferred = |r: usize, c: usize| scan.cell(r, c).metrics().map_or(f64::NAN, |m| m.transferred);
        let mut best: Option<(f64, (usize, usize))> = None;
        for r0 in 0..scales.len() {
            for r1 in r0..scales.len() {
                if !(scales[r0] > 0.0) || scales[r1] / scales[r0] < 2.0 {
                    continue;
                }
                let vals: Vec<f64> = (r0..=r1).flat_map(|r| cols.iter().map(move |&c| (r, c))).map(|(r, c)| transferred(r, c)).collect();
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if lo >= 0.90 && hi - lo < 0.05 {
                    let ratio = scales[r1] / scales[r0];
                    if best.is_none_or(|(b, _)| ratio > b) {
                        best = Some((ratio, (r0, r1)));
                    }
                }
            }
        }
        (best.map(|(_, rows)| Plateau { rows, cols: cols.clone() }), cols)
    }
}

fn plateau_cells<'a>(scan: &'a ScanResult, p: &Plateau) -> Vec<&'a TransferMetrics> {
    (p.rows.0..=p.rows.1)
        .flat_map(|r| p.cols.iter().map(move |&c| (r, c)))
        .filter_map(|(r, c)| scan.cell(r, c).metrics())
        .collect()
}

fn c1_population_law(ctx: &mut Ctx) -> Outcome {
    let run = &ctx.run;
    let start = Instant::now();
    let traj = propagate_rwa(&run.sys, &run.modes, &run.chirp, &run.propagation()).unwrap();
    let m = metrics(&traj, &run.target, &run.sys).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let dev = m.law_deviation();
    outcome(
        dev <= 0.02 && secs < 30.0 && m.transferred > 0.5,
        format!("transferred {:.4}, max |p_n/P - |c_n|^2| = {dev:.2e} (limit 0.02), {secs:.2} s (limit 30 s)", m.transferred),
    )
}

fn c2_plateau(ctx: &mut Ctx) -> Outcome {
    let (plateau, _) = ctx.plateau();
    let (scan, secs) = ctx.scan();
    let failures = scan.failures();
    match plateau {
        Some(p) => {
            let cells = plateau_cells(scan, &p);
            let lo = cells.iter().map(|m| m.transferred).fold(f64::INFINITY, f64::min);
            let hi = cells.iter().map(|m| m.transferred).fold(f64::NEG_INFINITY, f64::max);
            let (s0, s1) = (scan.rows.values[p.rows.0], scan.rows.values[p.rows.1]);
            outcome(
                *secs < 600.0 && failures == 0,
                format!(
                    "plateau |alpha_w| in [2e5, 4e5] (both signs) x scale [{s0:.2}, {s1:.2}] (ratio {:.2}): transferred {lo:.4}..{hi:.4}, spread {:.4} (limit 0.05); {}x{} scan {secs:.1} s, {failures} failed cells",
                    s1 / s0,
                    hi - lo,
                    scan.rows.values.len(),
                    scan.cols.values.len()
                ),
            )
        }
        None => outcome(false, format!("no scale range of ratio >= 2 with transferred >= 0.90 and spread < 0.05 ({secs:.1} s)")),
    }
}

fn c3_overlap(ctx: &mut Ctx) -> Outcome {
    let (plateau, _) = ctx.plateau();
    let (scan, _) = ctx.scan();
    let Some(p) = plateau else {
        return outcome(false, "no plateau to evaluate".into());
    };
    let cells = plateau_cells(scan, &p);
    let lo = cells.iter().map(|m| m.overlap).fold(f64::INFINITY, f64::min);
    let hi = cells.iter().map(|m| m.overlap).fold(f64::NEG_INFINITY, f64::max);
    outcome(
        lo >= 0.80 && hi <= 0.97,
        format!("plateau overlap {lo:.4}..{hi:.4} (required within [0.80, 0.97])"),
    )
}

fn c4_piecewise_rabi(ctx: &mut Ctx) -> Outcome {
    let run = &ctx.run;
    let chirp = ChirpParams::new(run.chirp.sigma_w, 0.0, run.chirp.t0).unwrap();
    let modes = derive_modes(&run.sys, &run.target, 0.6).unwrap();
    let traj = propagate_rwa(&run.sys, &modes, &chirp, &Propagation::around(&chirp, 5.0, 4001)).unwrap();
    let ground = traj.population_series("ground").unwrap();
    let first_empty = ground.iter().position(|&g| g < 0.01);
    let (min, refill) = match first_empty {
        Some(i) => (ground[i..].iter().cloned().fold(1.0, f64::min), ground[i..].iter().cloned().fold(0.0, f64::max)),
        None => (ground.iter().cloned().fold(1.0, f64::min), 0.0),
    };
    outcome(
        first_empty.is_some() && refill > 0.3,
        format!("alpha_w = 0, scale 0.6: ground minimum {min:.2e} (limit 0.01), later maximum {refill:.4} (limit 0.3)"),
    )
}

/// Bright eigenvectors of the numerically diagonalized RWA Hamiltonian,
/// ordered (λ₊, λ₋): the two eigenvalues off the degenerate dark cluster.
fn numeric_bright(h: &DMatrix<C64>) -> [nalgebra::DVector<C64>; 2] {
    let eig = h.clone().symmetric_eigen();
    let mut vals: Vec<(usize, f64)> = eig.eigenvalues.iter().cloned().enumerate().collect();
    vals.sort_by(|a, b| a.1.total_cmp(&b.1));
    let median = vals[vals.len() / 2].1;
    let mut off: Vec<(usize, f64)> = vals.clone();
    off.sort_by(|a, b| (b.1 - median).abs().total_cmp(&(a.1 - median).abs()));
    let mut pair = [off[0], off[1]];
    pair.sort_by(|a, b| b.1.total_cmp(&a.1));
    [eig.eigenvectors.column(pair[0].0).into_owned(), eig.eigenvectors.column(pair[1].0).into_owned()]
}

fn c5_dark_state(ctx: &mut Ctx) -> Outcome {
    let (plateau, _) = ctx.plateau();
    let (scan, _) = ctx.scan();
    let dark_max = match &plateau {
        Some(p) => plateau_cells(scan, p).iter().filter_map(|m| m.dark_max).fold(0.0, f64::max),
        None => f64::NAN,
    };
    let run = &ctx.run;
    let tp = run.chirp.time_params();

    // U†U̇ coupling between the bright pair and the dark subspace.
    let times: Vec<f64> = (0..100).map(|i| run.chirp.t0 + tp.sigma_t * (-2.0 + 4.0 * i as f64 / 99.0)).collect();
    let dt = 1e-2 * tp.sigma_t;
    let mut analytic = 0.0_f64;
    let mut numeric = 0.0_f64;
    for &t in &times {
        let g = nonadiabatic_matrix(&run.modes, &run.sys, &run.chirp, t, dt).unwrap();
        let block = g.view((2, 0), (g.nrows() - 2, 2)).norm();
        analytic = analytic.max(block / g.norm().max(f64::MIN_POSITIVE));

        let h = |s: f64| rwa_hamiltonian(&run.sys, &run.modes, &run.chirp, s).unwrap();
        let b0 = numeric_bright(&h(t));
        let align = |v: nalgebra::DVector<C64>, r: &nalgebra::DVector<C64>| {
            let p = r.dotc(&v);
            v * (p.conj() / p.norm())
        };
        let bp = numeric_bright(&h(t + dt));
        let bm = numeric_bright(&h(t - dt));
        for k in 0..2 {
            let deriv = (align(bp[k].clone(), &b0[k]) - align(bm[k].clone(), &b0[k])) / C64::new(2.0 * dt, 0.0);
            let mut dark_part = deriv.clone();
            for b in &b0 {
                dark_part -= b * b.dotc(&deriv);
            }
            numeric = numeric.max(dark_part.norm() / deriv.norm().max(f64::MIN_POSITIVE));
        }
    }

    // Negative control: level-dependent chirp rates break the common detuning.
    let skew = vec![-0.3, -0.2, -0.1, 0.1, 0.2, 0.3];
    let model = RwaModel::new(&run.sys, &run.modes, &run.chirp).unwrap().with_detuning_skew(skew).unwrap();
    let mut initial = vec![C64::default(); run.modes.len() + 1];
    initial[0] = C64::new(1.0, 0.0);
    let traj = model.propagate_from(&initial, &run.propagation()).unwrap();
    let control = dark_population(&traj, &run.modes, &run.sys).unwrap().into_iter().fold(0.0, f64::max);

    outcome(
        dark_max < 1e-4 && analytic < 1e-8 && numeric < 1e-8 && control > 1e-2,
        format!(
            "plateau max dark population {dark_max:.2e} (limit 1e-4); bright-dark block of U'U at 100 times: analytic {analytic:.2e}, numeric eigenvectors {numeric:.2e} (limit 1e-8); skewed-detuning control {control:.3} (needs > 1e-2)"
        ),
    )
}

fn max_population_difference(a: &TransferMetrics, b: &TransferMetrics) -> f64 {
    let mut d = (a.ground - b.ground).abs();
    for l in &a.levels {
        d = d.max((l.population - b.population(&l.label)).abs());
    }
    d
}

fn c6_oracles(ctx: &mut Ctx) -> Outcome {
    let run = &ctx.run;
    let prop = run.propagation();
    let rwa = propagate_rwa(&run.sys, &run.modes, &run.chirp, &prop).unwrap();
    let modal = propagate_modal(&run.sys, &run.modes, &run.chirp, &prop).unwrap();
    let m_rwa = metrics(&rwa, &run.target, &run.sys).unwrap();
    let m_modal = metrics(&modal, &run.target, &run.sys).unwrap();

    let sc = scaled_carrier(&run.sys, &run.modes, run.config.propagator.scaled_carrier).unwrap();
    let spectrum = build_spectrum(&sc.modes, &run.chirp, &GridSpec::default()).unwrap();
    let field = synthesize_time(&spectrum, Some(0.3)).unwrap();
    let bare = propagate_bare(&sc.sys, &field, &prop).unwrap();
    let norm_bare = bare.max_norm_error();
    let bare = bare.to_rotating(&sc.sys, &run.chirp).unwrap();
    let m_bare = metrics(&bare, &run.target, &sc.sys).unwrap();

    let d_modal = max_population_difference(&m_rwa, &m_modal);
    let d_bare = max_population_difference(&m_bare, &m_rwa).max(max_population_difference(&m_bare, &m_modal));
    let norm = rwa.max_norm_error().max(modal.max_norm_error()).max(norm_bare);
    outcome(
        d_modal < 0.01 && d_bare < 0.02 && norm < 1e-9,
        format!(
            "max |dP| rwa vs modal {d_modal:.4} (limit 0.01); bare (carrier {:.2} rad/fs) vs rwa/modal {d_bare:.4} (limit 0.02); max norm error {norm:.1e} (limit 1e-9)",
            run.config.propagator.scaled_carrier
        ),
    )
}

fn c7_field_synthesis(ctx: &mut Ctx) -> Outcome {
    let run = &ctx.run;
    let spectrum = build_spectrum(&run.modes, &run.chirp, &GridSpec::default()).unwrap();
    let fft = synthesize_time(&spectrum, None).unwrap();
    let analytic = analytic_train(&run.modes, &run.chirp, fft.grid).unwrap();
    let l2 = analytic.relative_l2(&fft).unwrap();

    let features = train_features(&analytic).unwrap();
    let res: Vec<f64> = run.sys.target_indices().iter().map(|&k| run.sys.resonance(k)).collect();
    let mean_spacing = (res[res.len() - 1] - res[0]) / (res.len() - 1) as f64;
    let period = 2.0 * PI / mean_spacing;
    let spacing_err = features.spacing / period - 1.0;
    let law = fit_phase_law(&features).unwrap();
    let expected = run.chirp.time_params().alpha_t * period * period;
    let curv_err = law.curvature() / expected - 1.0;
    outcome(
        l2 < 1e-6 && spacing_err.abs() < 0.01 && curv_err.abs() < 0.05,
        format!(
            "analytic vs FFT relative L2 {l2:.2e} (limit 1e-6); spacing {:.2} fs vs 2pi/mean spacing {period:.2} fs ({:+.2}%, limit 1%); phase curvature {:.4} vs alpha_t T^2 {expected:.4} ({:+.1}%, limit 5%) over {} pulses",
            features.spacing,
            100.0 * spacing_err,
            law.curvature(),
            100.0 * curv_err,
            features.pulses.len()
        ),
    )
}

fn c8_spectrogram(ctx: &mut Ctx) -> Outcome {
    let run = &ctx.run;
    let spec = run.config.spectrogram.clone().expect("demo config has a spectrogram section");
    let spectrum = build_spectrum(&run.modes, &run.chirp, &GridSpec::default()).unwrap();
    let field = synthesize_time(&spectrum, None).unwrap();
    let times = axis(&spec.times.values());
    let freqs = axis(&spec.freqs.values());
    let s = husimi(&field, spec.probe_width, run.modes.modes()[(run.modes.len() - 1) / 2].resonance, times, freqs).unwrap();
    let stripes = s.stripes(run.chirp.t0, 0.1);
    let res: Vec<f64> = run.sys.target_indices().iter().map(|&k| run.sys.resonance(k)).collect();
    let mut worst = 0.0_f64;
    let mut matched = vec![false; res.len()];
    for st in &stripes {
        let (a, _) = st.line();
        let k = (0..res.len()).min_by(|&i, &j| (res[i] - a).abs().total_cmp(&(res[j] - a).abs())).unwrap();
        matched[k] = true;
        let dt = st.crossing(res[k]).map_or(f64::INFINITY, |tc| (tc - run.chirp.t0).abs());
        worst = worst.max(dt);
    }
    let all_matched = matched.iter().all(|&m| m);
    let shaped_ok = stripes.len() == res.len() && all_matched && worst <= s.times.step;

    // Unshaped, chirped reference pulse.
    let single_chirp = ChirpParams::new(0.05, 2e4, 0.0).unwrap();
    let single = single_chirp_pulse(2.95, 0.1, &single_chirp, &GridSpec::default()).unwrap();
    let single_field = synthesize_time(&single, None).unwrap();
    let s1 = husimi(
        &single_field,
        200.0,
        2.95,
        UniformGrid::linspace(-400.0, 400.0, 41).unwrap(),
        UniformGrid::linspace(2.80, 3.10, 151).unwrap(),
    )
    .unwrap();
    let single_stripes = s1.stripes(0.0, 0.1).len();
    let rows_one_peak = (0..s1.times.len).all(|ti| s1.row_peaks(ti, 0.1).len() == 1);

    outcome(
        shaped_ok && single_stripes == 1 && rows_one_peak,
        format!(
            "shaped field: {} stripes for {} levels, worst resonance crossing {worst:.3} fs from t0 (limit one cell = {} fs); single chirp: {single_stripes} stripe, one peak per row: {rows_one_peak}",
            stripes.len(),
            res.len(),
            s.times.step
        ),
    )
}

fn axis(v: &[f64]) -> UniformGrid {
    UniformGrid::linspace(v[0], v[v.len() - 1], v.len()).unwrap()
}

fn c9_width_instability(ctx: &mut Ctx) -> Outcome {
    let run = &ctx.run;
    let half = half_spacing(&run.sys).unwrap();
    let stable = [0.15, 0.2, 0.25, 0.3];
    let unstable = [1.0, 1.2];
    let fractions: Vec<f64> = stable.iter().chain(unstable.iter()).cloned().collect();
    let sigmas: Vec<f64> = fractions.iter().map(|f| f * half).collect();
    let alphas: Vec<f64> = (0..9).map(|i| 2e5 + 25_000.0 * i as f64).collect();
    let scan = scan_sigma(&run.sys, &run.target, &sigmas, &alphas, &run.scan_base(), Workers(None)).unwrap();
    let fid = |r: usize, c: usize| scan.cell(r, c).metrics().map_or(f64::NAN, |m| m.fidelity);
    let baseline = fid(1, 0);
    let stable_dev = (0..stable.len()).map(|r| (fid(r, 0) / baseline - 1.0).abs()).fold(0.0, f64::max);
    let mut unstable_desc = Vec::new();
    let mut unstable_ok = true;
    for (i, f) in unstable.iter().enumerate() {
        let r = stable.len() + i;
        let row: Vec<f64> = (0..alphas.len()).map(|c| fid(r, c)).collect();
        let drop = 1.0 - row[0] / baseline;
        let tv: f64 = row.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        let ripple = tv - (row[row.len() - 1] - row[0]).abs();
        unstable_ok &= drop > 0.10 || ripple > 0.02;
        unstable_desc.push(format!("{f}x: drop {:.1}%, ripple {ripple:.3}", 100.0 * drop));
    }
    outcome(
        stable_dev < 0.02 && unstable_ok && scan.failures() == 0,
        format!(
            "half-spacing {half:.5} rad/fs; sigma_w in {{0.15..0.3}}x: max change {:.2}% vs 0.2x baseline F = {baseline:.4} (limit 2%); {} (needs drop > 10% or ripple > 0.02)",
            100.0 * stable_dev,
            unstable_desc.join(", ")
        ),
    )
}

fn c10_blocking(ctx: &mut Ctx) -> Outcome {
    let run = &ctx.run;
    let blocked = "v9";
    let k = run.sys.index_of(blocked).unwrap();
    let res = run.sys.resonance(k);
    let gap = run
        .sys
        .target_indices()
        .iter()
        .filter(|&&j| j != k)
        .map(|&j| (run.sys.resonance(j) - res).abs())
        .fold(f64::INFINITY, f64::min);
    let spectrum = build_spectrum(&run.modes, &run.chirp, &GridSpec::default()).unwrap();
    let cut = block_window(&spectrum, &run.modes, blocked, 0.45 * gap).unwrap();
    let modes = sample_modes(&cut, &run.sys).unwrap();
    let traj = propagate_modal(&run.sys, &modes, &run.chirp, &run.propagation()).unwrap();
    let m = metrics(&traj, &run.target, &run.sys).unwrap();
    let leak = m.population(blocked) / m.transferred;

    let rest: Vec<(&str, f64)> = run
        .target
        .coeffs()
        .iter()
        .filter(|(l, _)| l != blocked)
        .map(|(l, c)| (l.as_str(), c.norm_sqr()))
        .collect();
    let predicted_total: f64 = rest.iter().map(|r| r.1).sum();
    let measured_total: f64 = rest.iter().map(|r| m.population(r.0)).sum();
    let worst = rest
        .iter()
        .map(|(l, c2)| (m.population(l) / measured_total - c2 / predicted_total).abs())
        .fold(0.0, f64::max);
    outcome(
        leak < 1e-3 && worst < 0.03,
        format!(
            "blocked {blocked} (half-width {:.5} rad/fs): its share of the transfer {leak:.2e} (limit 1e-3); remaining ratios deviate by at most {worst:.4} absolute (limit 0.03); transferred {:.4}",
            0.45 * gap,
            m.transferred
        ),
    )
}

fn unit_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn from_angles(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn c11_bloch(_: &mut Ctx) -> Outcome {
    let schedule = PulseSchedule::reconstructed(20).unwrap();
    let z = run_schedule(&schedule, BlochState::GROUND).last().unwrap().z;

    // Small-angle axis: closed-form axis vs exact composition, for both
    // operator orders; the closed-form azimuth belongs to phase-step-first.
    let mut worst = 0.0_f64;
    let mut worst_literal = 0.0_f64;
    let mut ratio = (f64::INFINITY, 0.0_f64);
    let y = [0.0, 1.0, 0.0];
    let zax = [0.0, 0.0, 1.0];
    for i in 0..6 {
        for j in 0..6 {
            let area = 0.01 + 0.008 * i as f64;
            let step = -0.05 + 0.02 * j as f64;
            let (axis, angle) = compose_rotations(area, step);
            let a = approx_axis_pulse_first(area, step);
            worst = worst.max(unit_distance(axis, from_angles(a.theta[0], a.phi[0])));
            let q = Quaternion::from_axis_angle(y, area).mul(Quaternion::from_axis_angle(zax, step));
            let (axis_rev, _) = q.axis_angle();
            let lit = approx_axis(area, step);
            worst_literal = worst_literal.max(unit_distance(axis_rev, from_angles(lit.theta[0], lit.phi[0])));
            let r = angle / lit.angle;
            ratio = (ratio.0.min(r), ratio.1.max(r));
            let _ = axis_angles(axis);
        }
    }
    outcome(
        z < -0.95 && worst < 0.02 && worst_literal < 0.02,
        format!(
            "20-pulse schedule final z {z:.4} (limit -0.95); small-angle axis error {worst:.4} (pulse-first order), {worst_literal:.4} (closed form, phase-first order), limit 0.02; exact/closed-form angle ratio {:.4}..{:.4} (sqrt 2 = {:.4}, not asserted)",
            ratio.0,
            ratio.1,
            2f64.sqrt()
        ),
    )
}

fn main() {
    let mut ctx = Ctx { run: common::demo(), scan: None };
    let criteria: [(&str, fn(&mut Ctx) -> Outcome); 11] = [
        ("target-population law", c1_population_law),
        ("robust plateau", c2_plateau),
        ("overlap in plateau", c3_overlap),
        ("piecewise Rabi regime", c4_piecewise_rabi),
        ("dark-state theorem", c5_dark_state),
        ("oracle agreement", c6_oracles),
        ("field synthesis equivalence", c7_field_synthesis),
        ("spectrogram structure", c8_spectrogram),
        ("window-width instability", c9_width_instability),
        ("spectral blocking", c10_blocking),
        ("Bloch model", c11_bloch),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(|| f(&mut ctx)))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
            });
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
