//! The three subcommands. Each returns `Ok(())` for exit 0 or a [`CliError`]
//! carrying the exit-code contract: 1 invariant failure, 2 validation,
//! 3 numerical abort. Runs are deterministic given config + seed; wall-clock
//! time appears only in the summary, never in the CSV/JSONL tables, so
//! reruns are bit-identical.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use dm4nls_core::averaging::run_averaging;
use dm4nls_core::diagnostics::{
    admissible_q, gn_ratio, hardy_ratio, hls_ratio, AdmissiblePair, DiagnosticsRecord, EnergyTerm,
};
use dm4nls_core::dispersion::DispersionSchedule;
use dm4nls_core::grid::{random_band_limited, sobolev_norm, GridSpec};
use dm4nls_core::hartree::RieszKernel;
use dm4nls_core::integrator::{evolve, EvolveOptions, Nonlinearity, SolverConfig};
use dm4nls_core::propagator::{apply, compose_check};

use crate::config::{RunConfig, ScheduleSection};
use crate::io;
use crate::CliError;

/// Invariant suites for `dm4nls check`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Propagator,
    Inequalities,
    Conservation,
    All,
}

fn ensure_output_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::validation(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

/// `#` header lines: the command plus the resolved config (deterministic, so
/// reruns stay byte-identical).
fn metadata_lines(cfg: &RunConfig, command: &str) -> Vec<String> {
    let mut lines = vec![format!("dm4nls {command}")];
    lines.extend(cfg.canonical_string().lines().map(str::to_string));
    lines
}

#[derive(Serialize)]
struct Summary {
    final_time: f64,
    snapshots: usize,
    mass_drift: f64,
    /// Present only at constant coefficients, where energy is conserved.
    energy_drift: Option<f64>,
    breakpoints: Vec<f64>,
    checkpoint: String,
    wall_seconds: f64,
}

/// Integrate the configured run; write diagnostics CSV/JSONL, the final
/// checkpoint, and a summary.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let horizon = cfg
        .run
        .horizon
        .ok_or_else(|| CliError::validation("run.T: required by simulate"))?;
    let spec = cfg.grid_spec()?;
    let sched = cfg.schedule()?;
    let solver = cfg.solver_config();
    let (u0, checkpoint_t) = cfg.initial_field(spec)?;
    let t0 = cfg.start_time(checkpoint_t);
    let dir = ensure_output_dir(cfg)?;
    io::atomic_write(&dir.join("resolved_config.txt"), cfg.canonical_string().as_bytes())?;

    let kernel = match solver.nonlinearity {
        Nonlinearity::Hartree { lambda } => Some(RieszKernel::new(spec, lambda)?),
        Nonlinearity::Cubic => None,
    };
    let term = match &kernel {
        Some(k) => EnergyTerm::Hartree(k),
        None => EnergyTerm::Cubic,
    };

    let started = Instant::now();
    let opts = EvolveOptions { snapshot_every: cfg.run.snapshot_every, forced_times: vec![] };
    let traj = match evolve(&u0, t0, horizon, &sched, &solver, &opts) {
        Ok(traj) => traj,
        Err(failure) => {
            // Leave the last healthy state behind for a restart.
            let path = dir.join("checkpoint_abort.dm4n");
            io::write_checkpoint(&path, failure.partial.final_state(), failure.partial.final_time())?;
            return Err(CliError::numerical(format!(
                "{} (last checkpoint: {})",
                failure.error,
                path.display()
            )));
        }
    };

    let mut records = Vec::with_capacity(traj.times.len());
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let (alpha, beta) = sched.value_at(*t)?;
        records.push(DiagnosticsRecord::compute(state, *t, alpha, beta, solver.theta, &term)?);
    }

    let metadata = metadata_lines(cfg, "simulate");
    io::atomic_write(&dir.join("diagnostics.csv"), io::diagnostics_csv(&metadata, &records).as_bytes())?;
    io::atomic_write(&dir.join("diagnostics.jsonl"), io::diagnostics_jsonl(&records).as_bytes())?;
    let checkpoint_path = dir.join("checkpoint_final.dm4n");
    io::write_checkpoint(&checkpoint_path, traj.final_state(), traj.final_time())?;

    let (first, last) = (&records[0], &records[records.len() - 1]);
    let summary = Summary {
        final_time: traj.final_time(),
        snapshots: records.len(),
        mass_drift: (last.mass - first.mass).abs() / first.mass.max(f64::MIN_POSITIVE),
        energy_drift: matches!(&sched, DispersionSchedule::Constant { .. })
            .then(|| (last.energy - first.energy).abs() / first.energy.abs().max(f64::MIN_POSITIVE)),
        breakpoints: traj.breakpoints.clone(),
        checkpoint: checkpoint_path.display().to_string(),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    io::atomic_write(
        &dir.join("summary.json"),
        (serde_json::to_string_pretty(&summary)
            .map_err(|e| CliError::validation(format!("summary.json: {e}")))?
            + "\n")
            .as_bytes(),
    )?;

    println!("simulate: t = {} after {} snapshots", summary.final_time, summary.snapshots);
    println!("simulate: relative mass drift {:.3e}", summary.mass_drift);
    if let Some(drift) = summary.energy_drift {
        println!("simulate: relative energy drift {drift:.3e} (constant coefficients)");
    }
    if !summary.breakpoints.is_empty() {
        println!("simulate: schedule breakpoints {:?}", summary.breakpoints);
    }
    println!("simulate: final checkpoint {}", summary.checkpoint);
    println!("simulate: wall time {:.3} s", summary.wall_seconds);
    Ok(())
}

/// One pass/fail line of a check report.
#[derive(Serialize)]
pub struct InvariantResult {
    pub invariant: String,
    pub value: f64,
    /// `None` marks finiteness checks (sup ratios have no a-priori bound).
    pub tolerance: Option<f64>,
    pub pass: bool,
}

fn upper(name: &str, value: f64, tol: f64) -> InvariantResult {
    InvariantResult { invariant: name.into(), value, tolerance: Some(tol), pass: value <= tol }
}

fn finite(name: &str, value: f64) -> InvariantResult {
    InvariantResult { invariant: name.into(), value, tolerance: None, pass: value.is_finite() }
}

/// Ensemble band: modest modes keep composition residuals rounding-dominated.
fn ensemble_band(spec: &GridSpec) -> usize {
    (spec.points_per_axis() / 4).clamp(1, 32)
}

fn propagator_suite(cfg: &RunConfig) -> Result<Vec<InvariantResult>, CliError> {
    let spec = cfg.grid_spec()?;
    let sched = cfg.schedule()?;
    let scale = cfg.check.tol_scale;
    let band = ensemble_band(&spec);

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut iso = [0.0f64; 3];
    let (mut group, mut inverse) = (0.0f64, 0.0f64);
    for seed in 0..100u64 {
        let u = random_band_limited(spec, band, seed)?;
        let r = rng.gen_range(-2.0..2.0);
        let l = rng.gen_range(-2.0..2.0);
        let t = rng.gen_range(-2.0..2.0);
        let moved = apply(&u, &sched, r, t)?;
        for (i, s) in [0.0, 1.0, 2.0].into_iter().enumerate() {
            let ratio = sobolev_norm(&moved, s, false)? / sobolev_norm(&u, s, false)?;
            iso[i] = iso[i].max((ratio - 1.0).abs());
        }
        group = group.max(compose_check(&u, &sched, r, l, t)? / u.l2_norm());
        inverse = inverse.max(compose_check(&u, &sched, r, t, r)? / u.l2_norm());
    }

    let mut results = vec![
        upper("propagator.isometry_h0", iso[0], 1e-12 * scale),
        upper("propagator.isometry_h1", iso[1], 1e-12 * scale),
        upper("propagator.isometry_h2", iso[2], 1e-12 * scale),
        upper("propagator.group_law", group, 1e-12 * scale),
        upper("propagator.inverse_law", inverse, 1e-12 * scale),
    ];

    // Time-dependent schedules are not invariant under time translation;
    // witness that U(t+d, r+d) differs from U(t, r). The window length must
    // avoid period multiples (a full-period integral is translation
    // invariant), so both are derived from the first breakpoint. (Skipped
    // for constant coefficients, where the two agree identically.)
    if !matches!(&sched, DispersionSchedule::Constant { .. }) {
        let (r, t, delta) = match sched.breakpoints(0.0, 2.0)?.first() {
            Some(&b) => (0.0, 1.5 * b, 0.5 * b),
            None => (0.0, 1.0, 0.37),
        };
        let u = random_band_limited(spec, band, 7)?;
        let translated = apply(&u, &sched, r + delta, t + delta)?;
        let plain = apply(&u, &sched, r, t)?;
        let value = translated.l2_distance(&plain)? / u.l2_norm();
        results.push(InvariantResult {
            invariant: "propagator.translation_witness_min".into(),
            value,
            tolerance: Some(1e-6),
            pass: value > 1e-6,
        });
    }
    Ok(results)
}

fn inequalities_suite(cfg: &RunConfig) -> Result<Vec<InvariantResult>, CliError> {
    let spec = cfg.grid_spec()?;
    let scale = cfg.check.tol_scale;
    let n = spec.dim() as f64;
    // The kernel order: the configured one, else the midpoint of (0, n).
    let lambda = match cfg.solver.nonlinearity {
        Nonlinearity::Hartree { lambda } => lambda,
        Nonlinearity::Cubic => 0.5 * n,
    };
    let kernel = RieszKernel::new(spec, lambda)?;
    let band = ensemble_band(&spec);
    // Symmetric exponents on the critical line 1/r + 1/l = 2 - lambda/n.
    let r = 2.0 * n / (2.0 * n - lambda);

    let (mut hardy, mut gn, mut hls) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..100u64 {
        let f = random_band_limited(spec, band, 5000 + seed)?;
        let g = random_band_limited(spec, band, 9000 + seed)?;
        hardy = hardy.max(hardy_ratio(&f, &kernel)?);
        gn = gn.max(gn_ratio(&f, &kernel)?);
        hls = hls.max(hls_ratio(&f, &g, &kernel, r, r)?);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4096);
    let mut worst = 0.0f64;
    for dim in 1..=6usize {
        for _ in 0..200 {
            let p = if dim >= 5 {
                rng.gen_range(2.0..2.0 * dim as f64 / (dim as f64 - 4.0) - 1e-6)
            } else {
                rng.gen_range(2.0..40.0)
            };
            let q = admissible_q(p, dim)?;
            AdmissiblePair::new(q, p, dim)?;
            worst = worst.max((4.0 / q - dim as f64 * (0.5 - 1.0 / p)).abs());
        }
    }

    Ok(vec![
        finite("inequalities.hardy_max_ratio", hardy),
        finite("inequalities.gn_max_ratio", gn),
        finite("inequalities.hls_max_ratio", hls),
        upper("inequalities.admissible_pair_residual", worst, 1e-12 * scale),
    ])
}

fn conservation_suite(cfg: &RunConfig) -> Result<Vec<InvariantResult>, CliError> {
    let spec = cfg.grid_spec()?;
    let sched = cfg.schedule()?;
    let solver = cfg.solver_config();
    let scale = cfg.check.tol_scale;
    let (u0, _) = cfg.initial_field(spec)?;
    let horizon = 0.5;

    let kernel = match solver.nonlinearity {
        Nonlinearity::Hartree { lambda } => Some(RieszKernel::new(spec, lambda)?),
        Nonlinearity::Cubic => None,
    };
    let term = match &kernel {
        Some(k) => EnergyTerm::Hartree(k),
        None => EnergyTerm::Cubic,
    };

    let run = |dt: f64| -> Result<dm4nls_core::integrator::Trajectory, CliError> {
        let cfg_dt = SolverConfig { dt, ..solver };
        evolve(&u0, 0.0, horizon, &sched, &cfg_dt, &EvolveOptions::default())
            .map_err(|failure| CliError::from(failure.error))
    };

    let traj = run(solver.dt)?;
    let m0 = u0.mass();
    let mass_drift = traj
        .states
        .iter()
        .fold(0.0f64, |acc, s| acc.max((s.mass() - m0).abs() / m0.max(f64::MIN_POSITIVE)));
    let mut results = vec![upper("conservation.mass_drift", mass_drift, 1e-11 * scale)];

    // Energy is conserved only at constant coefficients; check it there.
    if let DispersionSchedule::Constant { alpha, beta } = &sched {
        let (alpha, beta) = (*alpha, *beta);
        let drift = |traj: &dm4nls_core::integrator::Trajectory| -> Result<f64, CliError> {
            let e0 = dm4nls_core::diagnostics::energy(&u0, alpha, beta, solver.theta, &term)?;
            let e1 = dm4nls_core::diagnostics::energy(traj.final_state(), alpha, beta, solver.theta, &term)?;
            Ok((e1 - e0).abs() / e0.abs().max(f64::MIN_POSITIVE))
        };
        if solver.theta == 0.0 {
            // Linear flow: exactly conserved, no splitting error to order-check.
            results.push(upper("conservation.energy_drift", drift(&traj)?, 1e-12 * scale));
        } else {
            let ratio = drift(&traj)? / drift(&run(solver.dt / 2.0)?)?;
            results.push(InvariantResult {
                invariant: "conservation.energy_second_order_ratio".into(),
                value: ratio,
                tolerance: Some(4.8),
                pass: (3.3..=4.8).contains(&ratio),
            });
        }
    }
    Ok(results)
}

/// Run a named invariant suite; print one JSONL line per invariant and mirror
/// the lines into `check_report.jsonl`.
pub fn cmd_check(cfg: &RunConfig, suite: Suite) -> Result<(), CliError> {
    let mut results = Vec::new();
    if matches!(suite, Suite::Propagator | Suite::All) {
        results.extend(propagator_suite(cfg)?);
    }
    if matches!(suite, Suite::Inequalities | Suite::All) {
        results.extend(inequalities_suite(cfg)?);
    }
    if matches!(suite, Suite::Conservation | Suite::All) {
        results.extend(conservation_suite(cfg)?);
    }

    let dir = ensure_output_dir(cfg)?;
    let mut report = String::new();
    for r in &results {
        let line = serde_json::to_string(r)
            .map_err(|e| CliError::validation(format!("check report: {e}")))?;
        println!("{line}");
        report.push_str(&line);
        report.push('\n');
    }
    io::atomic_write(&dir.join("check_report.jsonl"), report.as_bytes())?;

    let failed: Vec<&str> =
        results.iter().filter(|r| !r.pass).map(|r| r.invariant.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::invariant(format!("failed invariants: {}", failed.join(", "))))
    }
}

/// Compare ε-scaled runs against the averaged problem and write the report
/// CSV; exit 0 iff the errors decrease monotonically in ε.
pub fn cmd_average(cfg: &RunConfig) -> Result<(), CliError> {
    let avg = cfg.average.as_ref().ok_or_else(|| {
        CliError::validation("average.eps_list: required by average (with average.s, average.T)")
    })?;
    if matches!(cfg.schedule, ScheduleSection::Sampled { .. }) {
        return Err(CliError::validation(
            "schedule.variant: sampled schedules have no closed-form mean; use constant or piecewise",
        ));
    }
    let spec = cfg.grid_spec()?;
    let base = cfg.schedule()?;
    let solver = cfg.solver_config();
    let (u0, _) = cfg.initial_field(spec)?;

    let report = run_averaging(&u0, &base, &avg.eps_list, avg.s, avg.horizon, &solver)?;

    let dir = ensure_output_dir(cfg)?;
    let metadata = metadata_lines(cfg, "average");
    io::atomic_write(&dir.join("averaging.csv"), io::averaging_csv(&metadata, &report).as_bytes())?;

    for (eps, err) in report.epsilons.iter().zip(&report.errors) {
        println!("average: eps = {eps} -> sup H^{} error {err:.6e}", report.s);
    }
    if let Some(rate) = report.fitted_rate {
        println!("average: fitted log-log rate {rate:.3}");
    }

    if report.errors.windows(2).all(|w| w[1] < w[0]) {
        Ok(())
    } else {
        Err(CliError::invariant("averaging errors are not monotone decreasing in epsilon"))
    }
}
