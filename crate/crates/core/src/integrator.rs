//! Time integration: Strang splitting and a Duhamel/Picard stepper.
//!
//! Both steppers treat the linear flow exactly through the propagator and
//! differ in how the nonlinearity enters:
//!
//! * **Strang**: `U(t+dt, t+dt/2) . NonlinearPhase(dt) . U(t+dt/2, t)`. The
//!   nonlinear half multiplies pointwise by `exp(i theta V dt)`; `V` is real
//!   and depends only on `|u|`, which that flow leaves invariant, so the
//!   substep is *exact* and unimodular (mass preserved to rounding).
//! * **Picard**: fixed-point iteration of the Duhamel map
//!   `v -> U(t+dt,t) u + i theta Quad( U(t+dt,s) N(v)(s) )` with midpoint
//!   quadrature, the discrete mirror of the contraction argument behind the
//!   local well-posedness horizon. Iterate distances and their ratios are
//!   reported; ratios must stay below one, echoing `C T0 R^2 <= 1/2`.
//!
//! `evolve` drives either stepper over a time range, splitting the range at
//! every schedule breakpoint (so each substep sees smooth coefficients and
//! the exact propagator glues segments with no interface error) and refining
//! uniformly to the requested `dt`.

use num_complex::Complex64;

use crate::dispersion::DispersionSchedule;
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::hartree::RieszKernel;
use crate::propagator::apply;

/// Which nonlinear coupling the equation carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    /// Local cubic term `theta |u|^2 u`.
    Cubic,
    /// Nonlocal Hartree term `theta (|x|^{-lambda} * |u|^2) u`.
    Hartree { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Strang,
    Picard,
}

/// Stepper configuration shared by single steps and full runs.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Target substep width for `evolve` (single-step calls use their own dt).
    pub dt: f64,
    pub method: Method,
    pub nonlinearity: Nonlinearity,
    /// Coupling strength; `0` reduces everything to the exact linear flow.
    pub theta: f64,
    /// 2/3-rule truncation of the cubic density before the phase multiply.
    pub dealias: bool,
    /// Relative L2 tolerance on successive Picard iterates.
    pub picard_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 1e-3,
            method: Method::Strang,
            nonlinearity: Nonlinearity::Cubic,
            theta: 0.0,
            dealias: false,
            picard_tol: 1e-12,
            max_iter: 25,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", "must be positive and finite"));
        }
        if let Nonlinearity::Hartree { lambda } = self.nonlinearity {
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(Error::param("lambda", "must be positive and finite"));
            }
        }
        if !self.theta.is_finite() {
            return Err(Error::param("theta", "must be finite"));
        }
        if !(self.picard_tol.is_finite() && self.picard_tol > 0.0) {
            return Err(Error::param("picard_tol", "must be positive and finite"));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

/// Convergence record of one Picard step.
#[derive(Debug, Clone, Default)]
pub struct StepReport {
    pub iterations: usize,
    pub final_distance: f64,
    /// Successive-distance ratios `d_{k+1} / d_k`.
    pub ratios: Vec<f64>,
    pub converged: bool,
}

/// Nonlinearity evaluation bound to one grid (Hartree kernels are built once
/// per run, not per step).
struct NonlinearOp {
    theta: f64,
    dealias: bool,
    kind: Nonlinearity,
    kernel: Option<RieszKernel>,
}

impl NonlinearOp {
    fn prepare(cfg: &SolverConfig, spec: &GridSpec) -> Result<Self> {
        cfg.validate()?;
        let kernel = match cfg.nonlinearity {
            Nonlinearity::Hartree { lambda } => Some(RieszKernel::new(*spec, lambda)?),
            Nonlinearity::Cubic => None,
        };
        Ok(NonlinearOp { theta: cfg.theta, dealias: cfg.dealias, kind: cfg.nonlinearity, kernel })
    }

    /// Real potential `V` (without the coupling constant).
    fn potential(&self, u: &Field) -> Result<Vec<f64>> {
        match self.kind {
            Nonlinearity::Hartree { .. } => {
                self.kernel.as_ref().expect("kernel prepared").potential(u)
            }
            Nonlinearity::Cubic => {
                let density: Vec<f64> = u.samples().iter().map(|v| v.norm_sqr()).collect();
                if !self.dealias {
                    return Ok(density);
                }
                // Clip the density to the 2/3 band so the phase multiply can't
                // fold cubic aliases back into resolved modes.
                let spec = *u.spec();
                let field = Field::from_samples(
                    spec,
                    density.iter().map(|&d| Complex64::new(d, 0.0)).collect(),
                )?;
                let cutoff = (spec.points_per_axis() / 3) as i64;
                let mut coeffs = field.spectral().to_vec();
                for (flat, value) in coeffs.iter_mut().enumerate() {
                    let idx = spec.axis_indices(flat);
                    if idx[..spec.dim()].iter().any(|&j| spec.signed_mode(j).abs() > cutoff) {
                        *value = Complex64::default();
                    }
                }
                let clipped = Field::from_spectral(spec, coeffs)?;
                Ok(clipped.samples().iter().map(|z| z.re).collect())
            }
        }
    }

    /// `N(u) = V u` (the coupling constant is applied by the caller).
    fn term(&self, u: &Field) -> Result<Field> {
        let v = self.potential(u)?;
        let samples: Vec<Complex64> =
            u.samples().iter().zip(&v).map(|(s, &p)| s * p).collect();
        Field::from_samples(*u.spec(), samples)
    }
}

fn strang_substep(
    u: &Field,
    t: f64,
    dt: f64,
    sched: &DispersionSchedule,
    op: &NonlinearOp,
) -> Result<Field> {
    let half = apply(u, sched, t, t + 0.5 * dt)?;
    let rotated = if op.theta == 0.0 {
        half
    } else {
        let v = op.potential(&half)?;
        let samples: Vec<Complex64> = half
            .samples()
            .iter()
            .zip(&v)
            .map(|(s, &p)| s * Complex64::from_polar(1.0, op.theta * p * dt))
            .collect();
        Field::from_samples(*half.spec(), samples)?
    };
    apply(&rotated, sched, t + 0.5 * dt, t + dt)
}

fn picard_substep(
    u: &Field,
    t: f64,
    dt: f64,
    sched: &DispersionSchedule,
    op: &NonlinearOp,
    tol: f64,
    max_iter: usize,
) -> Result<(Field, StepReport)> {
    let t_mid = t + 0.5 * dt;
    let free_mid = apply(u, sched, t, t_mid)?;
    let scale = u.l2_norm().max(f64::MIN_POSITIVE);

    // Collocation at the midpoint: m = U(mid,t)u + i theta (dt/2) N(m), the
    // Duhamel map restricted to the quadrature node. theta = 0 fixes the free
    // solution in a single pass.
    let mut report = StepReport::default();
    let mut m = free_mid.clone();
    let mut last_distance: Option<f64> = None;
    for _ in 0..max_iter {
        report.iterations += 1;
        let next = if op.theta == 0.0 {
            free_mid.clone()
        } else {
            let nonlinear = op.term(&m)?;
            let rot = Complex64::new(0.0, op.theta * 0.5 * dt);
            let samples: Vec<Complex64> = free_mid
                .samples()
                .iter()
                .zip(nonlinear.samples())
                .map(|(f, n)| f + rot * n)
                .collect();
            Field::from_samples(*u.spec(), samples)?
        };
        let d = next.l2_distance(&m)?;
        if !d.is_finite() {
            return Err(Error::NonContractive { ratio: f64::INFINITY });
        }
        if let Some(prev) = last_distance {
            if prev > 0.0 {
                report.ratios.push(d / prev);
            }
        }
        last_distance = Some(d);
        report.final_distance = d;
        m = next;
        if d < tol * scale {
            report.converged = true;
            break;
        }
    }
    if !report.converged {
        if let Some(&ratio) = report.ratios.last() {
            if ratio >= 1.0 {
                return Err(Error::NonContractive { ratio });
            }
        }
    }

    // Endpoint via midpoint quadrature of the Duhamel integral.
    let free_end = apply(u, sched, t, t + dt)?;
    let endpoint = if op.theta == 0.0 {
        free_end
    } else {
        let pushed = apply(&op.term(&m)?, sched, t_mid, t + dt)?;
        let rot = Complex64::new(0.0, op.theta * dt);
        let samples: Vec<Complex64> = free_end
            .samples()
            .iter()
            .zip(pushed.samples())
            .map(|(f, n)| f + rot * n)
            .collect();
        Field::from_samples(*u.spec(), samples)?
    };
    Ok((endpoint, report))
}

/// One Strang step of width `dt` starting at time `t` (no breakpoint may sit
/// strictly inside; `evolve` guarantees that).
pub fn step_strang(
    u: &Field,
    t: f64,
    dt: f64,
    sched: &DispersionSchedule,
    cfg: &SolverConfig,
) -> Result<Field> {
    let op = NonlinearOp::prepare(cfg, u.spec())?;
    strang_substep(u, t, dt, sched, &op)
}

/// One Picard step of width `dt` starting at time `t`.
pub fn step_picard(
    u: &Field,
    t: f64,
    dt: f64,
    sched: &DispersionSchedule,
    cfg: &SolverConfig,
) -> Result<(Field, StepReport)> {
    let op = NonlinearOp::prepare(cfg, u.spec())?;
    picard_substep(u, t, dt, sched, &op, cfg.picard_tol, cfg.max_iter)
}

/// Contraction-horizon estimate `T0 = (8 C^2 M^2)^{-1/(1 - lambda/4)}` for
/// data of L2 size `M`; `lambda = 2, C = 1, M = 1` gives `1/64`.
pub fn step_horizon(l2_norm: f64, lambda: f64, c: f64) -> Result<f64> {
    if !(l2_norm.is_finite() && l2_norm > 0.0) {
        return Err(Error::param("l2_norm", "must be positive and finite"));
    }
    if !(lambda > 0.0 && lambda < 4.0) {
        return Err(Error::param("lambda", "horizon formula needs 0 < lambda < 4"));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::param("c", "must be positive and finite"));
    }
    let base = 8.0 * c * c * l2_norm * l2_norm;
    Ok(base.powf(-1.0 / (1.0 - 0.25 * lambda)))
}

/// Snapshot/partition options for [`evolve`].
#[derive(Debug, Clone)]
pub struct EvolveOptions {
    /// Record every k-th substep endpoint (`0`: only partition nodes, i.e.
    /// range ends, breakpoints and forced times).
    pub snapshot_every: usize,
    /// Extra times that must become exact substep endpoints (and snapshots).
    pub forced_times: Vec<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { snapshot_every: 1, forced_times: Vec::new() }
    }
}

/// Integration record: snapshots plus bookkeeping of how the range was cut.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    /// Snapshot times, starting at `t0`, ending at `t0 + T` (on success).
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    /// Every substep boundary, including both range ends.
    pub substep_endpoints: Vec<f64>,
    /// Schedule breakpoints inside the range (each also a substep endpoint).
    pub breakpoints: Vec<f64>,
    /// Per-substep Picard reports (empty for Strang).
    pub reports: Vec<StepReport>,
}

impl Trajectory {
    pub fn final_state(&self) -> &Field {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds at least the initial time")
    }

    /// Snapshot at exactly time `t` (bitwise match), if recorded.
    pub fn state_at(&self, t: f64) -> Option<&Field> {
        self.times.iter().position(|&s| s == t).map(|i| &self.states[i])
    }
}

/// Abort payload: the error plus everything integrated so far (its last
/// snapshot is the last healthy state, recorded unconditionally).
#[derive(Debug)]
pub struct EvolveFailure {
    pub error: Error,
    pub partial: Trajectory,
}

impl std::fmt::Display for EvolveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.error)
    }
}

impl std::error::Error for EvolveFailure {}

/// Integrates `u0` from `t0` over a signed horizon `T != 0`. The range is
/// partitioned at every schedule breakpoint and forced time, then refined to
/// substeps of width at most `cfg.dt`; partition nodes appear bitwise among
/// the substep endpoints.
pub fn evolve(
    u0: &Field,
    t0: f64,
    horizon: f64,
    sched: &DispersionSchedule,
    cfg: &SolverConfig,
    opts: &EvolveOptions,
) -> std::result::Result<Trajectory, Box<EvolveFailure>> {
    let setup = (|| -> Result<(NonlinearOp, Vec<f64>, Vec<f64>)> {
        if !(horizon.is_finite() && horizon != 0.0) {
            return Err(Error::param("horizon", "must be finite and nonzero"));
        }
        if !t0.is_finite() {
            return Err(Error::param("t0", "must be finite"));
        }
        if !u0.is_finite() {
            return Err(Error::NonFinite("initial state".into()));
        }
        let op = NonlinearOp::prepare(cfg, u0.spec())?;
        let (lo, hi) = if horizon > 0.0 { (t0, t0 + horizon) } else { (t0 + horizon, t0) };
        let tol = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        let breaks = sched.breakpoints(lo, hi)?;
        let mut interior = breaks.clone();
        for &ft in &opts.forced_times {
            if !ft.is_finite() || ft < lo - tol || ft > hi + tol {
                return Err(Error::param(
                    "forced_times",
                    format!("time {ft} outside integration range [{lo}, {hi}]"),
                ));
            }
            // Forced times within rounding of an existing node are dropped so
            // breakpoint values survive verbatim (bitwise) in the partition.
            let fresh = interior.iter().all(|&b| (b - ft).abs() > tol);
            if fresh && ft - lo > tol && hi - ft > tol {
                interior.push(ft);
            }
        }
        interior.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut nodes = Vec::with_capacity(interior.len() + 2);
        nodes.push(lo);
        nodes.extend(interior);
        nodes.push(hi);
        if horizon < 0.0 {
            nodes.reverse();
        }
        Ok((op, nodes, breaks))
    })()
    .map_err(|error| Box::new(EvolveFailure { error, partial: Trajectory::default() }))?;
    let (op, nodes, breakpoints) = setup;

    let mut traj = Trajectory { breakpoints, ..Trajectory::default() };
    traj.times.push(t0);
    traj.states.push(u0.clone());
    traj.substep_endpoints.push(nodes[0]);

    let mut u = u0.clone();
    let mut step_counter = 0usize;
    for pair in nodes.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let pieces = ((b - a).abs() / cfg.dt).ceil().max(1.0) as usize;
        for i in 1..=pieces {
            let t_start = if i == 1 { a } else { a + (b - a) * ((i - 1) as f64 / pieces as f64) };
            let t_end = if i == pieces { b } else { a + (b - a) * (i as f64 / pieces as f64) };
            let dt = t_end - t_start;
            let stepped = match cfg.method {
                Method::Strang => strang_substep(&u, t_start, dt, sched, &op),
                Method::Picard => {
                    picard_substep(&u, t_start, dt, sched, &op, cfg.picard_tol, cfg.max_iter)
                        .map(|(next, report)| {
                            traj.reports.push(report);
                            next
                        })
                }
            };
            let next = match stepped {
                Ok(next) if next.is_finite() => next,
                Ok(_) => {
                    return Err(Box::new(EvolveFailure {
                        error: Error::StepAborted {
                            t_last: t_start,
                            message: format!(
                                "non-finite state after substep ({t_start}, {t_end})"
                            ),
                        },
                        partial: traj,
                    }))
                }
                Err(error) => {
                    return Err(Box::new(EvolveFailure {
                        error: Error::StepAborted {
                            t_last: t_start,
                            message: error.to_string(),
                        },
                        partial: traj,
                    }))
                }
            };
            u = next;
            step_counter += 1;
            traj.substep_endpoints.push(t_end);
            let is_node = i == pieces; // breakpoint, forced time, or range end
            let on_cadence = opts.snapshot_every > 0 && step_counter.is_multiple_of(opts.snapshot_every);
            if is_node || on_cadence {
                traj.times.push(t_end);
                traj.states.push(u.clone());
            }
        }
    }
    Ok(traj)
}
