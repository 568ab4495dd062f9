//! Conserved quantities, inequality ratios, and Strichartz ensembles.
//!
//! The energy functional implemented here is the one the equation actually
//! conserves for frozen coefficients,
//!
//! ```text
//! E[u] = alpha ||grad u||^2 - beta ||lap u||^2 - (theta/2) Int V |u|^2,
//! ```
//!
//! with `V` the Hartree potential (or `|u|^2` for the cubic model). Taking
//! `dE/d(conj u)` reproduces `-alpha lap u - beta lap^2 u - theta V u`, i.e.
//! `i u_t`; a quartic prefactor other than `theta/2` leaves a residual
//! `theta Im <Vu, Lu>` and drifts at O(1) — see
//! `energy_with_halved_quartic_weight_is_not_conserved`.
//!
//! The inequality ratios (Hardy, Gagliardo-Nirenberg, HLS) and the
//! Monte-Carlo Strichartz quotients are deliberately plain quotients of
//! quadratures: they are meant to be *watched* across runs, not proved sharp.

use rayon::prelude::*;

use num_complex::Complex64;

use crate::dispersion::DispersionSchedule;
use crate::error::{Error, Result};
use crate::grid::{lp_norm, random_band_limited, sobolev_norm, Field, GridSpec};
use crate::hartree::{hartree_energy_term, RieszKernel};
use crate::propagator::apply;

/// Which quartic term enters the energy and potential diagnostics.
#[derive(Debug, Clone, Copy)]
pub enum EnergyTerm<'a> {
    Hartree(&'a RieszKernel),
    Cubic,
}

impl<'a> EnergyTerm<'a> {
    /// Real potential `V` at the grid points (no coupling constant).
    fn potential(&self, u: &Field) -> Result<Vec<f64>> {
        match self {
            EnergyTerm::Hartree(kernel) => kernel.potential(u),
            EnergyTerm::Cubic => Ok(u.samples().iter().map(|s| s.norm_sqr()).collect()),
        }
    }
}

/// `Int V |u|^2` for the configured nonlinearity.
pub fn quartic_term(u: &Field, term: &EnergyTerm) -> Result<f64> {
    match term {
        EnergyTerm::Hartree(kernel) => hartree_energy_term(u, kernel),
        EnergyTerm::Cubic => Ok(lp_norm(u, 4.0)?.powi(4)),
    }
}

/// Sup-norm of the potential, `max_x |V(x)|`.
pub fn potential_sup(u: &Field, term: &EnergyTerm) -> Result<f64> {
    let v = term.potential(u)?;
    Ok(v.iter().fold(0.0f64, |acc, &x| acc.max(x.abs())))
}

/// Conserved energy for frozen coefficients `alpha`, `beta`.
pub fn energy(u: &Field, alpha: f64, beta: f64, theta: f64, term: &EnergyTerm) -> Result<f64> {
    let grad_sq = sobolev_norm(u, 1.0, true)?.powi(2);
    let lap_sq = sobolev_norm(u, 2.0, true)?.powi(2);
    let quartic = if theta == 0.0 { 0.0 } else { quartic_term(u, term)? };
    Ok(alpha * grad_sq - beta * lap_sq - 0.5 * theta * quartic)
}

/// One row of the standard observable table.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub grad_l2: f64,
    pub h1: f64,
    pub h2: f64,
    pub potential_max: f64,
}

impl DiagnosticsRecord {
    /// Evaluates every observable at time `t` with instantaneous coefficients
    /// (for time-dependent schedules the energy column is a monitor, not a
    /// conserved quantity).
    pub fn compute(
        u: &Field,
        t: f64,
        alpha: f64,
        beta: f64,
        theta: f64,
        term: &EnergyTerm,
    ) -> Result<Self> {
        Ok(DiagnosticsRecord {
            t,
            mass: u.mass(),
            energy: energy(u, alpha, beta, theta, term)?,
            grad_l2: sobolev_norm(u, 1.0, true)?,
            h1: sobolev_norm(u, 1.0, false)?,
            h2: sobolev_norm(u, 2.0, false)?,
            potential_max: potential_sup(u, term)?,
        })
    }
}

/// `V u` as a field.
fn potential_times_state(u: &Field, term: &EnergyTerm) -> Result<Field> {
    let v = term.potential(u)?;
    let samples: Vec<Complex64> = u.samples().iter().zip(&v).map(|(s, &p)| s * p).collect();
    Field::from_samples(*u.spec(), samples)
}

/// Exact rate `d/dt ||grad u||^2 = 2 theta Im <V u, lap u>`, summed in
/// frequency: `-2 theta sum |xi|^2 Im( w_hat conj(u_hat) )` with `w = V u`.
pub fn gradient_flux(u: &Field, theta: f64, term: &EnergyTerm) -> Result<f64> {
    if theta == 0.0 {
        return Ok(0.0);
    }
    let w = potential_times_state(u, term)?;
    let u_hat = u.spectral();
    let w_hat = w.spectral();
    let mut acc = 0.0;
    u.spec().for_each_mode(|flat, xi_sq| {
        acc += xi_sq * (w_hat[flat] * u_hat[flat].conj()).im;
    });
    Ok(-2.0 * theta * acc)
}

/// Same rate through physical-space quadrature of `-2 theta Im Int
/// grad(Vu) . conj(grad u)`; agreement with [`gradient_flux`] is a Parseval
/// check on the full pipeline.
pub fn gradient_flux_quadrature(u: &Field, theta: f64, term: &EnergyTerm) -> Result<f64> {
    if theta == 0.0 {
        return Ok(0.0);
    }
    let w = potential_times_state(u, term)?;
    let spec = *u.spec();
    let cell = spec.cell_volume();
    let mut acc = 0.0;
    for axis in 0..spec.dim() {
        let du = derivative(u, axis)?;
        let dw = derivative(&w, axis)?;
        for (a, b) in dw.samples().iter().zip(du.samples()) {
            acc += (a * b.conj()).im;
        }
    }
    Ok(-2.0 * theta * cell * acc)
}

/// Discrete check of `d/dt ||grad u||^2 = 2 theta Im <Vu, lap u>` on a
/// trajectory window: centered difference across the snapshots on either side
/// of `middle` minus [`gradient_flux`] at `middle`. Both the finite-difference
/// truncation and the stepper bias scale as `dt^2`, so the residual quarters
/// under refinement.
pub fn grad_identity_residual(
    traj: &crate::integrator::Trajectory,
    middle: usize,
    theta: f64,
    term: &EnergyTerm,
) -> Result<f64> {
    if middle == 0 || middle + 1 >= traj.states.len() {
        return Err(Error::param(
            "middle",
            "needs three consecutive snapshots around the middle index",
        ));
    }
    let (t_prev, t_mid, t_next) =
        (traj.times[middle - 1], traj.times[middle], traj.times[middle + 1]);
    let dt = t_mid - t_prev;
    if ((t_next - t_mid) - dt).abs() > 1e-12 * dt.abs().max(1.0) {
        return Err(Error::param("middle", "window snapshots are not uniformly spaced"));
    }
    let grad_sq = |u: &Field| -> Result<f64> { Ok(sobolev_norm(u, 1.0, true)?.powi(2)) };
    let fd = (grad_sq(&traj.states[middle + 1])? - grad_sq(&traj.states[middle - 1])?)
        / (2.0 * dt);
    Ok((fd - gradient_flux(&traj.states[middle], theta, term)?).abs())
}

/// Spectral derivative along one axis (multiplier `i xi_axis`).
fn derivative(u: &Field, axis: usize) -> Result<Field> {
    let spec = *u.spec();
    if axis >= spec.dim() {
        return Err(Error::param("axis", "exceeds grid dimension"));
    }
    let hat = u.spectral();
    let mut coeffs = vec![Complex64::default(); hat.len()];
    for (flat, out) in coeffs.iter_mut().enumerate() {
        let idx = spec.axis_indices(flat);
        let xi = spec.wavenumber(idx[axis]);
        *out = Complex64::new(0.0, xi) * hat[flat];
    }
    Field::from_spectral(spec, coeffs)
}

// ---------------------------------------------------------------------------
// Admissible pairs
// ---------------------------------------------------------------------------

const PAIR_TOL: f64 = 1e-12;

/// Schrödinger-admissible exponent pair `(q, p)` for the fourth-order scaling
/// `4/q = n (1/2 - 1/p)`. Infinite entries are `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissiblePair {
    q: f64,
    p: f64,
    dim: usize,
}

impl AdmissiblePair {
    pub fn new(q: f64, p: f64, dim: usize) -> Result<Self> {
        let expected = admissible_q(p, dim)?;
        // Compare reciprocals so q = infinity participates uniformly.
        if (q.recip() - expected.recip()).abs() > PAIR_TOL || q < 2.0 {
            return Err(Error::param(
                "q",
                format!("scaling relation demands q = {expected} for p = {p}, n = {dim}"),
            ));
        }
        Ok(AdmissiblePair { q, p, dim })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Time exponent forced by the scaling relation, `q = 8p / (n (p - 2))`,
/// after checking `p` lies in the dimension-dependent admissible range:
/// `[2, inf]` for `n <= 3`, `[2, inf)` for `n = 4`, `[2, 2n/(n-4))` for
/// `n >= 5`.
pub fn admissible_q(p: f64, dim: usize) -> Result<f64> {
    if dim == 0 {
        return Err(Error::param("dim", "must be at least 1"));
    }
    if p.is_nan() || p < 2.0 {
        return Err(Error::param("p", "admissible pairs need p >= 2"));
    }
    let n = dim as f64;
    if p.is_infinite() {
        if dim >= 4 {
            return Err(Error::param("p", "p = infinity is admissible only for n <= 3"));
        }
        return Ok(8.0 / n);
    }
    if dim >= 5 {
        let p_max = 2.0 * n / (n - 4.0);
        if p >= p_max - PAIR_TOL {
            return Err(Error::param(
                "p",
                format!("for n = {dim} the admissible range is 2 <= p < {p_max}"),
            ));
        }
    }
    if p == 2.0 {
        return Ok(f64::INFINITY);
    }
    Ok(8.0 * p / (n * (p - 2.0)))
}

/// The pair `(12/(lambda - 2s), 6n/(3n + 4s - 2 lambda))` used by the Hartree
/// contraction estimate at regularity `s`, valid for
/// `max(0, lambda/2 - 2) <= s < lambda/2`.
pub fn theorem_pair_hartree(s: f64, lambda: f64, dim: usize) -> Result<AdmissiblePair> {
    if dim == 0 {
        return Err(Error::param("dim", "must be at least 1"));
    }
    if !(lambda > 0.0 && lambda < dim as f64) {
        return Err(Error::param("lambda", "needs 0 < lambda < n"));
    }
    let lo = (0.5 * lambda - 2.0).max(0.0);
    if !(s >= lo && s < 0.5 * lambda) {
        return Err(Error::param(
            "s",
            format!("needs max(0, lambda/2 - 2) <= s < lambda/2, i.e. [{lo}, {})", 0.5 * lambda),
        ));
    }
    let n = dim as f64;
    let q = 12.0 / (lambda - 2.0 * s);
    let p = 6.0 * n / (3.0 * n + 4.0 * s - 2.0 * lambda);
    AdmissiblePair::new(q, p, dim)
}

/// Cubic analogue `(12/(n - 2s), 6n/(n + 4s))` for
/// `max(0, n/2 - 2) <= s < n/2`.
pub fn theorem_pair_cubic(s: f64, dim: usize) -> Result<AdmissiblePair> {
    if dim == 0 {
        return Err(Error::param("dim", "must be at least 1"));
    }
    let n = dim as f64;
    let lo = (0.5 * n - 2.0).max(0.0);
    if !(s >= lo && s < 0.5 * n) {
        return Err(Error::param(
            "s",
            format!("needs max(0, n/2 - 2) <= s < n/2, i.e. [{lo}, {})", 0.5 * n),
        ));
    }
    let q = 12.0 / (n - 2.0 * s);
    let p = 6.0 * n / (n + 4.0 * s);
    AdmissiblePair::new(q, p, dim)
}

// ---------------------------------------------------------------------------
// Strichartz ensemble
// ---------------------------------------------------------------------------

/// One Monte-Carlo draw of the mixed-norm quotient.
#[derive(Debug, Clone, Copy)]
pub struct StrichartzSample {
    pub seed: u64,
    pub data_l2: f64,
    pub mixed_norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct StrichartzOptions {
    pub samples: usize,
    /// Band limit of the random data (strictly below Nyquist).
    pub max_mode: usize,
    /// Uniform time nodes for the outer `L^q_t` quadrature (trapezoid for
    /// finite `q`, pointwise sup for `q = infinity`).
    pub time_points: usize,
    pub seed: u64,
}

impl Default for StrichartzOptions {
    fn default() -> Self {
        StrichartzOptions { samples: 16, max_mode: 8, time_points: 33, seed: 0 }
    }
}

/// Empirical Strichartz constant of the *linear* flow on `[r0, r1]`: the
/// largest observed `||U(., r0) phi||_{L^q L^p} / ||phi||_{L^2}` over random
/// band-limited data. Samples run in parallel; results are ordered by seed,
/// so the outcome is deterministic.
pub fn strichartz_constant(
    spec: GridSpec,
    sched: &DispersionSchedule,
    pair: &AdmissiblePair,
    r0: f64,
    r1: f64,
    opts: &StrichartzOptions,
) -> Result<(f64, Vec<StrichartzSample>)> {
    if pair.dim() != spec.dim() {
        return Err(Error::param("pair", "admissible pair dimension differs from the grid's"));
    }
    if !(r0.is_finite() && r1.is_finite() && r0 < r1) {
        return Err(Error::param("interval", "needs finite r0 < r1"));
    }
    if opts.samples == 0 || opts.time_points < 2 {
        return Err(Error::param("ensemble", "needs samples >= 1 and time_points >= 2"));
    }
    let dt = (r1 - r0) / (opts.time_points - 1) as f64;
    let samples: Result<Vec<StrichartzSample>> = (0..opts.samples)
        .into_par_iter()
        .map(|i| {
            let seed = opts.seed.wrapping_add(i as u64);
            let phi = random_band_limited(spec, opts.max_mode, seed)?;
            let mut values = Vec::with_capacity(opts.time_points);
            for k in 0..opts.time_points {
                let t = if k + 1 == opts.time_points {
                    r1
                } else {
                    r0 + dt * k as f64
                };
                let u = apply(&phi, sched, r0, t)?;
                values.push(lp_norm(&u, pair.p())?);
            }
            let mixed_norm = if pair.q().is_infinite() {
                values.iter().fold(0.0f64, |acc, &v| acc.max(v))
            } else {
                let q = pair.q();
                let mut integral = 0.0;
                for w in values.windows(2) {
                    integral += 0.5 * dt * (w[0].powf(q) + w[1].powf(q));
                }
                integral.powf(q.recip())
            };
            let data_l2 = phi.l2_norm();
            Ok(StrichartzSample { seed, data_l2, mixed_norm, ratio: mixed_norm / data_l2 })
        })
        .collect();
    let samples = samples?;
    let constant = samples.iter().fold(0.0f64, |acc, s| acc.max(s.ratio));
    Ok((constant, samples))
}

// ---------------------------------------------------------------------------
// Inequality ratios
// ---------------------------------------------------------------------------

/// Potential-boundedness quotient `||K * |u|^2||_inf / ||u||_{Hdot^{lambda/2}}^2`
/// (the Hardy-type bound behind the contraction estimate).
pub fn hardy_ratio(u: &Field, kernel: &RieszKernel) -> Result<f64> {
    let sup = potential_sup(u, &EnergyTerm::Hartree(kernel))?;
    let denom = sobolev_norm(u, 0.5 * kernel.lambda(), true)?.powi(2);
    let ratio = sup / denom;
    if !ratio.is_finite() {
        return Err(Error::NonFinite("hardy ratio (is the field constant?)".into()));
    }
    Ok(ratio)
}

/// Gagliardo-Nirenberg-type quotient
/// `Int V |u|^2 / (||grad u||^lambda ||u||^{4 - lambda})`; invariant under
/// amplitude rescaling of `u`.
pub fn gn_ratio(u: &Field, kernel: &RieszKernel) -> Result<f64> {
    let quartic = hartree_energy_term(u, kernel)?;
    let grad = sobolev_norm(u, 1.0, true)?;
    let l2 = u.l2_norm();
    let lambda = kernel.lambda();
    let ratio = quartic / (grad.powf(lambda) * l2.powf(4.0 - lambda));
    if !ratio.is_finite() {
        return Err(Error::NonFinite("gn ratio (is the field constant?)".into()));
    }
    Ok(ratio)
}

/// Hardy-Littlewood-Sobolev quotient
/// `|Int f (K * g)| / (||f||_r ||g||_l)` for exponents on the critical line
/// `1/r + 1/l + lambda/n = 2`.
pub fn hls_ratio(f: &Field, g: &Field, kernel: &RieszKernel, r: f64, l: f64) -> Result<f64> {
    if f.spec() != kernel.spec() || g.spec() != kernel.spec() {
        return Err(Error::GridMismatch("HLS inputs must share the kernel's grid".into()));
    }
    if !(r >= 1.0 && l >= 1.0) {
        return Err(Error::param("exponents", "HLS needs r, l >= 1"));
    }
    let n = f.spec().dim() as f64;
    let line = r.recip() + l.recip() + kernel.lambda() / n;
    if (line - 2.0).abs() > PAIR_TOL {
        return Err(Error::param(
            "exponents",
            format!("1/r + 1/l + lambda/n = {line}, expected 2"),
        ));
    }
    let conv = kernel.convolve(g)?;
    let cell = f.spec().cell_volume();
    let mut pairing = Complex64::default();
    for (a, b) in f.samples().iter().zip(conv.samples()) {
        pairing += a * b;
    }
    Ok((cell * pairing).norm() / (lp_norm(f, r)? * lp_norm(g, l)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::PiecewiseProfile;
    use crate::integrator::{evolve, EvolveOptions, Nonlinearity, SolverConfig};

    fn grid() -> GridSpec {
        GridSpec::new(1, 128, std::f64::consts::PI).unwrap()
    }

    #[test]
    fn plane_wave_energy_matches_hand_values() {
        // Single mode k: E(theta = 0) = (alpha k^2 - beta k^4) ||u||^2 with
        // ||u||^2 = 2L. Cubic quartic of a unimodular wave is Int 1 = 2L.
        let spec = grid();
        let u = Field::plane_wave(spec, &[3]).unwrap();
        let two_l = 2.0 * std::f64::consts::PI;
        let k2 = 9.0;
        let linear = energy(&u, 1.0, -1.0, 0.0, &EnergyTerm::Cubic).unwrap();
        let expected = (k2 + k2 * k2) * two_l;
        assert!((linear - expected).abs() <= 1e-10 * expected.abs());

        let full = energy(&u, 1.0, -1.0, 2.0, &EnergyTerm::Cubic).unwrap();
        assert!((full - (expected - two_l)).abs() <= 1e-10 * expected.abs());
    }

    #[test]
    fn energy_drift_is_second_order_in_the_step() {
        // Strang conserves the energy only up to its splitting error, so the
        // check is the refinement law: drift shrinks ~4x when dt halves.
        let spec = grid();
        let u0 = Field::gaussian(spec, 1.0, 0.5).unwrap();
        let kernel = RieszKernel::new(spec, 0.5).unwrap();
        let term = EnergyTerm::Hartree(&kernel);
        let (alpha, beta, theta) = (1.0, -1.0, -1.0);
        let sched = DispersionSchedule::constant(alpha, beta).unwrap();
        let e0 = energy(&u0, alpha, beta, theta, &term).unwrap();
        let drift = |dt: f64| -> f64 {
            let cfg = SolverConfig {
                dt,
                theta,
                nonlinearity: Nonlinearity::Hartree { lambda: 0.5 },
                ..SolverConfig::default()
            };
            let opts = EvolveOptions { snapshot_every: 0, forced_times: vec![] };
            let traj = evolve(&u0, 0.0, 0.2, &sched, &cfg, &opts).unwrap();
            (energy(traj.final_state(), alpha, beta, theta, &term).unwrap() - e0).abs()
        };
        let coarse = drift(1e-3);
        let fine = drift(5e-4);
        let ratio = coarse / fine;
        assert!(coarse / e0.abs() <= 1e-3, "drift {coarse} too large vs E0 = {e0}");
        assert!(
            (3.0..=5.0).contains(&ratio),
            "energy drift should quarter per halving: {coarse} -> {fine} (ratio {ratio})"
        );
    }

    #[test]
    fn energy_with_halved_quartic_weight_is_not_conserved() {
        // Guard on the quartic prefactor: theta/4 in place of theta/2 is NOT
        // a first integral and drifts orders of magnitude faster.
        let spec = grid();
        let u0 = Field::gaussian(spec, 1.0, 0.5).unwrap();
        let kernel = RieszKernel::new(spec, 0.5).unwrap();
        let (alpha, beta, theta) = (1.0, -1.0, -1.0);
        let sched = DispersionSchedule::constant(alpha, beta).unwrap();
        let cfg = SolverConfig {
            dt: 1e-3,
            theta,
            nonlinearity: Nonlinearity::Hartree { lambda: 0.5 },
            ..SolverConfig::default()
        };
        let opts = EvolveOptions { snapshot_every: 0, forced_times: vec![] };
        let traj = evolve(&u0, 0.0, 0.2, &sched, &cfg, &opts).unwrap();
        let functional = |u: &Field, weight: f64| -> f64 {
            let grad = sobolev_norm(u, 1.0, true).unwrap().powi(2);
            let lap = sobolev_norm(u, 2.0, true).unwrap().powi(2);
            let quartic = hartree_energy_term(u, &kernel).unwrap();
            alpha * grad - beta * lap - weight * theta * quartic
        };
        let drift_half =
            (functional(traj.final_state(), 0.5) - functional(&u0, 0.5)).abs();
        let drift_quarter =
            (functional(traj.final_state(), 0.25) - functional(&u0, 0.25)).abs();
        assert!(
            drift_quarter > 100.0 * drift_half,
            "theta/4 weight should drift far faster: {drift_quarter} vs {drift_half}"
        );
    }

    #[test]
    fn gradient_flux_routes_agree() {
        let spec = grid();
        let u = random_band_limited(spec, 20, 11).unwrap();
        let kernel = RieszKernel::new(spec, 0.5).unwrap();
        for term in [EnergyTerm::Hartree(&kernel), EnergyTerm::Cubic] {
            let a = gradient_flux(&u, -1.0, &term).unwrap();
            let b = gradient_flux_quadrature(&u, -1.0, &term).unwrap();
            let scale = a.abs().max(1.0);
            assert!((a - b).abs() <= 1e-12 * scale, "routes disagree: {a} vs {b}");
        }
    }

    #[test]
    fn grad_identity_residual_vanishes_for_the_linear_flow() {
        // theta = 0: both sides are zero (the propagator is an Hdot^1
        // isometry), so the residual is pure rounding.
        let spec = grid();
        let u0 = random_band_limited(spec, 16, 21).unwrap();
        let sched = DispersionSchedule::constant(1.0, -1.0).unwrap();
        let cfg = SolverConfig { dt: 1e-3, ..SolverConfig::default() };
        let traj = evolve(&u0, 0.0, 0.01, &sched, &cfg, &EvolveOptions::default()).unwrap();
        let r = grad_identity_residual(&traj, 5, 0.0, &EnergyTerm::Cubic).unwrap();
        assert!(r <= 1e-10, "linear-flow residual {r}");
    }

    #[test]
    fn grad_identity_residual_quarters_under_refinement() {
        let spec = grid();
        let u0 = Field::gaussian(spec, 1.0, 0.8).unwrap();
        let kernel = RieszKernel::new(spec, 0.5).unwrap();
        let term = EnergyTerm::Hartree(&kernel);
        let theta = -1.0;
        let sched = DispersionSchedule::constant(1.0, -1.0).unwrap();
        let t_mid = 0.05;
        let residual = |dt: f64| -> f64 {
            let cfg = SolverConfig {
                dt,
                theta,
                nonlinearity: Nonlinearity::Hartree { lambda: 0.5 },
                ..SolverConfig::default()
            };
            let traj = evolve(&u0, 0.0, 0.1, &sched, &cfg, &EvolveOptions::default()).unwrap();
            let middle = traj
                .times
                .iter()
                .position(|&t| (t - t_mid).abs() <= 1e-12)
                .expect("snapshot at the probe time");
            grad_identity_residual(&traj, middle, theta, &term).unwrap()
        };
        let coarse = residual(1e-3);
        let fine = residual(5e-4);
        let ratio = coarse / fine;
        assert!(
            (3.0..=5.0).contains(&ratio),
            "residual should quarter per halving: {coarse} -> {fine} (ratio {ratio})"
        );
    }

    #[test]
    fn grad_identity_residual_rejects_bad_windows() {
        let spec = grid();
        let u0 = Field::gaussian(spec, 1.0, 0.8).unwrap();
        let sched = DispersionSchedule::constant(1.0, -1.0).unwrap();
        let cfg = SolverConfig { dt: 1e-2, ..SolverConfig::default() };
        let traj = evolve(&u0, 0.0, 0.05, &sched, &cfg, &EvolveOptions::default()).unwrap();
        assert!(grad_identity_residual(&traj, 0, 0.0, &EnergyTerm::Cubic).is_err());
        let last = traj.states.len() - 1;
        assert!(grad_identity_residual(&traj, last, 0.0, &EnergyTerm::Cubic).is_err());
    }

    #[test]
    fn admissible_q_hand_values() {
        // p = 2 pairs with q = infinity in every dimension.
        assert!(admissible_q(2.0, 4).unwrap().is_infinite());
        // n = 1, p = infinity: 4/q = 1/2, q = 8.
        assert!((admissible_q(f64::INFINITY, 1).unwrap() - 8.0).abs() <= 1e-12);
        // n = 3, p = 6: 4/q = 3(1/2 - 1/6) = 1, q = 4.
        assert!((admissible_q(6.0, 3).unwrap() - 4.0).abs() <= 1e-12);
        // Range violations.
        assert!(admissible_q(1.5, 3).is_err());
        assert!(admissible_q(f64::INFINITY, 4).is_err());
        assert!(admissible_q(10.0, 5).is_err()); // endpoint 2n/(n-4) = 10 excluded
        assert!(admissible_q(9.9, 5).is_ok());
    }

    #[test]
    fn admissible_pair_checks_the_scaling_relation() {
        assert!(AdmissiblePair::new(4.0, 6.0, 3).is_ok());
        assert!(AdmissiblePair::new(4.1, 6.0, 3).is_err());
        assert!(AdmissiblePair::new(f64::INFINITY, 2.0, 4).is_ok());
        assert!(AdmissiblePair::new(8.0, f64::INFINITY, 1).is_ok());
        assert!(AdmissiblePair::new(8.0, f64::INFINITY, 4).is_err());
    }

    #[test]
    fn theorem_pairs_reproduce_the_worked_example() {
        // s = 0, lambda = 2, n = 3: (q, p) = (6, 18/5).
        let pair = theorem_pair_hartree(0.0, 2.0, 3).unwrap();
        assert!((pair.q() - 6.0).abs() <= 1e-12);
        assert!((pair.p() - 3.6).abs() <= 1e-12);
        // Out-of-range regularity is rejected on both sides.
        assert!(theorem_pair_hartree(1.0, 2.0, 3).is_err()); // s = lambda/2
        assert!(theorem_pair_hartree(-0.1, 2.0, 3).is_err());
        assert!(theorem_pair_hartree(0.0, 3.0, 3).is_err()); // lambda = n

        // Cubic: s = 0, n = 3 gives (4, 6).
        let pair = theorem_pair_cubic(0.0, 3).unwrap();
        assert!((pair.q() - 4.0).abs() <= 1e-12);
        assert!((pair.p() - 6.0).abs() <= 1e-12);
        assert!(theorem_pair_cubic(1.5, 3).is_err());
    }

    #[test]
    fn strichartz_ratio_for_the_energy_pair_is_exactly_one() {
        // (q, p) = (infinity, 2): the mixed norm is sup_t ||u(t)||_{L^2} and
        // the propagator is an isometry, so every draw gives ratio 1.
        let spec = grid();
        let profile = PiecewiseProfile::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let sched = DispersionSchedule::piecewise(profile, profile);
        let pair = AdmissiblePair::new(f64::INFINITY, 2.0, 1).unwrap();
        let opts = StrichartzOptions { samples: 8, max_mode: 16, time_points: 17, seed: 3 };
        let (constant, samples) =
            strichartz_constant(spec, &sched, &pair, -0.4, 1.3, &opts).unwrap();
        assert_eq!(samples.len(), 8);
        for s in &samples {
            assert!((s.ratio - 1.0).abs() <= 1e-12, "ratio {} for seed {}", s.ratio, s.seed);
        }
        assert!((constant - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn strichartz_ensemble_is_deterministic_and_finite() {
        let spec = grid();
        let sched = DispersionSchedule::constant(1.0, -1.0).unwrap();
        let pair = AdmissiblePair::new(8.0, f64::INFINITY, 1).unwrap();
        let opts = StrichartzOptions { samples: 6, max_mode: 12, time_points: 9, seed: 7 };
        let (c1, s1) = strichartz_constant(spec, &sched, &pair, 0.0, 1.0, &opts).unwrap();
        let (c2, s2) = strichartz_constant(spec, &sched, &pair, 0.0, 1.0, &opts).unwrap();
        assert_eq!(c1, c2);
        assert!(c1.is_finite() && c1 > 0.0);
        for (a, b) in s1.iter().zip(&s2) {
            assert_eq!(a.ratio, b.ratio);
        }
        // The constant is the sup over draws.
        assert!(s1.iter().all(|s| s.ratio <= c1));
    }

    #[test]
    fn hardy_ratio_matches_the_two_mode_hand_value() {
        // f = e^{ik1 x} + e^{ik2 x} on L = pi: the potential is
        // 2 c |k1-k2|^{lambda-1} cos((k1-k2) x) with sup at x = 0, and
        // ||f||_{Hdot^{lambda/2}}^2 = (|k1|^lambda + |k2|^lambda) 2L.
        let spec = grid();
        let u = Field::plane_wave(spec, &[1]).unwrap();
        let v = Field::plane_wave(spec, &[3]).unwrap();
        let sum = Field::from_samples(
            spec,
            u.samples().iter().zip(v.samples()).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        let lambda = 0.5;
        let kernel = RieszKernel::new(spec, lambda).unwrap();
        let c = (2.0 * std::f64::consts::PI).sqrt(); // Riesz constant for n=1, lambda=1/2
        let sup = 2.0 * c * 2.0f64.powf(lambda - 1.0);
        let denom = (1.0 + 3.0f64.powf(lambda)) * 2.0 * std::f64::consts::PI;
        let expected = sup / denom;
        let got = hardy_ratio(&sum, &kernel).unwrap();
        assert!(
            (got - expected).abs() <= 1e-10 * expected,
            "hardy ratio {got}, expected {expected}"
        );
    }

    #[test]
    fn gn_ratio_is_scale_invariant_in_amplitude() {
        let spec = grid();
        let u = Field::gaussian(spec, 1.0, 0.6).unwrap();
        let scaled = Field::from_samples(
            spec,
            u.samples().iter().map(|s| s * 7.5).collect(),
        )
        .unwrap();
        let kernel = RieszKernel::new(spec, 0.5).unwrap();
        let a = gn_ratio(&u, &kernel).unwrap();
        let b = gn_ratio(&scaled, &kernel).unwrap();
        assert!(a > 0.0);
        assert!((a - b).abs() <= 1e-10 * a, "amplitude scaling changed the ratio: {a} vs {b}");
    }

    #[test]
    fn hls_ratio_validates_exponents_and_matches_the_energy_pairing() {
        let spec = grid();
        let u = Field::gaussian(spec, 1.0, 0.6).unwrap();
        let lambda = 0.5;
        let kernel = RieszKernel::new(spec, lambda).unwrap();
        let density = Field::from_samples(
            spec,
            u.samples().iter().map(|s| Complex64::new(s.norm_sqr(), 0.0)).collect(),
        )
        .unwrap();
        // Critical line: 1/r + 1/l = 2 - lambda/n = 1.5, symmetric choice
        // r = l = 4/3.
        let r = 4.0 / 3.0;
        let ratio = hls_ratio(&density, &density, &kernel, r, r).unwrap();
        let expected = hartree_energy_term(&u, &kernel).unwrap().abs()
            / lp_norm(&density, r).unwrap().powi(2);
        assert!((ratio - expected).abs() <= 1e-12 * expected.max(1.0));
        // Off the critical line: rejected.
        assert!(hls_ratio(&density, &density, &kernel, 2.0, 2.0).is_err());
    }

    #[test]
    fn diagnostics_record_is_consistent_with_its_parts() {
        let spec = grid();
        let u = Field::gaussian(spec, 1.0, 0.7).unwrap();
        let kernel = RieszKernel::new(spec, 0.5).unwrap();
        let term = EnergyTerm::Hartree(&kernel);
        let rec = DiagnosticsRecord::compute(&u, 1.25, 1.0, -1.0, -1.0, &term).unwrap();
        assert_eq!(rec.t, 1.25);
        assert_eq!(rec.mass, u.mass());
        assert_eq!(rec.energy, energy(&u, 1.0, -1.0, -1.0, &term).unwrap());
        assert_eq!(rec.grad_l2, sobolev_norm(&u, 1.0, true).unwrap());
        assert!(rec.h1 >= rec.grad_l2);
        assert!(rec.h2 >= rec.h1);
        assert_eq!(rec.potential_max, potential_sup(&u, &term).unwrap());
    }
}
