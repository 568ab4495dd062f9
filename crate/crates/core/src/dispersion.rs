//! Time-dependent dispersion coefficient schedules.
//!
//! A schedule supplies the pair `(alpha(t), beta(t))` multiplying the
//! Laplacian and bi-Laplacian, plus exact cumulative integrals
//!
//! ```text
//! A(t, r) = int_r^t alpha,    B(t, r) = int_r^t beta
//! ```
//!
//! which drive the exact linear propagator. Piecewise-periodic schedules are
//! sign-alternating square waves: `alpha = alpha_plus` on `(0, t_plus]`,
//! `-alpha_minus` on `(t_plus - T1, 0]`, extended `T1`-periodically (pieces
//! are right-closed, so the left piece's value governs the closing instant).
//! Cumulatives come from closed-form antiderivatives, never quadrature, so
//! additivity and antisymmetry hold to rounding no matter how many periods an
//! interval spans.

use crate::error::{Error, Result};

/// One sign-alternating square-wave profile (used for `alpha` and `beta`
/// separately). `plus` is the value on `(0, t_plus]`, `minus` the magnitude
/// of the value on `(t_plus - period, 0]`; both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseProfile {
    plus: f64,
    minus: f64,
    t_plus: f64,
    period: f64,
}

impl PiecewiseProfile {
    pub fn new(plus: f64, minus: f64, t_plus: f64, period: f64) -> Result<Self> {
        for (name, v) in [("plus", plus), ("minus", minus), ("t_plus", t_plus), ("period", period)]
        {
            if !v.is_finite() {
                return Err(Error::param("piecewise profile", format!("{name} = {v} not finite")));
            }
        }
        if plus <= 0.0 || minus <= 0.0 {
            return Err(Error::param("piecewise profile", "plus and minus must be positive"));
        }
        if !(t_plus > 0.0 && t_plus < period) {
            return Err(Error::param(
                "piecewise profile",
                format!("switch time {t_plus} must lie strictly inside (0, period = {period})"),
            ));
        }
        Ok(PiecewiseProfile { plus, minus, t_plus, period })
    }

    pub fn plus(&self) -> f64 {
        self.plus
    }

    pub fn minus(&self) -> f64 {
        self.minus
    }

    pub fn t_plus(&self) -> f64 {
        self.t_plus
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Period average `(plus * t_plus - minus * (period - t_plus)) / period`.
    pub fn mean(&self) -> f64 {
        (self.plus * self.t_plus - self.minus * (self.period - self.t_plus)) / self.period
    }

    /// Value at `t` under the right-closed convention.
    pub fn value_at(&self, t: f64) -> f64 {
        let mut tau = t.rem_euclid(self.period);
        if tau == 0.0 {
            tau = self.period; // t on the lattice closes the left piece
        }
        if tau <= self.t_plus {
            self.plus
        } else {
            -self.minus
        }
    }

    /// Antiderivative `int_0^t` in closed form: whole periods contribute
    /// `mean * period` each, the remainder is a two-piece ramp.
    pub fn antiderivative(&self, t: f64) -> f64 {
        let k = (t / self.period).floor();
        let tau = t - k * self.period; // in [0, period)
        let partial = self.plus * tau.min(self.t_plus)
            - self.minus * (tau - self.t_plus).max(0.0);
        k * self.mean() * self.period + partial
    }

    /// Zero-mean fluctuation profile (same switch structure; both branch
    /// values shift by the mean and stay strictly sign-alternating).
    pub fn fluctuation(&self) -> PiecewiseProfile {
        let m = self.mean();
        PiecewiseProfile {
            plus: self.plus - m,
            minus: self.minus + m,
            t_plus: self.t_plus,
            period: self.period,
        }
    }

    /// Discontinuity lattice `{m * period, m * period + t_plus}` restricted
    /// to the open interval `(r, t)`.
    fn breakpoints_into(&self, r: f64, t: f64, out: &mut Vec<f64>) {
        let m_lo = (r / self.period).floor() as i64 - 1;
        let m_hi = (t / self.period).ceil() as i64 + 1;
        for m in m_lo..=m_hi {
            for candidate in [m as f64 * self.period, m as f64 * self.period + self.t_plus] {
                if candidate > r && candidate < t {
                    out.push(candidate);
                }
            }
        }
    }
}

/// Period averages of a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedCoefficients {
    pub m_alpha: f64,
    pub m_beta: f64,
}

/// Cumulative dispersion over an interval: `a = A(t, r)`, `b = B(t, r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulativeDispersion {
    pub a: f64,
    pub b: f64,
}

/// Tabulated continuous schedule, interpolated by a C^1 piecewise cubic
/// (Catmull-Rom tangents, one-sided at the ends). `beta` must be bounded away
/// from zero on the samples, matching the continuous-dispersion hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSchedule {
    times: Vec<f64>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    alpha_tangents: Vec<f64>,
    beta_tangents: Vec<f64>,
}

impl SampledSchedule {
    pub fn new(times: Vec<f64>, alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || alphas.len() != times.len() || betas.len() != times.len() {
            return Err(Error::param(
                "sampled schedule",
                "need >= 2 samples with matching alpha/beta lengths",
            ));
        }
        // Negated form so NaN entries also land here.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("sampled schedule", "times must be strictly increasing"));
        }
        let all = times.iter().chain(&alphas).chain(&betas);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sampled schedule values".into()));
        }
        // beta non-vanishing: uniform sign and bounded away from zero.
        let sign = betas[0].signum();
        if betas.iter().any(|&b| b == 0.0 || b.signum() != sign) {
            return Err(Error::param(
                "sampled schedule",
                "beta samples must be non-vanishing with uniform sign",
            ));
        }
        let alpha_tangents = catmull_rom_tangents(&times, &alphas);
        let beta_tangents = catmull_rom_tangents(&times, &betas);
        Ok(SampledSchedule { times, alphas, betas, alpha_tangents, beta_tangents })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    fn check_range(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.range();
        if t < lo || t > hi {
            return Err(Error::ScheduleRange { t, lo, hi });
        }
        Ok(())
    }

    fn segment(&self, t: f64) -> usize {
        // Last segment whose left node is <= t (t == hi lands in the final one).
        match self.times.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.times.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.times.len() - 2),
        }
    }

    pub fn value_at(&self, t: f64) -> Result<(f64, f64)> {
        self.check_range(t)?;
        let i = self.segment(t);
        let d = self.times[i + 1] - self.times[i];
        let s = (t - self.times[i]) / d;
        let eval = |y: &[f64], m: &[f64]| hermite_value(y[i], y[i + 1], m[i] * d, m[i + 1] * d, s);
        Ok((
            eval(&self.alphas, &self.alpha_tangents),
            eval(&self.betas, &self.beta_tangents),
        ))
    }

    /// `(int_{t0}^t alpha, int_{t0}^t beta)` by exact segment-wise integration
    /// of the cubic interpolant.
    fn antiderivatives(&self, t: f64) -> Result<(f64, f64)> {
        self.check_range(t)?;
        let end = self.segment(t);
        let mut ia = 0.0;
        let mut ib = 0.0;
        for i in 0..=end {
            let d = self.times[i + 1] - self.times[i];
            let s = if i < end { 1.0 } else { ((t - self.times[i]) / d).clamp(0.0, 1.0) };
            ia += d * hermite_integral(
                self.alphas[i],
                self.alphas[i + 1],
                self.alpha_tangents[i] * d,
                self.alpha_tangents[i + 1] * d,
                s,
            );
            ib += d * hermite_integral(
                self.betas[i],
                self.betas[i + 1],
                self.beta_tangents[i] * d,
                self.beta_tangents[i + 1] * d,
                s,
            );
        }
        Ok((ia, ib))
    }
}

fn catmull_rom_tangents(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (values[1] - values[0]) / (times[1] - times[0])
            } else if i == n - 1 {
                (values[n - 1] - values[n - 2]) / (times[n - 1] - times[n - 2])
            } else {
                (values[i + 1] - values[i - 1]) / (times[i + 1] - times[i - 1])
            }
        })
        .collect()
}

/// Cubic Hermite value on the unit interval (tangents pre-scaled by the
/// segment length).
fn hermite_value(y0: f64, y1: f64, m0: f64, m1: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * m0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * m1
}

/// `int_0^s` of the unit-interval Hermite cubic.
fn hermite_integral(y0: f64, y1: f64, m0: f64, m1: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s2 * s2;
    (0.5 * s4 - s3 + s) * y0
        + (0.25 * s4 - 2.0 * s3 / 3.0 + 0.5 * s2) * m0
        + (-0.5 * s4 + s3) * y1
        + (0.25 * s4 - s3 / 3.0) * m1
}

/// A dispersion coefficient schedule `t -> (alpha(t), beta(t))`.
#[derive(Debug, Clone, PartialEq)]
pub enum DispersionSchedule {
    /// Autonomous coefficients.
    Constant { alpha: f64, beta: f64 },
    /// Independent sign-alternating square waves for `alpha` and `beta`.
    PiecewisePeriodic { alpha: PiecewiseProfile, beta: PiecewiseProfile },
    /// Tabulated continuous coefficients on a finite time range.
    ContinuousSampled(SampledSchedule),
    /// Fast oscillation: `alpha_eps(t) = base_alpha(t / epsilon)` (same for
    /// `beta`), so cumulatives contract by `epsilon`.
    Scaled { base: Box<DispersionSchedule>, epsilon: f64 },
}

impl DispersionSchedule {
    pub fn constant(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::NonFinite("constant schedule coefficients".into()));
        }
        Ok(DispersionSchedule::Constant { alpha, beta })
    }

    pub fn piecewise(alpha: PiecewiseProfile, beta: PiecewiseProfile) -> Self {
        DispersionSchedule::PiecewisePeriodic { alpha, beta }
    }

    pub fn sampled(times: Vec<f64>, alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        Ok(DispersionSchedule::ContinuousSampled(SampledSchedule::new(times, alphas, betas)?))
    }

    pub fn scaled(base: DispersionSchedule, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::param("epsilon", "must be positive and finite"));
        }
        Ok(DispersionSchedule::Scaled { base: Box::new(base), epsilon })
    }

    /// Pointwise coefficients `(alpha(t), beta(t))`.
    pub fn value_at(&self, t: f64) -> Result<(f64, f64)> {
        match self {
            DispersionSchedule::Constant { alpha, beta } => Ok((*alpha, *beta)),
            DispersionSchedule::PiecewisePeriodic { alpha, beta } => {
                Ok((alpha.value_at(t), beta.value_at(t)))
            }
            DispersionSchedule::ContinuousSampled(s) => s.value_at(t),
            DispersionSchedule::Scaled { base, epsilon } => base.value_at(t / epsilon),
        }
    }

    /// `(int_0^t alpha, int_0^t beta)` (base point shifts cancel in
    /// differences; sampled schedules anchor at their first node).
    fn antiderivatives(&self, t: f64) -> Result<(f64, f64)> {
        match self {
            DispersionSchedule::Constant { alpha, beta } => Ok((alpha * t, beta * t)),
            DispersionSchedule::PiecewisePeriodic { alpha, beta } => {
                Ok((alpha.antiderivative(t), beta.antiderivative(t)))
            }
            DispersionSchedule::ContinuousSampled(s) => s.antiderivatives(t),
            DispersionSchedule::Scaled { base, epsilon } => {
                let (ia, ib) = base.antiderivatives(t / epsilon)?;
                Ok((epsilon * ia, epsilon * ib))
            }
        }
    }

    /// Exact cumulative dispersion over `(r, t)` (any ordering; antisymmetric
    /// and additive by construction).
    pub fn cumulative(&self, r: f64, t: f64) -> Result<CumulativeDispersion> {
        let (ia_t, ib_t) = self.antiderivatives(t)?;
        let (ia_r, ib_r) = self.antiderivatives(r)?;
        Ok(CumulativeDispersion { a: ia_t - ia_r, b: ib_t - ib_r })
    }

    /// Coefficient discontinuities strictly inside `(r, t)`, sorted and
    /// deduplicated within `1e-14 * max(1, |r|, |t|)`.
    pub fn breakpoints(&self, r: f64, t: f64) -> Result<Vec<f64>> {
        // Negated form so NaN endpoints also land here.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(r < t) {
            return Err(Error::param("interval", format!("need r < t, got ({r}, {t})")));
        }
        let mut points = Vec::new();
        self.collect_breakpoints(r, t, &mut points);
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let tol = 1e-14 * r.abs().max(t.abs()).max(1.0);
        points.dedup_by(|a, b| (*a - *b).abs() <= tol);
        points.retain(|&p| p - r > tol && t - p > tol);
        Ok(points)
    }

    fn collect_breakpoints(&self, r: f64, t: f64, out: &mut Vec<f64>) {
        match self {
            DispersionSchedule::Constant { .. } | DispersionSchedule::ContinuousSampled(_) => {}
            DispersionSchedule::PiecewisePeriodic { alpha, beta } => {
                alpha.breakpoints_into(r, t, out);
                beta.breakpoints_into(r, t, out);
            }
            DispersionSchedule::Scaled { base, epsilon } => {
                let mut inner = Vec::new();
                base.collect_breakpoints(r / epsilon, t / epsilon, &mut inner);
                out.extend(inner.into_iter().map(|p| p * epsilon));
            }
        }
    }

    /// Splits a periodic (or constant) schedule into period averages and the
    /// zero-mean fluctuation schedule. Sampled schedules carry no declared
    /// period and are rejected.
    pub fn mean_and_fluctuation(&self) -> Result<(AveragedCoefficients, DispersionSchedule)> {
        match self {
            DispersionSchedule::Constant { alpha, beta } => Ok((
                AveragedCoefficients { m_alpha: *alpha, m_beta: *beta },
                DispersionSchedule::Constant { alpha: 0.0, beta: 0.0 },
            )),
            DispersionSchedule::PiecewisePeriodic { alpha, beta } => Ok((
                AveragedCoefficients { m_alpha: alpha.mean(), m_beta: beta.mean() },
                DispersionSchedule::PiecewisePeriodic {
                    alpha: alpha.fluctuation(),
                    beta: beta.fluctuation(),
                },
            )),
            DispersionSchedule::ContinuousSampled(_) => Err(Error::param(
                "schedule",
                "sampled schedule has no declared period; averaging undefined",
            )),
            DispersionSchedule::Scaled { base, epsilon } => {
                let (means, fluct) = base.mean_and_fluctuation()?;
                Ok((means, DispersionSchedule::scaled(fluct, *epsilon)?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Recursion-bounded adaptive Simpson quadrature; the independent oracle
    /// for the closed-form cumulatives. A square wave defeats the plain
    /// convergence test (dyadic sample points alias the period), so the first
    /// `min_depth` levels subdivide unconditionally; after that the usual
    /// Richardson criterion takes over and chews down the jump panels.
    fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &impl Fn(f64) -> f64, a: f64, m: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
        }
        fn recurse(
            f: &impl Fn(f64) -> f64,
            a: f64,
            b: f64,
            whole: f64,
            tol: f64,
            depth: u32,
            min_depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, 0.5 * (a + m), m);
            let right = simpson(f, m, 0.5 * (m + b), b);
            let converged = min_depth == 0 && (left + right - whole).abs() <= 15.0 * tol;
            if depth == 0 || converged {
                left + right + (left + right - whole) / 15.0
            } else {
                let md = min_depth.saturating_sub(1);
                recurse(f, a, m, left, 0.5 * tol, depth - 1, md)
                    + recurse(f, m, b, right, 0.5 * tol, depth - 1, md)
            }
        }
        if a == b {
            return 0.0;
        }
        let whole = simpson(f, a, 0.5 * (a + b), b);
        recurse(f, a, b, whole, tol, 60, 13)
    }

    fn sample_profile() -> PiecewiseProfile {
        PiecewiseProfile::new(1.3, 0.7, 0.4, 1.1).unwrap()
    }

    fn sample_schedule() -> DispersionSchedule {
        DispersionSchedule::piecewise(
            sample_profile(),
            PiecewiseProfile::new(0.9, 1.8, 0.25, 1.0).unwrap(),
        )
    }

    #[test]
    fn profile_construction_rejects_bad_input() {
        assert!(PiecewiseProfile::new(0.0, 1.0, 0.5, 1.0).is_err());
        assert!(PiecewiseProfile::new(1.0, -1.0, 0.5, 1.0).is_err());
        assert!(PiecewiseProfile::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(PiecewiseProfile::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(PiecewiseProfile::new(1.0, 1.0, 0.5, f64::NAN).is_err());
    }

    #[test]
    fn right_closed_evaluation() {
        let p = PiecewiseProfile::new(2.0, 3.0, 0.5, 1.0).unwrap();
        assert_eq!(p.value_at(0.25), 2.0);
        assert_eq!(p.value_at(0.5), 2.0); // switch instant belongs to the left piece
        assert_eq!(p.value_at(0.75), -3.0);
        assert_eq!(p.value_at(1.0), -3.0); // lattice instant closes the negative piece
        assert_eq!(p.value_at(0.0), -3.0);
        assert_eq!(p.value_at(-0.25), -3.0);
        assert_eq!(p.value_at(1.25), 2.0);
        assert_eq!(p.value_at(-0.75), 2.0);
    }

    #[test]
    fn constant_cumulative_is_linear() {
        let s = DispersionSchedule::constant(1.7, -0.3).unwrap();
        let c = s.cumulative(-2.0, 3.5).unwrap();
        assert_eq!(c.a, 1.7 * 5.5);
        assert_eq!(c.b, -0.3 * 5.5);
    }

    #[test]
    fn symmetric_square_wave_cancels_over_a_period() {
        // alpha_plus = alpha_minus = 1, t_plus = 1/2, T = 1: A(1, 0) = 0,
        // A(1/2, 0) = 1/2 by hand.
        let p = PiecewiseProfile::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let s = DispersionSchedule::piecewise(p, p);
        let full = s.cumulative(0.0, 1.0).unwrap();
        assert!(full.a.abs() <= 1e-15);
        let half = s.cumulative(0.0, 0.5).unwrap();
        assert!((half.a - 0.5).abs() <= 1e-15);
    }

    #[test]
    fn cumulative_matches_adaptive_quadrature() {
        let s = sample_schedule();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let r = rng.gen_range(-4.0..4.0);
            let t = rng.gen_range(-4.0..4.0);
            let c = s.cumulative(r, t).unwrap();
            let qa = adaptive_simpson(&|x| s.value_at(x).unwrap().0, r, t, 1e-13);
            let qb = adaptive_simpson(&|x| s.value_at(x).unwrap().1, r, t, 1e-13);
            assert!((c.a - qa).abs() <= 1e-12, "A: {} vs {qa} on ({r}, {t})", c.a);
            assert!((c.b - qb).abs() <= 1e-12, "B: {} vs {qb} on ({r}, {t})", c.b);
        }
    }

    #[test]
    fn scaled_cumulative_matches_adaptive_quadrature() {
        let s = DispersionSchedule::scaled(sample_schedule(), 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let r = rng.gen_range(-1.0..1.0);
            let t = rng.gen_range(-1.0..1.0);
            let c = s.cumulative(r, t).unwrap();
            let qa = adaptive_simpson(&|x| s.value_at(x).unwrap().0, r, t, 1e-13);
            assert!((c.a - qa).abs() <= 1e-12, "A: {} vs {qa} on ({r}, {t})", c.a);
        }
    }

    #[test]
    fn cumulative_antisymmetric_and_additive() {
        let s = sample_schedule();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let r = rng.gen_range(-10.0..10.0);
            let l = rng.gen_range(-10.0..10.0);
            let t = rng.gen_range(-10.0..10.0);
            let rt = s.cumulative(r, t).unwrap();
            let tr = s.cumulative(t, r).unwrap();
            assert!((rt.a + tr.a).abs() <= 1e-14 && (rt.b + tr.b).abs() <= 1e-14);
            let rl = s.cumulative(r, l).unwrap();
            let lt = s.cumulative(l, t).unwrap();
            assert!(
                (rl.a + lt.a - rt.a).abs() <= 1e-12,
                "additivity: {} + {} vs {}",
                rl.a,
                lt.a,
                rt.a
            );
            assert!((rl.b + lt.b - rt.b).abs() <= 1e-12);
        }
        let same = s.cumulative(2.7, 2.7).unwrap();
        assert_eq!(same.a, 0.0);
        assert_eq!(same.b, 0.0);
    }

    #[test]
    fn breakpoints_canonical_lattice() {
        // t_plus = tau_plus = 1/2, T1 = T2 = 1 on (0, 2): {1/2, 1, 3/2};
        // endpoints are lattice points but stay excluded.
        let p = PiecewiseProfile::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let s = DispersionSchedule::piecewise(p, p);
        let pts = s.breakpoints(0.0, 2.0).unwrap();
        assert_eq!(pts, vec![0.5, 1.0, 1.5]);
    }

    #[test]
    fn breakpoints_merge_two_lattices() {
        // T1 = 2/3 (t_plus = 1/3) and T2 = 1 (tau_plus = 1/2): merged lattice
        // on (0, 2) is sorted with the shared point 1 appearing once.
        let a = PiecewiseProfile::new(1.0, 1.0, 1.0 / 3.0, 2.0 / 3.0).unwrap();
        let b = PiecewiseProfile::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let s = DispersionSchedule::piecewise(a, b);
        let pts = s.breakpoints(0.0, 2.0).unwrap();
        let expected = [
            1.0 / 3.0,
            0.5,
            2.0 / 3.0,
            1.0,
            4.0 / 3.0,
            1.5,
            5.0 / 3.0,
        ];
        assert_eq!(pts.len(), expected.len(), "{pts:?}");
        for (got, want) in pts.iter().zip(expected) {
            assert!((got - want).abs() <= 1e-14, "{got} vs {want}");
        }
        for w in pts.windows(2) {
            assert!(w[1] - w[0] > 1e-14, "duplicate breakpoints {w:?}");
        }
        assert!(s.breakpoints(1.0, 1.0).is_err());
        assert!(s.breakpoints(2.0, 1.0).is_err());
    }

    #[test]
    fn scaled_breakpoints_contract_by_epsilon() {
        let p = PiecewiseProfile::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let s = DispersionSchedule::scaled(DispersionSchedule::piecewise(p, p), 0.1).unwrap();
        let pts = s.breakpoints(0.0, 0.2).unwrap();
        assert_eq!(pts.len(), 3);
        for (got, want) in pts.iter().zip([0.05, 0.1, 0.15]) {
            assert!((got - want).abs() <= 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn sampled_schedule_interpolates_and_integrates() {
        // Tabulate a smooth pair and check the cumulative against quadrature
        // of the interpolant itself.
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        let alphas: Vec<f64> = times.iter().map(|t| (1.3 * t).sin() + 0.2).collect();
        let betas: Vec<f64> = times.iter().map(|t| 1.0 + 0.5 * (0.7 * t).cos()).collect();
        let s = DispersionSchedule::sampled(times.clone(), alphas.clone(), betas).unwrap();

        // Nodes reproduce exactly.
        let (a0, _) = s.value_at(1.0).unwrap();
        assert!((a0 - ((1.3f64).sin() + 0.2)).abs() <= 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let r = rng.gen_range(0.0..4.0);
            let t = rng.gen_range(0.0..4.0);
            let c = s.cumulative(r, t).unwrap();
            let qa = adaptive_simpson(&|x| s.value_at(x).unwrap().0, r, t, 1e-13);
            let scale = qa.abs().max(1.0);
            assert!((c.a - qa).abs() <= 1e-10 * scale, "{} vs {qa}", c.a);
        }

        // Out-of-range evaluation is an error.
        assert!(s.value_at(-0.1).is_err());
        assert!(s.cumulative(0.0, 4.5).is_err());
        assert!(matches!(s.value_at(5.0), Err(Error::ScheduleRange { .. })));
    }

    #[test]
    fn sampled_schedule_rejects_vanishing_beta() {
        let times = vec![0.0, 1.0, 2.0];
        assert!(DispersionSchedule::sampled(times.clone(), vec![1.0; 3], vec![1.0, 0.0, 1.0])
            .is_err());
        assert!(DispersionSchedule::sampled(times.clone(), vec![1.0; 3], vec![1.0, -1.0, 1.0])
            .is_err());
        assert!(DispersionSchedule::sampled(times, vec![1.0; 3], vec![-1.0, -2.0, -1.0]).is_ok());
    }

    #[test]
    fn means_and_fluctuation() {
        // Symmetric wave has zero mean; asymmetric one matches the closed form.
        let sym = PiecewiseProfile::new(1.0, 1.0, 0.5, 1.0).unwrap();
        assert!(sym.mean().abs() <= 1e-15);
        let asym = PiecewiseProfile::new(1.5, 0.5, 0.5, 1.0).unwrap();
        assert!((asym.mean() - 0.5).abs() <= 1e-15);

        let s = DispersionSchedule::piecewise(asym, sym);
        let (means, fluct) = s.mean_and_fluctuation().unwrap();
        assert!((means.m_alpha - 0.5).abs() <= 1e-15);
        assert!(means.m_beta.abs() <= 1e-15);

        // Fluctuation integrates to ~0 over one period of each component.
        let c = fluct.cumulative(0.0, 1.0).unwrap();
        assert!(c.a.abs() <= 1e-14 && c.b.abs() <= 1e-14);

        // Constant schedules split into themselves plus a zero fluctuation.
        let (mc, fc) = DispersionSchedule::constant(2.0, -3.0)
            .unwrap()
            .mean_and_fluctuation()
            .unwrap();
        assert_eq!((mc.m_alpha, mc.m_beta), (2.0, -3.0));
        assert_eq!(fc.cumulative(-5.0, 11.0).unwrap().a, 0.0);

        // Sampled schedules have no period to average over.
        let times = vec![0.0, 1.0];
        let sampled = DispersionSchedule::sampled(times, vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(sampled.mean_and_fluctuation().is_err());
    }

    #[test]
    fn scaled_decomposition_identity() {
        // A_eps(s, t) = m_alpha (t - s) + eps * int_{s/eps}^{t/eps} alpha_0.
        let s = sample_schedule();
        let eps = 0.05;
        let scaled = DispersionSchedule::scaled(s.clone(), eps).unwrap();
        let (means, fluct) = s.mean_and_fluctuation().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let r = rng.gen_range(-2.0..2.0);
            let t = rng.gen_range(-2.0..2.0);
            let lhs = scaled.cumulative(r, t).unwrap();
            let osc = fluct.cumulative(r / eps, t / eps).unwrap();
            let rhs_a = means.m_alpha * (t - r) + eps * osc.a;
            let rhs_b = means.m_beta * (t - r) + eps * osc.b;
            assert!((lhs.a - rhs_a).abs() <= 1e-12, "{} vs {rhs_a}", lhs.a);
            assert!((lhs.b - rhs_b).abs() <= 1e-12, "{} vs {rhs_b}", lhs.b);
        }
    }

    #[test]
    fn scaled_value_reparametrizes_time() {
        let s = sample_schedule();
        let eps = 0.01;
        let scaled = DispersionSchedule::scaled(s.clone(), eps).unwrap();
        for t in [-0.737, 0.0, 0.123, 0.5] {
            assert_eq!(scaled.value_at(t).unwrap(), s.value_at(t / eps).unwrap());
        }
    }
}
