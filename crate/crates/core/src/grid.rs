//! Periodic torus discretization and spectral transforms.
//!
//! The domain is the box `[-L, L)^n` sampled on `N` points per axis (`N` a
//! power of two), so the grid spacing is `h = 2L/N` and the resolved
//! wavenumbers are `xi_j = pi*j/L` for signed mode indices
//! `j in [-N/2, N/2)`.
//!
//! Transform normalization: the forward transform is
//!
//! ```text
//! fhat(xi_j) = (2L)^{n/2} / N^n * sum_m f(x_m) exp(-i xi_j . x_m)
//! ```
//!
//! so the zero mode carries `mean(f) * (2L)^{n/2}` and the discrete Parseval
//! identity `sum_j |fhat_j|^2 = h^n sum_m |f(x_m)|^2` holds exactly. A plane
//! wave `exp(i k x)` on a resolved mode has `|fhat(k)| = (2L)^{1/2}` in one
//! dimension, hence Sobolev norm `(1 + k^2)^{s/2} (2L)^{1/2}`.
//!
//! Spectral coefficients are stored in DFT order (axis index `0..N` maps to
//! signed mode `j` for `j < N/2`, `j - N` otherwise), row-major across axes.

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};

/// Maximum supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Shape of the periodic grid: dimension, points per axis, half box length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    points_per_axis: usize,
    half_length: f64,
}

impl GridSpec {
    /// Validates and builds a grid. `points_per_axis` must be a power of two
    /// `>= 8`, `dim` in `1..=3`, `half_length` positive and finite.
    pub fn new(dim: usize, points_per_axis: usize, half_length: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dimension {dim} unsupported (expected 1..={MAX_DIM})"
            )));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis {points_per_axis} must be a power of two >= 8"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half length {half_length} must be positive and finite"
            )));
        }
        Ok(GridSpec { dim, points_per_axis, half_length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// Grid spacing `h = 2L/N`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.points_per_axis as f64
    }

    /// Total number of samples `N^n`.
    pub fn total_points(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    /// Physical quadrature weight `h^n` of one sample cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Physical coordinate of axis index `m`: `x_m = -L + m h`.
    pub fn coordinate(&self, m: usize) -> f64 {
        -self.half_length + m as f64 * self.spacing()
    }

    /// Signed mode index for DFT storage index `j` (`j` for `j < N/2`,
    /// `j - N` otherwise, so the Nyquist mode sits at `-N/2`).
    pub fn signed_mode(&self, j: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Wavenumber of DFT storage index `j` along one axis: `pi * jsigned / L`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        std::f64::consts::PI * self.signed_mode(j) as f64 / self.half_length
    }

    /// All axis wavenumbers in DFT storage order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|j| self.wavenumber(j)).collect()
    }

    /// Decomposes a flat row-major index into per-axis indices.
    /// Only the first `dim` entries of the output are meaningful.
    #[inline]
    pub fn axis_indices(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut out = [0usize; MAX_DIM];
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            out[a] = rem % self.points_per_axis;
            rem /= self.points_per_axis;
        }
        out
    }

    /// Visits every spectral mode as `(flat_index, xi_squared)`.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, f64)) {
        let xi = self.wavenumbers();
        match self.dim {
            1 => {
                for (flat, &x) in xi.iter().enumerate() {
                    f(flat, x * x);
                }
            }
            2 => {
                let n = self.points_per_axis;
                for (j0, &x0) in xi.iter().enumerate() {
                    for (j1, &x1) in xi.iter().enumerate() {
                        f(j0 * n + j1, x0 * x0 + x1 * x1);
                    }
                }
            }
            _ => {
                let n = self.points_per_axis;
                for (j0, &x0) in xi.iter().enumerate() {
                    for (j1, &x1) in xi.iter().enumerate() {
                        for (j2, &x2) in xi.iter().enumerate() {
                            f((j0 * n + j1) * n + j2, x0 * x0 + x1 * x1 + x2 * x2);
                        }
                    }
                }
            }
        }
    }

    fn compatible(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    let mut guard = planner().lock().expect("FFT planner lock poisoned");
    match direction {
        FftDirection::Forward => guard.plan_fft_forward(len),
        FftDirection::Inverse => guard.plan_fft_inverse(len),
    }
}

/// Unnormalized n-dimensional DFT in place (one 1-D pass per axis).
fn dft_nd(spec: &GridSpec, data: &mut [Complex64], direction: FftDirection) {
    let n = spec.points_per_axis;
    let fft = plan(n, direction);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    // Last axis is contiguous.
    for row in data.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    // Remaining axes via gather/scatter along the stride.
    let mut line = vec![Complex64::default(); n];
    for axis in (0..spec.dim.saturating_sub(1)).rev() {
        let stride = n.pow((spec.dim - 1 - axis) as u32);
        let block = stride * n; // span of one full line set along `axis`
        for base_block in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = base_block + offset;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, value) in line.iter().enumerate() {
                    data[base + k * stride] = *value;
                }
            }
        }
    }
}

/// Parity of the sum of per-axis DFT indices; the sign `(-1)^parity` converts
/// between DFT phases (origin at the first sample) and the true phases
/// `exp(-i xi x)` with the origin mid-box.
fn mode_sign(spec: &GridSpec, flat: usize) -> f64 {
    let idx = spec.axis_indices(flat);
    let sum: usize = idx[..spec.dim].iter().sum();
    if sum.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn forward_transform(spec: &GridSpec, samples: &[Complex64]) -> Vec<Complex64> {
    let mut data = samples.to_vec();
    dft_nd(spec, &mut data, FftDirection::Forward);
    let scale = (2.0 * spec.half_length).powf(spec.dim as f64 / 2.0)
        / spec.total_points() as f64;
    for (flat, value) in data.iter_mut().enumerate() {
        *value *= mode_sign(spec, flat) * scale;
    }
    data
}

fn backward_transform(spec: &GridSpec, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(flat, value)| value * mode_sign(spec, flat))
        .collect();
    dft_nd(spec, &mut data, FftDirection::Inverse);
    let scale = (2.0 * spec.half_length).powf(-(spec.dim as f64) / 2.0);
    for value in data.iter_mut() {
        *value *= scale;
    }
    data
}

/// A complex field on a [`GridSpec`], immutable once constructed.
///
/// Physical samples are stored row-major; the spectral side is computed on
/// first use and cached (fields built from spectral data carry an already
/// valid cache, so chained multiplier applications never re-transform).
#[derive(Debug, Clone)]
pub struct Field {
    spec: GridSpec,
    samples: Vec<Complex64>,
    spectral: OnceLock<Vec<Complex64>>,
}

impl Field {
    /// Wraps physical samples (row-major, length `N^n`).
    pub fn from_samples(spec: GridSpec, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != spec.total_points() {
            return Err(Error::GridMismatch(format!(
                "sample count {} does not match grid ({} expected)",
                samples.len(),
                spec.total_points()
            )));
        }
        Ok(Field { spec, samples, spectral: OnceLock::new() })
    }

    /// Builds a field from spectral coefficients (DFT storage order). The
    /// coefficients are kept verbatim as the spectral cache.
    pub fn from_spectral(spec: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != spec.total_points() {
            return Err(Error::GridMismatch(format!(
                "coefficient count {} does not match grid ({} expected)",
                coeffs.len(),
                spec.total_points()
            )));
        }
        let samples = backward_transform(&spec, &coeffs);
        let spectral = OnceLock::new();
        let _ = spectral.set(coeffs);
        Ok(Field { spec, samples, spectral })
    }

    /// Evaluates `f(x)` at every grid point (coordinates passed per axis).
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let total = spec.total_points();
        let mut samples = Vec::with_capacity(total);
        let mut x = [0f64; MAX_DIM];
        for flat in 0..total {
            let idx = spec.axis_indices(flat);
            for a in 0..spec.dim {
                x[a] = spec.coordinate(idx[a]);
            }
            samples.push(f(&x[..spec.dim]));
        }
        Field { spec, samples, spectral: OnceLock::new() }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Spectral coefficients under the grid normalization (cached).
    pub fn spectral(&self) -> &[Complex64] {
        self.spectral.get_or_init(|| forward_transform(&self.spec, &self.samples))
    }

    /// `h^n sum |f|^2`, the discrete squared L2 norm (mass).
    pub fn mass(&self) -> f64 {
        self.spec.cell_volume() * self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// True if every sample is finite.
    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// L2 distance to another field on the same grid.
    pub fn l2_distance(&self, other: &Field) -> Result<f64> {
        self.spec.compatible(&other.spec)?;
        let sum: f64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((self.spec.cell_volume() * sum).sqrt())
    }

    /// Plane wave `exp(i xi . x)` with integer mode indices per axis (must be
    /// resolved: `|mode| < N/2`).
    pub fn plane_wave(spec: GridSpec, modes: &[i64]) -> Result<Self> {
        if modes.len() != spec.dim {
            return Err(Error::param("modes", "one mode index per axis required"));
        }
        let half = spec.points_per_axis as i64 / 2;
        if modes.iter().any(|m| m.abs() >= half) {
            return Err(Error::param("modes", format!("|mode| must be < N/2 = {half}")));
        }
        let l = spec.half_length;
        let k: Vec<f64> = modes.iter().map(|&m| std::f64::consts::PI * m as f64 / l).collect();
        Ok(Field::from_fn(spec, |x| {
            let phase: f64 = x.iter().zip(&k).map(|(xa, ka)| xa * ka).sum();
            Complex64::from_polar(1.0, phase)
        }))
    }

    /// Centered Gaussian `amplitude * exp(-|x|^2 / (2 width^2))`.
    pub fn gaussian(spec: GridSpec, amplitude: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::param("width", "must be positive and finite"));
        }
        let two_w2 = 2.0 * width * width;
        Ok(Field::from_fn(spec, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::new(amplitude * (-r2 / two_w2).exp(), 0.0)
        }))
    }
}

/// Sobolev norm `( sum <xi>^{2s} |fhat|^2 )^{1/2}`; with `homogeneous` the
/// weight is `|xi|^{2s}` and the zero mode contributes nothing.
pub fn sobolev_norm(f: &Field, s: f64, homogeneous: bool) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::param("s", "regularity must be finite"));
    }
    if !f.is_finite() {
        return Err(Error::NonFinite("sobolev_norm on non-finite samples".into()));
    }
    let coeffs = f.spectral();
    let mut sum = 0.0;
    f.spec().for_each_mode(|flat, xi_sq| {
        let weight = if homogeneous {
            if xi_sq == 0.0 {
                0.0
            } else {
                xi_sq.powf(s)
            }
        } else {
            (1.0 + xi_sq).powf(s)
        };
        sum += weight * coeffs[flat].norm_sqr();
    });
    Ok(sum.sqrt())
}

/// Discrete Lebesgue norm `( h^n sum |f|^p )^{1/p}`; `p = inf` gives the max.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::param("p", format!("exponent {p} must satisfy p >= 1")));
    }
    if !f.is_finite() {
        return Err(Error::NonFinite("lp_norm on non-finite samples".into()));
    }
    if p.is_infinite() {
        return Ok(f.samples().iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    if p == 2.0 {
        return Ok(f.l2_norm());
    }
    let sum: f64 = f.samples().iter().map(|v| v.norm().powf(p)).sum();
    Ok((f.spec().cell_volume() * sum).powf(1.0 / p))
}

/// Random band-limited field: i.i.d. complex Gaussian coefficients on modes
/// with every axis index `|j| <= max_mode`, zero elsewhere, normalized to
/// unit L2 norm. Deterministic in `seed`.
pub fn random_band_limited(spec: GridSpec, max_mode: usize, seed: u64) -> Result<Field> {
    if max_mode == 0 || max_mode >= spec.points_per_axis / 2 {
        return Err(Error::param(
            "max_mode",
            format!("must satisfy 0 < max_mode < N/2 = {}", spec.points_per_axis / 2),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = spec.total_points();
    let mut coeffs = vec![Complex64::default(); total];
    let limit = max_mode as i64;
    let mut norm_sq = 0.0;
    for (flat, slot) in coeffs.iter_mut().enumerate() {
        let idx = spec.axis_indices(flat);
        let in_band = idx[..spec.dim]
            .iter()
            .all(|&j| spec.signed_mode(j).abs() <= limit);
        if in_band {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *slot = Complex64::new(re, im);
            norm_sq += slot.norm_sqr();
        }
    }
    if norm_sq == 0.0 {
        return Err(Error::NonFinite("degenerate random draw".into()));
    }
    let inv = 1.0 / norm_sq.sqrt();
    for value in coeffs.iter_mut() {
        *value *= inv;
    }
    Field::from_spectral(spec, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1d() -> GridSpec {
        GridSpec::new(1, 64, 8.0).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GridSpec::new(0, 64, 1.0).is_err());
        assert!(GridSpec::new(4, 64, 1.0).is_err());
        assert!(GridSpec::new(1, 48, 1.0).is_err());
        assert!(GridSpec::new(1, 4, 1.0).is_err());
        assert!(GridSpec::new(1, 64, 0.0).is_err());
        assert!(GridSpec::new(1, 64, -3.0).is_err());
        assert!(GridSpec::new(1, 64, f64::INFINITY).is_err());
    }

    #[test]
    fn coordinates_start_at_minus_l() {
        let g = grid1d();
        assert_eq!(g.coordinate(0), -8.0);
        let h = g.spacing();
        assert!((h - 0.25).abs() < 1e-15);
        assert!((g.coordinate(g.points_per_axis() - 1) - (8.0 - h)).abs() < 1e-14);
    }

    #[test]
    fn wavenumber_layout_is_signed() {
        let g = grid1d();
        assert_eq!(g.signed_mode(0), 0);
        assert_eq!(g.signed_mode(1), 1);
        assert_eq!(g.signed_mode(31), 31);
        assert_eq!(g.signed_mode(32), -32); // Nyquist
        assert_eq!(g.signed_mode(63), -1);
        let xi1 = g.wavenumber(1);
        assert!((xi1 - std::f64::consts::PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn transform_round_trip() {
        for dim in 1..=3usize {
            let n = if dim == 3 { 8 } else { 32 };
            let spec = GridSpec::new(dim, n, 3.0).unwrap();
            let f = random_band_limited(spec, n / 4, 7).unwrap();
            let back = Field::from_spectral(spec, f.spectral().to_vec()).unwrap();
            let err = f.l2_distance(&back).unwrap() / f.l2_norm();
            assert!(err <= 1e-12, "round-trip error {err} in dim {dim}");
        }
    }

    #[test]
    fn parseval_matches_physical_quadrature() {
        for dim in 1..=2usize {
            let spec = GridSpec::new(dim, 32, 5.0).unwrap();
            let f = random_band_limited(spec, 10, 3).unwrap();
            // Independent physical-side evaluation of the L2 norm.
            let phys: f64 = spec.cell_volume()
                * f.samples().iter().map(|v| v.norm_sqr()).sum::<f64>();
            let spect: f64 = f.spectral().iter().map(|v| v.norm_sqr()).sum();
            assert!(
                (phys - spect).abs() <= 1e-12 * phys.max(1.0),
                "parseval violated: {phys} vs {spect}"
            );
        }
    }

    #[test]
    fn plane_wave_sobolev_norm_matches_hand_value() {
        // Single resolved mode exp(ikx): H^s norm = (1+k^2)^{s/2} (2L)^{1/2}.
        let l = 8.0;
        let g = GridSpec::new(1, 64, l).unwrap();
        for mode in [1i64, 5, -9] {
            let k = std::f64::consts::PI * mode as f64 / l;
            let f = Field::plane_wave(g, &[mode]).unwrap();
            for s in [0.0, 1.0, 2.0, 1.5, -1.0] {
                let expected = (1.0 + k * k).powf(s / 2.0) * (2.0 * l).sqrt();
                let got = sobolev_norm(&f, s, false).unwrap();
                assert!(
                    (got - expected).abs() <= 1e-12 * expected,
                    "mode {mode} s {s}: {got} vs {expected}"
                );
                let expected_hom = k.abs().powf(s) * (2.0 * l).sqrt();
                let got_hom = sobolev_norm(&f, s, true).unwrap();
                assert!(
                    (got_hom - expected_hom).abs() <= 1e-12 * expected_hom,
                    "homogeneous mode {mode} s {s}: {got_hom} vs {expected_hom}"
                );
            }
        }
    }

    #[test]
    fn plane_wave_spectrum_is_a_single_coefficient() {
        let l = 8.0;
        let g = GridSpec::new(1, 64, l).unwrap();
        let f = Field::plane_wave(g, &[3]).unwrap();
        let coeffs = f.spectral();
        let expected = (2.0 * l).sqrt();
        assert!((coeffs[3].re - expected).abs() <= 1e-12 * expected);
        assert!(coeffs[3].im.abs() <= 1e-12 * expected);
        let off: f64 = coeffs
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != 3)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        assert!(off <= 1e-12 * expected, "spurious off-mode content {off}");
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = grid1d();
        let z = Field::from_samples(g, vec![Complex64::default(); g.total_points()]).unwrap();
        assert_eq!(sobolev_norm(&z, 2.0, false).unwrap(), 0.0);
        assert_eq!(sobolev_norm(&z, 1.0, true).unwrap(), 0.0);
        assert_eq!(lp_norm(&z, 4.0).unwrap(), 0.0);
        assert_eq!(lp_norm(&z, f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn sobolev_norm_monotone_in_s() {
        let g = grid1d();
        for seed in 0..5 {
            let f = random_band_limited(g, 20, seed).unwrap();
            let mut prev = 0.0;
            for s in [-1.0, 0.0, 0.5, 1.0, 2.0] {
                let v = sobolev_norm(&f, s, false).unwrap();
                assert!(v >= prev, "seed {seed}: H^{s} = {v} < previous {prev}");
                prev = v;
            }
        }
    }

    #[test]
    fn zero_mode_carries_scaled_mean() {
        let g = grid1d();
        let c = Complex64::new(0.7, -0.2);
        let f = Field::from_samples(g, vec![c; g.total_points()]).unwrap();
        let expected = c * (2.0 * g.half_length()).sqrt();
        let got = f.spectral()[0];
        assert!((got - expected).norm() <= 1e-13 * expected.norm());
    }

    #[test]
    fn lp_norm_constants_and_bounds() {
        let g = grid1d();
        let c = Complex64::new(-0.3, 0.4); // |c| = 0.5
        let f = Field::from_samples(g, vec![c; g.total_points()]).unwrap();
        let vol = 2.0 * g.half_length();
        for p in [1.0, 2.0, 3.5, 8.0] {
            let got = lp_norm(&f, p).unwrap();
            let expected = 0.5 * vol.powf(1.0 / p);
            assert!((got - expected).abs() <= 1e-13 * expected, "p={p}");
        }
        assert!((lp_norm(&f, f64::INFINITY).unwrap() - 0.5).abs() <= 1e-15);
        assert!(lp_norm(&f, 0.5).is_err());
        assert!(lp_norm(&f, f64::NAN).is_err());

        // Hoelder on the finite box: ||f||_p <= vol^{1/p - 1/q} ||f||_q, p <= q.
        for seed in 0..4 {
            let f = random_band_limited(g, 12, seed).unwrap();
            let (p, q) = (2.0, 6.0);
            let lhs = lp_norm(&f, p).unwrap();
            let rhs = vol.powf(1.0 / p - 1.0 / q) * lp_norm(&f, q).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-12), "seed {seed}: {lhs} > {rhs}");
        }
    }

    #[test]
    fn non_finite_samples_rejected() {
        let g = grid1d();
        let mut samples = vec![Complex64::default(); g.total_points()];
        samples[5] = Complex64::new(f64::NAN, 0.0);
        let f = Field::from_samples(g, samples).unwrap();
        assert!(sobolev_norm(&f, 0.0, false).is_err());
        assert!(lp_norm(&f, 2.0).is_err());
    }

    #[test]
    fn random_band_limited_is_deterministic_and_normalized() {
        let g = grid1d();
        let a = random_band_limited(g, 10, 42).unwrap();
        let b = random_band_limited(g, 10, 42).unwrap();
        assert_eq!(a.samples(), b.samples(), "same seed must be bit-identical");
        let c = random_band_limited(g, 10, 43).unwrap();
        assert!(a.l2_distance(&c).unwrap() > 1e-3, "different seeds should differ");
        assert!((a.l2_norm() - 1.0).abs() <= 1e-12);
        // Support confined to |mode| <= max_mode.
        for (j, v) in a.spectral().iter().enumerate() {
            if g.signed_mode(j).abs() > 10 {
                assert_eq!(v.norm(), 0.0, "leakage at mode {}", g.signed_mode(j));
            }
        }
        assert!(random_band_limited(g, 0, 1).is_err());
        assert!(random_band_limited(g, 32, 1).is_err());
    }

    #[test]
    fn two_dimensional_plane_wave_norm() {
        let l = 4.0;
        let g = GridSpec::new(2, 16, l).unwrap();
        let f = Field::plane_wave(g, &[2, -3]).unwrap();
        let k2 = (std::f64::consts::PI / l).powi(2) * (4.0 + 9.0);
        let expected = (1.0 + k2).powf(1.0) * (2.0 * l); // s = 2, (2L)^{2/2}
        let got = sobolev_norm(&f, 2.0, false).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected, "{got} vs {expected}");
    }

    #[test]
    fn field_from_spectral_keeps_coefficients_verbatim() {
        let g = grid1d();
        let f = random_band_limited(g, 8, 11).unwrap();
        let coeffs = f.spectral().to_vec();
        let rebuilt = Field::from_spectral(g, coeffs.clone()).unwrap();
        assert_eq!(rebuilt.spectral(), coeffs.as_slice());
    }
}
