//! Hartree (Riesz-potential) and cubic nonlinearities.
//!
//! The nonlocal term couples the density to itself through the Riesz kernel
//! `|x|^{-lambda}`, `0 < lambda < n`. On the torus the convolution
//! `V = |x|^{-lambda} * |u|^2` is evaluated spectrally with the kernel's
//! Fourier symbol
//!
//! ```text
//! khat(xi) = c_{n,lambda} |xi|^{lambda - n},
//! c_{n,lambda} = pi^{n/2} 2^{n - lambda} Gamma((n - lambda)/2) / Gamma(lambda/2),
//! ```
//!
//! with the zero mode set to zero (the mean of the periodized kernel is not
//! summable on its own; dropping it shifts the potential by a constant, i.e.
//! by a gauge phase). `reference::direct_riesz_potential_1d` provides the
//! ground-truth check of both the symbol shape and the constant.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};

/// Lanczos approximation of the Gamma function (g = 7, 9 terms), accurate to
/// ~1e-14 relative on the small positive arguments used here.
fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    // Published table digits kept verbatim (they exceed f64 precision).
    #[allow(clippy::excessive_precision)]
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = COEFFS[0];
        for (i, c) in COEFFS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Fourier-transform constant of `|x|^{-lambda}` in dimension `n`.
pub fn riesz_constant(dim: usize, lambda: f64) -> f64 {
    let n = dim as f64;
    std::f64::consts::PI.powf(n / 2.0) * 2f64.powf(n - lambda) * gamma((n - lambda) / 2.0)
        / gamma(lambda / 2.0)
}

/// Spectral multiplier of the Riesz kernel on a fixed grid.
#[derive(Debug, Clone)]
pub struct RieszKernel {
    spec: GridSpec,
    lambda: f64,
    symbol: Vec<f64>,
}

impl RieszKernel {
    /// Requires `0 < lambda < n` (the Riesz range in dimension `n`).
    pub fn new(spec: GridSpec, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0 && lambda < spec.dim() as f64) {
            return Err(Error::param(
                "lambda",
                format!("must satisfy 0 < lambda < n = {}", spec.dim()),
            ));
        }
        let c = riesz_constant(spec.dim(), lambda);
        let exponent = (lambda - spec.dim() as f64) / 2.0;
        let mut symbol = vec![0.0f64; spec.total_points()];
        spec.for_each_mode(|flat, xi_sq| {
            symbol[flat] = if xi_sq == 0.0 { 0.0 } else { c * xi_sq.powf(exponent) };
        });
        Ok(RieszKernel { spec, lambda, symbol })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Symbol values in DFT storage order (zero mode is exactly 0).
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    fn check_grid(&self, f: &Field) -> Result<()> {
        if f.spec() == &self.spec {
            Ok(())
        } else {
            Err(Error::GridMismatch("kernel grid differs from field grid".into()))
        }
    }

    /// Spectral convolution `k * f` for a general complex field.
    pub fn convolve(&self, f: &Field) -> Result<Field> {
        self.check_grid(f)?;
        let coeffs: Vec<Complex64> = f
            .spectral()
            .iter()
            .zip(&self.symbol)
            .map(|(c, s)| c * s)
            .collect();
        Field::from_spectral(self.spec, coeffs)
    }

    /// Hartree potential `V = k * |u|^2` as real samples. The spectral
    /// round trip leaves a rounding-level imaginary residue which is checked
    /// against `1e-12 * ||u||_{L^2}^2` and then discarded.
    pub fn potential(&self, u: &Field) -> Result<Vec<f64>> {
        self.check_grid(u)?;
        let density: Vec<Complex64> = u
            .samples()
            .iter()
            .map(|v| Complex64::new(v.norm_sqr(), 0.0))
            .collect();
        let density = Field::from_samples(self.spec, density)?;
        let v = self.convolve(&density)?;
        let imag_max = v.samples().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let tol = 1e-12 * u.mass();
        if imag_max > tol {
            return Err(Error::NonFinite(format!(
                "potential imaginary residue {imag_max} exceeds {tol}"
            )));
        }
        Ok(v.samples().iter().map(|z| z.re).collect())
    }
}

/// `theta * (k * |u|^2) * u`, the Hartree term of the equation.
pub fn hartree_term(u: &Field, kernel: &RieszKernel, theta: f64) -> Result<Field> {
    let v = kernel.potential(u)?;
    let samples: Vec<Complex64> = u
        .samples()
        .iter()
        .zip(&v)
        .map(|(s, &p)| s * (theta * p))
        .collect();
    Field::from_samples(*u.spec(), samples)
}

/// `theta * |u|^2 * u`. With `dealias` the product is truncated to modes with
/// every axis index `|j| <= N/3` (the 2/3 rule), which keeps cubic aliasing
/// out of the resolved band.
pub fn cubic_term(u: &Field, theta: f64, dealias: bool) -> Result<Field> {
    let samples: Vec<Complex64> = u
        .samples()
        .iter()
        .map(|s| s * (theta * s.norm_sqr()))
        .collect();
    let product = Field::from_samples(*u.spec(), samples)?;
    if !dealias {
        return Ok(product);
    }
    let spec = *u.spec();
    let cutoff = (spec.points_per_axis() / 3) as i64;
    let mut coeffs = product.spectral().to_vec();
    for (flat, value) in coeffs.iter_mut().enumerate() {
        let idx = spec.axis_indices(flat);
        let outside = idx[..spec.dim()]
            .iter()
            .any(|&j| spec.signed_mode(j).abs() > cutoff);
        if outside {
            *value = Complex64::default();
        }
    }
    Field::from_spectral(spec, coeffs)
}

/// Quartic interaction `int (k * |u|^2) |u|^2 dx` by physical quadrature.
pub fn hartree_energy_term(u: &Field, kernel: &RieszKernel) -> Result<f64> {
    let v = kernel.potential(u)?;
    let h = u.spec().cell_volume();
    Ok(h * v
        .iter()
        .zip(u.samples())
        .map(|(&p, s)| p * s.norm_sqr())
        .sum::<f64>())
}

/// Same quantity through Parseval: `sum_j khat(xi_j) |fft(|u|^2)_j|^2`.
pub fn hartree_energy_spectral(u: &Field, kernel: &RieszKernel) -> Result<f64> {
    kernel.check_grid(u)?;
    let density: Vec<Complex64> = u
        .samples()
        .iter()
        .map(|v| Complex64::new(v.norm_sqr(), 0.0))
        .collect();
    let density = Field::from_samples(*kernel.spec(), density)?;
    Ok(density
        .spectral()
        .iter()
        .zip(kernel.symbol())
        .map(|(c, s)| s * c.norm_sqr())
        .sum())
}
