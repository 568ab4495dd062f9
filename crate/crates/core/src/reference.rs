//! Slow direct-evaluation references used by the test suite.
//!
//! These deliberately avoid the spectral code paths: the periodized Riesz
//! kernel is accumulated image by image in physical space and convolved with
//! an O(N^2) double loop, so they can serve as ground truth for the
//! FFT/symbol implementation (including its normalization constant).
//!
//! Only the one-dimensional case is provided; that is where the closed-form
//! cell integrals of `|x|^{-lambda}` are available and where the acceptance
//! checks run.

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Antiderivative of `|s|^{-lambda}` valid across the singularity for
/// `lambda < 1`: `F(s) = sign(s) |s|^{1-lambda} / (1 - lambda)`.
fn kernel_antiderivative(s: f64, lambda: f64) -> f64 {
    s.signum() * s.abs().powf(1.0 - lambda) / (1.0 - lambda)
}

/// Cell-averaged periodized kernel at every grid offset (1-D):
///
/// ```text
/// Kbar[d] = (1/h) int_{y_d - h/2}^{y_d + h/2} sum_{|m| <= images} |s + 2Lm|^{-lambda} ds
/// ```
///
/// minus its grid mean, so convolution against it has no zero-mode content
/// (matching the spectral convention). Image pairs `+-m` are summed together;
/// their joint variation decays like `m^{-lambda-2}`, so the truncated tail
/// is far below the comparison tolerances used in tests.
pub fn periodized_riesz_kernel_1d(spec: &GridSpec, lambda: f64, images: usize) -> Result<Vec<f64>> {
    if spec.dim() != 1 {
        return Err(Error::InvalidGrid("reference kernel is one-dimensional".into()));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::param("lambda", "reference path needs 0 < lambda < 1"));
    }
    let n = spec.points_per_axis();
    let l = spec.half_length();
    let h = spec.spacing();
    let cell = |center: f64| {
        (kernel_antiderivative(center + 0.5 * h, lambda)
            - kernel_antiderivative(center - 0.5 * h, lambda))
            / h
    };
    let mut kernel = vec![0.0f64; n];
    for (d, value) in kernel.iter_mut().enumerate() {
        // Canonical offset in [-L, L).
        let y = if d <= n / 2 { d as f64 * h } else { d as f64 * h - 2.0 * l };
        let mut sum = cell(y);
        for m in 1..=images {
            let shift = 2.0 * l * m as f64;
            sum += cell(y + shift) + cell(y - shift);
        }
        *value = sum;
    }
    let mean = kernel.iter().sum::<f64>() / n as f64;
    for value in kernel.iter_mut() {
        *value -= mean;
    }
    Ok(kernel)
}

/// O(N^2) circular convolution `V(x_i) = h sum_j Kbar[(i - j) mod N] g(x_j)`
/// with the mean-removed kernel above.
pub fn direct_riesz_potential_1d(
    spec: &GridSpec,
    lambda: f64,
    images: usize,
    density: &[f64],
) -> Result<Vec<f64>> {
    let n = spec.points_per_axis();
    if density.len() != n {
        return Err(Error::GridMismatch(format!(
            "density length {} vs {} grid points",
            density.len(),
            n
        )));
    }
    let kernel = periodized_riesz_kernel_1d(spec, lambda, images)?;
    let h = spec.spacing();
    let mut potential = vec![0.0f64; n];
    for (i, out) in potential.iter_mut().enumerate() {
        let mut sum = 0.0;
        for (j, g) in density.iter().enumerate() {
            let d = (i + n - j) % n;
            sum += kernel[d] * g;
        }
        *out = h * sum;
    }
    Ok(potential)
}
