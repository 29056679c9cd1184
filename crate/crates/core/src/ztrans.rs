//! Numerical inverse Z-transform on a circle `|z| = r` via the FFT.
//!
//! With `z_k = r exp(2 pi i k / Nz)` and `U_k = U(z_k)`, the coefficients are
//! `u_n = r^n / Nz * sum_k U_k exp(2 pi i k n / Nz)`. Round-off in the FFT is
//! amplified by `r^n`, aliasing from the tail contributes `O(r^(n - Nz))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

type C64 = Complex64;

/// Relative tolerance on the imaginary residue of a sequence declared real.
pub const REAL_TOL: f64 = 1e-8;

/// Target for the fold-back weight `r^-Nz` of the default node count.
pub const ALIAS_WEIGHT: f64 = 1e-10;

/// Default node count for `n_steps` time steps on the circle of radius `radius`:
/// the smallest power of two that is at least `2 (n_steps + 2)` and makes
/// `r^-Nz <= ALIAS_WEIGHT`. Kernel sequences contain slowly decaying
/// alternating components, so the fold-back weight matters as much as the
/// window length.
pub fn default_nodes(n_steps: usize, radius: f64) -> usize {
    let alias = (-ALIAS_WEIGHT.ln() / radius.ln()).ceil();
    let alias = if alias.is_finite() && alias < (1u64 << 40) as f64 { alias as usize } else { 1 << 40 };
    (2 * (n_steps + 2)).max(alias).next_power_of_two()
}

/// The node `z_k = r exp(2 pi i k / nz)`.
pub fn node(radius: f64, k: usize, nz: usize) -> C64 {
    C64::from_polar(radius, 2.0 * PI * k as f64 / nz as f64)
}

/// Samples of a Z-domain function on the circle of radius `radius`.
#[derive(Debug, Clone)]
pub struct CircleSamples {
    pub radius: f64,
    pub values: Vec<C64>,
}

impl CircleSamples {
    pub fn from_fn(radius: f64, nz: usize, f: impl Fn(C64) -> C64) -> Self {
        let values = (0..nz).map(|k| f(node(radius, k, nz))).collect();
        CircleSamples { radius, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest violation of `U_{Nz-k} = conj(U_k)`, relative to `max |U|`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let n = self.values.len();
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        (1..n)
            .map(|k| (self.values[n - k] - self.values[k].conj()).norm())
            .fold((self.values[0].im).abs(), f64::max)
            / scale
    }
}

/// Time-domain coefficients `u_0, u_1, ...` recovered from circle samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSequence {
    pub coeffs: Vec<C64>,
    pub radius: f64,
    /// Imaginary parts were checked negligible and zeroed.
    pub real: bool,
}

impl CoefficientSequence {
    pub fn re(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.re).collect()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Inverts circle samples. When `real` is set, an imaginary residue above
/// `REAL_TOL * max |u|` is reported as [`Error::NonRealResult`] and otherwise
/// discarded.
pub fn inverse_ztransform(samples: &CircleSamples, real: bool) -> Result<CoefficientSequence> {
    inverse_ztransform_head(samples, real, samples.len())
}

/// Like [`inverse_ztransform`] but keeps (and checks) only the first `keep`
/// coefficients. The top of the window carries round-off amplified by `r^n`
/// and is useless for large `Nz`.
pub fn inverse_ztransform_head(samples: &CircleSamples, real: bool, keep: usize) -> Result<CoefficientSequence> {
    let nz = samples.len();
    if nz < 2 || !nz.is_power_of_two() {
        return Err(Error::invalid(format!("Nz = {nz} is not a power of two >= 2")));
    }
    let mut buf = samples.values.clone();
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(nz);
    fft.process(&mut buf);
    buf.truncate(keep.min(nz));
    let inv = 1.0 / nz as f64;
    let mut scale = inv;
    for v in buf.iter_mut() {
        *v *= scale;
        scale *= samples.radius;
    }
    if real {
        let max_abs = buf.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let residue = buf.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        if residue > REAL_TOL * max_abs {
            return Err(Error::NonRealResult { residue, scale: max_abs });
        }
        for v in buf.iter_mut() {
            v.im = 0.0;
        }
    }
    Ok(CoefficientSequence { coeffs: buf, radius: samples.radius, real })
}

/// `sum_k u_k z^(-k)` for a finite sequence.
pub fn forward_ztransform_finite(coeffs: &[f64], z: C64) -> C64 {
    let w = 1.0 / z;
    coeffs
        .iter()
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, &u| acc * w + u)
}
