//! Reference solutions used to measure solver errors: the Airy function, the
//! Airy-kernel convolution solving `u_t + U1 u_x + U2 u_xxx = 0` for Gaussian
//! data on the whole line, and the periodic Fourier propagator.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::problem::{InitialCondition, ProblemSpec};

type C64 = Complex64;

/// Largest `|x|` accepted by [`airy`].
pub const AIRY_MAX_ARG: f64 = 100.0;
/// Below this `|x|` the Maclaurin series is summed in double-double.
pub const AIRY_SERIES_CUTOFF: f64 = 8.0;

/// Smallest time for the Airy convolution; the kernel degenerates as `t -> 0`.
pub const EXAMPLE1_T_MIN: f64 = 1e-6;
/// Quadrature levels agree to this (absolute) before a value is accepted.
pub const QUADRATURE_TOL: f64 = 1e-9;
const QUADRATURE_MAX_LEVELS: usize = 14;
/// `exp(-GAUSS_CUTOFF^2) < 1e-16`.
const GAUSS_CUTOFF: f64 = 6.1;

// Ai(0) and -Ai'(0) split into leading double and remainder.
const AI0: Dd = Dd { hi: 0.3550280538878172, lo: 2.05233632436212e-17 };
const AIP0: Dd = Dd { hi: 0.2588194037928068, lo: -2.522243111610832e-17 };

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        Dd::renorm(s.hi, s.lo + self.lo + o.lo)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn mul_f64(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p);
        Dd::renorm(p, e + self.lo * b)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::renorm(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let r = self.add(Dd::from(d).mul_f64(q1).neg());
        Dd::renorm(q1, r.hi / d)
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Airy function `Ai` with a series/asymptotic switchover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryEvaluator {
    pub cutoff: f64,
    /// Absolute accuracy target; also the relative stopping size of series terms.
    pub tol: f64,
}

impl Default for AiryEvaluator {
    fn default() -> Self {
        AiryEvaluator { cutoff: AIRY_SERIES_CUTOFF, tol: 1e-12 }
    }
}

impl AiryEvaluator {
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x.abs() <= AIRY_MAX_ARG) {
            return Err(Error::OutOfRange(x));
        }
        Ok(self.eval_unchecked(x))
    }

    /// No range check; the asymptotic branches stay accurate for any large `|x|`.
    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        if x.abs() <= self.cutoff {
            maclaurin(x)
        } else if x > 0.0 {
            asymptotic_positive(x)
        } else {
            asymptotic_negative(-x)
        }
    }
}

/// `Ai(x)` to `1e-12` absolute for `|x| <= 100`.
pub fn airy(x: f64) -> Result<f64> {
    AiryEvaluator::default().eval(x)
}

/// `Ai(x) = Ai(0) f(x) + Ai'(0) g(x)` with both series summed in double-double,
/// which absorbs the cancellation for large positive `x`.
fn maclaurin(x: f64) -> f64 {
    let x3 = Dd::from(x).mul(Dd::from(x)).mul_f64(x);
    let mut tf = Dd::from(1.0);
    let mut tg = Dd::from(x);
    let mut f = tf;
    let mut g = tg;
    for k in 0..200 {
        let k3 = 3.0 * k as f64;
        tf = tf.mul(x3).div_f64((k3 + 2.0) * (k3 + 3.0));
        tg = tg.mul(x3).div_f64((k3 + 3.0) * (k3 + 4.0));
        f = f.add(tf);
        g = g.add(tg);
        if tf.hi.abs() < 1e-34 * f.hi.abs().max(1.0) && tg.hi.abs() < 1e-34 * g.hi.abs().max(1.0) {
            break;
        }
    }
    AI0.mul(f).add(AIP0.mul(g).neg()).value()
}

/// Coefficients `u_k` of the Airy asymptotic series, up to the smallest term
/// for argument `zeta`.
fn asymptotic_coefficients(zeta: f64) -> Vec<f64> {
    let mut u = vec![1.0];
    let mut prev = 1.0;
    for k in 1..100 {
        let kf = k as f64;
        let next = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let term = next / zeta.powi(k as i32);
        if term.abs() >= prev || term.abs() < 1e-17 {
            break;
        }
        prev = term.abs();
        u.push(next);
    }
    u
}

fn asymptotic_positive(x: f64) -> f64 {
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let u = asymptotic_coefficients(zeta);
    let mut sum = 0.0;
    let mut zk = 1.0;
    for (k, uk) in u.iter().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * uk * zk;
        zk /= zeta;
    }
    (-zeta).exp() / (2.0 * PI.sqrt() * x.powf(0.25)) * sum
}

/// `Ai(-y)` for large positive `y`.
fn asymptotic_negative(y: f64) -> f64 {
    let zeta = 2.0 / 3.0 * y * y.sqrt();
    let u = asymptotic_coefficients(zeta);
    let (mut p, mut q) = (0.0, 0.0);
    let mut zk = 1.0;
    for (k, uk) in u.iter().enumerate() {
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * uk * zk;
        } else {
            q += sign * uk * zk;
        }
        zk /= zeta;
    }
    let phase = zeta + PI / 4.0;
    (phase.sin() * p - phase.cos() * q) / (PI.sqrt() * y.powf(0.25))
}

/// Whole-line solution of `u_t + U1 u_x + U2 u_xxx = 0` with `u(0, x) = exp(-x^2)`:
/// `u(t, x) = int Ai(s) exp(-(x - U1 t - c s)^2) ds` with `c = (3 U2 t)^(1/3)`.
///
/// The trapezoid rule runs on one `s`-grid shared by all `x` (so each Airy
/// value is computed once per level) and is halved until two successive
/// levels agree to [`QUADRATURE_TOL`] at every grid point.
pub fn airy_gaussian_convolution(u1: f64, u2: f64, t: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if !(t >= EXAMPLE1_T_MIN) || !(u2 > 0.0) {
        return Err(Error::invalid(format!("Airy convolution needs t >= {EXAMPLE1_T_MIN} and U2 > 0, got t = {t}, U2 = {u2}")));
    }
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    let shifted: Vec<f64> = grid.iter().map(|x| x - u1 * t).collect();
    let c = (3.0 * u2 * t).cbrt();
    let xmin = shifted.iter().cloned().fold(f64::INFINITY, f64::min);
    let xmax = shifted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s_lo = (xmin - GAUSS_CUTOFF) / c;
    let s_hi = (xmax + GAUSS_CUTOFF) / c;
    let wavelength = 2.0 * PI / s_lo.abs().max(1.0).sqrt();
    let airy = AiryEvaluator::default();

    let mut h = 0.25 * wavelength.min(1.0 / c);
    let mut count = ((s_hi - s_lo) / h).ceil() as usize + 1;
    let mut ai: Vec<f64> = (0..count).into_par_iter().map(|i| airy.eval_unchecked(s_lo + i as f64 * h)).collect();
    let sum = |ai: &[f64], h: f64| -> Vec<f64> {
        shifted
            .par_iter()
            .map(|&x| {
                let lo = (((x - GAUSS_CUTOFF) / c - s_lo) / h).ceil().max(0.0) as usize;
                let hi = ((((x + GAUSS_CUTOFF) / c - s_lo) / h).floor() as usize).min(ai.len() - 1);
                let acc: f64 = (lo..=hi)
                    .map(|i| {
                        let d = x - c * (s_lo + i as f64 * h);
                        ai[i] * (-d * d).exp()
                    })
                    .sum();
                acc * h
            })
            .collect()
    };
    let mut prev = sum(&ai, h);
    let mut last_diff = f64::INFINITY;
    for _ in 0..QUADRATURE_MAX_LEVELS {
        h *= 0.5;
        let mids: Vec<f64> = (0..count - 1).into_par_iter().map(|i| airy.eval_unchecked(s_lo + (2 * i + 1) as f64 * h)).collect();
        let mut refined = Vec::with_capacity(2 * count - 1);
        for i in 0..count - 1 {
            refined.push(ai[i]);
            refined.push(mids[i]);
        }
        refined.push(ai[count - 1]);
        ai = refined;
        count = ai.len();
        let next = sum(&ai, h);
        last_diff = next.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prev = next;
        if last_diff < QUADRATURE_TOL {
            return Ok(prev);
        }
    }
    Err(Error::QuadratureNoConvergence(last_diff))
}

/// Exact solution of `u_t + U1 u_x + U2 u_xxx = 0` for `(b - a)`-periodic data
/// given at the `n` points `a + k (b - a) / n`: each Fourier mode `xi` is
/// multiplied by `exp(-(i U1 xi - i U2 xi^3) t)`.
pub fn periodic_spectral(u1: f64, u2: f64, period: f64, t: f64, samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    if n == 0 || t == 0.0 {
        return samples.to_vec();
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<C64> = samples.iter().map(|&v| C64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let m = if 2 * k < n {
            k as f64
        } else if 2 * k == n {
            // The Nyquist mode has no sign; keep it real.
            0.0
        } else {
            k as f64 - n as f64
        };
        let xi = 2.0 * PI * m / period;
        let phase = -(u1 * xi - u2 * xi * xi * xi) * t;
        *v *= C64::from_polar(1.0 / n as f64, phase);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// Periodic reference on a solver grid of `J + 1` points whose last point
/// repeats the first.
pub fn periodic_on_grid(u1: f64, u2: f64, initial: &InitialCondition, grid: &[f64], t: f64) -> Result<Vec<f64>> {
    if grid.len() < 2 {
        return Err(Error::invalid("periodic reference needs at least two grid points"));
    }
    let period = grid[grid.len() - 1] - grid[0];
    let u0 = initial.sample(grid)?;
    let mut u = periodic_spectral(u1, u2, period, t, &u0[..grid.len() - 1]);
    u.push(u[0]);
    Ok(u)
}

/// Extra periods of padding on each side used by [`whole_line_spectral`].
pub const WHOLE_LINE_PAD: usize = 4;

/// Whole-line solution on a uniform grid of `J + 1` points, computed with the
/// periodic propagator on `[a - pad L, b + pad L]` (`L = b - a`, same spacing)
/// and restricted to the grid. Dispersive tails that leave `[a, b]` would
/// otherwise wrap around into the opposite end.
pub fn whole_line_spectral(u1: f64, u2: f64, initial: &InitialCondition, grid: &[f64], t: f64, pad: usize) -> Result<Vec<f64>> {
    if grid.len() < 2 {
        return Err(Error::invalid("spectral reference needs at least two grid points"));
    }
    if let InitialCondition::Samples(_) = initial {
        return Err(Error::invalid("whole-line reference needs an analytic initial condition"));
    }
    let j = grid.len() - 1;
    let (a, b) = (grid[0], grid[j]);
    let h = (b - a) / j as f64;
    let n = j * (2 * pad + 1);
    let offset = j * pad;
    let u0: Vec<f64> = (0..n).map(|k| initial.eval(a + (k as f64 - offset as f64) * h)).collect();
    let u = periodic_spectral(u1, u2, n as f64 * h, t, &u0);
    let mut out = u[offset..offset + j].to_vec();
    out.push(u[(offset + j) % n]);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    AiryConvolution,
    PeriodicSpectral,
}

/// Reference values on the solver grid at the requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub kind: ReferenceKind,
    pub times: Vec<f64>,
    pub values: Vec<Arc<Vec<f64>>>,
}

/// The reference that matches a problem: the Airy convolution for Gaussian
/// data, the periodic propagator for the wave packet.
pub fn reference_kind(spec: &ProblemSpec) -> Result<ReferenceKind> {
    match spec.initial {
        InitialCondition::Gaussian => Ok(ReferenceKind::AiryConvolution),
        InitialCondition::WavePacket => Ok(ReferenceKind::PeriodicSpectral),
        InitialCondition::Samples(_) => Err(Error::invalid("no reference solution for sampled initial data")),
    }
}

type CacheKey = (u64, u64, u64, u64, u64, u64, usize);

/// Lazily evaluated references, cached per `(problem, time, grid)`.
#[derive(Debug, Default)]
pub struct ReferenceCache {
    entries: Mutex<HashMap<CacheKey, Arc<Vec<f64>>>>,
}

impl ReferenceCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().map(|e| e.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn at(&self, spec: &ProblemSpec, t: f64) -> Result<Arc<Vec<f64>>> {
        let kind = reference_kind(spec)?;
        let key = (
            kind as u64,
            spec.u1.to_bits(),
            spec.u2.to_bits(),
            spec.a.to_bits(),
            spec.b.to_bits(),
            t.to_bits(),
            spec.j,
        );
        if let Some(v) = self.entries.lock().expect("reference cache poisoned").get(&key) {
            return Ok(v.clone());
        }
        let grid = spec.grid();
        let values = Arc::new(if t == 0.0 {
            spec.initial.sample(&grid)?
        } else {
            match kind {
                ReferenceKind::AiryConvolution => airy_gaussian_convolution(spec.u1, spec.u2, t, &grid)?,
                ReferenceKind::PeriodicSpectral => whole_line_spectral(spec.u1, spec.u2, &spec.initial, &grid, t, WHOLE_LINE_PAD)?,
            }
        });
        self.entries.lock().expect("reference cache poisoned").insert(key, values.clone());
        Ok(values)
    }

    pub fn solution(&self, spec: &ProblemSpec, times: &[f64]) -> Result<ReferenceSolution> {
        let values = times.iter().map(|&t| self.at(spec, t)).collect::<Result<Vec<_>>>()?;
        Ok(ReferenceSolution { kind: reference_kind(spec)?, times: times.to_vec(), values })
    }
}

/// Airy-convolution reference for the Gaussian example.
pub fn exact_example1(t: f64, grid: &[f64]) -> Result<Vec<f64>> {
    airy_gaussian_convolution(0.0, 1.0, t, grid)
}

/// Spectral reference for the wave-packet example (`U1 = U2 = 1`).
pub fn exact_example2(t: f64, grid: &[f64]) -> Result<Vec<f64>> {
    whole_line_spectral(1.0, 1.0, &InitialCondition::WavePacket, grid, t, WHOLE_LINE_PAD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Scheme;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn airy_matches_high_precision_values() {
        // 20-digit values from an arbitrary-precision evaluator.
        let cases = [
            (0.0, 0.35502805388781723926),
            (0.5, 0.23169360648083348977),
            (1.0, 0.13529241631288141552),
            (-1.0, 0.5355608832923521188),
            (3.0, 0.0065911393574607191443),
            (-3.0, -0.37881429367765807435),
            (5.0, 0.00010834442813607441735),
            (-5.0, 0.35076100902411431979),
            (7.9, 6.2396400972839341797e-8),
            (8.1, 3.5224356235735714843e-8),
            (-7.9, 0.041701883617386709387),
            (-8.1, -0.14290814709358112018),
            (10.0, 1.1047532552898685934e-10),
            (-10.0, 0.040241238486443190689),
            (20.0, 1.6916728686705403136e-27),
            (-20.0, -0.17640612707798468959),
            (50.0, 4.5849417240748284783e-104),
            (-50.0, -0.16188142361232092392),
            (100.0, 2.6344821520881844896e-291),
            (-100.0, 0.17675339323955287809),
        ];
        for (x, want) in cases {
            let got = airy(x).unwrap();
            assert!((got - want).abs() <= 1e-12, "Ai({x}) = {got}, want {want}");
            if x > 0.0 {
                assert!(((got - want) / want).abs() <= 1e-10, "Ai({x}) relative");
            }
        }
    }

    #[test]
    fn airy_range_checked() {
        assert!(matches!(airy(100.5), Err(Error::OutOfRange(_))));
        assert!(matches!(airy(f64::NAN), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn airy_satisfies_its_ode() {
        let h = 2.5e-3;
        for i in 0..=60 {
            let x = -15.0 + 0.5 * i as f64;
            let f = |k: f64| airy(x + k * h).unwrap();
            let d2 = (-f(2.0) + 16.0 * f(1.0) - 30.0 * f(0.0) + 16.0 * f(-1.0) - f(-2.0)) / (12.0 * h * h);
            assert!((d2 - x * f(0.0)).abs() < 1e-8, "x = {x}: {:e}", d2 - x * f(0.0));
        }
    }

    #[test]
    fn airy_positive_decreasing_then_oscillating() {
        let xs = linspace(0.0, 5.0, 101);
        let v: Vec<f64> = xs.iter().map(|&x| airy(x).unwrap()).collect();
        assert!(v.iter().all(|&a| a > 0.0));
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        let neg: Vec<f64> = linspace(-30.0, -1.0, 2000).iter().map(|&x| airy(x).unwrap()).collect();
        assert!(neg.iter().all(|a| a.abs() < 0.6));
        assert!(neg.windows(2).filter(|w| w[0] * w[1] < 0.0).count() > 10);
    }

    /// Independent oracle: the Fourier integral
    /// `u = 1/(2 pi) int sqrt(pi) exp(-k^2/4) exp(i k^3 t + i k x) dk`
    /// by the trapezoid rule on a fine, wide `k`-grid.
    fn fourier_oracle(t: f64, x: f64) -> f64 {
        let kmax = 13.0;
        let n = 40000;
        let h = 2.0 * kmax / n as f64;
        let s: f64 = (0..=n)
            .map(|i| {
                let k = -kmax + i as f64 * h;
                (-k * k / 4.0).exp() * (k * k * k * t + k * x).cos()
            })
            .sum();
        s * h * PI.sqrt() / (2.0 * PI)
    }

    #[test]
    fn convolution_matches_fourier_oracle() {
        let grid = linspace(-6.0, 6.0, 25);
        for t in [0.3, 1.0, 4.0] {
            let u = exact_example1(t, &grid).unwrap();
            for (x, v) in grid.iter().zip(&u) {
                let want = fourier_oracle(t, *x);
                assert!((v - want).abs() < 1e-9, "t = {t}, x = {x}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn small_time_is_close_to_initial_data() {
        let grid = linspace(-6.0, 6.0, 121);
        let u = exact_example1(1e-4, &grid).unwrap();
        let err = grid.iter().zip(&u).map(|(x, v)| (v - (-x * x).exp()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-2, "{err:e}");
    }

    #[test]
    fn mass_is_conserved() {
        // The left tail decays like exp(x / (12 t)); [-40, 10] holds all of it at t = 0.1.
        let grid = linspace(-40.0, 10.0, 2501);
        let u = exact_example1(0.1, &grid).unwrap();
        let h = grid[1] - grid[0];
        let mass = h * (u.iter().sum::<f64>() - 0.5 * (u[0] + u[u.len() - 1]));
        assert!((mass - PI.sqrt()).abs() < 1e-8, "{:e}", mass - PI.sqrt());
    }

    #[test]
    fn convolution_satisfies_the_pde() {
        let (t, ht, hx) = (1.0, 1e-2, 5e-2);
        let xs = linspace(-4.0, 4.0, 41);
        let at = |t: f64, dx: f64| exact_example1(t, &xs.iter().map(|x| x + dx).collect::<Vec<_>>()).unwrap();
        let (tm2, tm1, tp1, tp2) = (at(t - 2.0 * ht, 0.0), at(t - ht, 0.0), at(t + ht, 0.0), at(t + 2.0 * ht, 0.0));
        let xv: Vec<Vec<f64>> = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0].iter().map(|&k| at(t, k * hx)).collect();
        for i in 0..xs.len() {
            let ut = (tm2[i] - 8.0 * tm1[i] + 8.0 * tp1[i] - tp2[i]) / (12.0 * ht);
            // Fourth-order central third difference.
            let uxxx = (xv[0][i] - 8.0 * xv[1][i] + 13.0 * xv[2][i] - 13.0 * xv[3][i] + 8.0 * xv[4][i] - xv[5][i])
                / (8.0 * hx * hx * hx);
            assert!((ut + uxxx).abs() < 1e-4, "x = {}: {:e}", xs[i], ut + uxxx);
        }
    }

    #[test]
    fn advection_shifts_the_convolution() {
        let grid = linspace(-3.0, 3.0, 13);
        let shifted: Vec<f64> = grid.iter().map(|x| x - 0.7 * 2.0).collect();
        let a = airy_gaussian_convolution(0.7, 1.0, 2.0, &grid).unwrap();
        let b = airy_gaussian_convolution(0.0, 1.0, 2.0, &shifted).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn too_small_time_rejected() {
        assert!(exact_example1(1e-7, &[0.0]).is_err());
    }

    #[test]
    fn spectral_identity_at_zero() {
        let grid = linspace(0.0, 10.0, 501);
        let u = exact_example2(0.0, &grid).unwrap();
        let u0 = InitialCondition::WavePacket.sample(&grid).unwrap();
        for (a, b) in u.iter().zip(&u0) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn single_mode_moves_with_phase_speed() {
        let n = 64;
        let period = 10.0;
        let xi = 2.0 * PI * 3.0 / period;
        let xs: Vec<f64> = (0..n).map(|k| period * k as f64 / n as f64).collect();
        let u0: Vec<f64> = xs.iter().map(|x| (xi * x).sin()).collect();
        let t = 0.37;
        let u = periodic_spectral(1.0, 1.0, period, t, &u0);
        let speed = 1.0 - xi * xi;
        for (x, v) in xs.iter().zip(&u) {
            assert!((v - (xi * (x - speed * t)).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_preserves_mode_magnitudes() {
        let n = 500;
        let u0: Vec<f64> = (0..n).map(|k| (-((k as f64 - 200.0) / 30.0).powi(2)).exp()).collect();
        let u = periodic_spectral(1.0, 1.0, 10.0, 0.01, &u0);
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(n);
        let mut a: Vec<C64> = u0.iter().map(|&v| C64::new(v, 0.0)).collect();
        let mut b: Vec<C64> = u.iter().map(|&v| C64::new(v, 0.0)).collect();
        fft.process(&mut a);
        fft.process(&mut b);
        for (p, q) in a.iter().zip(&b) {
            assert!((p.norm() - q.norm()).abs() < 1e-12 * n as f64);
        }
    }

    #[test]
    fn wave_packet_reference_is_resolution_independent() {
        let t = 4.8e-4;
        let fine = exact_example2(t, &linspace(0.0, 10.0, 100_001)).unwrap();
        let coarse = exact_example2(t, &linspace(0.0, 10.0, 50_001)).unwrap();
        let d = coarse.iter().enumerate().map(|(i, v)| (v - fine[2 * i]).abs()).fold(0.0, f64::max);
        assert!(d < 1e-10, "{d:e}");
    }

    #[test]
    fn wave_packet_wraparound() {
        // The fastest components of the packet reach x = 0 at the 1e-5 level by
        // the final time: the plain periodic propagator on [0, 10] wraps them
        // into x = 10, the padded one does not.
        let t = 4.8e-4;
        let grid = linspace(0.0, 10.0, 5001);
        let periodic = periodic_on_grid(1.0, 1.0, &InitialCondition::WavePacket, &grid, t).unwrap();
        let padded = exact_example2(t, &grid).unwrap();
        let wider = whole_line_spectral(1.0, 1.0, &InitialCondition::WavePacket, &grid, t, 8).unwrap();
        let diff = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff(&padded, &wider) < 1e-12, "{:e}", diff(&padded, &wider));
        let wrap = diff(&periodic, &padded);
        assert!(wrap > 1e-6 && wrap < 1e-4, "{wrap:e}");
        assert!(padded[0].abs() > 1e-6 && padded[5000].abs() < 1e-12);
    }

    #[test]
    fn cache_reuses_values() {
        let spec = ProblemSpec { t_final: 1.0, ..ProblemSpec::example1(Scheme::Rcn, 100, 10) };
        let cache = ReferenceCache::new();
        let a = cache.at(&spec, 1.0).unwrap();
        let b = cache.at(&spec, 1.0).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
        let s = cache.solution(&spec, &[0.0, 1.0]).unwrap();
        assert_eq!(s.kind, ReferenceKind::AiryConvolution);
        assert_eq!(cache.len(), 2);
    }
}
