//! Sum-of-exponentials compression of convolution coefficients via Padé
//! approximation, and the O(L)-per-step recurrence that evaluates the
//! compressed convolution.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{companion_roots, horner};

type C64 = Complex64;

pub const DEFAULT_TERMS: usize = 20;
pub const DEFAULT_HEAD: usize = 2;

const MAX_CONDITION: f64 = 1e14;
const DISK_MARGIN: f64 = 1e-12;
const REPEAT_TOL: f64 = 1e-10;

/// `X(n) ~ sum_l b_l q_l^(-n)` for `n >= nu`, exact head values below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoeKernel {
    pub head: Vec<f64>,
    pub poles: Vec<C64>,
    pub weights: Vec<C64>,
}

impl SoeKernel {
    pub fn nu(&self) -> usize {
        self.head.len()
    }

    pub fn terms(&self) -> usize {
        self.poles.len()
    }
}

/// Least-singular-value based condition number of a square matrix.
fn condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Pairs each complex pole with its nearest conjugate and replaces both by
/// their average, so that the reconstruction is real by construction.
fn symmetrize(poles: &mut [C64]) {
    let scale = poles.iter().fold(0.0f64, |m, q| m.max(q.norm()));
    let mut done = vec![false; poles.len()];
    for i in 0..poles.len() {
        if done[i] {
            continue;
        }
        done[i] = true;
        let qi = poles[i];
        if qi.im.abs() <= 1e-13 * scale {
            poles[i].im = 0.0;
            continue;
        }
        let partner = (0..poles.len())
            .filter(|&j| !done[j])
            .min_by(|&a, &b| {
                let da = (poles[a] - qi.conj()).norm();
                let db = (poles[b] - qi.conj()).norm();
                da.partial_cmp(&db).unwrap()
            });
        if let Some(j) = partner {
            let avg = (qi + poles[j].conj()) / 2.0;
            poles[i] = avg;
            poles[j] = avg.conj();
            done[j] = true;
        }
    }
}

/// One Padé fit with exactly `l` terms.
fn fit_once(seq: &[f64], l: usize, nu: usize) -> Result<SoeKernel> {
    let s = &seq[nu..nu + 2 * l];
    let norm = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if norm == 0.0 {
        return Err(Error::PadeSingular { condition: f64::INFINITY });
    }
    let s: Vec<f64> = s.iter().map(|v| v / norm).collect();
    // sum_{j=1}^{L} Q_j s_{k-j} = -s_k for k = L .. 2L-1.
    let a = DMatrix::from_fn(l, l, |row, col| s[row + l - (col + 1)]);
    let rhs = DVector::from_fn(l, |row, _| -s[row + l]);
    let cond = condition(&a);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::PadeSingular { condition: cond });
    }
    let qcoef = a
        .full_piv_lu()
        .solve(&rhs)
        .ok_or(Error::PadeSingular { condition: cond })?;
    let mut q = vec![C64::new(1.0, 0.0)];
    q.extend(qcoef.iter().map(|&v| C64::new(v, 0.0)));
    // P_k = sum_{j=0}^{k} Q_j s_{k-j}, k < L.
    let p: Vec<C64> = (0..l)
        .map(|k| {
            let v: f64 = (0..=k).map(|j| q[j].re * s[k - j]).sum();
            C64::new(v * norm, 0.0)
        })
        .collect();
    let mut poles = companion_roots(&q)?;
    symmetrize(&mut poles);
    for i in 0..poles.len() {
        if poles[i].norm() <= 1.0 + DISK_MARGIN {
            return Err(Error::PoleInsideDisk { modulus: poles[i].norm() });
        }
        for j in i + 1..poles.len() {
            let sep = (poles[i] - poles[j]).norm();
            if sep < REPEAT_TOL * poles[i].norm() {
                return Err(Error::RepeatedPole { separation: sep });
            }
        }
    }
    // g(x) = P/Q = sum_l c_l / (x - q_l), c_l = P(q_l)/Q'(q_l), hence
    // X(n) = s_{n-nu} = sum_l -c_l q_l^(nu - 1) q_l^(-n).
    let weights = poles
        .iter()
        .map(|&pole| {
            let (pv, _) = horner(&p, pole);
            let (_, dq) = horner(&q, pole);
            -pv / dq * pole.powi(nu as i32 - 1)
        })
        .collect();
    Ok(SoeKernel { head: seq[..nu].to_vec(), poles, weights })
}

/// Fits `L` exponentials to `seq[nu..]` through the `[L-1|L]` Padé approximant
/// of `sum_k seq[nu + k] x^k`. A pole inside the closed unit disk triggers a
/// retry with one term less, down to a single term.
pub fn fit_soe(seq: &[f64], l: usize, nu: usize) -> Result<SoeKernel> {
    if l == 0 || nu == 0 {
        return Err(Error::invalid("SOE fit needs L >= 1 and nu >= 1"));
    }
    if seq.len() < 2 * l + nu {
        return Err(Error::invalid(format!(
            "SOE fit with L = {l}, nu = {nu} needs {} coefficients, got {}",
            2 * l + nu,
            seq.len()
        )));
    }
    let mut terms = l;
    loop {
        match fit_once(seq, terms, nu) {
            Err(Error::PoleInsideDisk { modulus }) if terms > 1 => {
                log::warn!("Pade fit with L = {terms} has a pole of modulus {modulus}; retrying with L = {}", terms - 1);
                terms -= 1;
            }
            other => return other,
        }
    }
}

/// `X~(n)`: head value for `n < nu`, exponential sum otherwise.
pub fn soe_eval(kernel: &SoeKernel, n: usize) -> f64 {
    if n < kernel.nu() {
        return kernel.head[n];
    }
    kernel
        .poles
        .iter()
        .zip(&kernel.weights)
        .map(|(&q, &b)| b * q.powf(-(n as f64)))
        .sum::<C64>()
        .re
}

/// Running per-pole sums `C_l(n) = b_l sum_{k=nu}^{n} q_l^(-k) x(n-k)`, so
/// that `sum_l C_l(n)` is the convolution of `x` with the exponential part.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionAccumulator {
    pub channels: Vec<C64>,
    /// Index `n` of the last completed update; starts at `nu - 1` (empty sum).
    pub step: usize,
}

impl ConvolutionAccumulator {
    pub fn new(kernel: &SoeKernel) -> Self {
        ConvolutionAccumulator {
            channels: vec![C64::new(0.0, 0.0); kernel.terms()],
            step: kernel.nu().saturating_sub(1),
        }
    }

    /// Advances from `n - 1` to `n` using `x(n - nu)`:
    /// `C_l(n) = q_l^(-1) C_l(n-1) + b_l q_l^(-nu) x(n - nu)`.
    pub fn accumulate(&mut self, kernel: &SoeKernel, x_lagged: f64) {
        let nu = kernel.nu() as i32;
        for ((c, &q), &b) in self.channels.iter_mut().zip(&kernel.poles).zip(&kernel.weights) {
            let qi = 1.0 / q;
            *c = qi * *c + b * qi.powi(nu) * x_lagged;
        }
        self.step += 1;
    }

    pub fn value(&self) -> f64 {
        self.channels.iter().sum::<C64>().re
    }
}

/// Boundary history term at level `m` of the midpoint formulation,
/// `sum_{k=nu}^{m} X~(k) w(m-k)` with `w(0) = u0 / 2` and `w(j) = v(j - 1/2)`.
///
/// `acc` runs over the midpoint values only (`x(j) = v(j + 1/2)`) and must be
/// at step `m - 1`; the initial-data term `X~(m) u0 / 2` is added here.
pub fn midpoint_convolution_terms(acc: &ConvolutionAccumulator, kernel: &SoeKernel, u0: f64, m: usize) -> f64 {
    if m < kernel.nu() {
        return 0.0;
    }
    debug_assert_eq!(acc.step + 1, m);
    acc.value() + soe_eval(kernel, m) * 0.5 * u0
}
