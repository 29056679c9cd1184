//! Roots of the characteristic polynomials and their continuity tracking
//! along the inversion circle.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::{CharacteristicParams, Scheme};

type C64 = Complex64;

const ZETA_FLOOR: f64 = 1e-14;
const UNIT_CIRCLE_GAP: f64 = 1e-12;
const AMBIGUITY_TOL: f64 = 1e-12;
/// A step is trusted when no root moves more than this fraction of the
/// distance to its nearest neighbour; otherwise the angle step is halved.
const SAFE_MOVE: f64 = 0.25;
const MIN_ANGLE_STEP: f64 = 1e-10;

/// Cube roots of unity `1, w, w^2` with `w = exp(2 pi i / 3)`.
fn unity_roots() -> [C64; 3] {
    [
        C64::new(1.0, 0.0),
        C64::from_polar(1.0, 2.0 * PI / 3.0),
        C64::from_polar(1.0, 4.0 * PI / 3.0),
    ]
}

/// Evaluates a polynomial given by ascending coefficients, returning `(P(x), P'(x))`.
pub fn horner(coeffs: &[C64], x: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// Cardano root `zeta` of the depressed cubic `y^3 + P y + Q = 0`, with the
/// square-root sign chosen so that `zeta^3 = -Q/2 +- sqrt(Q^2/4 + P^3/27)` does
/// not cancel.
fn cardano_zeta(pc: C64, qc: C64) -> C64 {
    let disc = (qc * qc / 4.0 + pc * pc * pc / 27.0).sqrt();
    let plus = -qc / 2.0 + disc;
    let minus = -qc / 2.0 - disc;
    let cube = if plus.norm() >= minus.norm() { plus } else { minus };
    cube.powf(1.0 / 3.0)
}

/// The three roots `omega^k zeta - (P/3) / (omega^k zeta)` of `y^3 + P y + Q = 0`.
fn depressed_cubic(pc: C64, qc: C64) -> Result<([C64; 3], C64)> {
    let zeta = cardano_zeta(pc, qc);
    if zeta.norm() < ZETA_FLOOR {
        return Err(Error::DegenerateRoot(format!(
            "|zeta| = {:e} at a branch point",
            zeta.norm()
        )));
    }
    let w = unity_roots();
    let mut y = [C64::new(0.0, 0.0); 3];
    for k in 0..3 {
        let t = w[k] * zeta;
        y[k] = t - pc / (3.0 * t);
    }
    Ok((y, zeta))
}

fn newton_polish(coeffs: &[C64], mut x: C64, iters: usize) -> C64 {
    for _ in 0..iters {
        let (p, dp) = horner(coeffs, x);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        x -= step;
        if step.norm() <= 1e-17 * x.norm().max(1e-300) {
            break;
        }
    }
    x
}

/// Simultaneous Aberth–Ehrlich refinement of all roots of a monic-or-not
/// polynomial (ascending coefficients). Converges cubically for simple roots.
pub fn aberth_polish(coeffs: &[C64], roots: &mut [C64], max_iter: usize) {
    let n = roots.len();
    for _ in 0..max_iter {
        let mut moved = 0.0f64;
        for k in 0..n {
            let (p, dp) = horner(coeffs, roots[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut sum = C64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    sum += 1.0 / (roots[k] - roots[j]);
                }
            }
            let denom = C64::new(1.0, 0.0) - ratio * sum;
            let step = if denom.norm() > 0.0 { ratio / denom } else { ratio };
            if step.is_finite() {
                roots[k] -= step;
                moved = moved.max(step.norm() / roots[k].norm().max(1e-300));
            }
        }
        if moved < 1e-16 {
            break;
        }
    }
}

/// Eigenvalues of the companion matrix of a polynomial with ascending
/// coefficients `c_0 + c_1 x + ... + c_d x^d` (`c_d != 0`), refined by a few
/// Aberth sweeps.
pub fn companion_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let d = coeffs.len().saturating_sub(1);
    if d == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[d];
    if lead.norm() == 0.0 {
        return Err(Error::invalid("leading polynomial coefficient is zero"));
    }
    let mut m = DMatrix::<C64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..d {
        m[(i, d - 1)] = -coeffs[i] / lead;
    }
    let mut roots: Vec<C64> = match Schur::try_new(m, 1e-15, 100_000).and_then(|s| s.eigenvalues()) {
        Some(ev) => ev.iter().copied().collect(),
        None => {
            // Fall back to a circle start; Aberth converges from there as well.
            let scale = coeffs[0].norm().powf(1.0 / d as f64).max(1e-3) / lead.norm().powf(1.0 / d as f64);
            (0..d)
                .map(|k| C64::from_polar(scale, 2.0 * PI * (k as f64 + 0.25) / d as f64))
                .collect()
        }
    };
    aberth_polish(coeffs, &mut roots, 60);
    if roots.iter().any(|r| !r.is_finite()) {
        return Err(Error::DegenerateRoot("non-finite companion eigenvalue".into()));
    }
    Ok(roots)
}

/// Roots of the continuous characteristic equation `s + U1 lambda + U2 lambda^3 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousCubicRoots {
    pub s: C64,
    /// `lambda[0]` has negative real part, the other two positive.
    pub lambda: [C64; 3],
    pub zeta: C64,
}

pub fn solve_continuous_cubic(u1: f64, u2: f64, s: C64) -> Result<ContinuousCubicRoots> {
    if !(u2 > 0.0) || !(s.re > 0.0) {
        return Err(Error::invalid("continuous roots need U2 > 0 and Re(s) > 0"));
    }
    let pc = C64::new(u1 / u2, 0.0);
    let qc = s / u2;
    let (mut lambda, zeta) = depressed_cubic(pc, qc)?;
    let coeffs = [s, C64::new(u1, 0.0), C64::new(0.0, 0.0), C64::new(u2, 0.0)];
    for l in lambda.iter_mut() {
        *l = newton_polish(&coeffs, *l, 3);
    }
    let negatives = lambda.iter().filter(|l| l.re < 0.0).count();
    if negatives != 1 || lambda.iter().any(|l| l.re == 0.0) {
        return Err(Error::NonSeparated(format!(
            "{negatives} roots with negative real part at s = {s}"
        )));
    }
    lambda.sort_by(|x, y| {
        let kx = (x.re >= 0.0, x.im);
        let ky = (y.re >= 0.0, y.im);
        kx.partial_cmp(&ky).unwrap()
    });
    Ok(ContinuousCubicRoots { s, lambda, zeta })
}

/// Roots of `r^3 - 3 r^2 + (3 + p) r - 1 = 0` in the principal-branch order
/// `r_k = omega^k zeta - (p/3)/(omega^k zeta) + 1`.
pub fn solve_discrete_cubic(p: C64) -> Result<[C64; 3]> {
    if !p.is_finite() || p.re <= 0.0 {
        if p.norm() == 0.0 {
            return Err(Error::DegenerateRoot("p = 0 gives the triple root 1".into()));
        }
        return Err(Error::invalid(format!("discrete cubic needs Re(p) > 0, got {p}")));
    }
    // Shifted variable y = r - 1 turns the cubic into y^3 + p y + p = 0, which
    // keeps full relative accuracy when p is small and the roots cluster at 1.
    let (mut y, _) = depressed_cubic(p, p)?;
    let shifted = [p, p, C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    for v in y.iter_mut() {
        *v = newton_polish(&shifted, *v, 3);
    }
    Ok([y[0] + 1.0, y[1] + 1.0, y[2] + 1.0])
}

/// Ascending coefficients of the quartic in the shifted variable `y = l - 1`.
fn shifted_quartic(p: C64, a: f64) -> [C64; 5] {
    let a = C64::new(a, 0.0);
    [
        2.0 * p,
        2.0 * a + 4.0 * p,
        3.0 * a + 2.0 * p,
        2.0 + a,
        C64::new(1.0, 0.0),
    ]
}

/// Ascending coefficients of `l^4 - (2 - a) l^3 + 2 p l^2 + (2 - a) l - 1`.
pub fn quartic_coeffs(p: C64, a: f64) -> [C64; 5] {
    let b = C64::new(2.0 - a, 0.0);
    [C64::new(-1.0, 0.0), b, 2.0 * p, -b, C64::new(1.0, 0.0)]
}

/// Roots of the discrete quartic, computed on the companion matrix of the
/// shifted polynomial and refined in place.
pub fn solve_discrete_quartic(p: C64, a_coef: f64) -> Result<[C64; 4]> {
    if !p.is_finite() || p.re <= 0.0 || !a_coef.is_finite() {
        return Err(Error::invalid(format!("discrete quartic needs Re(p) > 0, got {p}")));
    }
    let shifted = shifted_quartic(p, a_coef);
    let y = companion_roots(&shifted)?;
    let roots = [y[0] + 1.0, y[1] + 1.0, y[2] + 1.0, y[3] + 1.0];
    let scale = roots.iter().fold(1.0f64, |m, r| m.max(r.norm()));
    for i in 0..4 {
        for j in i + 1..4 {
            if (roots[i] - roots[j]).norm() < 1e-12 * scale {
                return Err(Error::DegenerateRoot(format!(
                    "repeated quartic root near {} (p = {p}, a = {a_coef})",
                    roots[i]
                )));
            }
        }
    }
    Ok(roots)
}

/// Ferrari's closed-form solution of the same quartic. Kept as an independent
/// cross-check of [`solve_discrete_quartic`].
pub fn ferrari_quartic(p: C64, a_coef: f64) -> [C64; 4] {
    // Monic y^4 + b y^3 + c y^2 + d y + e, depressed by y = t - b/4.
    let [e, d, c, b, _] = shifted_quartic(p, a_coef);
    let pp = c - 3.0 * b * b / 8.0;
    let qq = d - b * c / 2.0 + b * b * b / 8.0;
    let rr = e - b * d / 4.0 + b * b * c / 16.0 - 3.0 * b.powi(4) / 256.0;
    // Resolvent cubic m^3 + pp m^2 + (pp^2/4 - rr) m - qq^2/8 = 0.
    let r2 = pp;
    let r1 = pp * pp / 4.0 - rr;
    let r0 = -qq * qq / 8.0;
    let dp = r1 - r2 * r2 / 3.0;
    let dq = 2.0 * r2 * r2 * r2 / 27.0 - r2 * r1 / 3.0 + r0;
    let zeta = cardano_zeta(dp, dq);
    let m = if zeta.norm() > 0.0 {
        zeta - dp / (3.0 * zeta) - r2 / 3.0
    } else {
        -r2 / 3.0
    };
    let s = (2.0 * m).sqrt();
    let shift = -b / 4.0;
    let mut out = [C64::new(0.0, 0.0); 4];
    if s.norm() < 1e-300 {
        // Biquadratic: t^4 + pp t^2 + rr = 0.
        let disc = (pp * pp - 4.0 * rr).sqrt();
        let t1 = ((-pp + disc) / 2.0).sqrt();
        let t2 = ((-pp - disc) / 2.0).sqrt();
        out = [t1, -t1, t2, -t2];
    } else {
        let h = qq / (2.0 * s);
        let d1 = (s * s - 4.0 * (m + pp / 2.0 - h)).sqrt();
        let d2 = (s * s - 4.0 * (m + pp / 2.0 + h)).sqrt();
        out[0] = (-s + d1) / 2.0;
        out[1] = (-s - d1) / 2.0;
        out[2] = (s + d2) / 2.0;
        out[3] = (s - d2) / 2.0;
    }
    out.map(|t| t + shift + 1.0)
}

/// `p(z) = mu (z - 1) / (z + 1)`.
pub fn p_of_z(mu: f64, z: C64) -> C64 {
    mu * (z - 1.0) / (z + 1.0)
}

/// Characteristic roots at a single point `z`, without any ordering.
pub fn characteristic_roots(params: &CharacteristicParams, z: C64) -> Result<Vec<C64>> {
    let p = p_of_z(params.mu, z);
    match params.scheme {
        Scheme::Rcn => solve_discrete_cubic(p).map(|r| r.to_vec()),
        Scheme::Ccn => solve_discrete_quartic(p, params.a_coef).map(|r| r.to_vec()),
    }
}

/// Orders roots as: inside the unit disk by ascending modulus, then outside by
/// ascending modulus; ties broken by ascending argument.
pub fn seed_order(roots: &mut [C64]) {
    roots.sort_by(|x, y| {
        let kx = (x.norm() >= 1.0, x.norm(), x.arg());
        let ky = (y.norm() >= 1.0, y.norm(), y.arg());
        kx.partial_cmp(&ky).unwrap()
    });
}

/// Characteristic roots at one point, classified by [`seed_order`] and checked
/// against the separation property.
pub fn separated_roots(params: &CharacteristicParams, z: C64) -> Result<Vec<C64>> {
    let mut roots = characteristic_roots(params, z)?;
    seed_order(&mut roots);
    check_separation(params.scheme, &roots, 0)?;
    Ok(roots)
}

fn check_separation(scheme: Scheme, roots: &[C64], index: usize) -> Result<()> {
    let expected = scheme.inside_count();
    let mut inside = 0;
    for r in roots {
        let m = r.norm();
        if (m - 1.0).abs() <= UNIT_CIRCLE_GAP {
            return Err(Error::SeparationViolation { index, inside: usize::MAX, expected });
        }
        if m < 1.0 {
            inside += 1;
        }
    }
    if inside != expected {
        return Err(Error::SeparationViolation { index, inside, expected });
    }
    Ok(())
}

/// All permutations of `0..d` for `d <= 4`.
fn permutations(d: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            prefix.push(v);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..d).collect(), &mut out);
    out
}

/// Permutation `perm` minimizing `sum_k |next[perm[k]] - prev[k]|^2`, so that
/// column `k` continues with `next[perm[k]]`.
fn best_match(prev: &[C64], next: &[C64], perms: &[Vec<usize>], index: usize) -> Result<Vec<usize>> {
    let mut costs: Vec<(f64, usize)> = perms
        .iter()
        .enumerate()
        .map(|(i, perm)| {
            let c = perm
                .iter()
                .enumerate()
                .map(|(k, &j)| (next[j] - prev[k]).norm_sqr())
                .sum::<f64>();
            (c, i)
        })
        .collect();
    costs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    if costs.len() > 1 && costs[1].0 - costs[0].0 <= AMBIGUITY_TOL {
        return Err(Error::TrackingAmbiguity { index });
    }
    Ok(perms[costs[0].1].clone())
}

/// Distance from `roots[k]` to its nearest neighbour.
fn spacing(roots: &[C64], k: usize) -> f64 {
    roots
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, r)| (r - roots[k]).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Continues the ordered roots `prev` at angle `t0` to the unordered roots
/// `next` at `t1`, marching with adaptive angle steps so that no root moves
/// more than [`SAFE_MOVE`] times its distance to the nearest other root.
fn follow(params: &CharacteristicParams, prev: &[C64], t0: f64, next: &[C64], t1: f64, perms: &[Vec<usize>], index: usize) -> Result<Vec<C64>> {
    let mut cur = prev.to_vec();
    let (mut t, mut h) = (t0, t1 - t0);
    loop {
        let last = t + h >= t1;
        let target = if last { t1 } else { t + h };
        let raw = if last { next.to_vec() } else { characteristic_roots(params, C64::from_polar(params.radius, target))? };
        let perm = best_match(&cur, &raw, perms, index)?;
        let row: Vec<C64> = perm.iter().map(|&j| raw[j]).collect();
        let safe = (0..cur.len()).all(|k| (row[k] - cur[k]).norm() <= SAFE_MOVE * spacing(&cur, k));
        if safe || h <= MIN_ANGLE_STEP {
            if last {
                return Ok(row);
            }
            cur = row;
            t = target;
            h *= 2.0;
        } else {
            h *= 0.5;
        }
    }
}

/// Continuity-ordered characteristic roots on the circle `|z| = r`.
#[derive(Debug, Clone)]
pub struct DiscreteRootTrack {
    pub scheme: Scheme,
    pub radius: f64,
    pub mu: f64,
    pub a_coef: f64,
    pub theta: Vec<f64>,
    pub p_values: Vec<C64>,
    /// `roots[i][k]` is root `k` at angle `theta[i]`; columns `0..m` are inside
    /// the unit disk, `m = scheme.inside_count()`.
    pub roots: Vec<Vec<C64>>,
    /// Column permutation closing the loop: column `k` at the last angle continues
    /// into column `monodromy[k]` at `theta = 0`.
    pub monodromy: Vec<usize>,
}

impl DiscreteRootTrack {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn inside(&self, i: usize) -> &[C64] {
        &self.roots[i][..self.scheme.inside_count()]
    }

    pub fn outside(&self, i: usize) -> &[C64] {
        &self.roots[i][self.scheme.inside_count()..]
    }
}

/// Solves the characteristic polynomial at `z_i = r exp(2 pi i / nz)` and orders
/// the roots continuously in the angle.
pub fn track_roots(params: &CharacteristicParams, nz: usize) -> Result<DiscreteRootTrack> {
    if nz < 2 || nz % 2 != 0 {
        return Err(Error::invalid("Nz must be even and at least 2"));
    }
    if !(params.radius > 1.0) {
        return Err(Error::invalid("inversion radius must exceed 1"));
    }
    let theta: Vec<f64> = (0..nz).map(|i| 2.0 * PI * i as f64 / nz as f64).collect();
    let p_values: Vec<C64> = theta
        .iter()
        .map(|&t| p_of_z(params.mu, C64::from_polar(params.radius, t)))
        .collect();
    let raw: Vec<Vec<C64>> = theta
        .par_iter()
        .map(|&t| characteristic_roots(params, C64::from_polar(params.radius, t)))
        .collect::<Result<_>>()?;

    let d = params.scheme.degree();
    let m = params.scheme.inside_count();
    let perms = permutations(d);
    let mut roots = Vec::with_capacity(nz);
    let mut first = raw[0].clone();
    seed_order(&mut first);
    roots.push(first);
    for (i, next) in raw.iter().enumerate().skip(1) {
        let row = follow(params, &roots[i - 1], theta[i - 1], next, theta[i], &perms, i)?;
        roots.push(row);
    }
    for (i, row) in roots.iter().enumerate() {
        check_separation(params.scheme, row, i)?;
        for (k, r) in row.iter().enumerate() {
            if (r.norm() < 1.0) != (k < m) {
                return Err(Error::SeparationViolation { index: i, inside: k, expected: m });
            }
        }
    }
    // Matching the last row onto the first: column k (last) continues as
    // column monodromy[k] at theta = 0.
    let closed = follow(params, &roots[nz - 1], theta[nz - 1], &roots[0], 2.0 * PI, &perms, nz)?;
    let back: Vec<usize> = closed.iter().map(|c| roots[0].iter().position(|r| r == c).unwrap()).collect();
    Ok(DiscreteRootTrack {
        scheme: params.scheme,
        radius: params.radius,
        mu: params.mu,
        a_coef: params.a_coef,
        theta,
        p_values,
        roots,
        monodromy: back,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Durand–Kerner iteration from a generic start: an oracle that shares no
    /// code path with the closed forms or the companion matrix.
    fn durand_kerner(coeffs: &[C64]) -> Vec<C64> {
        let d = coeffs.len() - 1;
        let lead = coeffs[d];
        let monic: Vec<C64> = coeffs.iter().map(|&x| x / lead).collect();
        let seed = c(0.4, 0.9);
        let mut z: Vec<C64> = (0..d).map(|k| seed.powu(k as u32 + 1) * 1.3).collect();
        for _ in 0..2000 {
            let mut delta = 0.0f64;
            for k in 0..d {
                let (p, _) = horner(&monic, z[k]);
                let mut den = c(1.0, 0.0);
                for j in 0..d {
                    if j != k {
                        den *= z[k] - z[j];
                    }
                }
                let step = p / den;
                z[k] -= step;
                delta = delta.max(step.norm());
            }
            if delta < 1e-16 {
                break;
            }
        }
        z
    }

    fn assert_same_set(got: &[C64], want: &[C64], tol: f64) {
        let mut used = vec![false; want.len()];
        for g in got {
            let (j, dist) = want
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, w)| (j, (g - w).norm() / w.norm().max(1.0)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            assert!(dist < tol, "root {g} off by {dist:e}; oracle {want:?}");
            used[j] = true;
        }
    }

    #[test]
    fn continuous_cubic_unit_case() {
        let r = solve_continuous_cubic(0.0, 1.0, c(1.0, 0.0)).unwrap();
        let w = unity_roots()[1];
        assert_relative_eq!(r.lambda[0].re, -1.0, epsilon = 1e-14);
        assert!(r.lambda[0].im.abs() < 1e-14);
        assert!((r.lambda[1] + w).norm() < 1e-14);
        assert!((r.lambda[2] + w * w).norm() < 1e-14);
    }

    #[test]
    fn continuous_cubic_real_root() {
        let r = solve_continuous_cubic(0.0, 1.0, c(8.0, 0.0)).unwrap();
        assert!((r.lambda[0] - c(-2.0, 0.0)).norm() < 1e-13);
        assert_same_set(&r.lambda[1..], &[c(1.0, 3f64.sqrt()), c(1.0, -(3f64.sqrt()))], 1e-13);
    }

    #[test]
    fn continuous_cubic_matches_oracle() {
        let s = c(0.3, 2.0);
        let r = solve_continuous_cubic(1.0, 1.0, s).unwrap();
        let oracle = durand_kerner(&[s, c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert_same_set(&r.lambda, &oracle, 1e-10);
        assert!(r.lambda[0].re < 0.0 && r.lambda[1].re > 0.0 && r.lambda[2].re > 0.0);
    }

    #[test]
    fn continuous_cubic_rejects_left_half_plane() {
        assert!(solve_continuous_cubic(0.0, 1.0, c(-1.0, 0.0)).is_err());
    }

    #[test]
    fn discrete_cubic_p3_magnitudes() {
        let mut m: Vec<f64> = solve_discrete_cubic(c(3.0, 0.0)).unwrap().iter().map(|r| r.norm()).collect();
        m.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((m[0] - 0.18).abs() < 0.01);
        assert!((m[1] - 2.34).abs() < 0.01);
        assert!((m[2] - 2.34).abs() < 0.01);
    }

    #[test]
    fn discrete_cubic_p_zero_is_degenerate() {
        assert!(matches!(solve_discrete_cubic(c(0.0, 0.0)), Err(Error::DegenerateRoot(_))));
    }

    #[test]
    fn discrete_cubic_matches_oracle() {
        let p = c(1.0, 1.0);
        let roots = solve_discrete_cubic(p).unwrap();
        let oracle = durand_kerner(&[c(-1.0, 0.0), 3.0 + p, c(-3.0, 0.0), c(1.0, 0.0)]);
        assert_same_set(&roots, &oracle, 1e-10);
    }

    #[test]
    fn companion_matches_oracle() {
        let coeffs = [c(2.0, -1.0), c(0.5, 0.0), c(-3.0, 0.25), c(1.0, 1.0), c(0.0, 2.0), c(1.0, 0.0)];
        let got = companion_roots(&coeffs).unwrap();
        assert_same_set(&got, &durand_kerner(&coeffs), 1e-10);
    }

    #[test]
    fn quartic_product_and_split() {
        let roots = solve_discrete_quartic(c(1.0, 0.0), 0.0).unwrap();
        let prod: C64 = roots.iter().product();
        assert!((prod + 1.0).norm() < 1e-10);
        let inside = roots.iter().filter(|r| r.norm() < 1.0).count();
        assert_eq!(inside, 2);
        let oracle = durand_kerner(&quartic_coeffs(c(1.0, 0.0), 0.0));
        assert_same_set(&roots, &oracle, 1e-10);
    }

    #[test]
    fn quartic_biquadratic_case() {
        let p = c(0.7, 0.4);
        let roots = solve_discrete_quartic(p, 2.0).unwrap();
        let s = (p * p + 1.0).sqrt();
        let want = [
            (-p + s).sqrt(),
            -(-p + s).sqrt(),
            (-p - s).sqrt(),
            -(-p - s).sqrt(),
        ];
        assert_same_set(&roots, &want, 1e-12);
    }

    #[test]
    fn ferrari_agrees_with_companion() {
        for &(p, a) in &[(c(1.0, 0.0), 0.0), (c(0.3, 2.0), 0.5), (c(5.0, -1.0), -1.5), (c(1e-3, 1e-2), 4e-6)] {
            let num = solve_discrete_quartic(p, a).unwrap();
            let closed = ferrari_quartic(p, a);
            assert_same_set(&closed, &num, 1e-8);
        }
    }

    #[test]
    fn rcn_track_one_inside_at_radius_1_01() {
        let params = CharacteristicParams { scheme: Scheme::Rcn, mu: 1.0, a_coef: 0.0, radius: 1.01 };
        let track = track_roots(&params, 512).unwrap();
        for i in 0..track.len() {
            assert!(track.roots[i][0].norm() < 1.0);
            assert!(track.roots[i][1].norm() > 1.0 && track.roots[i][2].norm() > 1.0);
        }
        // Column continuity.
        for i in 1..track.len() {
            for k in 0..3 {
                let own = (track.roots[i][k] - track.roots[i - 1][k]).norm();
                for j in 0..3 {
                    if j != k {
                        assert!(own < (track.roots[i][k] - track.roots[i - 1][j]).norm());
                    }
                }
            }
        }
    }

    #[test]
    fn ccn_track_example2_configuration() {
        let dx: f64 = 10.0 / 5000.0;
        let dt = 4.8e-4 / 2560.0;
        let params = CharacteristicParams {
            scheme: Scheme::Ccn,
            mu: 2.0 * dx.powi(3) / dt,
            a_coef: dx * dx,
            radius: 1.001,
        };
        let track = track_roots(&params, 64).unwrap();
        for (i, row) in track.roots.iter().enumerate() {
            assert!(row[0].norm() < 1.0 && row[1].norm() < 1.0);
            assert!(row[2].norm() > 1.0 && row[3].norm() > 1.0);
            let oracle = durand_kerner(&quartic_coeffs(track.p_values[i], params.a_coef));
            assert_same_set(row, &oracle, 1e-9);
        }
    }

    #[test]
    fn coarse_track_near_z_minus_one() {
        // 64 nodes at r = 1.001: near theta = pi the roots move far between
        // nodes and plain nearest matching swaps an inside and an outside root.
        let params = CharacteristicParams { scheme: Scheme::Ccn, mu: 0.36311056139821835, a_coef: -0.002643333768841212, radius: 1.001 };
        let track = track_roots(&params, 64).unwrap();
        for i in 0..track.len() {
            assert!(track.inside(i).iter().all(|r| r.norm() < 1.0));
        }
        let params = CharacteristicParams { mu: 5.93, a_coef: 0.0053, ..params };
        assert!(track_roots(&params, 64).is_ok());
    }

    #[test]
    fn track_rejects_odd_nz() {
        let params = CharacteristicParams { scheme: Scheme::Rcn, mu: 1.0, a_coef: 0.0, radius: 1.01 };
        assert!(track_roots(&params, 7).is_err());
    }

    fn complex_strategy(re: std::ops::Range<f64>, im: std::ops::Range<f64>) -> impl Strategy<Value = C64> {
        (re, im).prop_map(|(a, b)| C64::new(a, b))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn continuous_sign_pattern(u1 in -2.0..2.0f64, u2 in 0.01..2.0f64, s in complex_strategy(0.01..10.0, -10.0..10.0)) {
            let r = solve_continuous_cubic(u1, u2, s).unwrap();
            prop_assert!(r.lambda[0].re < 0.0);
            prop_assert!(r.lambda[1].re > 0.0 && r.lambda[2].re > 0.0);
            for l in r.lambda {
                let res = s + u1 * l + u2 * l * l * l;
                let scale = s.norm().max((u1 * l).norm()).max((u2 * l * l * l).norm());
                prop_assert!(res.norm() <= 1e-12 * scale);
            }
        }

        #[test]
        fn discrete_cubic_vieta(p in complex_strategy(1e-6..50.0, -50.0..50.0)) {
            let mut r = solve_discrete_cubic(p).unwrap().to_vec();
            let oracle = companion_roots(&[c(-1.0, 0.0), 3.0 + p, c(-3.0, 0.0), c(1.0, 0.0)]).unwrap();
            assert_same_set(&r, &oracle, 1e-10);
            seed_order(&mut r);
            prop_assert!(r[0].norm() < 1.0 && r[1].norm() > 1.0 && r[2].norm() > 1.0);
            let prod = r[0] * r[1] * r[2];
            let sum = r[0] + r[1] + r[2];
            let pair = r[0] * r[1] + r[1] * r[2] + r[0] * r[2];
            prop_assert!((prod - 1.0).norm() < 1e-10);
            prop_assert!((sum - 3.0).norm() < 1e-10);
            prop_assert!((pair - 3.0 - p).norm() < 1e-10 * (1.0 + p.norm()));
        }

        #[test]
        fn discrete_quartic_vieta(p in complex_strategy(1e-6..50.0, -50.0..50.0), a in -0.5..0.5f64) {
            let mut r = solve_discrete_quartic(p, a).unwrap().to_vec();
            seed_order(&mut r);
            prop_assert!(r[0].norm() < 1.0 && r[1].norm() < 1.0);
            prop_assert!(r[2].norm() > 1.0 && r[3].norm() > 1.0);
            let prod: C64 = r.iter().product();
            let sum: C64 = r.iter().sum();
            prop_assert!((prod + 1.0).norm() < 1e-10);
            prop_assert!((sum - (2.0 - a)).norm() < 1e-10);
        }
    }
}
