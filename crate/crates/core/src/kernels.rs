//! Boundary convolution kernels: Z-domain symbols built from the tracked
//! characteristic roots, their `xi(z) = 1 + 1/z` regularization, and the
//! time-domain coefficient sequences.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::problem::{CharacteristicParams, ProblemSpec, Scheme};
use crate::roots::{separated_roots, track_roots};
use crate::ztrans::{inverse_ztransform_head, CircleSamples};

type C64 = Complex64;

/// Identifies one boundary kernel: `R1..R4` for the right-sided scheme,
/// `C1..C8` for the centered one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelId {
    pub scheme: Scheme,
    /// 1-based kernel number.
    pub index: usize,
}

impl KernelId {
    pub fn new(scheme: Scheme, index: usize) -> Result<Self> {
        if index == 0 || index > scheme.kernel_count() {
            return Err(Error::invalid(format!("no kernel {index} for scheme {scheme}")));
        }
        Ok(KernelId { scheme, index })
    }

    pub fn all(scheme: Scheme) -> Vec<KernelId> {
        (1..=scheme.kernel_count())
            .map(|index| KernelId { scheme, index })
            .collect()
    }

    /// Kernel value from roots ordered inside-first (see [`crate::roots::seed_order`]).
    pub fn eval(self, roots: &[C64]) -> C64 {
        match self.scheme {
            Scheme::Rcn => {
                let (l1, l2, l3) = (roots[0], roots[1], roots[2]);
                match self.index {
                    1 => l2 + l3,
                    2 => l2 * l3,
                    3 => l1,
                    _ => l1 * l1,
                }
            }
            Scheme::Ccn => {
                let inner_sum = roots[0] + roots[1];
                let inner_prod = roots[0] * roots[1];
                let outer_sum = roots[2] + roots[3];
                let outer_prod = roots[2] * roots[3];
                match self.index {
                    1 => inner_sum,
                    2 => inner_sum * inner_sum,
                    3 => inner_prod,
                    4 => inner_prod * inner_prod,
                    5 => outer_sum,
                    6 => outer_sum * outer_sum,
                    7 => outer_prod,
                    _ => outer_prod * outer_prod,
                }
            }
        }
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.scheme {
            Scheme::Rcn => 'r',
            Scheme::Ccn => 'c',
        };
        write!(f, "{tag}{}", self.index)
    }
}

impl FromStr for KernelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::Config(format!("bad kernel id `{s}` (expected r1..r4 or c1..c8)"));
        let scheme = match s.chars().next() {
            Some('r') => Scheme::Rcn,
            Some('c') => Scheme::Ccn,
            _ => return Err(bad()),
        };
        let index: usize = s[1..].parse().map_err(|_| bad())?;
        KernelId::new(scheme, index).map_err(|_| bad())
    }
}

/// Single-point kernel evaluation `k(z)`, `|z| > 1`.
pub fn kernel_zdomain(params: &CharacteristicParams, id: KernelId, z: C64) -> Result<C64> {
    if id.scheme != params.scheme {
        return Err(Error::invalid(format!("kernel {id} does not belong to scheme {}", params.scheme)));
    }
    if !(z.norm() > 1.0) {
        return Err(Error::invalid("kernels are defined for |z| > 1"));
    }
    let roots = separated_roots(params, z)?;
    Ok(id.eval(&roots))
}

/// Time-domain kernel coefficients for one scheme and discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSet {
    pub scheme: Scheme,
    pub radius: f64,
    pub nz: usize,
    pub u1: f64,
    pub u2: f64,
    pub dx: f64,
    pub dt: f64,
    /// `plain[i]` holds `Y_{i+1}^{(n)}`, `n = 0 ..= N + 1`.
    pub plain: Vec<Vec<f64>>,
    /// `xi[i]` holds the regularized `Y_{i+1}^{xi,(n)}`.
    pub xi: Vec<Vec<f64>>,
    /// Permutation of root columns after one turn around the circle.
    pub monodromy: Vec<usize>,
}

impl KernelSet {
    pub fn plain(&self, id: KernelId) -> &[f64] {
        &self.plain[id.index - 1]
    }

    pub fn xi(&self, id: KernelId) -> &[f64] {
        &self.xi[id.index - 1]
    }

    /// Number of usable coefficients per kernel.
    pub fn len(&self) -> usize {
        self.xi.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> Vec<KernelId> {
        KernelId::all(self.scheme)
    }

    /// Whether this set was built for the discretization of `spec`.
    pub fn matches(&self, spec: &ProblemSpec) -> bool {
        self.scheme == spec.scheme
            && self.u1 == spec.u1
            && self.u2 == spec.u2
            && self.dx == spec.dx()
            && self.dt == spec.dt()
            && self.radius == spec.radius
    }
}

/// Coefficients of `(1 + 1/z) Y(z)`: `Y^xi(0) = Y(0)`, `Y^xi(n) = Y(n) + Y(n-1)`.
///
/// Applied to the inverted sequence rather than on the circle: on the circle
/// the `1/z` shift wraps the aliased top coefficient into index 0.
pub fn xi_regularize(y: &[f64]) -> Vec<f64> {
    let mut out = y.to_vec();
    for n in (1..y.len()).rev() {
        out[n] += y[n - 1];
    }
    out
}

/// Samples every kernel on `|z| = r` from continuity-tracked roots, inverts
/// them and forms the `xi`-regularized versions. Only the `N + 2` leading
/// coefficients are kept (at most half the window): beyond that, round-off
/// amplified by `r^n` and tail aliasing take over.
pub fn build_kernels(spec: &ProblemSpec, nz: usize) -> Result<KernelSet> {
    spec.validate()?;
    let params = spec.characteristic();
    let track = track_roots(&params, nz)?;
    let ids = KernelId::all(spec.scheme);
    let keep = (spec.n_steps + 2).min(nz / 2);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = ids
        .par_iter()
        .map(|&id| {
            let values: Vec<C64> = track.roots.iter().map(|row| id.eval(row)).collect();
            let plain = CircleSamples { radius: spec.radius, values };
            let y = inverse_ztransform_head(&plain, true, keep)?.re();
            let yxi = xi_regularize(&y);
            Ok((y, yxi))
        })
        .collect::<Result<_>>()?;
    let (plain, xi) = pairs.into_iter().unzip();
    Ok(KernelSet {
        scheme: spec.scheme,
        radius: spec.radius,
        nz,
        u1: spec.u1,
        u2: spec.u2,
        dx: spec.dx(),
        dt: spec.dt(),
        plain,
        xi,
        monodromy: track.monodromy,
    })
}

/// Cache file name for a kernel configuration.
pub fn cache_key(spec: &ProblemSpec, nz: usize) -> String {
    let mut h = Sha256::new();
    h.update(spec.scheme.as_str().as_bytes());
    for v in [spec.u1, spec.u2, spec.dx(), spec.dt(), spec.radius] {
        h.update(v.to_bits().to_le_bytes());
    }
    h.update((nz as u64).to_le_bytes());
    h.update((spec.n_steps as u64).to_le_bytes());
    let digest = h.finalize();
    let hex: String = digest.iter().take(16).map(|b| format!("{b:02x}")).collect();
    format!("kernels-{}-{hex}.json", spec.scheme)
}

/// [`build_kernels`] backed by a JSON cache in `dir`.
pub fn build_kernels_cached(spec: &ProblemSpec, nz: usize, dir: Option<&Path>) -> Result<KernelSet> {
    let Some(dir) = dir else {
        return build_kernels(spec, nz);
    };
    let path: PathBuf = dir.join(cache_key(spec, nz));
    if path.exists() {
        let text = std::fs::read_to_string(&path)?;
        let set: KernelSet = serde_json::from_str(&text)?;
        if set.matches(spec) && set.nz == nz && set.len() >= spec.n_steps + 2 {
            log::debug!("kernel cache hit {}", path.display());
            return Ok(set);
        }
        log::warn!("kernel cache entry {} does not match, rebuilding", path.display());
    }
    let set = build_kernels(spec, nz)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(&path, serde_json::to_string(&set)?)?;
    Ok(set)
}

/// Fraction of adjacent index pairs `(n, n+1)` in `lo..hi` whose signs differ.
pub fn sign_flip_fraction(seq: &[f64], lo: usize, hi: usize) -> f64 {
    let hi = hi.min(seq.len());
    if hi <= lo + 1 {
        return 0.0;
    }
    let flips = (lo..hi - 1).filter(|&n| seq[n] * seq[n + 1] < 0.0).count();
    flips as f64 / (hi - lo - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ztrans::default_nodes;

    fn example1_rcn() -> ProblemSpec {
        ProblemSpec::example1(Scheme::Rcn, 5000, 2560)
    }

    #[test]
    fn id_round_trip() {
        for scheme in [Scheme::Rcn, Scheme::Ccn] {
            for id in KernelId::all(scheme) {
                assert_eq!(id.to_string().parse::<KernelId>().unwrap(), id);
            }
        }
        assert!("r5".parse::<KernelId>().is_err());
        assert!("x1".parse::<KernelId>().is_err());
    }

    #[test]
    fn rcn_vieta_shortcuts() {
        let params = example1_rcn().characteristic();
        for k in 0..32 {
            let z = C64::from_polar(1.001, 0.2 * k as f64);
            let l1 = kernel_zdomain(&params, KernelId::new(Scheme::Rcn, 3).unwrap(), z).unwrap();
            let k1 = kernel_zdomain(&params, KernelId::new(Scheme::Rcn, 1).unwrap(), z).unwrap();
            let k2 = kernel_zdomain(&params, KernelId::new(Scheme::Rcn, 2).unwrap(), z).unwrap();
            assert!((k1 - (3.0 - l1)).norm() < 1e-10);
            assert!((k2 - 1.0 / l1).norm() < 1e-10);
            assert!(l1.norm() < 1.0);
        }
    }

    #[test]
    fn ccn_square_and_product_identities() {
        let spec = ProblemSpec::example2(5000, 2560);
        let params = spec.characteristic();
        let ids = KernelId::all(Scheme::Ccn);
        for k in 0..16 {
            let z = C64::from_polar(1.001, 0.39 * k as f64 + 0.01);
            let v: Vec<C64> = ids.iter().map(|&id| kernel_zdomain(&params, id, z).unwrap()).collect();
            assert!((v[1] - v[0] * v[0]).norm() < 1e-12 * v[1].norm().max(1.0));
            assert!((v[3] - v[2] * v[2]).norm() < 1e-12 * v[3].norm().max(1.0));
            assert!((v[6] * v[2] + 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn real_axis_value_is_real() {
        let params = example1_rcn().characteristic();
        let v = kernel_zdomain(&params, KernelId::new(Scheme::Rcn, 1).unwrap(), C64::new(1.001, 0.0)).unwrap();
        assert!(v.im.abs() < 1e-10);
    }

    #[test]
    fn wrong_scheme_or_disk_rejected() {
        let params = example1_rcn().characteristic();
        assert!(kernel_zdomain(&params, KernelId::new(Scheme::Ccn, 1).unwrap(), C64::new(2.0, 0.0)).is_err());
        assert!(kernel_zdomain(&params, KernelId::new(Scheme::Rcn, 1).unwrap(), C64::new(0.5, 0.0)).is_err());
    }

    #[test]
    fn xi_shift_and_sign_pattern() {
        let spec = example1_rcn();
        let set = build_kernels(&spec, default_nodes(spec.n_steps, spec.radius)).unwrap();
        for id in set.ids() {
            let (y, yxi) = (set.plain(id), set.xi(id));
            let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!((yxi[0] - y[0]).abs() < 1e-10 * scale.max(1.0));
            for n in 1..y.len() {
                assert!((yxi[n] - y[n] - y[n - 1]).abs() < 1e-10 * scale.max(1.0), "{id} n = {n}");
            }
            let n_steps = spec.n_steps;
            let flips = (2..n_steps - 1).filter(|&n| yxi[n] * yxi[n + 1] < 0.0).count();
            assert!(flips < n_steps / 10, "{id}: {flips} sign changes");
        }
        for idx in [1, 3] {
            let id = KernelId::new(Scheme::Rcn, idx).unwrap();
            assert!(sign_flip_fraction(set.plain(id), 2, 200) > 0.8);
            assert!(sign_flip_fraction(set.xi(id), 2, 200) < 0.1);
        }
    }

    #[test]
    fn leading_coefficients_dominate() {
        let spec = example1_rcn();
        let set = build_kernels(&spec, default_nodes(spec.n_steps, spec.radius)).unwrap();
        for id in set.ids() {
            let y = set.plain(id);
            let tail = y[2..spec.n_steps].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(tail <= y[1].abs(), "{id}: tail {tail:e} vs Y1 {:e}", y[1]);
        }
    }

    #[test]
    fn flip_fraction_counts() {
        assert_eq!(sign_flip_fraction(&[1.0, -1.0, 1.0, -1.0], 0, 4), 1.0);
        assert_eq!(sign_flip_fraction(&[1.0, 1.0, 1.0], 0, 3), 0.0);
        assert_eq!(sign_flip_fraction(&[1.0], 0, 1), 0.0);
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ProblemSpec::example1(Scheme::Ccn, 200, 50);
        let a = build_kernels_cached(&spec, 256, Some(dir.path())).unwrap();
        let b = build_kernels_cached(&spec, 256, Some(dir.path())).unwrap();
        assert_eq!(a, b);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        let other = ProblemSpec { radius: 1.01, ..spec };
        assert_ne!(cache_key(&other, 256), cache_key(&ProblemSpec::example1(Scheme::Ccn, 200, 50), 256));
    }
}
