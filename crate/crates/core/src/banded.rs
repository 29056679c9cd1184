//! Banded matrices and LU factorization with partial pivoting.
//!
//! Storage is the LAPACK `gbtrf` layout: column-major with leading dimension
//! `2 kl + ku + 1`, the top `kl` rows of each column reserved for pivoting
//! fill-in. Entry `(i, j)` lives at `j * ld + kl + ku + i - j`.

use crate::error::{Error, Result};

/// Pivots below this (after row equilibration) are reported as singular.
pub const PIVOT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandMatrix { n, kl, ku, data: vec![0.0; n * (2 * kl + ku + 1)] }
    }

    fn ld(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ld() + self.kl + self.ku + i - j
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        if !self.in_band(i, j) {
            return Err(Error::BandwidthViolation { row: i, col: j });
        }
        let k = self.idx(i, j);
        self.data[k] = v;
        Ok(())
    }

    /// Actual lower and upper bandwidth of the nonzero pattern.
    pub fn occupied_bandwidth(&self) -> (usize, usize) {
        let (mut lo, mut hi) = (0, 0);
        for j in 0..self.n {
            for i in j.saturating_sub(self.kl)..(j + self.ku + 1).min(self.n) {
                if self.get(i, j) != 0.0 {
                    if i > j {
                        lo = lo.max(i - j);
                    } else {
                        hi = hi.max(j - i);
                    }
                }
            }
        }
        (lo, hi)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + 1).min(self.n);
                (lo..hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// LU factors of a row-equilibrated band matrix.
#[derive(Debug, Clone)]
pub struct BandedLu {
    factors: BandMatrix,
    pivots: Vec<usize>,
    row_scale: Vec<f64>,
}

impl BandedLu {
    pub fn factor(matrix: &BandMatrix) -> Result<Self> {
        let n = matrix.n;
        let (kl, ku) = (matrix.kl, matrix.ku);
        let mut a = matrix.clone();
        let mut row_scale = vec![1.0; n];
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku + 1).min(n);
            let m = (lo..hi).fold(0.0f64, |m, j| m.max(a.get(i, j).abs()));
            if m == 0.0 {
                return Err(Error::SingularSystem { row: i, pivot: 0.0 });
            }
            row_scale[i] = 1.0 / m;
            for j in lo..hi {
                let k = a.idx(i, j);
                a.data[k] *= row_scale[i];
            }
        }
        let mut pivots = vec![0; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let (mut p, mut best) = (0, -1.0);
            for r in 0..=km {
                let v = a.data[a.idx(j + r, j)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            pivots[j] = j + p;
            if best < PIVOT_FLOOR {
                return Err(Error::SingularSystem { row: j, pivot: best });
            }
            ju = ju.max((j + ku + p).min(n - 1));
            if p != 0 {
                for c in j..=ju {
                    let (x, y) = (a.idx(j, c), a.idx(j + p, c));
                    a.data.swap(x, y);
                }
            }
            let piv = a.data[a.idx(j, j)];
            for r in 1..=km {
                let k = a.idx(j + r, j);
                a.data[k] /= piv;
            }
            for c in j + 1..=ju {
                let top = a.data[a.idx(j, c)];
                if top == 0.0 {
                    continue;
                }
                for r in 1..=km {
                    let l = a.data[a.idx(j + r, j)];
                    let k = a.idx(j + r, c);
                    a.data[k] -= l * top;
                }
            }
        }
        Ok(BandedLu { factors: a, pivots, row_scale })
    }

    pub fn n(&self) -> usize {
        self.factors.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let a = &self.factors;
        let n = a.n;
        let kl = a.kl;
        let w = a.kl + a.ku;
        for (bi, s) in b.iter_mut().zip(&self.row_scale) {
            *bi *= s;
        }
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                for r in 1..=km {
                    b[j + r] -= a.data[a.idx(j + r, j)] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= a.data[a.idx(j, j)];
            let bj = b[j];
            if bj != 0.0 {
                for i in j.saturating_sub(w)..j {
                    b[i] -= a.data[a.idx(i, j)] * bj;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn dense_solve(m: &BandMatrix, b: &[f64]) -> Vec<f64> {
        let d = DMatrix::from_fn(m.n, m.n, |i, j| m.get(i, j));
        d.lu().solve(&DVector::from_column_slice(b)).unwrap().iter().copied().collect()
    }

    #[test]
    fn out_of_band_rejected() {
        let mut m = BandMatrix::zeros(6, 1, 2);
        assert!(m.set(2, 1, 1.0).is_ok());
        assert!(m.set(1, 3, 1.0).is_ok());
        assert!(matches!(m.set(3, 1, 1.0), Err(Error::BandwidthViolation { row: 3, col: 1 })));
        assert!(m.set(0, 3, 1.0).is_err());
    }

    #[test]
    fn singular_detected() {
        let mut m = BandMatrix::zeros(3, 1, 1);
        m.set(0, 0, 1.0).unwrap();
        m.set(1, 0, 1.0).unwrap();
        m.set(2, 2, 1.0).unwrap();
        assert!(matches!(BandedLu::factor(&m), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn pivoting_needed() {
        // Zero on the diagonal forces a row swap.
        let mut m = BandMatrix::zeros(4, 2, 1);
        let entries = [(0, 1, 2.0), (1, 0, 3.0), (1, 1, 1.0), (1, 2, -1.0), (2, 0, 1.0), (2, 2, 4.0), (2, 3, 1.0), (3, 1, 2.0), (3, 3, 5.0)];
        for (i, j, v) in entries {
            m.set(i, j, v).unwrap();
        }
        let b = [1.0, 2.0, 3.0, 4.0];
        let mut x = b.to_vec();
        BandedLu::factor(&m).unwrap().solve_in_place(&mut x);
        let want = dense_solve(&m, &b);
        for (a, w) in x.iter().zip(&want) {
            assert!((a - w).abs() < 1e-13);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_dense_lu(n in 5usize..40, kl in 0usize..5, ku in 0usize..5, seed in 0u64..1000) {
            let mut m = BandMatrix::zeros(n, kl, ku);
            let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut next = || {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            };
            for i in 0..n {
                for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                    let v = next() + if i == j { 3.0 } else { 0.0 };
                    m.set(i, j, v).unwrap();
                }
            }
            let b: Vec<f64> = (0..n).map(|_| next()).collect();
            let mut x = b.clone();
            BandedLu::factor(&m).unwrap().solve_in_place(&mut x);
            let want = dense_solve(&m, &b);
            for (a, w) in x.iter().zip(&want) {
                prop_assert!((a - w).abs() < 1e-10 * w.abs().max(1.0));
            }
        }
    }
}
