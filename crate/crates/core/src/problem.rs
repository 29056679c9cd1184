//! Physical and discretization parameters shared by every stage of the pipeline.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Interior finite-difference scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Scheme {
    /// Right-sided Crank–Nicolson: 4-point third-difference stencil, `U1 = 0` only.
    Rcn,
    /// Centered Crank–Nicolson: 5-point stencil with centered advection.
    Ccn,
}

impl Scheme {
    /// Degree of the characteristic polynomial.
    pub fn degree(self) -> usize {
        match self {
            Scheme::Rcn => 3,
            Scheme::Ccn => 4,
        }
    }

    /// Number of characteristic roots strictly inside the unit disk for `|z| > 1`.
    pub fn inside_count(self) -> usize {
        match self {
            Scheme::Rcn => 1,
            Scheme::Ccn => 2,
        }
    }

    /// Number of boundary kernels.
    pub fn kernel_count(self) -> usize {
        match self {
            Scheme::Rcn => 4,
            Scheme::Ccn => 8,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Rcn => "rcn",
            Scheme::Ccn => "ccn",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "rcn" => Ok(Scheme::Rcn),
            "ccn" => Ok(Scheme::Ccn),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Initial datum `u(0, x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `exp(-x^2)`.
    Gaussian,
    /// `exp(-8 (x - 5)^2) sin(50 pi x / 4)`.
    WavePacket,
    /// Values on the solver grid (`J + 1` entries).
    Samples(Vec<f64>),
}

impl InitialCondition {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            InitialCondition::Gaussian => (-x * x).exp(),
            InitialCondition::WavePacket => {
                (-8.0 * (x - 5.0).powi(2)).exp() * (50.0 * PI * x / 4.0).sin()
            }
            InitialCondition::Samples(_) => f64::NAN,
        }
    }

    pub fn sample(&self, grid: &[f64]) -> Result<Vec<f64>> {
        match self {
            InitialCondition::Samples(v) => {
                if v.len() != grid.len() {
                    return Err(Error::invalid(format!(
                        "initial samples have {} entries, grid has {}",
                        v.len(),
                        grid.len()
                    )));
                }
                Ok(v.clone())
            }
            _ => Ok(grid.iter().map(|&x| self.eval(x)).collect()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::Gaussian => "gaussian",
            InitialCondition::WavePacket => "wavepacket",
            InitialCondition::Samples(_) => "samples",
        }
    }
}

impl FromStr for InitialCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "example1" => Ok(InitialCondition::Gaussian),
            "wavepacket" | "example2" => Ok(InitialCondition::WavePacket),
            other => Err(Error::Config(format!("unknown initial condition `{other}`"))),
        }
    }
}

/// Problem definition for `u_t + U1 u_x + U2 u_xxx = 0` on `[a, b] x [0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub u1: f64,
    pub u2: f64,
    pub a: f64,
    pub b: f64,
    pub t_final: f64,
    /// Number of spatial subdivisions; the grid has `j + 1` nodes.
    pub j: usize,
    /// Number of time steps.
    pub n_steps: usize,
    /// Inversion radius for the numerical inverse Z-transform.
    pub radius: f64,
    pub scheme: Scheme,
    pub initial: InitialCondition,
}

pub const DEFAULT_RADIUS: f64 = 1.001;

impl ProblemSpec {
    /// First benchmark: `u_t + u_xxx = 0`, `u0 = exp(-x^2)` on `[-6, 6]`, `T = 4`.
    pub fn example1(scheme: Scheme, j: usize, n_steps: usize) -> Self {
        ProblemSpec {
            u1: 0.0,
            u2: 1.0,
            a: -6.0,
            b: 6.0,
            t_final: 4.0,
            j,
            n_steps,
            radius: DEFAULT_RADIUS,
            scheme,
            initial: InitialCondition::Gaussian,
        }
    }

    /// Second benchmark: `U1 = U2 = 1`, oscillatory wave packet on `[0, 10]`, `T = 4.8e-4`.
    pub fn example2(j: usize, n_steps: usize) -> Self {
        ProblemSpec {
            u1: 1.0,
            u2: 1.0,
            a: 0.0,
            b: 10.0,
            t_final: 4.8e-4,
            j,
            n_steps,
            radius: DEFAULT_RADIUS,
            scheme: Scheme::Ccn,
            initial: InitialCondition::WavePacket,
        }
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.j as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    /// `mu = 2 dx^3 / (U2 dt)`, the scale of `p = mu (z - 1) / (z + 1)`.
    pub fn mu(&self) -> f64 {
        2.0 * self.dx().powi(3) / (self.u2 * self.dt())
    }

    /// `a = U1 dx^2 / U2`, the advection coefficient of the quartic.
    pub fn a_coef(&self) -> f64 {
        self.u1 * self.dx().powi(2) / self.u2
    }

    /// `alpha = U2 dt / (2 dx^3)`.
    pub fn alpha(&self) -> f64 {
        self.u2 * self.dt() / (2.0 * self.dx().powi(3))
    }

    /// `beta = U1 dt / (4 dx)`.
    pub fn beta(&self) -> f64 {
        self.u1 * self.dt() / (4.0 * self.dx())
    }

    pub fn grid(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..=self.j).map(|i| self.a + i as f64 * dx).collect()
    }

    pub fn characteristic(&self) -> CharacteristicParams {
        CharacteristicParams {
            scheme: self.scheme,
            mu: self.mu(),
            a_coef: self.a_coef(),
            radius: self.radius,
        }
    }

    /// Checks the structural invariants. Support of the initial data is checked
    /// separately by [`ProblemSpec::check_support`] since it needs the samples.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.u1, self.u2, self.a, self.b, self.t_final, self.radius]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("non-finite parameter"));
        }
        if self.u2 <= 0.0 {
            return Err(Error::invalid("U2 must be positive"));
        }
        if self.b <= self.a {
            return Err(Error::invalid("interval must satisfy b > a"));
        }
        if self.t_final <= 0.0 {
            return Err(Error::invalid("final time must be positive"));
        }
        if self.j < 8 {
            return Err(Error::invalid("J must be at least 8"));
        }
        if self.n_steps < 2 {
            return Err(Error::invalid("N must be at least 2"));
        }
        if self.radius <= 1.0 {
            return Err(Error::invalid("inversion radius must exceed 1"));
        }
        if self.scheme == Scheme::Rcn && self.u1 != 0.0 {
            return Err(Error::invalid("R-CN scheme requires U1 = 0"));
        }
        Ok(())
    }

    /// Initial data must vanish at both ends relative to its maximum.
    pub fn check_support(&self, u0: &[f64]) -> Result<()> {
        let max = u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-12 * max;
        let (first, last) = (u0[0].abs(), u0[u0.len() - 1].abs());
        if first > tol || last > tol {
            return Err(Error::invalid(format!(
                "initial data not compactly supported: |u0(a)| = {first:e}, |u0(b)| = {last:e}"
            )));
        }
        Ok(())
    }
}

/// Parameters of the discrete characteristic polynomial on the inversion circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicParams {
    pub scheme: Scheme,
    pub mu: f64,
    pub a_coef: f64,
    pub radius: f64,
}
