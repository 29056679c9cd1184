//! Crank–Nicolson time stepping in the midpoint unknown `w(m) = v(m - 1/2)`
//! with discrete transparent boundary rows.
//!
//! At level `m >= 1` the solver finds `w(m) = (u(m) + u(m-1)) / 2` and
//! recovers `u(m) = 2 w(m) - u(m-1)`. Every boundary relation has the form
//! `sum_t c_t * w_{node_t} = 0` (discrete convolution in time), where each
//! `c_t` is a `xi`-regularized kernel sequence or the sequence `[1, 1]` of
//! `xi(z) = 1 + 1/z`. Since `w` has Z-transform `xi(z) u(z) / 2`, with
//! `w(0) = u(0) / 2`, the relations that hold for `u` also hold for `w`.

use std::time::Instant;

use crate::banded::{BandMatrix, BandedLu};
use crate::error::{Error, Result};
use crate::kernels::{build_kernels_cached, KernelId, KernelSet};
use crate::problem::{ProblemSpec, Scheme};
use crate::soe::{fit_soe, midpoint_convolution_terms, ConvolutionAccumulator, SoeKernel};
use crate::ztrans::default_nodes;

/// How the boundary convolutions are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Full sums over the stored history, O(n) per step.
    Direct,
    /// Exact head of `head` coefficients plus a `terms`-pole sum of exponentials
    /// evaluated by recurrence, O(terms) per step.
    Fast { terms: usize, head: usize },
}

impl Mode {
    pub fn fast_default() -> Self {
        Mode::Fast { terms: crate::soe::DEFAULT_TERMS, head: crate::soe::DEFAULT_HEAD }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Direct => "direct",
            Mode::Fast { .. } => "fast",
        }
    }
}

/// Coefficient sequence attached to one node in a boundary relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermSeq {
    /// `xi`-regularized kernel.
    Kernel(KernelId),
    /// `xi(z) = 1 + 1/z`, i.e. the sequence `[1, 1]`.
    Xi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub node: usize,
    pub factor: f64,
    pub seq: TermSeq,
}

/// One boundary row: `sum_t factor_t (seq_t * w_{node_t})(m) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub row: usize,
    pub terms: Vec<Term>,
}

/// Boundary relations of a scheme on a grid with `j + 1` nodes.
pub fn boundary_relations(scheme: Scheme, j: usize) -> Vec<Relation> {
    let k = |index| TermSeq::Kernel(KernelId { scheme, index });
    let t = |node, factor, seq| Term { node, factor, seq };
    match scheme {
        // Left: w2 - k1 w1 + k2 w0 = 0 with k1 = l2 + l3, k2 = l2 l3 (outside roots).
        // Right: w_{J-1} = k3 w_{J-2}, w_J = k4 w_{J-2} with k3 = l1, k4 = l1^2.
        Scheme::Rcn => vec![
            Relation { row: 0, terms: vec![t(0, 1.0, k(2)), t(1, -1.0, k(1)), t(2, 1.0, TermSeq::Xi)] },
            Relation { row: j - 1, terms: vec![t(j - 2, -1.0, k(3)), t(j - 1, 1.0, TermSeq::Xi)] },
            Relation { row: j, terms: vec![t(j - 2, -1.0, k(4)), t(j, 1.0, TermSeq::Xi)] },
        ],
        // Left, outside pair s = k5, P = k7: w2 - s w1 + P w0 = 0 and
        // w4 - 2 s w3 + s^2 w2 - P^2 w0 = 0 (k6 = s^2, k8 = P^2).
        // Right, inside pair s = k1, P = k3: mirrored with k2 = s^2, k4 = P^2.
        Scheme::Ccn => vec![
            Relation { row: 0, terms: vec![t(0, 1.0, k(7)), t(1, -1.0, k(5)), t(2, 1.0, TermSeq::Xi)] },
            Relation {
                row: 1,
                terms: vec![t(0, -1.0, k(8)), t(2, 1.0, k(6)), t(3, -2.0, k(5)), t(4, 1.0, TermSeq::Xi)],
            },
            Relation { row: j - 1, terms: vec![t(j, 1.0, TermSeq::Xi), t(j - 1, -1.0, k(1)), t(j - 2, 1.0, k(3))] },
            Relation {
                row: j,
                terms: vec![t(j, 1.0, TermSeq::Xi), t(j - 1, -2.0, k(1)), t(j - 2, 1.0, k(2)), t(j - 4, -1.0, k(4))],
            },
        ],
    }
}

/// Band widths `(kl, ku)` of the assembled matrix.
pub fn bandwidths(scheme: Scheme) -> (usize, usize) {
    match scheme {
        Scheme::Rcn => (2, 2),
        Scheme::Ccn => (4, 3),
    }
}

/// Interior stencil on `v_{j+offset}` and the first/last interior rows.
fn interior_stencil(spec: &ProblemSpec) -> (Vec<(isize, f64)>, usize, usize) {
    let alpha = spec.alpha();
    let beta = spec.beta();
    let j = spec.j;
    match spec.scheme {
        Scheme::Rcn => (
            vec![(-1, -alpha), (0, 1.0 + 3.0 * alpha), (1, -3.0 * alpha), (2, alpha)],
            1,
            j - 2,
        ),
        Scheme::Ccn => (
            vec![
                (-2, -alpha / 2.0),
                (-1, alpha - beta),
                (0, 1.0),
                (1, -alpha + beta),
                (2, alpha / 2.0),
            ],
            2,
            j - 2,
        ),
    }
}

fn coefficient(kernels: &KernelSet, seq: TermSeq, k: usize) -> f64 {
    match seq {
        TermSeq::Kernel(id) => kernels.xi(id)[k],
        TermSeq::Xi => {
            if k <= 1 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// The time-independent system matrix: interior stencil rows and the
/// level-0 coefficients of every boundary relation.
#[derive(Debug, Clone)]
pub struct BandedSystem {
    pub matrix: BandMatrix,
    pub relations: Vec<Relation>,
    /// `true` for rows whose right-hand side is `u_j(n)`.
    pub interior: Vec<bool>,
}

pub fn assemble_system(spec: &ProblemSpec, kernels: &KernelSet) -> Result<BandedSystem> {
    spec.validate()?;
    if !kernels.matches(spec) {
        return Err(Error::invalid("kernel set was built for a different discretization"));
    }
    let n = spec.j + 1;
    let (kl, ku) = bandwidths(spec.scheme);
    let mut matrix = BandMatrix::zeros(n, kl, ku);
    let mut interior = vec![false; n];
    let (stencil, first, last) = interior_stencil(spec);
    for row in first..=last {
        interior[row] = true;
        for &(off, c) in &stencil {
            matrix.set(row, (row as isize + off) as usize, c)?;
        }
    }
    let relations = boundary_relations(spec.scheme, spec.j);
    for rel in &relations {
        for t in &rel.terms {
            let c = t.factor * coefficient(kernels, t.seq, 0);
            let prev = matrix.get(rel.row, t.node);
            matrix.set(rel.row, t.node, prev + c)?;
        }
    }
    Ok(BandedSystem { matrix, relations, interior })
}

/// Per-term boundary history.
#[derive(Debug, Clone)]
struct TermHistory {
    term: Term,
    /// `w_{node}(0..=m)`, with `w(0) = u0 / 2`.
    trace: Vec<f64>,
    fast: Option<(usize, ConvolutionAccumulator)>,
}

/// Time stepper for one problem. Owns the factored system, the boundary
/// histories and the current grid values.
#[derive(Debug, Clone)]
pub struct Solver {
    spec: ProblemSpec,
    mode: Mode,
    kernels: KernelSet,
    system: BandedSystem,
    lu: BandedLu,
    soe: Vec<SoeKernel>,
    histories: Vec<Vec<TermHistory>>,
    u0: Vec<f64>,
    u: Vec<f64>,
    w: Vec<f64>,
    rhs: Vec<f64>,
    step: usize,
    norm0: f64,
    max_norm_ratio: f64,
}

/// Trapezoidal `l2` norm on a uniform grid.
pub fn trapezoid_norm(v: &[f64], dx: f64) -> f64 {
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    let inner: f64 = v.iter().map(|x| x * x).sum::<f64>() - 0.5 * (v[0] * v[0] + v[n - 1] * v[n - 1]);
    (dx * inner).sqrt()
}

impl Solver {
    /// Builds kernels (no cache) with the default node count.
    pub fn new(spec: ProblemSpec, mode: Mode) -> Result<Self> {
        spec.validate()?;
        let kernels = build_kernels_cached(&spec, default_nodes(spec.n_steps, spec.radius), None)?;
        Self::with_kernels(spec, mode, kernels)
    }

    pub fn with_kernels(spec: ProblemSpec, mode: Mode, kernels: KernelSet) -> Result<Self> {
        spec.validate()?;
        let grid = spec.grid();
        let u0 = spec.initial.sample(&grid)?;
        spec.check_support(&u0)?;
        if kernels.len() < spec.n_steps + 1 {
            return Err(Error::invalid(format!(
                "kernel sequences hold {} coefficients, the run needs {}",
                kernels.len(),
                spec.n_steps + 1
            )));
        }
        let system = assemble_system(&spec, &kernels)?;
        let lu = BandedLu::factor(&system.matrix)?;
        let mut soe = Vec::new();
        let mut soe_index = vec![usize::MAX; spec.scheme.kernel_count()];
        if let Mode::Fast { terms, head } = mode {
            for id in kernels.ids() {
                let fit = fit_soe(kernels.xi(id), terms, head)?;
                if fit.terms() < terms {
                    log::info!("kernel {id}: SOE fit reduced to {} terms", fit.terms());
                }
                soe_index[id.index - 1] = soe.len();
                soe.push(fit);
            }
        }
        let histories = system
            .relations
            .iter()
            .map(|rel| {
                rel.terms
                    .iter()
                    .map(|&term| {
                        let fast = match (mode, term.seq) {
                            (Mode::Fast { .. }, TermSeq::Kernel(id)) => {
                                let i = soe_index[id.index - 1];
                                Some((i, ConvolutionAccumulator::new(&soe[i])))
                            }
                            _ => None,
                        };
                        let mut trace = Vec::with_capacity(spec.n_steps + 1);
                        trace.push(0.5 * u0[term.node]);
                        TermHistory { term, trace, fast }
                    })
                    .collect()
            })
            .collect();
        let dx = spec.dx();
        let norm0 = trapezoid_norm(&u0, dx);
        let n = spec.j + 1;
        Ok(Solver {
            spec,
            mode,
            kernels,
            system,
            lu,
            soe,
            histories,
            u: u0.clone(),
            u0,
            w: vec![0.0; n],
            rhs: vec![0.0; n],
            step: 0,
            norm0,
            max_norm_ratio: 1.0,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn kernels(&self) -> &KernelSet {
        &self.kernels
    }

    pub fn soe_kernels(&self) -> &[SoeKernel] {
        &self.soe
    }

    pub fn system(&self) -> &BandedSystem {
        &self.system
    }

    /// Grid values at the current level.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Midpoint values `v(n - 1/2)` of the last step (zero before the first).
    pub fn v_half(&self) -> &[f64] {
        &self.w
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.spec.dt()
    }

    /// Largest `||u(n)|| / ||u(0)||` seen so far (trapezoidal norms).
    pub fn max_norm_ratio(&self) -> f64 {
        self.max_norm_ratio
    }

    /// History contribution `sum_{k>=1} c(k) w(m-k)` of one term at level `m`.
    fn history_term(&self, h: &TermHistory, m: usize) -> f64 {
        let tr = &h.trace;
        match (h.term.seq, &h.fast) {
            (TermSeq::Xi, _) => tr[m - 1],
            (TermSeq::Kernel(id), None) => {
                let y = self.kernels.xi(id);
                (1..=m).map(|k| y[k] * tr[m - k]).sum()
            }
            (TermSeq::Kernel(id), Some((i, acc))) => {
                let kernel = &self.soe[*i];
                let y = self.kernels.xi(id);
                let head: f64 = (1..kernel.nu().min(m + 1)).map(|k| y[k] * tr[m - k]).sum();
                head + midpoint_convolution_terms(acc, kernel, self.u0[h.term.node], m)
            }
        }
    }

    /// Right-hand side for level `m = step + 1`.
    fn build_rhs(&mut self) {
        let m = self.step + 1;
        let mut rhs = std::mem::take(&mut self.rhs);
        for (row, r) in rhs.iter_mut().enumerate() {
            *r = if self.system.interior[row] { self.u[row] } else { 0.0 };
        }
        for (rel, hist) in self.system.relations.iter().zip(&self.histories) {
            let s: f64 = hist.iter().map(|h| h.term.factor * self.history_term(h, m)).sum();
            rhs[rel.row] -= s;
        }
        self.rhs = rhs;
    }

    /// Advances one time step.
    pub fn step(&mut self) -> Result<()> {
        if self.step >= self.spec.n_steps {
            return Err(Error::invalid("run already reached the final step"));
        }
        self.build_rhs();
        let m = self.step + 1;
        self.w.copy_from_slice(&self.rhs);
        self.lu.solve_in_place(&mut self.w);
        for (u, &w) in self.u.iter_mut().zip(&self.w) {
            *u = 2.0 * w - *u;
        }
        let w = &self.w;
        for hist in self.histories.iter_mut() {
            for h in hist.iter_mut() {
                h.trace.push(w[h.term.node]);
                if let Some((i, acc)) = h.fast.as_mut() {
                    // The accumulator runs over x(j) = w(j + 1) and must reach
                    // step m before level m + 1.
                    let nu = self.soe[*i].nu();
                    if m >= nu {
                        acc.accumulate(&self.soe[*i], h.trace[m - nu + 1]);
                    }
                }
            }
        }
        self.step = m;
        if self.norm0 > 0.0 {
            let ratio = trapezoid_norm(&self.u, self.spec.dx()) / self.norm0;
            self.max_norm_ratio = self.max_norm_ratio.max(ratio);
        }
        Ok(())
    }
}

/// Solution at one requested time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    /// Wall time of each step (index `n - 1` for step `n`).
    pub step_seconds: Vec<f64>,
    /// Kernel construction, SOE fitting and factorization.
    pub setup_seconds: f64,
    pub total_seconds: f64,
    pub max_norm_ratio: f64,
}

/// Step indices for the requested snapshot times (rounded to the nearest step).
pub fn snapshot_steps(spec: &ProblemSpec, times: &[f64]) -> Result<Vec<usize>> {
    let dt = spec.dt();
    times
        .iter()
        .map(|&t| {
            if !(t >= 0.0) || t > spec.t_final * (1.0 + 1e-12) {
                return Err(Error::invalid(format!("snapshot time {t} outside [0, T]")));
            }
            Ok(((t / dt).round() as usize).min(spec.n_steps))
        })
        .collect()
}

/// Runs a full trajectory. `on_step` sees every level including `n = 0`.
pub fn run_with(
    spec: &ProblemSpec,
    mode: Mode,
    kernels: Option<KernelSet>,
    snapshot_times: &[f64],
    mut on_step: impl FnMut(usize, &[f64]),
) -> Result<RunOutput> {
    let start = Instant::now();
    let steps = snapshot_steps(spec, snapshot_times)?;
    let kernels = match kernels {
        Some(k) => k,
        None => build_kernels_cached(spec, default_nodes(spec.n_steps, spec.radius), None)?,
    };
    let mut solver = Solver::with_kernels(spec.clone(), mode, kernels)?;
    let setup_seconds = start.elapsed().as_secs_f64();
    let mut snapshots = Vec::new();
    let take = |solver: &Solver, snapshots: &mut Vec<Snapshot>| {
        for (&s, &t) in steps.iter().zip(snapshot_times) {
            if s == solver.step_index() {
                snapshots.push(Snapshot { step: s, time: t, u: solver.u().to_vec() });
            }
        }
    };
    take(&solver, &mut snapshots);
    on_step(0, solver.u());
    let mut step_seconds = Vec::with_capacity(spec.n_steps);
    for n in 1..=spec.n_steps {
        let t0 = Instant::now();
        solver.step()?;
        step_seconds.push(t0.elapsed().as_secs_f64());
        on_step(n, solver.u());
        take(&solver, &mut snapshots);
    }
    snapshots.sort_by_key(|s| s.step);
    Ok(RunOutput {
        snapshots,
        step_seconds,
        setup_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
        max_norm_ratio: solver.max_norm_ratio(),
    })
}

pub fn run(spec: &ProblemSpec, mode: Mode, snapshot_times: &[f64]) -> Result<RunOutput> {
    run_with(spec, mode, None, snapshot_times, |_, _| {})
}
