//! Error metrics against the reference solutions, convergence and radius
//! sweeps, and CSV output of the results.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{ProblemSpec, Scheme};
use crate::reference::ReferenceCache;
use crate::solver::{run_with, trapezoid_norm, Mode, Snapshot};

/// Successive errors closer than this ratio are treated as saturated.
pub const PLATEAU_RATIO: f64 = 1.2;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub scheme: Scheme,
    pub mode: String,
    pub terms: Option<usize>,
    pub j: usize,
    pub n_steps: usize,
    pub radius: f64,
    pub dx: f64,
    pub dt: f64,
}

impl RunMetadata {
    pub fn new(spec: &ProblemSpec, mode: Mode) -> Self {
        RunMetadata {
            scheme: spec.scheme,
            mode: mode.name().to_string(),
            terms: match mode {
                Mode::Fast { terms, .. } => Some(terms),
                Mode::Direct => None,
            },
            j: spec.j,
            n_steps: spec.n_steps,
            radius: spec.radius,
            dx: spec.dx(),
            dt: spec.dt(),
        }
    }
}

/// Relative `l2` errors `e(n)` per sampled step and their aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    /// `max_n e(n)`.
    pub rel_err_tm: f64,
    /// `(sum_n w_n e(n)^2)^(1/2)` with `w_n` the time between samples, i.e.
    /// `(dt sum e(n)^2)^(1/2)` when every step is sampled.
    pub rel_err_l2: f64,
    pub metadata: RunMetadata,
}

impl ErrorReport {
    pub fn final_error(&self) -> f64 {
        self.errors.last().copied().unwrap_or(0.0)
    }
}

/// `||exact - num|| / ||exact||` in the trapezoidal norm.
pub fn relative_error(num: &[f64], exact: &[f64], dx: f64, step: usize) -> Result<f64> {
    if num.len() != exact.len() {
        return Err(Error::invalid(format!("grid mismatch: {} vs {} values", num.len(), exact.len())));
    }
    let denom = trapezoid_norm(exact, dx);
    if denom < 1e-300 {
        return Err(Error::ZeroReferenceNorm(step));
    }
    let diff: Vec<f64> = exact.iter().zip(num).map(|(e, u)| e - u).collect();
    Ok(trapezoid_norm(&diff, dx) / denom)
}

/// Errors of a numerical trajectory against reference values at the same
/// steps. Snapshots at `n = 0` are skipped.
pub fn compute_errors<R: AsRef<[f64]>>(numerical: &[Snapshot], reference: &[R], dx: f64, metadata: RunMetadata) -> Result<ErrorReport> {
    if numerical.len() != reference.len() {
        return Err(Error::invalid("numerical and reference trajectories differ in length"));
    }
    let (mut steps, mut times, mut errors) = (Vec::new(), Vec::new(), Vec::new());
    for (snap, exact) in numerical.iter().zip(reference) {
        if snap.step == 0 {
            continue;
        }
        errors.push(relative_error(&snap.u, exact.as_ref(), dx, snap.step)?);
        steps.push(snap.step);
        times.push(snap.time);
    }
    let rel_err_tm = errors.iter().cloned().fold(0.0, f64::max);
    let mut prev_t = 0.0;
    let mut sum = 0.0;
    for (&t, &e) in times.iter().zip(&errors) {
        sum += (t - prev_t) * e * e;
        prev_t = t;
    }
    Ok(ErrorReport { steps, times, errors, rel_err_tm, rel_err_l2: sum.sqrt(), metadata })
}

/// Steps `stride, 2 stride, ...` and always the final step.
pub fn sampled_steps(n_steps: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut steps: Vec<usize> = (stride..=n_steps).step_by(stride).collect();
    if steps.last() != Some(&n_steps) {
        steps.push(n_steps);
    }
    steps
}

/// Runs the solver and measures `e(n)` at every `stride`-th step.
pub fn error_evolution(spec: &ProblemSpec, mode: Mode, cache: &ReferenceCache, stride: usize) -> Result<ErrorReport> {
    let steps = sampled_steps(spec.n_steps, stride);
    let dt = spec.dt();
    let mut snapshots = Vec::with_capacity(steps.len());
    let mut next = 0;
    run_with(spec, mode, None, &[], |n, u| {
        if next < steps.len() && steps[next] == n {
            snapshots.push(Snapshot { step: n, time: n as f64 * dt, u: u.to_vec() });
            next += 1;
        }
    })?;
    let reference = snapshots.iter().map(|s| cache.at(spec, s.time)).collect::<Result<Vec<_>>>()?;
    let reference: Vec<&[f64]> = reference.iter().map(|r| r.as_slice()).collect();
    compute_errors(&snapshots, &reference, spec.dx(), RunMetadata::new(spec, mode))
}

/// `e(N)` at the final time.
pub fn final_error(spec: &ProblemSpec, mode: Mode, cache: &ReferenceCache) -> Result<f64> {
    Ok(error_evolution(spec, mode, cache, spec.n_steps)?.final_error())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Values are `J`.
    Dx,
    /// Values are `N`.
    Dt,
    /// Values are inversion radii.
    Radius,
    /// Values are exponential-sum term counts (fast mode).
    SoeTerms,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dx" => Ok(SweepAxis::Dx),
            "dt" => Ok(SweepAxis::Dt),
            "radius" | "r" => Ok(SweepAxis::Radius),
            "soe_terms" | "terms" | "L" => Ok(SweepAxis::SoeTerms),
            other => Err(Error::Config(format!("unknown sweep axis `{other}`"))),
        }
    }
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Dx => "dx",
            SweepAxis::Dt => "dt",
            SweepAxis::Radius => "radius",
            SweepAxis::SoeTerms => "soe_terms",
        }
    }
}

/// Which error a sweep point reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorMetric {
    /// `e(N)`.
    Final,
    /// `rel.ErrL2`, sampling every `stride`-th step.
    L2InTime { stride: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    /// Abscissa of the log-log fit: `dx`, `dt`, `r` or `L`.
    pub abscissa: f64,
    pub error: Option<f64>,
    pub seconds: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual in `ln(error)`.
    pub residual: f64,
    /// Indices of the points used.
    pub used: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub metric: ErrorMetric,
    pub points: Vec<SweepPoint>,
    /// Indices flagged as saturated and left out of the fit.
    pub plateau: Vec<usize>,
    /// `None` when fewer than three usable points remain.
    pub fit: Option<SlopeFit>,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Some((slope, intercept, (rss / n as f64).sqrt()))
}

/// Trailing points (in order of refinement) whose error improved by less than
/// [`PLATEAU_RATIO`] over their predecessor.
pub fn detect_plateau(errors: &[f64]) -> Vec<usize> {
    let mut plateau = Vec::new();
    let mut i = errors.len();
    while i >= 2 && errors[i - 2] / errors[i - 1] < PLATEAU_RATIO {
        plateau.push(i - 1);
        i -= 1;
    }
    plateau.reverse();
    plateau
}

fn apply_axis(base: &ProblemSpec, mode: Mode, axis: SweepAxis, value: f64) -> Result<(ProblemSpec, Mode, f64)> {
    let mut spec = base.clone();
    let mut mode = mode;
    let as_count = |v: f64| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::invalid(format!("sweep value {v} is not a positive integer")))
        }
    };
    let abscissa = match axis {
        SweepAxis::Dx => {
            spec.j = as_count(value)?;
            spec.dx()
        }
        SweepAxis::Dt => {
            spec.n_steps = as_count(value)?;
            spec.dt()
        }
        SweepAxis::Radius => {
            spec.radius = value;
            value
        }
        SweepAxis::SoeTerms => {
            let head = match mode {
                Mode::Fast { head, .. } => head,
                Mode::Direct => crate::soe::DEFAULT_HEAD,
            };
            let terms = as_count(value)?;
            mode = Mode::Fast { terms, head };
            terms as f64
        }
    };
    spec.validate()?;
    Ok((spec, mode, abscissa))
}

/// Runs one solver per value (in parallel), measures the chosen error and
/// fits `ln(error)` against `ln(abscissa)`. For the `dx` and `dt` axes the
/// values must be ordered from coarse to fine so saturation can be detected.
/// Failed points are recorded and excluded from the fit.
pub fn sweep(base: &ProblemSpec, mode: Mode, axis: SweepAxis, values: &[f64], metric: ErrorMetric) -> SweepResult {
    let cache = ReferenceCache::new();
    let points: Vec<SweepPoint> = values
        .par_iter()
        .map(|&value| {
            let start = Instant::now();
            let outcome = apply_axis(base, mode, axis, value).and_then(|(spec, mode, abscissa)| {
                let err = match metric {
                    ErrorMetric::Final => final_error(&spec, mode, &cache)?,
                    ErrorMetric::L2InTime { stride } => error_evolution(&spec, mode, &cache, stride)?.rel_err_l2,
                };
                Ok((abscissa, err))
            });
            let seconds = start.elapsed().as_secs_f64();
            match outcome {
                Ok((abscissa, err)) => SweepPoint { value, abscissa, error: Some(err), seconds, failure: None },
                Err(e) => {
                    log::warn!("sweep point {value}: {e}");
                    SweepPoint { value, abscissa: f64::NAN, error: None, seconds, failure: Some(format!("{}: {e}", e.code())) }
                }
            }
        })
        .collect();
    let ok: Vec<usize> = (0..points.len()).filter(|&i| points[i].error.is_some_and(|e| e > 0.0)).collect();
    let plateau = match axis {
        SweepAxis::Dx | SweepAxis::Dt => {
            let errs: Vec<f64> = ok.iter().map(|&i| points[i].error.unwrap_or(0.0)).collect();
            detect_plateau(&errs).into_iter().map(|k| ok[k]).collect()
        }
        _ => Vec::new(),
    };
    let used: Vec<usize> = ok.into_iter().filter(|i| !plateau.contains(i)).collect();
    let xs: Vec<f64> = used.iter().map(|&i| points[i].abscissa).collect();
    let ys: Vec<f64> = used.iter().map(|&i| points[i].error.unwrap_or(0.0)).collect();
    let fit = fit_loglog(&xs, &ys).map(|(slope, intercept, residual)| SlopeFit { slope, intercept, residual, used });
    SweepResult { axis, metric, points, plateau, fit }
}

/// Error versus Δx: `values` are `J`, coarse to fine.
pub fn convergence_sweep(base: &ProblemSpec, mode: Mode, axis: SweepAxis, values: &[f64]) -> Result<SweepResult> {
    if values.len() < 3 {
        return Err(Error::invalid("a convergence sweep needs at least three points"));
    }
    if !matches!(axis, SweepAxis::Dx | SweepAxis::Dt) {
        return Err(Error::invalid("convergence sweeps run along dx or dt"));
    }
    Ok(sweep(base, mode, axis, values, ErrorMetric::Final))
}

/// `rel.ErrL2` versus the inversion radius.
pub fn radius_sweep(base: &ProblemSpec, mode: Mode, radii: &[f64], stride: usize) -> Result<SweepResult> {
    if let Some(r) = radii.iter().find(|&&r| !(r > 1.0)) {
        return Err(Error::invalid(format!("inversion radius {r} must exceed 1")));
    }
    Ok(sweep(base, mode, SweepAxis::Radius, radii, ErrorMetric::L2InTime { stride }))
}

fn csv_writer(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("csv: {other:?}")),
    }
}

/// Writes rows of already formatted fields under `header`.
pub fn write_csv(path: Option<&Path>, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `value, abscissa, error, seconds, in_fit, status`.
pub fn write_sweep_csv(path: Option<&Path>, result: &SweepResult) -> Result<()> {
    let used = result.fit.as_ref().map(|f| f.used.clone()).unwrap_or_default();
    let rows = result.points.iter().enumerate().map(|(i, p)| {
        vec![
            fmt_float(p.value),
            fmt_float(p.abscissa),
            p.error.map(fmt_float).unwrap_or_default(),
            fmt_float(p.seconds),
            used.contains(&i).to_string(),
            if result.plateau.contains(&i) {
                "plateau".to_string()
            } else {
                p.failure.clone().unwrap_or_else(|| "ok".to_string())
            },
        ]
    });
    write_csv(path, &["value", "abscissa", "error", "seconds", "in_fit", "status"], rows)
}

/// Columns `n, t, e`.
pub fn write_error_csv(path: Option<&Path>, report: &ErrorReport) -> Result<()> {
    let rows = report
        .steps
        .iter()
        .zip(&report.times)
        .zip(&report.errors)
        .map(|((n, t), e)| vec![n.to_string(), fmt_float(*t), fmt_float(*e)]);
    write_csv(path, &["n", "t", "e"], rows)
}

/// One-paragraph text summary of a sweep.
pub fn sweep_summary(result: &SweepResult) -> String {
    let mut s = format!("axis {} over {} points", result.axis.as_str(), result.points.len());
    let failed = result.points.iter().filter(|p| p.failure.is_some()).count();
    if failed > 0 {
        s += &format!(", {failed} failed");
    }
    if !result.plateau.is_empty() {
        s += &format!(", plateau at {:?}", result.plateau);
    }
    match &result.fit {
        Some(f) => s += &format!(", slope {:.4} (residual {:.3e}, {} points)", f.slope, f.residual, f.used.len()),
        None => s += ", slope undetermined (fewer than three usable points)",
    }
    s
}
