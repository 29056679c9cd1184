use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kdv_tbc::config::RunConfig;
use kdv_tbc::experiments::{fmt_float, sweep, sweep_summary, write_csv, write_sweep_csv, ErrorMetric, SweepAxis};
use kdv_tbc::kernels::{build_kernels_cached, KernelId};
use kdv_tbc::reference::{exact_example1, exact_example2, ReferenceCache};
use kdv_tbc::roots::track_roots;
use kdv_tbc::soe::{fit_soe, soe_eval, DEFAULT_HEAD};
use kdv_tbc::solver::{run_with, trapezoid_norm};
use kdv_tbc::ztrans::default_nodes;
use kdv_tbc::{Error, ProblemSpec, Result, Scheme};

#[derive(Parser)]
#[command(name = "kdv-tbc", version, about = "Linearized KdV solver with discrete transparent boundary conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Add a u_exact column from the reference solution.
        #[arg(long)]
        exact: bool,
        /// Directory for cached kernel sequences.
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Error sweep along one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// dx (values are J), dt (values are N), radius, or terms.
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// `final` for e(N), `l2` for rel.ErrL2.
        #[arg(long, default_value = "final")]
        metric: String,
        /// Step stride when sampling errors for the l2 metric.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Boundary kernel sequences.
    Kernels {
        #[command(subcommand)]
        action: DumpAction,
    },
    /// Characteristic roots along the inversion circle.
    Roots {
        #[command(subcommand)]
        action: DumpAction,
    },
    /// Exponential-sum fits of boundary kernels.
    Soe {
        #[command(subcommand)]
        action: SoeAction,
    },
    /// Reference solutions.
    Reference {
        #[command(subcommand)]
        action: ReferenceAction,
    },
}

#[derive(Subcommand)]
enum DumpAction {
    Dump {
        /// Overrides the scheme of the config (default: first benchmark).
        #[arg(long)]
        scheme: Option<Scheme>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of circle nodes (default: derived from N and r).
        #[arg(long)]
        nz: Option<usize>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SoeAction {
    Fit {
        /// Kernel id, r1..r4 or c1..c8.
        #[arg(long)]
        kernel: KernelId,
        #[arg(long = "L", default_value_t = 20)]
        terms: usize,
        #[arg(long, default_value_t = DEFAULT_HEAD)]
        nu: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ReferenceAction {
    Dump {
        #[arg(long)]
        example: u8,
        #[arg(long)]
        time: f64,
        /// Grid subdivisions (default 5000).
        #[arg(long, default_value_t = 5000)]
        j: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_spec(config: Option<&Path>, scheme: Option<Scheme>) -> Result<ProblemSpec> {
    let mut spec = match config {
        Some(p) => RunConfig::load(p)?.spec,
        None => RunConfig::default().spec,
    };
    if let Some(s) = scheme {
        spec.scheme = s;
        spec.validate()?;
    }
    Ok(spec)
}

fn cmd_run(config: &Path, exact: bool, cache_dir: Option<&Path>) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let spec = &cfg.spec;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let kernels = build_kernels_cached(spec, default_nodes(spec.n_steps, spec.radius), cache_dir)?;
    let out = run_with(spec, cfg.mode, Some(kernels), &cfg.snapshots, |_, _| {})?;
    let grid = spec.grid();
    let cache = ReferenceCache::new();
    for snap in &out.snapshots {
        let reference = if exact { Some(cache.at(spec, snap.time)?) } else { None };
        let path = cfg.out_dir.join(format!("snapshot_t{}.csv", snap.time));
        let mut header = vec!["x", "u_num"];
        if exact {
            header.push("u_exact");
        }
        let rows = grid.iter().enumerate().map(|(i, x)| {
            let mut row = vec![fmt_float(*x), fmt_float(snap.u[i])];
            if let Some(r) = &reference {
                row.push(fmt_float(r[i]));
            }
            row
        });
        write_csv(Some(&path), &header, rows)?;
        if let Some(r) = &reference {
            let diff: Vec<f64> = r.iter().zip(&snap.u).map(|(a, b)| a - b).collect();
            let e = trapezoid_norm(&diff, spec.dx()) / trapezoid_norm(r, spec.dx());
            println!("t = {}: relative l2 error {}", snap.time, fmt_float(e));
        }
    }
    let rows = out.step_seconds.iter().enumerate().map(|(i, s)| vec![(i + 1).to_string(), fmt_float(*s)]);
    write_csv(Some(&cfg.out_dir.join("timing.csv")), &["n", "step_seconds"], rows)?;
    println!(
        "{} {} J={} N={}: setup {:.3} s, total {:.3} s, max norm ratio {:.6}",
        spec.scheme,
        cfg.mode.name(),
        spec.j,
        spec.n_steps,
        out.setup_seconds,
        out.total_seconds,
        out.max_norm_ratio
    );
    if out.max_norm_ratio > cfg.norm_bound {
        log::warn!("norm grew to {} times its initial value (bound {})", out.max_norm_ratio, cfg.norm_bound);
        println!("warning: norm bound {} exceeded", cfg.norm_bound);
    }
    Ok(())
}

fn cmd_sweep(config: &Path, axis: SweepAxis, values: &[f64], metric: &str, stride: usize, out: Option<&Path>) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let metric = match metric {
        "final" => ErrorMetric::Final,
        "l2" => ErrorMetric::L2InTime { stride },
        other => return Err(Error::Config(format!("unknown metric `{other}`"))),
    };
    let result = sweep(&cfg.spec, cfg.mode, axis, values, metric);
    write_sweep_csv(out, &result)?;
    eprintln!("{}", sweep_summary(&result));
    Ok(())
}

fn cmd_kernels(spec: &ProblemSpec, nz: Option<usize>, cache_dir: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let nz = nz.unwrap_or_else(|| default_nodes(spec.n_steps, spec.radius));
    let set = build_kernels_cached(spec, nz, cache_dir)?;
    let mut rows = Vec::new();
    for n in 0..set.len() {
        for id in set.ids() {
            rows.push(vec![n.to_string(), id.to_string(), fmt_float(set.plain(id)[n]), fmt_float(set.xi(id)[n])]);
        }
    }
    write_csv(out, &["n", "kernel_id", "Y", "Y_xi"], rows)
}

fn cmd_roots(spec: &ProblemSpec, nz: Option<usize>, out: Option<&Path>) -> Result<()> {
    let track = track_roots(&spec.characteristic(), nz.unwrap_or(256))?;
    let mut rows = Vec::new();
    for (theta, roots) in track.theta.iter().zip(&track.roots) {
        for (k, r) in roots.iter().enumerate() {
            rows.push(vec![fmt_float(*theta), (k + 1).to_string(), fmt_float(r.re), fmt_float(r.im), fmt_float(r.norm())]);
        }
    }
    write_csv(out, &["theta", "k", "re", "im", "abs"], rows)
}

fn cmd_soe(kernel: KernelId, terms: usize, nu: usize, config: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let spec = load_spec(config, Some(kernel.scheme))?;
    let set = build_kernels_cached(&spec, default_nodes(spec.n_steps, spec.radius), None)?;
    let seq = set.xi(kernel);
    let fit = fit_soe(seq, terms, nu)?;
    if fit.terms() < terms {
        eprintln!("fit reduced to L = {}", fit.terms());
    }
    let rows = seq.iter().enumerate().map(|(n, &x)| {
        let xt = soe_eval(&fit, n);
        vec![n.to_string(), fmt_float(x), fmt_float(xt), fmt_float((x - xt).abs())]
    });
    write_csv(out, &["n", "X", "X_tilde", "abs_error"], rows)
}

fn cmd_reference(example: u8, time: f64, j: usize, out: Option<&Path>) -> Result<()> {
    let spec = match example {
        1 => ProblemSpec::example1(Scheme::Rcn, j, 2560),
        2 => ProblemSpec::example2(j, 2560),
        other => return Err(Error::Config(format!("unknown example {other} (expected 1 or 2)"))),
    };
    spec.validate()?;
    let grid = spec.grid();
    let u = match (example, time) {
        (_, t) if t == 0.0 => spec.initial.sample(&grid)?,
        (1, t) => exact_example1(t, &grid)?,
        (_, t) => exact_example2(t, &grid)?,
    };
    write_csv(out, &["x", "u_exact"], grid.iter().zip(&u).map(|(x, v)| vec![fmt_float(*x), fmt_float(*v)]))
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, exact, cache_dir } => cmd_run(&config, exact, cache_dir.as_deref()),
        Command::Sweep { config, axis, values, metric, stride, out } => cmd_sweep(&config, axis, &values, &metric, stride, out.as_deref()),
        Command::Kernels { action: DumpAction::Dump { scheme, config, nz, cache_dir, out } } => {
            let spec = load_spec(config.as_deref(), scheme)?;
            cmd_kernels(&spec, nz, cache_dir.as_deref(), out.as_deref())
        }
        Command::Roots { action: DumpAction::Dump { scheme, config, nz, out, .. } } => {
            let spec = load_spec(config.as_deref(), scheme)?;
            cmd_roots(&spec, nz, out.as_deref())
        }
        Command::Soe { action: SoeAction::Fit { kernel, terms, nu, config, out } } => cmd_soe(kernel, terms, nu, config.as_deref(), out.as_deref()),
        Command::Reference { action: ReferenceAction::Dump { example, time, j, out } } => cmd_reference(example, time, j, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
