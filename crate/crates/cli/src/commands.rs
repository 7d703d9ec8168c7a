//! Subcommand orchestration and exit-code policy.
//!
//! Exit codes: 0 success, 1 usage, 2 configuration/validation, 3 invariant
//! failure, 4 runtime (solver or I/O).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use henle_core::characteristics::{picard_solve_with_stats, PicardConfig};
use henle_core::diagnostics::{
    self, check_linf, check_linf_reduced, check_nonneg, check_nonneg_reduced, DiagnosticSeries,
};
use henle_core::grid::{run_full, run_reduced, Grid1D, Trajectory3, Trajectory5};
use henle_core::layers::{build_limit_initial, regularize, RegularizationParams};
use henle_core::{presets, Params, ProblemData, Profile};

use crate::config::{manifest, parse_config, parse_eps_list, DataSpec, ModelChoice, RunConfig};
use crate::csv;

/// Failure modes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Invariant(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Validation(m)
            | CliError::Invariant(m)
            | CliError::Runtime(m) => m,
        }
    }
}

impl From<henle_core::Error> for CliError {
    fn from(e: henle_core::Error) -> Self {
        use henle_core::Error::*;
        match e {
            InvalidParams(_) | InvalidData(_) | Config(_) | GridMismatch(_) => {
                CliError::Validation(e.to_string())
            }
            NonFinite { .. } | DomainError(_) | NonContraction { .. } | MissingTrace(_) => {
                CliError::Runtime(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }
}

#[derive(Parser)]
#[command(
    name = "henle",
    about = "Countercurrent sodium-transport solvers and verification runs",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the configured model(s) and write field, boundary and
    /// invariant tables.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `out_dir` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the relaxation parameter and compare against the reduced model.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated strictly decreasing eps values (overrides
        /// `eps_list` from the config).
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured model and verify nonnegativity, the sup bound and
    /// mass balance; nonzero exit when any check fails.
    CheckInvariants {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve with both solvers and report their space-time L1 distance.
    CrossValidate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` and executes; returns the process exit code.
pub fn run_command<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message (including --help output)
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.cmd {
        Cmd::Simulate { config, out } => simulate(&config, out.as_deref()),
        Cmd::Converge { config, eps, out } => converge(&config, eps.as_deref(), out.as_deref()),
        Cmd::CheckInvariants { config } => check_invariants(&config),
        Cmd::CrossValidate { config, out } => cross_validate_cmd(&config, out.as_deref()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Validation(format!("cannot read config {}: {e}", path.display()))
    })?;
    parse_config(&text).map_err(CliError::Validation)
}

/// Builds the run's data set: preset or files, then optional regularization.
pub fn build_data(cfg: &RunConfig) -> Result<ProblemData, CliError> {
    let p = &cfg.params;
    let d = match &cfg.data {
        DataSpec::Preset { name } => match name.as_str() {
            "constant" => presets::constant(cfg.constant_value, p.length, p.t_final),
            "step" => presets::step(p.length, p.t_final),
            "bump" => presets::bump(p.length, p.t_final),
            "random-bv" => presets::random_bv(cfg.seed, p.length, p.t_final),
            other => return Err(CliError::Validation(format!("unknown preset '{other}'"))),
        },
        DataSpec::File { data, ub } => load_data_files(data, ub.as_deref(), p)?,
    };
    if cfg.regularize {
        let r = RegularizationParams::default_for(&d, cfg.delta).map_err(CliError::from)?;
        Ok(regularize(&d, &r)?)
    } else {
        Ok(d)
    }
}

/// Reads initial profiles from a CSV with header `x,u1_0,u2_0,q1_0,q2_0,u0_0`
/// on uniformly spaced ascending positions, and optionally the boundary
/// trace from a CSV with header `t,ub`.
fn load_data_files(
    data: &Path,
    ub: Option<&Path>,
    p: &Params,
) -> Result<ProblemData, CliError> {
    let (xs, cols) = read_table(data, &["x", "u1_0", "u2_0", "q1_0", "q2_0", "u0_0"])?;
    let h = uniform_spacing(&xs)
        .ok_or_else(|| CliError::Validation(format!("{}: x must be uniformly spaced", data.display())))?;
    let prof = |j: usize| Profile::SampledLinear { x0: xs[0], h, values: cols[j].clone() };
    let ub_profile = match ub {
        Some(path) => {
            let (ts, ubcols) = read_table(path, &["t", "ub"])?;
            let ht = uniform_spacing(&ts).ok_or_else(|| {
                CliError::Validation(format!("{}: t must be uniformly spaced", path.display()))
            })?;
            Profile::SampledLinear { x0: ts[0], h: ht, values: ubcols[0].clone() }
        }
        None => Profile::Constant(cols[0].first().copied().unwrap_or(0.0)),
    };
    ProblemData::new(
        prof(0),
        prof(1),
        prof(2),
        prof(3),
        prof(4),
        ub_profile,
        p.length,
        p.t_final,
    )
    .map_err(CliError::from)
}

/// Reads a CSV with the given header; returns the first column and the rest.
fn read_table(path: &Path, header: &[&str]) -> Result<(Vec<f64>, Vec<Vec<f64>>), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let first = lines
        .next()
        .ok_or_else(|| CliError::Validation(format!("{}: empty file", path.display())))?;
    let expect = header.join(",");
    if first.trim() != expect {
        return Err(CliError::Validation(format!(
            "{}: expected header '{expect}', got '{first}'",
            path.display()
        )));
    }
    let mut axis = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len() - 1];
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != header.len() {
            return Err(CliError::Validation(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                idx + 2,
                parts.len(),
                header.len()
            )));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.trim().parse().map_err(|_| {
                CliError::Validation(format!("{}: bad number '{s}'", path.display()))
            })
        };
        axis.push(parse(parts[0])?);
        for (c, part) in cols.iter_mut().zip(&parts[1..]) {
            c.push(parse(part)?);
        }
    }
    if axis.len() < 2 {
        return Err(CliError::Validation(format!(
            "{}: need at least two rows",
            path.display()
        )));
    }
    Ok((axis, cols))
}

fn uniform_spacing(xs: &[f64]) -> Option<f64> {
    let h = xs[1] - xs[0];
    if h.is_nan() || h <= 0.0 {
        return None;
    }
    let ok = xs
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.max(1.0));
    ok.then_some(h)
}

fn out_dir<'a>(cfg: &'a RunConfig, flag: Option<&'a Path>) -> Result<&'a Path, CliError> {
    flag.or(cfg.out_dir.as_deref()).ok_or_else(|| {
        CliError::Validation("no output directory: pass --out or set out_dir".into())
    })
}

fn threads_from_env(jobs: usize) -> Result<usize, CliError> {
    match std::env::var("HENLE_THREADS") {
        Ok(v) => {
            let t: usize = v.parse().map_err(|_| {
                CliError::Validation(format!("HENLE_THREADS must be a positive integer, got '{v}'"))
            })?;
            if t == 0 {
                return Err(CliError::Validation("HENLE_THREADS must be at least 1".into()));
            }
            Ok(t.min(jobs))
        }
        Err(_) => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
            .min(jobs)),
    }
}

struct RunArtifacts {
    full: Option<Trajectory5>,
    reduced: Option<Trajectory3>,
}

fn execute_runs(cfg: &RunConfig, d: &ProblemData, g: &Grid1D) -> Result<RunArtifacts, CliError> {
    let p = &cfg.params;
    let full = match cfg.model {
        ModelChoice::Full | ModelChoice::Both => {
            Some(run_full(p, d, g, cfg.snapshot_stride)?)
        }
        ModelChoice::Reduced => None,
    };
    let reduced = match cfg.model {
        ModelChoice::Reduced | ModelChoice::Both => {
            let init = build_limit_initial(d, g, cfg.limit_init);
            Some(run_reduced(p, d, g, cfg.snapshot_stride, init)?)
        }
        ModelChoice::Full => None,
    };
    Ok(RunArtifacts { full, reduced })
}

fn simulate(config: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let dir = out_dir(&cfg, out)?.to_path_buf();
    fs::create_dir_all(&dir)?;
    let d = build_data(&cfg)?;
    let g = Grid1D::new(&cfg.params, cfg.n)?;
    let runs = execute_runs(&cfg, &d, &g)?;

    let suffix = |base: &str| -> (String, String) {
        match cfg.model {
            ModelChoice::Both => (format!("{base}_full.csv"), format!("{base}_reduced.csv")),
            _ => (format!("{base}.csv"), format!("{base}.csv")),
        }
    };
    if let Some(full) = &runs.full {
        let (name, _) = suffix("fields");
        csv::write_fields_full(full, &dir.join(name))?;
        let (name, _) = suffix("boundary");
        csv::write_boundary(&full.boundary, &dir.join(name))?;
        let series = DiagnosticSeries::from_full(full, &cfg.params, &g)?;
        let (name, _) = suffix("invariants");
        csv::write_invariants(&series, &dir.join(name))?;
    }
    if let Some(reduced) = &runs.reduced {
        let (_, name) = suffix("fields");
        csv::write_fields_reduced(reduced, &dir.join(name))?;
        let (_, name) = suffix("boundary");
        csv::write_boundary(&reduced.boundary, &dir.join(name))?;
        let series = DiagnosticSeries::from_reduced(reduced, &cfg.params, &g)?;
        let (_, name) = suffix("invariants");
        csv::write_invariants(&series, &dir.join(name))?;
    }
    fs::write(dir.join("manifest.txt"), manifest(&cfg))?;
    println!("wrote {} ({} model)", dir.display(), cfg.model.as_str());
    Ok(())
}

fn converge(config: &Path, eps: Option<&str>, out: Option<&Path>) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let dir = out_dir(&cfg, out)?.to_path_buf();
    let eps_list = match eps {
        Some(text) => parse_eps_list(text).map_err(CliError::Validation)?,
        None => cfg.eps_list.clone(),
    };
    if eps_list.is_empty() {
        return Err(CliError::Validation(
            "converge needs eps values: pass --eps or set eps_list".into(),
        ));
    }
    fs::create_dir_all(&dir)?;
    let d = build_data(&cfg)?;
    let g = Grid1D::new(&cfg.params, cfg.n)?;
    let threads = threads_from_env(eps_list.len())?;
    let report = diagnostics::convergence_study(&cfg.params, &d, &g, &eps_list, threads)?;
    let mut echoed = cfg.clone();
    echoed.eps_list = eps_list;
    csv::write_convergence(&report, &dir.join("convergence.csv"))?;
    fs::write(dir.join("manifest.txt"), manifest(&echoed))?;
    for (j, eps) in report.eps_list.iter().enumerate() {
        println!(
            "eps = {:9.3e}: gap_q1u1 = {:.3e}, dist_u1 = {:.3e}",
            eps, report.gap_q1u1[j], report.dist_u1[j]
        );
    }
    if let Some(o) = report.order_dist_u1 {
        println!("fitted order of dist_u1: {o:.3}");
    }
    Ok(())
}

/// Tolerances of the lemma checks.
const NONNEG_TOL: f64 = 1e-12;
const LINF_TOL: f64 = 1e-9;

fn check_invariants(config: &Path) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let d = build_data(&cfg)?;
    let g = Grid1D::new(&cfg.params, cfg.n)?;
    let runs = execute_runs(&cfg, &d, &g)?;
    let mut failures: Vec<String> = Vec::new();

    let mut verdict = |name: &str, ok: bool, detail: String| {
        println!("{} {name}: {detail}", if ok { "ok" } else { "FAIL" });
        if !ok {
            failures.push(format!("{name} ({detail})"));
        }
    };

    if let Some(full) = &runs.full {
        let min = check_nonneg(full);
        verdict("nonnegativity(full)", min >= -NONNEG_TOL, format!("min sample {min:.3e}"));
        let ratio = check_linf(full, &cfg.params, &d);
        verdict(
            "sup-bound(full)",
            ratio <= 1.0 + LINF_TOL,
            format!("worst sample / kappa(1+t) = {ratio:.12}"),
        );
        let series = DiagnosticSeries::from_full(full, &cfg.params, &g)?;
        let (worst, bound) = balance_excess(&series, &g, 1.0);
        verdict(
            "mass-balance(full)",
            worst <= bound,
            format!("worst residual {worst:.3e} vs bound {bound:.3e}"),
        );
    }
    if let Some(reduced) = &runs.reduced {
        let min = check_nonneg_reduced(reduced);
        verdict("nonnegativity(reduced)", min >= -NONNEG_TOL, format!("min sample {min:.3e}"));
        let ratio = check_linf_reduced(reduced, &cfg.params, &d);
        verdict(
            "sup-bound(reduced)",
            ratio <= 1.0 + LINF_TOL,
            format!("worst sample / kappa(1+t) = {ratio:.12}"),
        );
        let series = DiagnosticSeries::from_reduced(reduced, &cfg.params, &g)?;
        let (worst, bound) = balance_excess(&series, &g, 2.0);
        verdict(
            "mass-balance(reduced)",
            worst <= bound,
            format!("worst residual {worst:.3e} vs bound {bound:.3e}"),
        );
    }

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(format!("checks failed: {}", failures.join(", "))))
    }
}

/// Worst mass-balance residual of a series and its a-priori bound: the
/// residual of this scheme is the outflow-trace mismatch, at most
/// `weight * dx * TV(u1)` per step.
fn balance_excess(series: &DiagnosticSeries, g: &Grid1D, weight: f64) -> (f64, f64) {
    let worst = series
        .balance_residual
        .iter()
        .fold(0.0f64, |a, &b| a.max(b.abs()));
    let tv_u1 = series
        .tv_x
        .iter()
        .map(|row| row[0])
        .fold(0.0f64, f64::max);
    // snapshots may be strided: bound per interval, not per step
    let max_steps_between = {
        let mut worst_gap = 1.0f64;
        for w in series.t.windows(2) {
            worst_gap = worst_gap.max(((w[1] - w[0]) / g.dt).round());
        }
        worst_gap
    };
    let bound = max_steps_between * weight * g.dx * (tv_u1 + 1e-9) + 1e-12;
    (worst, bound)
}

fn cross_validate_cmd(config: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let d = build_data(&cfg)?;
    let g = Grid1D::new(&cfg.params, cfg.n)?;
    let mut pc = match cfg.picard.window {
        Some(w) => PicardConfig::with_window(&cfg.params, &g, w, cfg.picard.tol, cfg.picard.max_iter)?,
        None => {
            let mut pc = PicardConfig::for_params(&cfg.params, &g)?;
            pc.tol = cfg.picard.tol;
            pc.max_iter = cfg.picard.max_iter;
            pc
        }
    };
    pc.literal_q2_coupling = cfg.picard.literal_q2_coupling;

    let grid_traj = run_full(&cfg.params, &d, &g, 1)?;
    let (mild_traj, stats) = picard_solve_with_stats(&cfg.params, &d, &g, &pc, 1)?;
    let dist = spacetime_distance(&grid_traj, &mild_traj, &g);
    println!(
        "cross-validation: L1 distance {dist:.6e} over {} steps ({} windows, max {} sweeps, max ratio {:.3})",
        g.steps, stats.windows, stats.max_iterations, stats.max_ratio
    );
    if let Some(dir) = out.or(cfg.out_dir.as_deref()) {
        fs::create_dir_all(dir)?;
        csv::write_crossval(
            cfg.params.eps,
            cfg.n,
            pc.window_steps(&g),
            dist,
            &dir.join("crossval.csv"),
        )?;
        fs::write(dir.join("manifest.txt"), manifest(&cfg))?;
    }
    Ok(())
}

fn spacetime_distance(a: &Trajectory5, b: &Trajectory5, g: &Grid1D) -> f64 {
    use henle_core::diagnostics::l1_dist;
    let mut acc = 0.0;
    let m = a.snaps.len().min(b.snaps.len());
    for j in 0..m.saturating_sub(1) {
        let w = a.snaps[j + 1].t - a.snaps[j].t;
        let sum: f64 = a.snaps[j]
            .fields()
            .iter()
            .zip(b.snaps[j].fields())
            .map(|(fa, fb)| l1_dist(fa, fb, g.dx))
            .sum();
        acc += w * sum;
    }
    acc
}
