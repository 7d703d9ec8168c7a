//! Measured counterparts of every a-priori property the systems satisfy:
//! mass balance, nonnegativity, the linear-in-time sup bound, total
//! variation, lumen-epithelium gaps, solution comparison and the
//! relaxation-limit study.
//!
//! Space integrals use the midpoint rule on cells (a cell sample is its
//! midpoint value) and time integrals use left endpoints, matching the
//! first-order stepper.

use std::thread;

use crate::data::ProblemData;
use crate::error::{Error, Result};
use crate::grid::{run_full, run_reduced, Grid1D, Trajectory3, Trajectory5};
use crate::layers::{build_limit_initial, LimitInit};
use crate::model::Params;
use crate::state::{State3, State5};

/// Midpoint-rule L1 norm of a cell-sampled field.
pub fn l1_norm(field: &[f64], dx: f64) -> f64 {
    field.iter().map(|v| v.abs()).sum::<f64>() * dx
}

/// Midpoint-rule L1 distance of two cell-sampled fields.
pub fn l1_dist(a: &[f64], b: &[f64], dx: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx
}

/// Discrete total variation of a sampled field.
pub fn total_variation(field: &[f64]) -> f64 {
    field.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Mass functional of the five-field system: the L1 mass of all five
/// concentration fields.
pub fn mass_functional(s: &State5, g: &Grid1D) -> f64 {
    s.fields().iter().map(|f| l1_norm(f, g.dx)).sum()
}

/// Mass counterpart for the three-field system; the merged tubule fields
/// carry their factor 2.
pub fn mass_functional_reduced(s: &State3, g: &Grid1D) -> f64 {
    2.0 * l1_norm(&s.u1, g.dx) + 2.0 * l1_norm(&s.u2, g.dx) + l1_norm(&s.u0, g.dx)
}

fn trace_index(t: f64, dt: f64) -> usize {
    (t / dt).round() as usize
}

/// Per-snapshot-interval mass-balance defect,
/// `H(t_next) - H(t_cur) + sum_k dt alpha (u2(t_k, 0) - ub(t_k))`
/// with the sum over the steps between the two snapshots. With snapshots at
/// every step this is the per-step residual; it vanishes at equilibrium and
/// is `O(dt^2)` on smooth solutions.
pub fn balance_residual(traj: &Trajectory5, p: &Params, g: &Grid1D) -> Result<Vec<f64>> {
    let h: Vec<f64> = traj.snaps.iter().map(|s| mass_functional(s, g)).collect();
    let times: Vec<f64> = traj.snaps.iter().map(|s| s.t).collect();
    residual_from_parts(&h, &times, &traj.boundary, p, g.dt)
}

/// Mass-balance defect of a reduced run; steps span `2 dt`.
pub fn balance_residual_reduced(
    traj: &Trajectory3,
    p: &Params,
    g: &Grid1D,
) -> Result<Vec<f64>> {
    let h: Vec<f64> = traj
        .snaps
        .iter()
        .map(|s| mass_functional_reduced(s, g))
        .collect();
    let times: Vec<f64> = traj.snaps.iter().map(|s| s.t).collect();
    residual_from_parts(&h, &times, &traj.boundary, p, 2.0 * g.dt)
}

fn residual_from_parts(
    h: &[f64],
    times: &[f64],
    boundary: &[crate::grid::TraceSample],
    p: &Params,
    step_dt: f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(h.len().saturating_sub(1));
    for j in 0..h.len().saturating_sub(1) {
        let k0 = trace_index(times[j], step_dt);
        let k1 = trace_index(times[j + 1], step_dt);
        if k1 > boundary.len() || k0 >= k1 {
            return Err(Error::MissingTrace(format!(
                "balance residual needs trace steps {k0}..{k1}, have {}",
                boundary.len()
            )));
        }
        let mut flux = 0.0;
        for sample in &boundary[k0..k1] {
            // factor-2 mass weight of u2 in the reduced system is offset by
            // its double step, so the same flux formula applies per sample:
            // alpha * weight * (outflow - inflow) with weight = mass carried
            // per unit trace value
            flux += step_dt * p.alpha * (sample.u2_at_0 - sample.ub);
        }
        out.push(h[j + 1] - h[j] + flux);
    }
    Ok(out)
}

/// Smallest sample over all snapshots and fields.
pub fn check_nonneg(traj: &Trajectory5) -> f64 {
    traj.snaps
        .iter()
        .flat_map(|s| s.fields().into_iter().flatten().copied().collect::<Vec<_>>())
        .fold(f64::INFINITY, f64::min)
}

pub fn check_nonneg_reduced(traj: &Trajectory3) -> f64 {
    traj.snaps
        .iter()
        .flat_map(|s| s.fields().into_iter().flatten().copied().collect::<Vec<_>>())
        .fold(f64::INFINITY, f64::min)
}

/// The growth constant of the sup bound: at least the pump sup, the boundary
/// sup and the initial data sup.
pub fn kappa(p: &Params, d: &ProblemData) -> f64 {
    p.g_sup().max(d.sup())
}

/// Worst ratio of a sample to `kappa (1 + t)` over a trajectory; at most 1
/// up to rounding when the sup bound holds.
pub fn check_linf(traj: &Trajectory5, p: &Params, d: &ProblemData) -> f64 {
    let k = kappa(p, d);
    worst_ratio(traj.snaps.iter().map(|s| {
        let hi = s
            .fields()
            .into_iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        (s.t, hi)
    }), k)
}

pub fn check_linf_reduced(traj: &Trajectory3, p: &Params, d: &ProblemData) -> f64 {
    let k = kappa(p, d);
    worst_ratio(traj.snaps.iter().map(|s| {
        let hi = s
            .fields()
            .into_iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        (s.t, hi)
    }), k)
}

fn worst_ratio(sups: impl Iterator<Item = (f64, f64)>, kappa: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (t, hi) in sups {
        let bound = kappa * (1.0 + t);
        let ratio = if bound > 0.0 {
            hi / bound
        } else if hi <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(ratio);
    }
    worst
}

/// Lumen-epithelium gaps per snapshot: `(t, |q1 - u1|_L1, |q2 - u2|_L1)`.
pub fn relaxation_gap(traj: &Trajectory5) -> Vec<(f64, f64, f64)> {
    let dx = traj.grid.dx;
    traj.snaps
        .iter()
        .map(|s| (s.t, l1_dist(&s.q1, &s.u1, dx), l1_dist(&s.q2, &s.u2, dx)))
        .collect()
}

/// Diagnostic time series of one five-field run.
#[derive(Debug, Clone)]
pub struct DiagnosticSeries {
    pub t: Vec<f64>,
    /// Mass functional per snapshot.
    pub h: Vec<f64>,
    pub min_val: Vec<f64>,
    pub max_val: Vec<f64>,
    /// Spatial total variation per snapshot, one entry per field.
    pub tv_x: Vec<Vec<f64>>,
    /// Temporal variation per field, accumulated over snapshots and weighted
    /// by dx (an L1-in-space measure of the time derivative mass).
    pub tv_t: Vec<f64>,
    /// Mass-balance defect per snapshot; the first entry is zero.
    pub balance_residual: Vec<f64>,
    /// `(|q1 - u1|_L1, |q2 - u2|_L1)` per snapshot; empty for reduced runs.
    pub gaps: Vec<(f64, f64)>,
}

impl DiagnosticSeries {
    pub fn from_full(traj: &Trajectory5, p: &Params, g: &Grid1D) -> Result<Self> {
        let residual = balance_residual(traj, p, g)?;
        let mut series = DiagnosticSeries {
            t: Vec::new(),
            h: Vec::new(),
            min_val: Vec::new(),
            max_val: Vec::new(),
            tv_x: Vec::new(),
            tv_t: vec![0.0; 5],
            balance_residual: std::iter::once(0.0).chain(residual).collect(),
            gaps: Vec::new(),
        };
        let dx = g.dx;
        for (j, s) in traj.snaps.iter().enumerate() {
            let fields = s.fields();
            series.t.push(s.t);
            series.h.push(mass_functional(s, g));
            series
                .min_val
                .push(fields.iter().flat_map(|f| f.iter().copied()).fold(f64::INFINITY, f64::min));
            series.max_val.push(
                fields.iter().flat_map(|f| f.iter().copied()).fold(f64::NEG_INFINITY, f64::max),
            );
            series.tv_x.push(fields.iter().map(|f| total_variation(f)).collect());
            series.gaps.push((l1_dist(&s.q1, &s.u1, dx), l1_dist(&s.q2, &s.u2, dx)));
            if j > 0 {
                let prev = &traj.snaps[j - 1];
                for (fi, (now, before)) in fields.iter().zip(prev.fields()).enumerate() {
                    series.tv_t[fi] += l1_dist(now, before, dx);
                }
            }
        }
        Ok(series)
    }

    pub fn from_reduced(traj: &Trajectory3, p: &Params, g: &Grid1D) -> Result<Self> {
        let residual = balance_residual_reduced(traj, p, g)?;
        let mut series = DiagnosticSeries {
            t: Vec::new(),
            h: Vec::new(),
            min_val: Vec::new(),
            max_val: Vec::new(),
            tv_x: Vec::new(),
            tv_t: vec![0.0; 3],
            balance_residual: std::iter::once(0.0).chain(residual).collect(),
            gaps: Vec::new(),
        };
        let dx = g.dx;
        for (j, s) in traj.snaps.iter().enumerate() {
            let fields = s.fields();
            series.t.push(s.t);
            series.h.push(mass_functional_reduced(s, g));
            series
                .min_val
                .push(fields.iter().flat_map(|f| f.iter().copied()).fold(f64::INFINITY, f64::min));
            series.max_val.push(
                fields.iter().flat_map(|f| f.iter().copied()).fold(f64::NEG_INFINITY, f64::max),
            );
            series.tv_x.push(fields.iter().map(|f| total_variation(f)).collect());
            if j > 0 {
                let prev = &traj.snaps[j - 1];
                for (fi, (now, before)) in fields.iter().zip(prev.fields()).enumerate() {
                    series.tv_t[fi] += l1_dist(now, before, dx);
                }
            }
        }
        Ok(series)
    }
}

/// Space-time L1 distance of two snapshot sequences on one grid, matched by
/// snapshot time; time integration by left endpoints. `pick` selects the
/// compared quantity from each snapshot pair (spatial weighting included).
fn spacetime_l1<S, T>(a: &[S], b: &[T], dt_key: f64, pick: impl Fn(&S, &T) -> f64) -> f64
where
    S: HasTime,
    T: HasTime,
{
    // match snapshots by their lattice time index
    let mut bi = 0usize;
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for sa in a {
        let ka = trace_index(sa.time(), dt_key);
        while bi < b.len() && trace_index(b[bi].time(), dt_key) < ka {
            bi += 1;
        }
        if bi < b.len() && trace_index(b[bi].time(), dt_key) == ka {
            pairs.push((sa.time(), pick(sa, &b[bi])));
        }
    }
    let mut acc = 0.0;
    for j in 0..pairs.len().saturating_sub(1) {
        acc += (pairs[j + 1].0 - pairs[j].0) * pairs[j].1;
    }
    acc
}

trait HasTime {
    fn time(&self) -> f64;
}
impl HasTime for State5 {
    fn time(&self) -> f64 {
        self.t
    }
}
impl HasTime for State3 {
    fn time(&self) -> f64 {
        self.t
    }
}

/// Relaxation-limit report: per-epsilon gaps and distances to the reduced
/// solution, with log-log order fits.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub eps_list: Vec<f64>,
    /// Space-time L1 gap between `q1` and `u1` per epsilon.
    pub gap_q1u1: Vec<f64>,
    pub gap_q2u2: Vec<f64>,
    /// Space-time L1 distance of each full-system field to the reduced one.
    pub dist_u1: Vec<f64>,
    pub dist_u2: Vec<f64>,
    pub dist_u0: Vec<f64>,
    /// Least-squares slopes in log-log, excluding the largest epsilon;
    /// absent when fewer than two usable points remain.
    pub order_gap_q1u1: Option<f64>,
    pub order_gap_q2u2: Option<f64>,
    pub order_dist_u1: Option<f64>,
    pub order_dist_u2: Option<f64>,
    pub order_dist_u0: Option<f64>,
}

/// Least-squares slope of `log y` against `log x`, excluding the first
/// (pre-asymptotic) point.
pub fn fit_order(eps: &[f64], vals: &[f64]) -> Option<f64> {
    if eps.len() != vals.len() || eps.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = eps[1..].iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = vals[1..].iter().map(|v| v.max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Runs the five-field system for every epsilon in `eps_list` (strictly
/// decreasing), the limit system once, and reports space-time gaps and
/// distances with order fits. Runs are independent and are distributed over
/// at most `threads` worker threads; the report order follows `eps_list`.
pub fn convergence_study(
    p: &Params,
    d: &ProblemData,
    g: &Grid1D,
    eps_list: &[f64],
    threads: usize,
) -> Result<ConvergenceReport> {
    if eps_list.is_empty() {
        return Err(Error::Config("eps_list must not be empty".into()));
    }
    if eps_list.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::Config("eps_list must be strictly decreasing".into()));
    }

    let reduced = run_reduced(p, d, g, 1, build_limit_initial(d, g, LimitInit::Average))?;

    // full runs on stride 2 so snapshots land on the reduced 2dt lattice
    let mut trajs: Vec<Option<Result<Trajectory5>>> = (0..eps_list.len()).map(|_| None).collect();
    let workers = threads.max(1).min(eps_list.len());
    thread::scope(|scope| {
        let mut handles = Vec::new();
        for (chunk_idx, chunk) in eps_list.chunks(eps_list.len().div_ceil(workers)).enumerate() {
            let chunk = chunk.to_vec();
            handles.push((
                chunk_idx,
                chunk.len(),
                scope.spawn(move || {
                    chunk
                        .into_iter()
                        .map(|eps| {
                            let pe = p.with_eps(eps)?;
                            run_full(&pe, d, g, 2)
                        })
                        .collect::<Vec<_>>()
                }),
            ));
        }
        let chunk_size = eps_list.len().div_ceil(workers);
        for (chunk_idx, _, handle) in handles {
            let results = handle.join().expect("sweep worker panicked");
            for (off, r) in results.into_iter().enumerate() {
                trajs[chunk_idx * chunk_size + off] = Some(r);
            }
        }
    });

    let mut report = ConvergenceReport {
        eps_list: eps_list.to_vec(),
        gap_q1u1: Vec::new(),
        gap_q2u2: Vec::new(),
        dist_u1: Vec::new(),
        dist_u2: Vec::new(),
        dist_u0: Vec::new(),
        order_gap_q1u1: None,
        order_gap_q2u2: None,
        order_dist_u1: None,
        order_dist_u2: None,
        order_dist_u0: None,
    };
    let dx = g.dx;
    let key = g.dt;
    for slot in trajs {
        let traj = slot.expect("all sweep slots filled")?;
        report.gap_q1u1.push(spacetime_l1(&traj.snaps, &traj.snaps, key, |a, _| {
            l1_dist(&a.q1, &a.u1, dx)
        }));
        report.gap_q2u2.push(spacetime_l1(&traj.snaps, &traj.snaps, key, |a, _| {
            l1_dist(&a.q2, &a.u2, dx)
        }));
        report.dist_u1.push(spacetime_l1(&traj.snaps, &reduced.snaps, key, |a, b| {
            l1_dist(&a.u1, &b.u1, dx)
        }));
        report.dist_u2.push(spacetime_l1(&traj.snaps, &reduced.snaps, key, |a, b| {
            l1_dist(&a.u2, &b.u2, dx)
        }));
        report.dist_u0.push(spacetime_l1(&traj.snaps, &reduced.snaps, key, |a, b| {
            l1_dist(&a.u0, &b.u0, dx)
        }));
    }
    report.order_gap_q1u1 = fit_order(eps_list, &report.gap_q1u1);
    report.order_gap_q2u2 = fit_order(eps_list, &report.gap_q2u2);
    report.order_dist_u1 = fit_order(eps_list, &report.dist_u1);
    report.order_dist_u2 = fit_order(eps_list, &report.dist_u2);
    report.order_dist_u0 = fit_order(eps_list, &report.dist_u0);
    Ok(report)
}

/// Slack of the solution-comparison estimate for a pair of runs: the bound
/// `|U01 - U02|_L1 + alpha |ub1 - ub2|_L1` minus the measured space-time L1
/// distance. Nonnegative (up to `O(dx)`) when the comparison principle
/// holds.
pub fn comparison_residual(
    run1: &Trajectory5,
    run2: &Trajectory5,
    d1: &ProblemData,
    d2: &ProblemData,
    p: &Params,
) -> Result<f64> {
    if run1.grid != run2.grid {
        return Err(Error::GridMismatch("comparison needs a shared grid".into()));
    }
    let g = run1.grid;
    let lhs = spacetime_l1(&run1.snaps, &run2.snaps, g.dt, |a, b| {
        a.fields()
            .iter()
            .zip(b.fields())
            .map(|(fa, fb)| l1_dist(fa, fb, g.dx))
            .sum()
    });
    let s1 = State5::from_data(d1, &g);
    let s2 = State5::from_data(d2, &g);
    let init_dist: f64 = s1
        .fields()
        .iter()
        .zip(s2.fields())
        .map(|(fa, fb)| l1_dist(fa, fb, g.dx))
        .sum();
    let ub_dist: f64 = run1
        .boundary
        .iter()
        .map(|tr| g.dt * (d1.ub_at(tr.t) - d2.ub_at(tr.t)).abs())
        .sum();
    Ok(init_dist + p.alpha * ub_dist - lhs)
}

/// Space-time L1 distance between the grid solver and the characteristics
/// solver on the same problem, summed over the five fields.
pub fn cross_validate(
    p: &Params,
    d: &ProblemData,
    g: &Grid1D,
    cfg: &crate::characteristics::PicardConfig,
) -> Result<f64> {
    let grid_traj = run_full(p, d, g, 1)?;
    let mild_traj = crate::characteristics::picard_solve(p, d, g, cfg, 1)?;
    Ok(spacetime_l1(&grid_traj.snaps, &mild_traj.snaps, g.dt, |a, b| {
        a.fields()
            .iter()
            .zip(b.fields())
            .map(|(fa, fb)| l1_dist(fa, fb, g.dx))
            .sum()
    }))
}
