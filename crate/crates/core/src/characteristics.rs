//! Mild-solution solver: Duhamel formulas along characteristics, iterated to
//! a fixed point window by window.
//!
//! For a frozen iterate the lumen fields are given in closed form by
//! integration along their characteristics with the memory kernel
//! `exp(-(t-s)/eps)` (the inflow branch picks up the boundary datum for `u1`
//! and the `u1` trace at `x = L` for `u2`), while the static fields solve
//! uncoupled linear ODEs with kernels `exp(-(1/eps + K_i)(t-s))` and
//! `exp(-(K1 + K2)(t-s))`. Re-solving with the previous iterate frozen
//! contracts on windows shorter than `min(1/eta, eps/C)` with
//! `eta = K1 + K2 + 1/eps`, so marching windows covers any horizon.
//!
//! Iterates are sampled on the same characteristic-aligned lattice the grid
//! solver uses, so characteristics pass through nodes and no spatial
//! interpolation is needed. All Duhamel integrals use a trapezoid-class rule
//! with the exponential kernel integrated exactly per segment (the iterate is
//! taken piecewise linear); this keeps the quadrature meaningful for
//! arbitrarily stiff kernels and reproduces constant data to machine
//! precision.

use crate::data::ProblemData;
use crate::error::{Error, Result};
use crate::grid::{Grid1D, TraceSample, Trajectory5};
use crate::model::{g_unchecked, Params};
use crate::state::State5;

/// Fixed-point iteration configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    /// Window length, s; snapped down to a whole number of lattice steps.
    pub window: f64,
    /// Stopping tolerance on the discrete L1 distance of successive iterates.
    pub tol: f64,
    /// Iteration cap per window; exceeding it signals a misconfigured window.
    pub max_iter: usize,
    /// Contraction rate `K1 + K2 + 1/eps`, 1/s.
    pub eta: f64,
    /// Reproduce the literal `K1 u0` coupling in the `q2` integral instead of
    /// the `K2 u0` coupling the differential system carries.
    pub literal_q2_coupling: bool,
}

impl PicardConfig {
    /// Largest admissible window: `min(1/eta, eps/C)` with
    /// `C = 1 + K1 + K2 + sup G'`.
    pub fn contraction_bound(p: &Params) -> f64 {
        let eta = p.k1 + p.k2 + 1.0 / p.eps;
        let c_g = 1.0 + p.k1 + p.k2 + p.g_prime_sup();
        (1.0 / eta).min(p.eps / c_g)
    }

    /// Default configuration: half the contraction bound as window,
    /// `tol = 1e-10`, 60 iterations.
    pub fn for_params(p: &Params, g: &Grid1D) -> Result<Self> {
        Self::with_window(p, g, 0.5 * Self::contraction_bound(p), 1e-10, 60)
    }

    /// Validates a window against the contraction bound and the lattice.
    pub fn with_window(
        p: &Params,
        g: &Grid1D,
        window: f64,
        tol: f64,
        max_iter: usize,
    ) -> Result<Self> {
        let bound = Self::contraction_bound(p);
        if window.is_nan() || window <= 0.0 || window >= bound {
            return Err(Error::Config(format!(
                "window {window} outside the contraction range (0, {bound})"
            )));
        }
        if window < g.dt {
            return Err(Error::Config(format!(
                "window {window} shorter than one lattice step {}; refine the grid",
                g.dt
            )));
        }
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::Config("tol must be > 0".into()));
        }
        Ok(PicardConfig {
            window,
            tol,
            max_iter,
            eta: p.k1 + p.k2 + 1.0 / p.eps,
            literal_q2_coupling: false,
        })
    }

    /// Window length in lattice steps (at least 1).
    pub fn window_steps(&self, g: &Grid1D) -> usize {
        ((self.window / g.dt) as usize).max(1)
    }
}

/// Everything a Duhamel evaluation needs besides the frozen iterate: the
/// window's start time, its initial state and the global problem data.
#[derive(Clone, Copy)]
pub struct WindowCtx<'a> {
    pub p: &'a Params,
    pub g: &'a Grid1D,
    pub d: &'a ProblemData,
    /// Absolute time of the window's level 0.
    pub t0: f64,
    /// State at level 0.
    pub init: &'a State5,
}

/// One exponentially weighted segment: the integral of `exp(-a age) f(age)`
/// over `age` in `[near_age, near_age + h]`, with `f` linear from `f_near`
/// to `f_far`.
fn seg_exp(a: f64, near_age: f64, h: f64, f_near: f64, f_far: f64) -> f64 {
    let z = a * h;
    // w_near = int_0^1 e^{-z s} (1 - s) ds, w_far = int_0^1 e^{-z s} s ds,
    // by series for small z to dodge the cancellation in the closed forms
    let (w_near, w_far) = if z < 1e-3 {
        (
            0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0,
            0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0,
        )
    } else {
        let ez = (-z).exp();
        let az = (1.0 - ez) / z;
        let bz = (1.0 - ez * (1.0 + z)) / (z * z);
        (az - bz, bz)
    };
    (-a * near_age).exp() * h * (f_near * w_near + f_far * w_far)
}

/// Lumen field `u1` at window level `k`, cell `i`, from the frozen
/// epithelial iterate `prev_q1[level][cell]`.
///
/// For `x > alpha t` (here `i >= k`) the initial profile decays with weight
/// `exp(-t/eps)` plus the memory integral along the rightgoing
/// characteristic; otherwise the boundary datum enters at the foot of the
/// characteristic and the memory integral runs in space.
pub fn duhamel_u1(ctx: &WindowCtx, prev_q1: &[Vec<f64>], k: usize, i: usize) -> Result<f64> {
    if prev_q1.len() <= k {
        return Err(Error::MissingTrace(format!(
            "iterate has {} levels, need {}",
            prev_q1.len(),
            k + 1
        )));
    }
    let (p, g) = (ctx.p, ctx.g);
    if i >= k {
        let a = 1.0 / p.eps;
        let t_k = k as f64 * g.dt;
        let mut mem = 0.0;
        for j in (0..k).rev() {
            // segment between levels j+1 (near end of the kernel) and j; the
            // characteristic foot at level j is cell i - (k - j)
            let near_age = (k - j - 1) as f64 * g.dt;
            mem += seg_exp(
                a,
                near_age,
                g.dt,
                prev_q1[j + 1][i - (k - j - 1)],
                prev_q1[j][i - (k - j)],
            );
        }
        Ok(ctx.init.u1[i - k] * (-t_k * a).exp() + a * mem)
    } else {
        // the characteristic through (t_k, x_i) met x = 0 at t0 + t_k - x_i/alpha
        let ax = 1.0 / (p.alpha * p.eps);
        let x_i = g.center(i);
        let t_enter = ctx.t0 + k as f64 * g.dt - x_i / p.alpha;
        let mut mem = 0.0;
        for m in (0..i).rev() {
            // segment between cells m+1 (near) and m; the iterate level at
            // cell m is k - (i - m)
            let near_age = (i - m - 1) as f64 * g.dx;
            mem += seg_exp(
                ax,
                near_age,
                g.dx,
                prev_q1[k - (i - m - 1)][m + 1],
                prev_q1[k - (i - m)][m],
            );
        }
        // half-cell tail [0, dx/2], constant continuation of the first cell
        let f0 = prev_q1[k - i][0];
        mem += seg_exp(ax, i as f64 * g.dx, 0.5 * g.dx, f0, f0);
        Ok(ctx.d.ub_at(t_enter) * (-ax * x_i).exp() + ax * mem)
    }
}

/// Lumen field `u2` at window level `k`, cell `i`, from the frozen iterate
/// `prev_q2` and the current-sweep `u1` trace at the last cell,
/// `u1_trace_at_l[level]`.
pub fn duhamel_u2(
    ctx: &WindowCtx,
    prev_q2: &[Vec<f64>],
    u1_trace_at_l: &[f64],
    k: usize,
    i: usize,
) -> Result<f64> {
    if prev_q2.len() <= k {
        return Err(Error::MissingTrace(format!(
            "iterate has {} levels, need {}",
            prev_q2.len(),
            k + 1
        )));
    }
    if i + k < ctx.g.n {
        Ok(duhamel_u2_interior(ctx, prev_q2, k, i))
    } else {
        duhamel_u2_boundary(ctx, prev_q2, u1_trace_at_l, k, i)
    }
}

/// Initial-data branch of `u2` (`x < L - alpha t`): leftgoing twin of the
/// `u1` initial branch.
fn duhamel_u2_interior(ctx: &WindowCtx, prev_q2: &[Vec<f64>], k: usize, i: usize) -> f64 {
    let (p, g) = (ctx.p, ctx.g);
    let a = 1.0 / p.eps;
    let t_k = k as f64 * g.dt;
    let mut mem = 0.0;
    for j in (0..k).rev() {
        let near_age = (k - j - 1) as f64 * g.dt;
        mem += seg_exp(
            a,
            near_age,
            g.dt,
            prev_q2[j + 1][i + (k - j - 1)],
            prev_q2[j][i + (k - j)],
        );
    }
    ctx.init.u2[i + k] * (-t_k * a).exp() + a * mem
}

/// Trace branch of `u2` (`x > L - alpha t`): inflow from the `u1` trace at
/// `x = L`, taken at the nearest lattice level on or after the exact foot
/// time, the same convention the grid solver uses when it feeds the
/// post-shift `u1` into `u2`.
fn duhamel_u2_boundary(
    ctx: &WindowCtx,
    prev_q2: &[Vec<f64>],
    u1_trace_at_l: &[f64],
    k: usize,
    i: usize,
) -> Result<f64> {
    let (p, g) = (ctx.p, ctx.g);
    let n = g.n;
    let trace_level = k - (n - 1 - i);
    if u1_trace_at_l.len() <= trace_level {
        return Err(Error::MissingTrace(format!(
            "u1 trace covers {} levels, need {}",
            u1_trace_at_l.len(),
            trace_level + 1
        )));
    }
    let ax = 1.0 / (p.alpha * p.eps);
    let x_i = g.center(i);
    let l = ctx.d.length;
    let mut mem = 0.0;
    for m in i..n - 1 {
        // segment between cells m (near, age (m - i) dx) and m + 1; the
        // iterate level at cell m is k - (m - i)
        let near_age = (m - i) as f64 * g.dx;
        mem += seg_exp(
            ax,
            near_age,
            g.dx,
            prev_q2[k - (m - i)][m],
            prev_q2[k - (m - i) - 1][m + 1],
        );
    }
    // half-cell tail [L - dx/2, L]
    let f0 = prev_q2[trace_level][n - 1];
    mem += seg_exp(ax, (n - 1 - i) as f64 * g.dx, 0.5 * g.dx, f0, f0);
    Ok(u1_trace_at_l[trace_level] * (-ax * (l - x_i)).exp() + ax * mem)
}

/// Epithelial and interstitial fields at window level `k`, cell `i`: the
/// three exponential-kernel integrals over the frozen iterate. Returns
/// `(q1, q2, u0)`.
#[allow(clippy::too_many_arguments)]
pub fn ode_update(
    ctx: &WindowCtx,
    prev_u1: &[Vec<f64>],
    prev_u2: &[Vec<f64>],
    prev_u0: &[Vec<f64>],
    prev_q1: &[Vec<f64>],
    prev_q2: &[Vec<f64>],
    k: usize,
    i: usize,
    literal_q2_coupling: bool,
) -> Result<(f64, f64, f64)> {
    if prev_u1.len() <= k {
        return Err(Error::MissingTrace(format!(
            "iterate has {} levels, need {}",
            prev_u1.len(),
            k + 1
        )));
    }
    let (p, g) = (ctx.p, ctx.g);
    let t_k = k as f64 * g.dt;
    let inv_eps = 1.0 / p.eps;
    let kc = if literal_q2_coupling { p.k1 } else { p.k2 };

    let a1 = inv_eps + p.k1;
    let a2 = inv_eps + p.k2;
    let a0 = p.k1 + p.k2;

    let f1 = |j: usize| inv_eps * prev_u1[j][i] + p.k1 * prev_u0[j][i];
    let f2 =
        |j: usize| inv_eps * prev_u2[j][i] + kc * prev_u0[j][i] - g_unchecked(prev_q2[j][i], p);
    let f0 =
        |j: usize| p.k1 * prev_q1[j][i] + p.k2 * prev_q2[j][i] + g_unchecked(prev_q2[j][i], p);

    let mut int1 = 0.0;
    let mut int2 = 0.0;
    let mut int0 = 0.0;
    for j in (0..k).rev() {
        let near_age = (k - j - 1) as f64 * g.dt;
        int1 += seg_exp(a1, near_age, g.dt, f1(j + 1), f1(j));
        int2 += seg_exp(a2, near_age, g.dt, f2(j + 1), f2(j));
        int0 += seg_exp(a0, near_age, g.dt, f0(j + 1), f0(j));
    }

    Ok((
        ctx.init.q1[i] * (-a1 * t_k).exp() + int1,
        ctx.init.q2[i] * (-a2 * t_k).exp() + int2,
        ctx.init.u0[i] * (-a0 * t_k).exp() + int0,
    ))
}

/// Per-run statistics of the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardStats {
    pub windows: usize,
    pub total_sweeps: usize,
    /// Largest sweep count any single window needed.
    pub max_iterations: usize,
    /// Largest measured ratio of successive iterate distances.
    pub max_ratio: f64,
}

/// Solves the five-field system on the grid's horizon by window-marched
/// fixed-point iteration, recording snapshots and boundary traces on the
/// same cadence as the grid solver.
pub fn picard_solve(
    p: &Params,
    d: &ProblemData,
    g: &Grid1D,
    cfg: &PicardConfig,
    stride: usize,
) -> Result<Trajectory5> {
    picard_solve_with_stats(p, d, g, cfg, stride).map(|(traj, _)| traj)
}

pub fn picard_solve_with_stats(
    p: &Params,
    d: &ProblemData,
    g: &Grid1D,
    cfg: &PicardConfig,
    stride: usize,
) -> Result<(Trajectory5, PicardStats)> {
    let stride = stride.max(1);
    let w_steps = cfg.window_steps(g);
    let mut init = State5::from_data(d, g);
    init.check_finite()?;

    let mut traj = Trajectory5 {
        snaps: vec![init.clone()],
        boundary: Vec::with_capacity(g.steps),
        grid: *g,
    };
    let mut stats =
        PicardStats { windows: 0, total_sweeps: 0, max_iterations: 0, max_ratio: 0.0 };

    let mut done_steps = 0usize;
    while done_steps < g.steps {
        let w = w_steps.min(g.steps - done_steps);
        let t0 = done_steps as f64 * g.dt;
        let ctx = WindowCtx { p, g, d, t0, init: &init };

        let mut prev = WindowIterate::constant(&init, w);
        let mut dist_prev: Option<f64> = None;
        let mut converged = false;
        for sweep in 0..cfg.max_iter {
            let next = apply_map(&ctx, &prev, cfg)?;
            let dist = prev.l1_distance(&next, g.dx);
            stats.total_sweeps += 1;
            stats.max_iterations = stats.max_iterations.max(sweep + 1);
            if let Some(dp) = dist_prev {
                // ratios near the rounding floor are noise, not contraction
                if dp > cfg.tol.max(1e-13) {
                    stats.max_ratio = stats.max_ratio.max(dist / dp);
                }
            }
            dist_prev = Some(dist);
            prev = next;
            if dist < cfg.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonContraction {
                window: w as f64 * g.dt,
                iterations: cfg.max_iter,
            });
        }
        stats.windows += 1;

        // traces at levels 0..w (level w opens the next window); snapshots on
        // the global stride, matching the grid solver's cadence
        for k in 0..w {
            let step = done_steps + k;
            let t = step as f64 * g.dt;
            traj.boundary.push(TraceSample {
                t,
                u1_at_l: prev.u1[k][g.n - 1],
                u2_at_0: prev.u2[k][0],
                ub: d.ub_at(t),
            });
        }
        for k in 1..=w {
            let step = done_steps + k;
            if step.is_multiple_of(stride) || step == g.steps {
                traj.snaps.push(prev.state_at(k, step as f64 * g.dt));
            }
        }

        init = prev.state_at(w, (done_steps + w) as f64 * g.dt);
        init.check_finite()?;
        done_steps += w;
    }

    Ok((traj, stats))
}

/// Iterate of the fixed-point map: the five fields on the window lattice,
/// indexed `[level][cell]`.
struct WindowIterate {
    u1: Vec<Vec<f64>>,
    u2: Vec<Vec<f64>>,
    q1: Vec<Vec<f64>>,
    q2: Vec<Vec<f64>>,
    u0: Vec<Vec<f64>>,
}

impl WindowIterate {
    /// Constant-in-time extension of the window's initial state.
    fn constant(init: &State5, w: usize) -> Self {
        let rep = |f: &Vec<f64>| vec![f.clone(); w + 1];
        WindowIterate {
            u1: rep(&init.u1),
            u2: rep(&init.u2),
            q1: rep(&init.q1),
            q2: rep(&init.q2),
            u0: rep(&init.u0),
        }
    }

    fn state_at(&self, k: usize, t: f64) -> State5 {
        State5 {
            u1: self.u1[k].clone(),
            u2: self.u2[k].clone(),
            q1: self.q1[k].clone(),
            q2: self.q2[k].clone(),
            u0: self.u0[k].clone(),
            t,
        }
    }

    /// Sup over levels of the summed per-field discrete L1 distances.
    fn l1_distance(&self, other: &Self, dx: f64) -> f64 {
        let field = |a: &[Vec<f64>], b: &[Vec<f64>], k: usize| -> f64 {
            a[k].iter().zip(&b[k]).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx
        };
        let mut worst: f64 = 0.0;
        for k in 0..self.u1.len() {
            let sum = field(&self.u1, &other.u1, k)
                + field(&self.u2, &other.u2, k)
                + field(&self.q1, &other.q1, k)
                + field(&self.q2, &other.q2, k)
                + field(&self.u0, &other.u0, k);
            worst = worst.max(sum);
        }
        worst
    }
}

/// One application of the fixed-point map to a frozen iterate.
fn apply_map(ctx: &WindowCtx, prev: &WindowIterate, cfg: &PicardConfig) -> Result<WindowIterate> {
    let g = ctx.g;
    let n = g.n;
    let w = prev.u1.len() - 1;

    let mut u1 = Vec::with_capacity(w + 1);
    u1.push(ctx.init.u1.clone());
    for k in 1..=w {
        let mut row = Vec::with_capacity(n);
        for i in 0..n {
            row.push(duhamel_u1(ctx, &prev.q1, k, i)?);
        }
        u1.push(row);
    }

    // the u2 inflow uses the newly computed u1 at the last cell
    let u1_trace: Vec<f64> = u1.iter().map(|row| row[n - 1]).collect();
    let mut u2 = vec![ctx.init.u2.clone()];
    for k in 1..=w {
        let mut row = Vec::with_capacity(n);
        for i in 0..n {
            row.push(duhamel_u2(ctx, &prev.q2, &u1_trace, k, i)?);
        }
        u2.push(row);
    }

    let mut q1 = vec![ctx.init.q1.clone()];
    let mut q2 = vec![ctx.init.q2.clone()];
    let mut u0 = vec![ctx.init.u0.clone()];
    for k in 1..=w {
        let mut rq1 = Vec::with_capacity(n);
        let mut rq2 = Vec::with_capacity(n);
        let mut ru0 = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b, c) = ode_update(
                ctx,
                &prev.u1,
                &prev.u2,
                &prev.u0,
                &prev.q1,
                &prev.q2,
                k,
                i,
                cfg.literal_q2_coupling,
            )?;
            rq1.push(a);
            rq2.push(b);
            ru0.push(c);
        }
        q1.push(rq1);
        q2.push(rq2);
        u0.push(ru0);
    }

    Ok(WindowIterate { u1, u2, q1, q2, u0 })
}
