//! Characteristic-aligned upwind time stepper for both systems.
//!
//! The grid fixes the CFL number to exactly 1: `dt = dx / alpha`, so lumen
//! transport is an index shift and carries no numerical diffusion. The stiff
//! lumen-epithelium relaxation is advanced by the exact exponential of the
//! linear 2x2 pair over `dt`, which is unconditionally stable however small
//! `eps` is; the slower exchange and pump terms are then added with one
//! explicit evaluation at the relaxed values.
//!
//! The three-field system carries a factor 2 on the merged tubule time
//! derivatives, which makes its transport speed `alpha / 2`. On the same
//! lattice this is realized by advancing `2 dt` per step with a single
//! one-cell shift (transport stays exact along characteristics) and the
//! source applied over `2 dt`; equivalently, `u1` moves one cell every two
//! `dt` units.

use crate::data::ProblemData;
use crate::error::{Error, Result};
use crate::model::{g_unchecked, Params};
use crate::state::{State3, State5};

/// Uniform 1D grid with unit CFL number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    /// Cell count.
    pub n: usize,
    /// Cell width `length / n`.
    pub dx: f64,
    /// Time step `dx / alpha`; characteristics land on cell centers.
    pub dt: f64,
    /// Number of `dt` steps needed to cover `[0, t_final]`.
    pub steps: usize,
}

impl Grid1D {
    pub fn new(p: &Params, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("need at least 2 cells, got {n}")));
        }
        let dx = p.length / n as f64;
        let dt = dx / p.alpha;
        // guard against one spurious extra step from rounding of t_final/dt
        let steps = ((p.t_final / dt) * (1.0 - 1e-12)).ceil() as usize;
        Ok(Grid1D { n, dx, dt, steps })
    }

    /// Center of cell `i`.
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    /// Steps of the reduced stepper (each spans `2 dt`) covering the same
    /// final time.
    pub fn steps_reduced(&self) -> usize {
        self.steps / 2 + self.steps % 2
    }
}

/// Boundary values observed at the start of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    /// Discrete trace of `u1` at `x = L` (last cell center).
    pub u1_at_l: f64,
    /// Discrete trace of `u2` at `x = 0` (first cell center).
    pub u2_at_0: f64,
    /// Boundary datum fed into `u1` during the step.
    pub ub: f64,
}

/// Time history of a five-field run: snapshots at the configured stride and
/// one boundary-trace sample per step.
#[derive(Debug, Clone)]
pub struct Trajectory5 {
    pub snaps: Vec<State5>,
    pub boundary: Vec<TraceSample>,
    pub grid: Grid1D,
}

/// Time history of a three-field run.
#[derive(Debug, Clone)]
pub struct Trajectory3 {
    pub snaps: Vec<State3>,
    pub boundary: Vec<TraceSample>,
    pub grid: Grid1D,
}

/// Which system a run integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Full,
    Reduced,
}

/// Trajectory of either system.
#[derive(Debug, Clone)]
pub enum RunOutput {
    Full(Trajectory5),
    Reduced(Trajectory3),
}

/// One `dt` step of the five-field system.
///
/// Transport shifts `u1` right by one cell (inflow `ub_now`) and `u2` left by
/// one cell, its inflow being the post-shift `u1` at `x = L`. The source then
/// relaxes each `(u_i, q_i)` pair exactly and applies the exchange and pump
/// terms explicitly at the relaxed values. Nonnegative input stays
/// nonnegative as long as `dt * (k1 + k2 + sup G')` stays below 1.
pub fn step_full(s: &State5, g: &Grid1D, p: &Params, ub_now: f64) -> Result<State5> {
    let n = s.n();
    if n != g.n {
        return Err(Error::GridMismatch(format!(
            "state has {n} cells, grid has {}",
            g.n
        )));
    }

    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    u1[0] = ub_now;
    u1[1..n].copy_from_slice(&s.u1[..n - 1]);
    u2[..n - 1].copy_from_slice(&s.u2[1..]);
    u2[n - 1] = u1[n - 1];

    let mut q1 = s.q1.clone();
    let mut q2 = s.q2.clone();
    let mut u0 = s.u0.clone();

    let decay = (-2.0 * g.dt / p.eps).exp();
    for i in 0..n {
        // exact exponential of the 2x2 relaxation pair over dt
        let m1 = 0.5 * (u1[i] + q1[i]);
        let d1 = 0.5 * (q1[i] - u1[i]) * decay;
        let m2 = 0.5 * (u2[i] + q2[i]);
        let d2 = 0.5 * (q2[i] - u2[i]) * decay;
        let (ru1, rq1) = (m1 - d1, m1 + d1);
        let (ru2, rq2) = (m2 - d2, m2 + d2);

        // exchange and pump, one explicit evaluation at the relaxed values
        let g2 = g_unchecked(rq2, p);
        u1[i] = ru1;
        u2[i] = ru2;
        q1[i] = rq1 + g.dt * (p.k1 * (u0[i] - rq1));
        q2[i] = rq2 + g.dt * (p.k2 * (u0[i] - rq2) - g2);
        u0[i] += g.dt * (p.k1 * (rq1 - u0[i]) + p.k2 * (rq2 - u0[i]) + g2);
    }

    Ok(State5 { u1, u2, q1, q2, u0, t: s.t + g.dt })
}

/// One step of the three-field system, spanning `2 dt`.
///
/// Both lumen fields shift one cell (exact transport at speed `alpha / 2`
/// over `2 dt`); the source rates, already carrying the factor-2 weighting,
/// are applied explicitly over `2 dt` at the post-shift values.
pub fn step_reduced(s: &State3, g: &Grid1D, p: &Params, ub_now: f64) -> Result<State3> {
    let n = s.n();
    if n != g.n {
        return Err(Error::GridMismatch(format!(
            "state has {n} cells, grid has {}",
            g.n
        )));
    }

    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    u1[0] = ub_now;
    u1[1..n].copy_from_slice(&s.u1[..n - 1]);
    u2[..n - 1].copy_from_slice(&s.u2[1..]);
    u2[n - 1] = u1[n - 1];
    let mut u0 = s.u0.clone();

    let dt2 = 2.0 * g.dt;
    for i in 0..n {
        let g2 = g_unchecked(u2[i], p);
        let r1 = p.k1 * (u0[i] - u1[i]) / 2.0;
        let r2 = (p.k2 * (u0[i] - u2[i]) - g2) / 2.0;
        let r3 = p.k1 * (u1[i] - u0[i]) + p.k2 * (u2[i] - u0[i]) + g2;
        u1[i] += dt2 * r1;
        u2[i] += dt2 * r2;
        u0[i] += dt2 * r3;
    }

    Ok(State3 { u1, u2, u0, t: s.t + dt2 })
}

/// Integrates the five-field system from `t = 0` to the grid's final time,
/// recording a snapshot every `stride` steps (the initial and final states
/// are always recorded) and one boundary-trace sample per step.
pub fn run_full(p: &Params, d: &ProblemData, g: &Grid1D, stride: usize) -> Result<Trajectory5> {
    let stride = stride.max(1);
    let mut state = State5::from_data(d, g);
    state.check_finite()?;
    let mut traj = Trajectory5 {
        snaps: vec![state.clone()],
        boundary: Vec::with_capacity(g.steps),
        grid: *g,
    };
    for step in 0..g.steps {
        let t = step as f64 * g.dt;
        let ub = d.ub_at(t);
        traj.boundary.push(TraceSample {
            t,
            u1_at_l: state.u1[g.n - 1],
            u2_at_0: state.u2[0],
            ub,
        });
        state = step_full(&state, g, p, ub)?;
        state.t = (step + 1) as f64 * g.dt;
        state.check_finite()?;
        if (step + 1) % stride == 0 || step + 1 == g.steps {
            traj.snaps.push(state.clone());
        }
    }
    Ok(traj)
}

/// Integrates the three-field system; each step spans `2 dt`, so snapshots
/// live on the even sub-lattice of the five-field run.
pub fn run_reduced(
    p: &Params,
    d: &ProblemData,
    g: &Grid1D,
    stride: usize,
    init: State3,
) -> Result<Trajectory3> {
    let stride = stride.max(1);
    let mut state = init;
    if state.n() != g.n {
        return Err(Error::GridMismatch("reduced initial state".into()));
    }
    state.check_finite()?;
    let steps = g.steps_reduced();
    let dt2 = 2.0 * g.dt;
    let mut traj = Trajectory3 {
        snaps: vec![state.clone()],
        boundary: Vec::with_capacity(steps),
        grid: *g,
    };
    for step in 0..steps {
        let t = step as f64 * dt2;
        let ub = d.ub_at(t);
        traj.boundary.push(TraceSample {
            t,
            u1_at_l: state.u1[g.n - 1],
            u2_at_0: state.u2[0],
            ub,
        });
        state = step_reduced(&state, g, p, ub)?;
        state.t = (step + 1) as f64 * dt2;
        state.check_finite()?;
        if (step + 1) % stride == 0 || step + 1 == steps {
            traj.snaps.push(state.clone());
        }
    }
    Ok(traj)
}

/// Runs either system. The reduced system starts from the limit initial data
/// in its default (averaged) reading.
pub fn run(p: &Params, d: &ProblemData, g: &Grid1D, model: Model, stride: usize) -> Result<RunOutput> {
    match model {
        Model::Full => Ok(RunOutput::Full(run_full(p, d, g, stride)?)),
        Model::Reduced => {
            let init = crate::layers::build_limit_initial(d, g, crate::layers::LimitInit::Average);
            Ok(RunOutput::Reduced(run_reduced(p, d, g, stride, init)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn params(eps: f64, k: f64, vm: f64) -> Params {
        Params::new(1.0, k, k, eps, vm, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn grid_respects_final_time() {
        let p = params(0.1, 1.0, 1.0);
        let g = Grid1D::new(&p, 200).unwrap();
        assert_eq!(g.steps, 200);
        assert!((g.dt - 0.005).abs() < 1e-15);
        let g = Grid1D::new(&Params { t_final: 0.0, ..p }, 16).unwrap();
        assert_eq!(g.steps, 0);
        // non-divisible horizon still gets covered
        let g = Grid1D::new(&Params { t_final: 0.3, ..p }, 7).unwrap();
        assert!(g.steps as f64 * g.dt >= 0.3 * (1.0 - 1e-12));
        assert!(Grid1D::new(&p, 1).is_err());
    }

    #[test]
    fn constant_state_is_steady_without_pump() {
        let p = params(0.5, 2.0, 0.0);
        let g = Grid1D::new(&p, 16).unwrap();
        let d = presets::constant(3.0, 1.0, 1.0);
        let s = State5::from_data(&d, &g);
        let s1 = step_full(&s, &g, &p, 3.0).unwrap();
        assert_eq!(s1.u1, s.u1);
        assert_eq!(s1.u2, s.u2);
        assert_eq!(s1.q1, s.q1);
        assert_eq!(s1.q2, s.q2);
        assert_eq!(s1.u0, s.u0);
    }

    #[test]
    fn pure_advection_shifts_one_cell() {
        // K = 0, pump off, q_i = u_i and relaxation numerically inert
        // (eps so large that exp(-2 dt / eps) evaluates to exactly 1):
        // transport is an exact index shift
        let p = params(1e30, 0.0, 0.0);
        let g = Grid1D::new(&p, 8).unwrap();
        let profile: Vec<f64> = (0..8).map(|i| 1.0 + i as f64).collect();
        let s = State5 {
            u1: profile.clone(),
            u2: vec![1.0; 8],
            q1: profile.clone(),
            q2: vec![1.0; 8],
            u0: vec![1.0; 8],
            t: 0.0,
        };
        let s1 = step_full(&s, &g, &p, 9.0).unwrap();
        assert_eq!(s1.u1[0], 9.0);
        assert_eq!(&s1.u1[1..], &profile[..7]);
    }

    #[test]
    fn relaxation_contracts_at_exact_exponential_rate() {
        // isolate the 2x2 pair: K = 0, pump off; eps = 1e-3 at n = 400 gives
        // a decay factor of exp(-5) per step
        let p = params(1e-3, 0.0, 0.0);
        let g = Grid1D::new(&p, 400).unwrap();
        let n = g.n;
        let s = State5 {
            u1: vec![1.0; n],
            u2: vec![1.0; n],
            q1: vec![2.0; n],
            q2: vec![1.0; n],
            u0: vec![1.0; n],
            t: 0.0,
        };
        let s1 = step_full(&s, &g, &p, 1.0).unwrap();
        let expected_gap = (2.0 - 1.0) * (-2.0 * g.dt / p.eps).exp();
        let got = s1.q1[2] - s1.u1[2];
        assert!(
            (got - expected_gap).abs() <= 1e-12 * expected_gap.max(1e-3),
            "gap {got}, closed form {expected_gap}"
        );
        // the pair sum is conserved by the relaxation
        assert!((s1.q1[2] + s1.u1[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn reduced_constant_state_is_steady() {
        let p = params(0.1, 1.0, 0.0);
        let g = Grid1D::new(&p, 16).unwrap();
        let s = State3 { u1: vec![2.0; 16], u2: vec![2.0; 16], u0: vec![2.0; 16], t: 0.0 };
        let s1 = step_reduced(&s, &g, &p, 2.0).unwrap();
        assert_eq!(s1.u1, s.u1);
        assert_eq!(s1.u2, s.u2);
        assert_eq!(s1.u0, s.u0);
    }

    #[test]
    fn reduced_transport_runs_at_half_speed() {
        // K = 0, pump off: one step spans 2 dt and shifts exactly one cell,
        // i.e. speed alpha / 2
        let p = params(0.1, 0.0, 0.0);
        let g = Grid1D::new(&p, 8).unwrap();
        let profile: Vec<f64> = (0..8).map(|i| (i * i) as f64).collect();
        let s = State3 { u1: profile.clone(), u2: vec![0.0; 8], u0: vec![0.0; 8], t: 0.0 };
        let s1 = step_reduced(&s, &g, &p, 7.0).unwrap();
        assert_eq!(s1.u1[0], 7.0);
        assert_eq!(&s1.u1[1..], &profile[..7]);
        assert!((s1.t - 2.0 * g.dt).abs() < 1e-15);
    }

    #[test]
    fn empty_evolution_returns_initial_snapshot() {
        let p = Params { t_final: 0.0, ..params(0.1, 1.0, 1.0) };
        let g = Grid1D::new(&p, 16).unwrap();
        let d = presets::bump(1.0, 1.0);
        let traj = run_full(&p, &d, &g, 1).unwrap();
        assert_eq!(traj.snaps.len(), 1);
        assert!(traj.boundary.is_empty());
        assert_eq!(traj.snaps[0], State5::from_data(&d, &g));
    }

    #[test]
    fn well_prepared_constants_stay_constant_over_a_run() {
        let p = params(0.05, 1.0, 0.0);
        let g = Grid1D::new(&p, 32).unwrap();
        let d = presets::constant(1.5, 1.0, 1.0);
        let traj = run_full(&p, &d, &g, 4).unwrap();
        for snap in &traj.snaps {
            for f in snap.fields() {
                assert!(f.iter().all(|&v| v == 1.5));
            }
        }
    }

    #[test]
    fn run_dispatches_on_the_model() {
        let p = params(0.1, 1.0, 1.0);
        let g = Grid1D::new(&p, 32).unwrap();
        let d = presets::bump(1.0, 1.0);
        match run(&p, &d, &g, Model::Full, 8).unwrap() {
            RunOutput::Full(t) => assert_eq!(t.boundary.len(), g.steps),
            RunOutput::Reduced(_) => panic!("asked for the full model"),
        }
        match run(&p, &d, &g, Model::Reduced, 8).unwrap() {
            RunOutput::Reduced(t) => assert_eq!(t.boundary.len(), g.steps_reduced()),
            RunOutput::Full(_) => panic!("asked for the reduced model"),
        }
    }

    #[test]
    fn run_is_deterministic() {
        let p = params(0.1, 1.0, 1.0);
        let g = Grid1D::new(&p, 64).unwrap();
        let d = presets::random_bv(11, 1.0, 1.0);
        let a = run_full(&p, &d, &g, 8).unwrap();
        let b = run_full(&p, &d, &g, 8).unwrap();
        assert_eq!(a.snaps.last().unwrap(), b.snaps.last().unwrap());
    }

    #[test]
    fn nan_data_is_caught() {
        let mut s = State5 {
            u1: vec![1.0; 8],
            u2: vec![1.0; 8],
            q1: vec![1.0; 8],
            q2: vec![1.0; 8],
            u0: vec![1.0; 8],
            t: 0.0,
        };
        s.u2[3] = f64::NAN;
        assert!(s.check_finite().is_err());
    }
}
