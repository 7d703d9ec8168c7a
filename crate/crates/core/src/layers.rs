//! Limit initial data, initial-layer correctors and BV data regularization.
//!
//! When the data is ill-prepared (`q_i_0 != u_i_0`) the five-field system
//! relaxes the lumen-epithelium gap within an `O(eps)` transient. On the
//! microscopic time `tau = t / eps` that transient solves a closed linear
//! pair with the explicit solution
//!
//! ```text
//! u~_i(tau) = (q_i_0 - u_i_0) (1 + exp(-2 tau)) / 2
//! q~_i(tau) = (q_i_0 - u_i_0) (1 - exp(-2 tau)) / 2
//! ```
//!
//! Adding the correctors to the raw fields removes the fast transient, which
//! is what the corrected-variable view below provides.

use crate::data::{ProblemData, Profile};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::model::Params;
use crate::state::{State3, State5};

/// Reading of the limit system's initial trace for the merged tubules.
///
/// The averaged reading divides the summed trace by the factor 2 carried by
/// the merged time derivative, and is consistent with well-prepared data; the
/// literal sum is kept selectable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LimitInit {
    #[default]
    Average,
    LiteralSum,
}

/// Initial state of the three-field system built from five-field data.
pub fn build_limit_initial(d: &ProblemData, g: &Grid1D, mode: LimitInit) -> State3 {
    let scale = match mode {
        LimitInit::Average => 0.5,
        LimitInit::LiteralSum => 1.0,
    };
    let mut u1 = Vec::with_capacity(g.n);
    let mut u2 = Vec::with_capacity(g.n);
    let mut u0 = Vec::with_capacity(g.n);
    for i in 0..g.n {
        let x = g.center(i);
        u1.push(scale * (d.u1_0.eval(x) + d.q1_0.eval(x)));
        u2.push(scale * (d.u2_0.eval(x) + d.q2_0.eval(x)));
        u0.push(d.u0_0.eval(x));
    }
    State3 { u1, u2, u0, t: 0.0 }
}

/// Corrector values at one microscopic time, sampled per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    pub u1t: Vec<f64>,
    pub u2t: Vec<f64>,
    pub q1t: Vec<f64>,
    pub q2t: Vec<f64>,
    pub tau: f64,
}

/// Evaluates the explicit corrector solution at microscopic time `tau`.
pub fn layer_eval(tau: f64, d: &ProblemData, g: &Grid1D) -> Result<LayerState> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::InvalidParams(format!("tau must be >= 0, got {tau}")));
    }
    let decay = (-2.0 * tau).exp();
    let grow = 0.5 * (1.0 + decay);
    let shrink = 0.5 * (1.0 - decay);
    let n = g.n;
    let mut out = LayerState {
        u1t: Vec::with_capacity(n),
        u2t: Vec::with_capacity(n),
        q1t: Vec::with_capacity(n),
        q2t: Vec::with_capacity(n),
        tau,
    };
    for i in 0..n {
        let x = g.center(i);
        let d1 = d.q1_0.eval(x) - d.u1_0.eval(x);
        let d2 = d.q2_0.eval(x) - d.u2_0.eval(x);
        out.u1t.push(d1 * grow);
        out.q1t.push(d1 * shrink);
        out.u2t.push(d2 * grow);
        out.q2t.push(d2 * shrink);
    }
    Ok(out)
}

/// Five-field state with the initial-layer correctors added on the
/// macroscopic time scale: `v_i = u_i + u~_i(t/eps)`, `r_i = q_i +
/// q~_i(t/eps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedState {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub u0: Vec<f64>,
    pub t: f64,
}

pub fn corrected_state(
    s: &State5,
    d: &ProblemData,
    g: &Grid1D,
    p: &Params,
) -> Result<CorrectedState> {
    if s.n() != g.n {
        return Err(Error::GridMismatch("corrected_state".into()));
    }
    let layer = layer_eval(s.t / p.eps, d, g)?;
    let add = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    };
    Ok(CorrectedState {
        v1: add(&s.u1, &layer.u1t),
        v2: add(&s.u2, &layer.u2t),
        r1: add(&s.q1, &layer.q1t),
        r2: add(&s.q2, &layer.q2t),
        u0: s.u0.clone(),
        t: s.t,
    })
}

/// Cutoff and mollification scales for BV data regularization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationParams {
    /// Cutoff and mollification width, in the units of the regularized axis.
    pub delta: f64,
    /// Matching constant forced near `x = 0` and `t = 0`.
    pub c1: f64,
    /// Matching constant forced near `x = L`.
    pub c2: f64,
}

impl RegularizationParams {
    pub fn new(delta: f64, c1: f64, c2: f64, d: &ProblemData) -> Result<Self> {
        let cap = d.length.min(d.t_final) / 4.0;
        if !(delta > 0.0 && delta < cap) {
            return Err(Error::Config(format!(
                "delta must lie in (0, {cap}), got {delta}"
            )));
        }
        if c1 < 0.0 || c2 < 0.0 {
            return Err(Error::Config("matching constants must be >= 0".into()));
        }
        Ok(RegularizationParams { delta, c1, c2 })
    }

    /// Default matching constants: the summed total variation of the data.
    pub fn default_for(d: &ProblemData, delta: f64) -> Result<Self> {
        let c = d.tv_initial() + d.ub.total_variation(d.t_final.max(f64::MIN_POSITIVE));
        Self::new(delta, c, c, d)
    }
}

/// Smooth monotone cutoff: 1 for `|s| <= 1`, 0 for `|s| >= 2`, a smooth
/// partition-of-unity transition in between.
fn chi(s: f64) -> f64 {
    let a = s.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let f = |r: f64| if r > 0.0 { (-1.0 / r).exp() } else { 0.0 };
        let up = f(2.0 - a);
        up / (up + f(a - 1.0))
    }
}

/// Applies the cutoff blend and mollifies every profile, returning smooth
/// regularized data on the same domains.
///
/// `u1_0` is forced to `c1` near `x = 0` and `c2` near `x = L`, `u2_0` to
/// `c2` near `x = L`, the boundary trace to `c1` near `t = 0`; the remaining
/// profiles are mollified unchanged. The mollifier is a raised-cosine kernel
/// of half-width `delta / 2`, applied as a discrete convex convolution, so
/// the output variation never exceeds the variation of the blend and the
/// matched constants are reproduced exactly on the inner half of each cutoff
/// zone.
pub fn regularize(d: &ProblemData, r: &RegularizationParams) -> Result<ProblemData> {
    build_regularized(d, r, true)
}

/// The cutoff blend of `regularize` without the mollification pass, sampled
/// on the same fine lattice. Its total variation is the reference the
/// mollified output is measured against.
pub fn blend_only(d: &ProblemData, r: &RegularizationParams) -> Result<ProblemData> {
    build_regularized(d, r, false)
}

fn build_regularized(
    d: &ProblemData,
    r: &RegularizationParams,
    smooth: bool,
) -> Result<ProblemData> {
    let cap = d.length.min(d.t_final) / 4.0;
    if !(r.delta > 0.0 && r.delta < cap) {
        return Err(Error::Config(format!(
            "delta must lie in (0, {cap}), got {}",
            r.delta
        )));
    }
    let delta = r.delta;
    let l = d.length;
    let t = d.t_final;
    let emit = |f: &dyn Fn(f64) -> f64, len: f64| -> Profile {
        if smooth {
            mollify(f, len, delta)
        } else {
            sample_fine(f, len, delta)
        }
    };

    // inside a full-cutoff zone the blend returns the matching constant
    // itself, and elsewhere it is written as u + chi (c - u); together with
    // the flat-window shortcut in `mollify` this makes the matched zones and
    // constant data bitwise exact
    let (u1_0, c1, c2) = (d.u1_0.clone(), r.c1, r.c2);
    let u1 = emit(
        &move |x: f64| {
            let left = chi(x / delta);
            let right = chi((l - x) / delta);
            if left == 1.0 {
                c1
            } else if right == 1.0 {
                c2
            } else {
                let u = u1_0.eval(x);
                u + left * (c1 - u) + right * (c2 - u)
            }
        },
        l,
    );
    let (u2_0, c2) = (d.u2_0.clone(), r.c2);
    let u2 = emit(
        &move |x: f64| {
            let right = chi((l - x) / delta);
            if right == 1.0 {
                c2
            } else {
                let u = u2_0.eval(x);
                u + right * (c2 - u)
            }
        },
        l,
    );
    let (ub_0, c1) = (d.ub.clone(), r.c1);
    let ub = emit(
        &move |s: f64| {
            let left = chi(s / delta);
            if left == 1.0 {
                c1
            } else {
                let u = ub_0.eval(s);
                u + left * (c1 - u)
            }
        },
        t,
    );
    ProblemData::new(
        u1,
        u2,
        emit(&|x| d.q1_0.eval(x), l),
        emit(&|x| d.q2_0.eval(x), l),
        emit(&|x| d.u0_0.eval(x), l),
        ub,
        l,
        t,
    )
}

fn fine_lattice(len: f64, delta: f64) -> (usize, f64) {
    let m = ((48.0 * len / delta).ceil() as usize).max(2048);
    (m, len / m as f64)
}

fn sample_fine(f: &dyn Fn(f64) -> f64, len: f64, delta: f64) -> Profile {
    let (m, h) = fine_lattice(len, delta);
    Profile::SampledLinear { x0: 0.0, h, values: (0..=m).map(|j| f(j as f64 * h)).collect() }
}

/// Discrete mollification of `f` on `[0, len]` by a normalized raised-cosine
/// kernel of half-width `delta / 2`, evaluated on a fine uniform lattice and
/// returned as a piecewise-linear profile.
///
/// The convolution uses convex weights on lattice points and extends `f`
/// constantly beyond the ends, so it diminishes total variation and keeps
/// locally constant stretches bitwise intact.
fn mollify(f: &dyn Fn(f64) -> f64, len: f64, delta: f64) -> Profile {
    let (m, h) = fine_lattice(len, delta);
    let half_width = 0.5 * delta;
    let radius = (half_width / h).floor() as usize;

    let samples: Vec<f64> = (0..=m).map(|j| f(j as f64 * h)).collect();

    let mut weights = Vec::with_capacity(2 * radius + 1);
    for k in -(radius as isize)..=(radius as isize) {
        let y = k as f64 * h / half_width;
        weights.push(1.0 + (std::f64::consts::PI * y).cos());
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }

    let mut out = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let lo = j as isize - radius as isize;
        let first = samples[lo.max(0) as usize];
        let mut flat = true;
        let mut acc = 0.0;
        for (k, w) in weights.iter().enumerate() {
            let idx = (lo + k as isize).clamp(0, m as isize) as usize;
            let v = samples[idx];
            flat &= v == first;
            acc += w * v;
        }
        // constant windows pass through untouched, which keeps the matched
        // zones and constant data bitwise exact
        out.push(if flat { first } else { acc });
    }
    Profile::SampledLinear { x0: 0.0, h, values: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(&Params::default(), n).unwrap()
    }

    #[test]
    fn limit_initial_readings() {
        let g = grid(16);
        // well-prepared: both readings of the merged trace coincide with u1_0
        let d = presets::bump(1.0, 1.0);
        let avg = build_limit_initial(&d, &g, LimitInit::Average);
        for (i, v) in avg.u1.iter().enumerate() {
            assert!((v - d.u1_0.eval(g.center(i))).abs() < 1e-15);
        }
        // u1_0 = 1, q1_0 = 3 averages to 2 and sums to 4
        let d = ProblemData::new(
            Profile::Constant(1.0),
            Profile::Constant(1.0),
            Profile::Constant(3.0),
            Profile::Constant(1.0),
            Profile::Constant(1.0),
            Profile::Constant(1.0),
            1.0,
            1.0,
        )
        .unwrap();
        let avg = build_limit_initial(&d, &g, LimitInit::Average);
        let sum = build_limit_initial(&d, &g, LimitInit::LiteralSum);
        assert_eq!(avg.u1[5], 2.0);
        assert_eq!(sum.u1[5], 4.0);
        assert_eq!(avg.u0[5], 1.0);
    }

    #[test]
    fn layer_at_zero_and_infinity() {
        let g = grid(32);
        let d = presets::step(1.0, 1.0);
        let at0 = layer_eval(0.0, &d, &g).unwrap();
        for i in 0..g.n {
            let gap = d.q1_0.eval(g.center(i)) - d.u1_0.eval(g.center(i));
            assert_eq!(at0.u1t[i], gap);
            assert_eq!(at0.q1t[i], 0.0);
        }
        // both correctors converge to half the initial gap
        let far = layer_eval(20.0, &d, &g).unwrap();
        for i in 0..g.n {
            let half = 0.5 * (d.q1_0.eval(g.center(i)) - d.u1_0.eval(g.center(i)));
            assert!((far.u1t[i] - half).abs() <= half.abs() * 1e-15 + 1e-17);
            assert!((far.q1t[i] - half).abs() <= half.abs() * 1e-15 + 1e-17);
        }
        assert!(layer_eval(-1.0, &d, &g).is_err());
    }

    #[test]
    fn layer_conservation_and_decay() {
        let g = grid(16);
        let d = presets::step(1.0, 1.0);
        let at0 = layer_eval(0.0, &d, &g).unwrap();
        for tau in [0.0, 0.1, 0.7, 3.0, 11.0] {
            let ls = layer_eval(tau, &d, &g).unwrap();
            for i in 0..g.n {
                // sum conserved in tau
                let sum = ls.u1t[i] + ls.q1t[i];
                assert!((sum - at0.u1t[i]).abs() <= 1e-15 * at0.u1t[i].abs().max(1.0));
                // difference decays exactly as evaluated (up to a few ulps
                // of the initial gap)
                let diff = ls.u1t[i] - ls.q1t[i];
                let expect = at0.u1t[i] * (-2.0 * tau).exp();
                assert!((diff - expect).abs() <= 1e-15 * at0.u1t[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn well_prepared_layer_vanishes() {
        let g = grid(16);
        let d = presets::bump(1.0, 1.0);
        let ls = layer_eval(0.3, &d, &g).unwrap();
        assert!(ls.u1t.iter().all(|&v| v == 0.0));
        assert!(ls.q2t.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn corrected_equals_raw_when_well_prepared() {
        let p = Params::default();
        let g = grid(16);
        let d = presets::bump(1.0, 1.0);
        let s = State5::from_data(&d, &g);
        let c = corrected_state(&s, &d, &g, &p).unwrap();
        assert_eq!(c.v1, s.u1);
        assert_eq!(c.r2, s.q2);
    }

    #[test]
    fn corrected_initial_trace_is_epithelial() {
        // at t = 0 both v1 and r1 equal q1_0
        let p = Params::default();
        let g = grid(32);
        let d = presets::step(1.0, 1.0);
        let s = State5::from_data(&d, &g);
        let c = corrected_state(&s, &d, &g, &p).unwrap();
        for i in 0..g.n {
            let q10 = d.q1_0.eval(g.center(i));
            assert!((c.v1[i] - q10).abs() < 1e-15);
            assert!((c.r1[i] - q10).abs() < 1e-15);
        }
    }

    #[test]
    fn correction_to_the_gap_is_negligible_past_the_layer() {
        // the corrector pair difference decays like exp(-2 tau): by t = 10 eps
        // the corrected gap (r1 - v1) agrees with the raw gap (q1 - u1) up to
        // exp(-20) times the initial gap size
        let p = Params { eps: 1e-2, ..Params::default() };
        let g = grid(32);
        let d = presets::step(1.0, 1.0);
        let mut s = State5::from_data(&d, &g);
        s.t = 10.0 * p.eps;
        let c = corrected_state(&s, &d, &g, &p).unwrap();
        let sup_gap = 1.0; // |q1_0 - u1_0| is at most the step height
        for i in 0..g.n {
            let corrected_gap = c.r1[i] - c.v1[i];
            let raw_gap = s.q1[i] - s.u1[i];
            assert!(
                (corrected_gap - raw_gap).abs()
                    <= 1.01 * (-20.0f64).exp() * sup_gap + 1e-15
            );
        }
    }

    #[test]
    fn regularization_params_validate() {
        let d = presets::step(1.0, 1.0);
        assert!(RegularizationParams::new(0.05, 1.0, 1.0, &d).is_ok());
        assert!(RegularizationParams::new(0.3, 1.0, 1.0, &d).is_err());
        assert!(RegularizationParams::new(0.0, 1.0, 1.0, &d).is_err());
        assert!(RegularizationParams::new(0.05, -1.0, 1.0, &d).is_err());
    }

    #[test]
    fn constants_are_fixed_points() {
        let d = presets::constant(2.5, 1.0, 1.0);
        let r = RegularizationParams::new(0.05, 2.5, 2.5, &d).unwrap();
        let out = regularize(&d, &r).unwrap();
        for x in [0.0, 0.01, 0.37, 0.5, 0.93, 1.0] {
            assert_eq!(out.u1_0.eval(x), 2.5);
            assert_eq!(out.ub.eval(x), 2.5);
        }
    }

    #[test]
    fn step_variation_is_preserved_away_from_cutoffs() {
        // step of height 1 mid-domain with matching constants equal to the
        // end values: the blend is the step itself and the mollified
        // derivative mass equals the jump
        let d = presets::step(1.0, 1.0);
        let r = RegularizationParams::new(0.04, 1.0, 2.0, &d).unwrap();
        let out = regularize(&d, &r).unwrap();
        let tv = out.u1_0.total_variation(1.0);
        assert!((tv - 1.0).abs() <= 1e-2, "tv = {tv}");
        // smooth output: it matches the constants near both ends
        assert_eq!(out.u1_0.eval(0.0), 1.0);
        assert_eq!(out.u1_0.eval(1.0), 2.0);
    }

    #[test]
    fn default_constants_give_exact_corner_compatibility() {
        let d = presets::random_bv(3, 1.0, 1.0);
        let r = RegularizationParams::default_for(&d, 0.05).unwrap();
        let out = regularize(&d, &r).unwrap();
        assert_eq!(out.u1_0.eval(0.0), out.ub.eval(0.0));
        assert_eq!(out.u1_0.eval(0.0), r.c1);
    }

    #[test]
    fn mollified_data_smoothness_scales_with_delta() {
        // second differences of the regularized step grow like 1/delta^2
        let d = presets::step(1.0, 1.0);
        let max_second_diff = |delta: f64| {
            let r = RegularizationParams::new(delta, 1.0, 2.0, &d).unwrap();
            let out = regularize(&d, &r).unwrap();
            let n = 800;
            let h = 1.0 / n as f64;
            let mut worst: f64 = 0.0;
            for j in 1..n {
                let a = out.u1_0.eval((j - 1) as f64 * h);
                let b = out.u1_0.eval(j as f64 * h);
                let c = out.u1_0.eval((j + 1) as f64 * h);
                worst = worst.max((a - 2.0 * b + c).abs() / (h * h));
            }
            worst
        };
        let coarse = max_second_diff(0.08);
        let fine = max_second_diff(0.04);
        let ratio = fine / coarse;
        assert!(
            (2.0..8.0).contains(&ratio),
            "second differences should scale like 1/delta^2, ratio = {ratio}"
        );
    }

    #[test]
    fn regularized_random_data_keeps_nonnegativity() {
        let d = presets::random_bv(9, 1.0, 1.0);
        let r = RegularizationParams::default_for(&d, 0.03).unwrap();
        let out = regularize(&d, &r).unwrap();
        let (lo, _) = out.u1_0.bounds(1.0);
        assert!(lo >= 0.0);
    }
}
