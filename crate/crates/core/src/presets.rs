//! Named data presets for runs and tests.
//!
//! All presets are deterministic; `random_bv` is driven by an explicit seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::data::{ProblemData, Profile};

/// Everything equal to `c`, boundary included. Well-prepared; a steady state
/// when the pump is off.
pub fn constant(c: f64, length: f64, t_final: f64) -> ProblemData {
    ProblemData::new(
        Profile::Constant(c),
        Profile::Constant(c),
        Profile::Constant(c),
        Profile::Constant(c),
        Profile::Constant(c),
        Profile::Constant(c),
        length,
        t_final,
    )
    .expect("constant preset is valid")
}

/// A jump of height 1 in the descending lumen at mid-domain, with flat
/// epithelium. Deliberately ill-prepared (`q1_0 != u1_0` on the right half)
/// so it excites the initial layer.
pub fn step(length: f64, t_final: f64) -> ProblemData {
    let jump = Profile::piecewise_constant(vec![length / 2.0], vec![1.0, 2.0])
        .expect("one interior break");
    ProblemData::new(
        jump,
        Profile::Constant(1.0),
        Profile::Constant(1.0),
        Profile::Constant(1.0),
        Profile::Constant(1.0),
        Profile::Constant(1.0),
        length,
        t_final,
    )
    .expect("step preset is valid")
}

/// Smooth Gaussian bumps riding on a unit background. Well-prepared, with
/// the boundary trace matching `u1_0(0)` exactly.
pub fn bump(length: f64, t_final: f64) -> ProblemData {
    let l = length;
    let u1 = Profile::analytic(move |x| 1.0 + (-100.0 * (x / l - 0.4).powi(2)).exp());
    let u2 = Profile::analytic(move |x| 1.0 + 0.5 * (-100.0 * (x / l - 0.6).powi(2)).exp());
    let ub_value = u1.eval(0.0);
    ProblemData::new(
        u1.clone(),
        u2.clone(),
        u1,
        u2,
        Profile::Constant(1.0),
        Profile::Constant(ub_value),
        length,
        t_final,
    )
    .expect("bump preset is valid")
}

/// Seeded piecewise-constant data of bounded variation: a handful of random
/// plateaus per field (values in `[0.25, 1.75]`), well-prepared, with a
/// piecewise-constant boundary trace.
pub fn random_bv(seed: u64, length: f64, t_final: f64) -> ProblemData {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut piecewise = |len: f64, pieces: usize| {
        let mut breaks: Vec<f64> = (0..pieces - 1)
            .map(|_| rng.gen_range(0.05 * len..0.95 * len))
            .collect();
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup();
        let values = (0..breaks.len() + 1)
            .map(|_| rng.gen_range(0.25..1.75))
            .collect();
        Profile::piecewise_constant(breaks, values).expect("sorted breaks")
    };
    let u1 = piecewise(length, 8);
    let u2 = piecewise(length, 8);
    let u0 = piecewise(length, 6);
    let ub = piecewise(t_final.max(f64::MIN_POSITIVE), 5);
    ProblemData::new(u1.clone(), u2.clone(), u1, u2, u0, ub, length, t_final)
        .expect("random preset is valid")
}
