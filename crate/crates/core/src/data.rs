//! Initial profiles and boundary trace of a run.
//!
//! Profiles are stored as evaluable functions rather than grid samples so
//! that a single data set can be sampled on any grid and so that the
//! characteristics solver can query the boundary trace at off-lattice times.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Number of points used when a profile property (bounds, total variation)
/// has to be measured by dense sampling.
pub const DENSE_SAMPLES: usize = 4096;

/// A scalar function of one variable on a bounded interval.
#[derive(Clone)]
pub enum Profile {
    /// Constant value.
    Constant(f64),
    /// Arbitrary closure; must be deterministic.
    Analytic(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Piecewise constant: `values[j]` on `[breaks[j-1], breaks[j])`, with
    /// `breaks` strictly increasing interior break points.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// Piecewise linear through uniformly spaced nodes `x0 + j h`.
    SampledLinear { x0: f64, h: f64, values: Vec<f64> },
}

impl Profile {
    pub fn analytic(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Profile::Analytic(Arc::new(f))
    }

    /// Piecewise-constant profile; `breaks` must be strictly increasing.
    pub fn piecewise_constant(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidData(
                "piecewise profile needs one more value than break".into(),
            ));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidData("break points must be increasing".into()));
        }
        Ok(Profile::PiecewiseConstant { breaks, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Analytic(f) => f(x),
            Profile::PiecewiseConstant { breaks, values } => {
                let j = breaks.partition_point(|&b| b <= x);
                values[j]
            }
            Profile::SampledLinear { x0, h, values } => {
                let n = values.len();
                debug_assert!(n >= 2);
                let s = (x - x0) / h;
                if s <= 0.0 {
                    return values[0];
                }
                let j = s.floor() as usize;
                if j + 1 >= n {
                    return values[n - 1];
                }
                let w = s - j as f64;
                values[j] * (1.0 - w) + values[j + 1] * w
            }
        }
    }

    /// Samples on `n` uniform points covering `[0, len]` (includes both ends).
    pub fn sample_dense(&self, len: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|j| self.eval(len * j as f64 / (n - 1) as f64))
            .collect()
    }

    /// Discrete total variation. Exact for constants and piecewise-constant
    /// profiles, dense-sampled otherwise.
    pub fn total_variation(&self, len: f64) -> f64 {
        match self {
            Profile::Constant(_) => 0.0,
            Profile::PiecewiseConstant { values, .. } => {
                values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
            }
            Profile::SampledLinear { values, .. } => {
                values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
            }
            Profile::Analytic(_) => {
                let s = self.sample_dense(len, DENSE_SAMPLES);
                s.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
            }
        }
    }

    /// Minimum and maximum over a dense sampling of `[0, len]`.
    pub fn bounds(&self, len: f64) -> (f64, f64) {
        let s = self.sample_dense(len, DENSE_SAMPLES);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in s {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(c) => write!(f, "Constant({c})"),
            Profile::Analytic(_) => write!(f, "Analytic(..)"),
            Profile::PiecewiseConstant { values, .. } => {
                write!(f, "PiecewiseConstant({} pieces)", values.len())
            }
            Profile::SampledLinear { values, .. } => {
                write!(f, "SampledLinear({} nodes)", values.len())
            }
        }
    }
}

/// Initial profiles of the five fields on `[0, length]` and the boundary
/// trace of the descending lumen on `[0, t_final]`.
///
/// All profiles must be nonnegative, bounded and of finite total variation;
/// this is checked eagerly at construction on a dense sampling.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub u1_0: Profile,
    pub u2_0: Profile,
    pub q1_0: Profile,
    pub q2_0: Profile,
    pub u0_0: Profile,
    pub ub: Profile,
    /// Spatial domain length the profiles live on.
    pub length: f64,
    /// Time interval the boundary trace covers.
    pub t_final: f64,
}

impl ProblemData {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        u1_0: Profile,
        u2_0: Profile,
        q1_0: Profile,
        q2_0: Profile,
        u0_0: Profile,
        ub: Profile,
        length: f64,
        t_final: f64,
    ) -> Result<Self> {
        let d = ProblemData { u1_0, u2_0, q1_0, q2_0, u0_0, ub, length, t_final };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        if !self.length.is_finite()
            || self.length <= 0.0
            || self.t_final.is_nan()
            || self.t_final < 0.0
        {
            return Err(Error::InvalidData("domain lengths must be positive".into()));
        }
        for (name, prof, len) in self.named_profiles() {
            let (lo, hi) = prof.bounds(len);
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidData(format!("{name} is not finite")));
            }
            if lo < 0.0 {
                return Err(Error::InvalidData(format!(
                    "{name} takes negative value {lo}"
                )));
            }
            if !prof.total_variation(len).is_finite() {
                return Err(Error::InvalidData(format!("{name} has unbounded variation")));
            }
        }
        Ok(())
    }

    fn named_profiles(&self) -> [(&'static str, &Profile, f64); 6] {
        [
            ("u1_0", &self.u1_0, self.length),
            ("u2_0", &self.u2_0, self.length),
            ("q1_0", &self.q1_0, self.length),
            ("q2_0", &self.q2_0, self.length),
            ("u0_0", &self.u0_0, self.length),
            ("ub", &self.ub, self.t_final.max(1e-300)),
        ]
    }

    /// Boundary trace value at time `t`.
    pub fn ub_at(&self, t: f64) -> f64 {
        self.ub.eval(t)
    }

    /// Sum of the total variations of the five initial profiles.
    pub fn tv_initial(&self) -> f64 {
        [&self.u1_0, &self.u2_0, &self.q1_0, &self.q2_0, &self.u0_0]
            .iter()
            .map(|p| p.total_variation(self.length))
            .sum()
    }

    /// Supremum of all data: initial profiles and boundary trace.
    pub fn sup(&self) -> f64 {
        self.named_profiles()
            .iter()
            .map(|(_, p, len)| p.bounds(*len).1)
            .fold(0.0, f64::max)
    }
}
