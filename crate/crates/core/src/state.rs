//! Cell-sampled concentration fields of the five-field and three-field
//! systems.

use crate::data::ProblemData;
use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// State of the five-field system: lumen (`u1`, `u2`), epithelium (`q1`,
/// `q2`) and interstitium (`u0`) concentrations sampled at the cell centers
/// of one shared grid, at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State5 {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub u0: Vec<f64>,
    pub t: f64,
}

impl State5 {
    /// Samples the initial profiles at the cell centers of `g`.
    pub fn from_data(d: &ProblemData, g: &Grid1D) -> Self {
        let at = |p: &crate::data::Profile| -> Vec<f64> {
            (0..g.n).map(|i| p.eval(g.center(i))).collect()
        };
        State5 {
            u1: at(&d.u1_0),
            u2: at(&d.u2_0),
            q1: at(&d.q1_0),
            q2: at(&d.q2_0),
            u0: at(&d.u0_0),
            t: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.u1.len()
    }

    pub fn fields(&self) -> [&[f64]; 5] {
        [&self.u1, &self.u2, &self.q1, &self.q2, &self.u0]
    }

    pub fn check_finite(&self) -> Result<()> {
        for (f, name) in self.fields().iter().zip(["u1", "u2", "q1", "q2", "u0"]) {
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: name, t: self.t });
            }
        }
        Ok(())
    }
}

/// State of the three-field limit system at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State3 {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub u0: Vec<f64>,
    pub t: f64,
}

impl State3 {
    pub fn n(&self) -> usize {
        self.u1.len()
    }

    pub fn fields(&self) -> [&[f64]; 3] {
        [&self.u1, &self.u2, &self.u0]
    }

    pub fn check_finite(&self) -> Result<()> {
        for (f, name) in self.fields().iter().zip(["u1", "u2", "u0"]) {
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: name, t: self.t });
            }
        }
        Ok(())
    }
}
