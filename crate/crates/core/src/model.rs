//! Model parameters, the active-pump nonlinearity and the pointwise source
//! terms of the five-field and three-field systems.
//!
//! The five-field system couples lumen concentrations `u1`, `u2` (advected at
//! speed `±alpha`), epithelial concentrations `q1`, `q2` and the interstitial
//! concentration `u0` through linear exchange at rate `1/eps` (lumen ↔
//! epithelium) and `K1`, `K2` (epithelium ↔ interstitium), plus an active
//! pump `G(q2)` moving solute from the ascending epithelium into the
//! interstitium. The three-field system is its infinite-permeability limit:
//! lumen and epithelium merge, leaving `u1`, `u2`, `u0` with the time
//! derivative of the merged tubule fields carrying a factor 2.

use crate::error::{Error, Result};

/// Physical and numerical constants of both systems.
///
/// The lumen-epithelium exchange rate is `1/eps` for both tubules; the raw
/// radii and permeabilities are folded into `k1`, `k2` and `eps` and are not
/// stored separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    /// Axial fluid speed in both tubules, m/s.
    pub alpha: f64,
    /// Epithelium-interstitium exchange rate, descending side, 1/s.
    pub k1: f64,
    /// Epithelium-interstitium exchange rate, ascending side, 1/s.
    pub k2: f64,
    /// Relaxation parameter; `1/eps` is the lumen-epithelium exchange rate.
    pub eps: f64,
    /// Pump maximum rate, mol/(m^3 s).
    pub vm: f64,
    /// Pump half-saturation concentration, mol/m^3.
    pub km: f64,
    /// Tubule length, m.
    pub length: f64,
    /// Final simulation time, s.
    pub t_final: f64,
}

impl Params {
    /// Validates and builds a parameter set.
    ///
    /// `t_final = 0` is accepted and yields the empty evolution.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha: f64,
        k1: f64,
        k2: f64,
        eps: f64,
        vm: f64,
        km: f64,
        length: f64,
        t_final: f64,
    ) -> Result<Self> {
        let p = Params { alpha, k1, k2, eps, vm, km, length, t_final };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let checks = [
            (self.alpha > 0.0, "alpha must be > 0"),
            (self.k1 >= 0.0, "k1 must be >= 0"),
            (self.k2 >= 0.0, "k2 must be >= 0"),
            (self.eps > 0.0, "eps must be > 0"),
            (self.vm >= 0.0, "vm must be >= 0"),
            (self.km > 0.0, "km must be > 0"),
            (self.length > 0.0, "length must be > 0"),
            (self.t_final >= 0.0, "t_final must be >= 0"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidParams(msg.into()));
            }
        }
        for (v, name) in [
            (self.alpha, "alpha"),
            (self.k1, "k1"),
            (self.k2, "k2"),
            (self.eps, "eps"),
            (self.vm, "vm"),
            (self.km, "km"),
            (self.length, "length"),
            (self.t_final, "t_final"),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Returns a copy with a different relaxation parameter, revalidated.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Params::new(
            self.alpha, self.k1, self.k2, eps, self.vm, self.km, self.length, self.t_final,
        )
    }

    /// Supremum of the pump rate over the real line.
    pub fn g_sup(&self) -> f64 {
        self.vm
    }

    /// Supremum of the pump derivative, attained at `q = km`.
    pub fn g_prime_sup(&self) -> f64 {
        3.0 * self.vm / (16.0 * self.km)
    }
}

impl Default for Params {
    /// Unit-magnitude convention: `alpha = k1 = k2 = vm = km = length =
    /// t_final = 1`, `eps = 0.1`.
    fn default() -> Self {
        Params {
            alpha: 1.0,
            k1: 1.0,
            k2: 1.0,
            eps: 0.1,
            vm: 1.0,
            km: 1.0,
            length: 1.0,
            t_final: 1.0,
        }
    }
}

/// Active pump rate `G(q) = vm (q / (km + q))^3`, extended to negative
/// arguments as an odd function.
///
/// The saturation ratio is computed once and cubed, so large `q` cannot
/// overflow. The result lies in `[-vm, vm]`.
pub fn eval_g(q: f64, p: &Params) -> Result<f64> {
    if !q.is_finite() {
        return Err(Error::DomainError("eval_g"));
    }
    Ok(g_unchecked(q, p))
}

#[inline]
pub(crate) fn g_unchecked(q: f64, p: &Params) -> f64 {
    let a = q.abs();
    let r = a / (p.km + a);
    let g = p.vm * r * r * r;
    if q < 0.0 {
        -g
    } else {
        g
    }
}

/// Derivative of the extended pump: `G'(q) = 3 vm km q^2 / (km + q)^4` for
/// `q >= 0`, even in `q`. Nonnegative and bounded by `3 vm / (16 km)`.
pub fn eval_g_prime(q: f64, p: &Params) -> Result<f64> {
    if !q.is_finite() {
        return Err(Error::DomainError("eval_g_prime"));
    }
    let a = q.abs();
    let r = a / (p.km + a);
    let s = p.km + a;
    Ok(3.0 * p.vm * r * r * p.km / (s * s))
}

/// Right-hand sides of the five-field system at one point.
///
/// Returns the rates for `(u1, u2, q1, q2, u0)`. The ionic exchange is
/// conservative: the five rates sum to zero.
pub fn source_rates_full(
    u1: f64,
    u2: f64,
    q1: f64,
    q2: f64,
    u0: f64,
    p: &Params,
) -> Result<[f64; 5]> {
    for v in [u1, u2, q1, q2, u0] {
        if !v.is_finite() {
            return Err(Error::DomainError("source_rates_full"));
        }
    }
    let g = g_unchecked(q2, p);
    let relax1 = (q1 - u1) / p.eps;
    let relax2 = (q2 - u2) / p.eps;
    Ok([
        relax1,
        relax2,
        -relax1 + p.k1 * (u0 - q1),
        -relax2 + p.k2 * (u0 - q2) - g,
        p.k1 * (q1 - u0) + p.k2 * (q2 - u0) + g,
    ])
}

/// Right-hand sides of the three-field limit system at one point.
///
/// Returns `(rate1, rate2, rate3)` where the first two are already divided
/// by the factor 2 multiplying the merged tubules' time derivative, so they
/// are directly usable as `d/dt` rates net of transport. The conservation
/// identity is `2 rate1 + 2 rate2 + rate3 = 0`.
pub fn source_rates_reduced(u1: f64, u2: f64, u0: f64, p: &Params) -> Result<[f64; 3]> {
    for v in [u1, u2, u0] {
        if !v.is_finite() {
            return Err(Error::DomainError("source_rates_reduced"));
        }
    }
    let g = g_unchecked(u2, p);
    Ok([
        p.k1 * (u0 - u1) / 2.0,
        (p.k2 * (u0 - u2) - g) / 2.0,
        p.k1 * (u1 - u0) + p.k2 * (u2 - u0) + g,
    ])
}
