//! Numerical library for free Askey-Wilson functionals (the q = 0 case) and
//! their application to the stationary measure of geometric last-passage
//! percolation on a strip.
//!
//! The layers, bottom to top:
//!
//! * [`cheb`]: Chebyshev polynomials of the second kind, the quadratic kernel
//!   `h_v(y) = 1 + v^2 - v*y`, the Joukowsky map and its inverse, and
//!   ellipse-domain predicates.
//! * [`moment`]: the polynomial-level moment functional determined by the
//!   free Askey-Wilson family, evaluated through a four-term linear
//!   recurrence, plus closed forms used as oracles.
//! * [`functional`]: the analytic-function-level functional with at most
//!   three nonzero parameters, evaluated either by contour quadrature on a
//!   circle or through its atoms-plus-density measure representation.
//! * [`compose`]: the transfer operators built from the functional, composed
//!   over a nondecreasing time sequence by nested contour quadrature.
//! * [`measure`]: the same composition evaluated as iterated real integrals
//!   with explicit atom bookkeeping, including a signed-logarithmic variant
//!   for values far outside floating-point range.
//! * [`gibbs`]: the two-layer ensemble behind the stationary measure: exact
//!   weights, truncated partition and generating functions, an explicit
//!   lattice sum, and a size-step recurrence check.
//! * [`sim`]: forward simulation of the growth dynamics and an empirical
//!   stationarity test.
//! * [`asympt`]: generating functions in the size variable, large-index
//!   asymptotics of functional values, the phase-diagram classifier,
//!   Laplace-transform limits, and Poisson-regime checks.

pub mod asympt;
pub mod cheb;
pub mod compose;
pub mod error;
pub mod functional;
pub mod gibbs;
pub mod lognum;
pub mod measure;
pub mod moment;
pub(crate) mod quad;
pub mod sim;

pub use error::{Error, Result};

/// Version string embedded in CLI output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Strip ensemble rates: bulk parameter `a` and boundary parameters
/// `c1` (bottom) and `c2` (top), with `a` in `(0, 1)` and both boundary
/// parameters in `(0, 1/a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LppConfig {
    pub a: f64,
    pub c1: f64,
    pub c2: f64,
}

impl LppConfig {
    pub fn new(a: f64, c1: f64, c2: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("c1", c1), ("c2", c2)] {
            if !v.is_finite() {
                return Err(Error::non_finite(format!("config parameter {name}")));
            }
        }
        if !(0.0 < a && a < 1.0) {
            return Err(Error::constraint(format!("a must lie in (0, 1), got {a}")));
        }
        if !(c1 > 0.0 && a * c1 < 1.0) {
            return Err(Error::constraint(format!(
                "c1 must lie in (0, 1/a) = (0, {}), got {c1}",
                1.0 / a
            )));
        }
        if !(c2 > 0.0 && a * c2 < 1.0) {
            return Err(Error::constraint(format!(
                "c2 must lie in (0, 1/a) = (0, {}), got {c2}",
                1.0 / a
            )));
        }
        Ok(LppConfig { a, c1, c2 })
    }
}
