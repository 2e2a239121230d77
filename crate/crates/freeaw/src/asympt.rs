//! Large-width asymptotics. This module collects the closed forms that
//! control growth in the strip width: the auxiliary root `B(z)` of
//! `B + 1/B = (1 - z)/v + v` and the generating functions it linearizes,
//! the width-indexed series identity for the one-time generating function,
//! leading-order predictions for the power-kernel functionals in four
//! parameter regimes, the phase classifier of the boundary-parameter plane,
//! finite-width Laplace-transform ratios and mean densities (evaluated in
//! log scale so widths in the hundreds stay representable), and the two
//! Poisson scaling regimes with their process limits.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::functional::power_kernel_eval;
use crate::measure::gen_measure_log;
use crate::moment::AwParams;
use crate::{C64, LppConfig};

const REAL_TOL: f64 = 1e-12;
const PHASE_TOL: f64 = 1e-12;
const MEASURE_TOL: f64 = 1e-10;
const DENSITY_STEP: f64 = 1e-4;

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::non_finite("value overflowed the floating-point range"))
    }
}

/// Smaller root of `B + 1/B = (1 - z)/v + v`, i.e. the branch with
/// `B(0) = v` and `|B| <= 1`. Defined on the disk `|z| < (1 - v)^2`, whose
/// boundary is the branch point where the two roots collide.
pub fn b_root(z: C64, v: f64) -> Result<C64> {
    if !(v.is_finite() && 0.0 < v && v < 1.0) {
        return Err(Error::constraint("auxiliary root needs v in (0, 1)"));
    }
    let edge = (1.0 - v) * (1.0 - v);
    if !(z.re.is_finite() && z.im.is_finite()) || z.norm() >= edge {
        return Err(Error::constraint(format!(
            "auxiliary root needs |z| < (1 - v)^2 = {edge}"
        )));
    }
    let a = C64::new(1.0 + v * v, 0.0) - z;
    let d1 = C64::new(edge, 0.0) - z;
    let d2 = C64::new((1.0 + v) * (1.0 + v), 0.0) - z;
    let mut s = (d1 * d2).sqrt();
    // Align the square root with `a`, then return the smaller root as the
    // reciprocal of the larger one; this avoids cancellation near z = 0.
    if a.re * s.re + a.im * s.im < 0.0 {
        s = -s;
    }
    Ok(2.0 * v / (a + s))
}

/// Closed form of `sum_{n>=1} z^(n-1) L[h_v^(-n)]` for at most three
/// parameters: `(B/v) (1 - abcB) / ((1 - aB)(1 - bB)(1 - cB))` with
/// `B = b_root(z, v)`. Valid while `|B| R < 1`, i.e. before the root crosses
/// the singularity of the nearest parameter.
pub fn h_generating(z: C64, p: &AwParams, v: f64) -> Result<C64> {
    let nz = p.nonzero();
    if nz.len() > 3 {
        return Err(Error::unsupported(
            "the generating closed form needs at most three parameters",
        ));
    }
    let r = p.radius_r();
    if !(v.is_finite() && v > 0.0 && v * r < 1.0) {
        return Err(Error::constraint("needs 0 < v < 1/R"));
    }
    let b = b_root(z, v)?;
    if b.norm() * r >= 1.0 {
        return Err(Error::constraint(
            "z pushes the auxiliary root past the nearest parameter singularity",
        ));
    }
    let mut ps = [C64::new(0.0, 0.0); 3];
    for (slot, val) in ps.iter_mut().zip(nz.iter()) {
        *slot = *val;
    }
    let one = C64::new(1.0, 0.0);
    let numer = one - ps[0] * ps[1] * ps[2] * b;
    let denom = (one - ps[0] * b) * (one - ps[1] * b) * (one - ps[2] * b);
    Ok(b / v * numer / denom)
}

/// One-time generating function `G_N(t)` of the width-`n_sites` stationary
/// measure, via the two-parameter functional applied to a power kernel.
pub fn strip_gen_fn(cfg: &LppConfig, t: f64, n_sites: u32) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::constraint("time must be positive and finite"));
    }
    if n_sites == 0 {
        return Err(Error::constraint("strip width must be at least 1"));
    }
    let p = AwParams::from_reals(&[cfg.c2 * t, cfg.c1 / t])?;
    let out = power_kernel_eval(&p, C64::new(cfg.a * t, 0.0), n_sites)?;
    Ok(out.value.re)
}

/// Closed form of `sum_{N>=1} z^(N-1) G_N(t)`:
/// `B / (a (t - c1 B)(1 - c2 t B))` with `B = b_root(z, a t)`. Requires
/// `0 <= z < (1 - a t)^2` small enough that `B c1 < t` and `B c2 t < 1`.
pub fn series_in_z(cfg: &LppConfig, t: f64, z: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::constraint("time must be positive and finite"));
    }
    let v = cfg.a * t;
    if v >= 1.0 || cfg.a * cfg.c2 * t * t >= 1.0 {
        return Err(Error::constraint("needs a*t < 1 and a*c2*t^2 < 1"));
    }
    if !z.is_finite() || z < 0.0 {
        return Err(Error::constraint("z must be a nonnegative real"));
    }
    let b = b_root(C64::new(z, 0.0), v)?.re;
    if b * cfg.c1 >= t || b * cfg.c2 * t >= 1.0 {
        return Err(Error::constraint(
            "z too large: the root must satisfy B*c1 < t and B*c2*t < 1",
        ));
    }
    Ok(b / (cfg.a * (t - cfg.c1 * b) * (1.0 - cfg.c2 * t * b)))
}

/// Growth regimes of `L[h_v^(-n)]` as the exponent grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticCase {
    /// All parameters strictly inside the unit disk: edge-dominated decay
    /// with an `n^(-3/2)` correction.
    AllInsideDisk,
    /// One dominant real parameter above 1: pure geometric growth from its
    /// atom.
    OneLarge,
    /// A repeated real parameter above 1: geometric growth with a linear
    /// prefactor from the derivative atom.
    DoubleLarge,
    /// Largest parameter exactly 1: edge decay with an `n^(-1/2)` correction.
    UnitParam,
}

fn require_real(x: C64, what: &str) -> Result<f64> {
    if x.im.abs() > REAL_TOL * x.norm().max(1.0) {
        return Err(Error::unsupported(format!("{what} must be real")));
    }
    Ok(x.re)
}

fn conjugation_closed(vals: &[C64]) -> bool {
    let mut used = vec![false; vals.len()];
    for (i, x) in vals.iter().enumerate() {
        if used[i] {
            continue;
        }
        used[i] = true;
        if x.im.abs() <= REAL_TOL {
            continue;
        }
        let mut paired = false;
        for (j, y) in vals.iter().enumerate().skip(i + 1) {
            if !used[j] && (y - x.conj()).norm() <= REAL_TOL * x.norm().max(1.0) {
                used[j] = true;
                paired = true;
                break;
            }
        }
        if !paired {
            return false;
        }
    }
    true
}

/// Leading-order prediction for `L[h_v^(-n)]` in the stated regime. The
/// parameters must satisfy the regime's hypothesis exactly; repeated
/// parameters beyond the covered regimes (such as a triple above 1) are
/// rejected as unsupported.
pub fn asymptotic_value(case: AsymptoticCase, p: &AwParams, v: f64, n: u32) -> Result<f64> {
    let nz = p.nonzero();
    if nz.len() > 3 {
        return Err(Error::unsupported(
            "asymptotic predictions cover at most three parameters",
        ));
    }
    let r = p.radius_r();
    if !(v.is_finite() && v > 0.0 && v * r < 1.0) {
        return Err(Error::constraint("needs 0 < v < 1/R"));
    }
    if n == 0 {
        return Err(Error::constraint("the exponent must be positive"));
    }
    let mut ps = [C64::new(0.0, 0.0); 3];
    for (slot, val) in ps.iter_mut().zip(nz.iter()) {
        *slot = *val;
    }
    if !conjugation_closed(&ps) {
        return Err(Error::unsupported(
            "parameters must be real or form a conjugate pair",
        ));
    }
    ps.sort_by(|x, y| y.norm().partial_cmp(&x.norm()).unwrap());
    let one = C64::new(1.0, 0.0);
    let nf = n as f64;
    match case {
        AsymptoticCase::AllInsideDisk => {
            if ps[0].norm() >= 1.0 {
                return Err(Error::unsupported(
                    "all parameters must lie strictly inside the unit disk",
                ));
            }
            let c = (one - ps[0] * ps[1]) * (one - ps[0] * ps[2]) * (one - ps[1] * ps[2])
                / (2.0
                    * PI.sqrt()
                    * (one - ps[0]).powi(2)
                    * (one - ps[1]).powi(2)
                    * (one - ps[2]).powi(2));
            let c = require_real(c, "the leading constant")?;
            finite(c / (nf.powf(1.5) * v.powf(1.5)) * (1.0 - v).powi(3 - 2 * n as i32))
        }
        AsymptoticCase::OneLarge => {
            let a = require_real(ps[0], "the dominant parameter")?;
            if a <= 1.0 {
                return Err(Error::unsupported("needs one real parameter above 1"));
            }
            let b = ps[1];
            let c = ps[2];
            let both_small = b.norm() <= 1.0 && c.norm() <= 1.0;
            let second_large = b.im.abs() <= REAL_TOL
                && b.re >= 1.0
                && b.re < a - REAL_TOL * a
                && c.norm() < 1.0;
            if !(both_small || second_large) {
                return Err(Error::unsupported(
                    "the remaining parameters must stay in the closed unit disk or \
                     form a strictly smaller second parameter above 1",
                ));
            }
            let cst = (a * a - 1.0) * (one - b * c) / ((a - b) * (a - c));
            let cst = require_real(cst, "the leading constant")?;
            finite(cst * (a / ((a - v) * (1.0 - a * v))).powi(n as i32))
        }
        AsymptoticCase::DoubleLarge => {
            let a = require_real(ps[0], "the repeated parameter")?;
            let b = require_real(ps[1], "the repeated parameter")?;
            if a <= 1.0 || (a - b).abs() > REAL_TOL * a {
                return Err(Error::unsupported(
                    "needs a repeated real parameter above 1",
                ));
            }
            let c = require_real(ps[2], "the third parameter")?;
            if !(0.0..a - REAL_TOL * a.max(1.0)).contains(&c) {
                return Err(Error::unsupported(
                    "the third parameter must be real in [0, a)",
                ));
            }
            let cst = (a * a - 1.0).powi(2) * (1.0 - a * c) / (a * a * (a - c));
            finite(cst * v * nf * (a / ((a - v) * (1.0 - a * v))).powi(n as i32 + 1))
        }
        AsymptoticCase::UnitParam => {
            let a = require_real(ps[0], "the dominant parameter")?;
            if (a - 1.0).abs() > REAL_TOL {
                return Err(Error::unsupported("needs the dominant parameter equal to 1"));
            }
            if ps[1].norm() >= 1.0 || ps[2].norm() >= 1.0 {
                return Err(Error::unsupported(
                    "the remaining parameters must lie strictly inside the unit disk",
                ));
            }
            let cst = (one - ps[1] * ps[2]) / (PI.sqrt() * (one - ps[1]) * (one - ps[2]));
            let cst = require_real(cst, "the leading constant")?;
            finite(cst / (nf.sqrt() * v.sqrt()) * (1.0 - v).powi(1 - 2 * n as i32))
        }
    }
}

/// Phase regions of the boundary-parameter plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    MaxCurrent,
    LowDensity,
    HighDensity,
    Coexistence,
}

/// Limiting height increment per site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    /// Deterministic limit.
    Point(f64),
    /// Uniform mixture between two deterministic endpoints.
    Mixture { low: f64, high: f64 },
}

/// Classification of a boundary-parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseResult {
    pub region: Region,
    pub density: Density,
    /// True when the classification leaned on a tolerance: an edge with
    /// `c1` or `c2` within 1e-12 of 1 mapped to the max-current region, or
    /// a near-tie `c1 ~ c2` (not bitwise equal) mapped to the coexistence
    /// line. Exactly equal coexistence inputs are not flagged.
    pub boundary: bool,
}

/// Classifies a boundary-parameter point and returns the limiting density.
pub fn phase_limit(a: f64, c1: f64, c2: f64) -> Result<PhaseResult> {
    LppConfig::new(a, c1, c2)?;
    let near = |x: f64, y: f64| (x - y).abs() <= PHASE_TOL * x.abs().max(1.0);
    if near(c1, c2) {
        let c = 0.5 * (c1 + c2);
        if c > 1.0 + PHASE_TOL {
            return Ok(PhaseResult {
                region: Region::Coexistence,
                density: Density::Mixture {
                    low: a / (c - a),
                    high: a * c / (1.0 - a * c),
                },
                boundary: c1 != c2,
            });
        }
        return Ok(PhaseResult {
            region: Region::MaxCurrent,
            density: Density::Point(a / (1.0 - a)),
            boundary: near(c, 1.0),
        });
    }
    if c1 <= 1.0 + PHASE_TOL && c2 <= 1.0 + PHASE_TOL {
        return Ok(PhaseResult {
            region: Region::MaxCurrent,
            density: Density::Point(a / (1.0 - a)),
            boundary: near(c1, 1.0) || near(c2, 1.0),
        });
    }
    if c1 > c2 {
        Ok(PhaseResult {
            region: Region::LowDensity,
            density: Density::Point(a / (c1 - a)),
            boundary: false,
        })
    } else {
        Ok(PhaseResult {
            region: Region::HighDensity,
            density: Density::Point(a * c2 / (1.0 - a * c2)),
            boundary: false,
        })
    }
}

/// The Laplace-transform ratio `phi_N(s)`: the generating function of the
/// width-`n_sites` height at time `exp(s/N)`, normalized by its value at 1.
/// Both factors are evaluated in log scale, so widths far beyond
/// floating-point range for the raw values are fine.
pub fn laplace_transform(cfg: &LppConfig, n_sites: u64, s: f64) -> Result<f64> {
    if n_sites == 0 {
        return Err(Error::constraint("strip width must be at least 1"));
    }
    if !s.is_finite() {
        return Err(Error::constraint("the Laplace variable must be finite"));
    }
    let t = (s / n_sites as f64).exp();
    let num = gen_measure_log(cfg, &[t], &[n_sites], MEASURE_TOL)?.0;
    let den = gen_measure_log(cfg, &[1.0], &[n_sites], MEASURE_TOL)?.0;
    finite((num * den.powi(-1)).to_f64())
}

/// Numerical `E[L1(N)]/N` from a central difference of the log generating
/// function in the Laplace variable, step 1e-4.
pub fn mean_density(cfg: &LppConfig, n_sites: u64) -> Result<f64> {
    if n_sites == 0 {
        return Err(Error::constraint("strip width must be at least 1"));
    }
    let n = n_sites as f64;
    let h = DENSITY_STEP;
    let lp = gen_measure_log(cfg, &[(h / n).exp()], &[n_sites], MEASURE_TOL)?.0;
    let lm = gen_measure_log(cfg, &[(-h / n).exp()], &[n_sites], MEASURE_TOL)?.0;
    if lp.sign <= 0 || lm.sign <= 0 {
        return Err(Error::non_finite("the generating function must be positive"));
    }
    Ok((lp.log_abs - lm.log_abs) / (4.0 * h))
}

/// Limiting Laplace transform on the coexistence line: the transform of a
/// uniform mixture of the low- and high-density endpoint rates.
pub fn coexistence_transform(a: f64, c: f64, s: f64) -> Result<f64> {
    if !(a.is_finite() && 0.0 < a && a < 1.0) {
        return Err(Error::constraint("needs a in (0, 1)"));
    }
    if !(c.is_finite() && c > 1.0 && a * c < 1.0) {
        return Err(Error::constraint("needs c in (1, 1/a)"));
    }
    if !s.is_finite() {
        return Err(Error::constraint("the Laplace variable must be finite"));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    let low = 2.0 * a / (c - a);
    let high = 2.0 * a * c / (1.0 - a * c);
    let k = (c - a) * (1.0 - a * c) / (a * (c * c - 1.0));
    finite(k * ((high * s).exp() - (low * s).exp()) / (2.0 * s))
}

/// Width-coupled parameter regimes under which the height profile
/// approaches a rate-`lambda` Poisson process across the strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonScaling {
    /// Left boundary grows with the width: `c1 = sqrt(N/lambda)`,
    /// `a = sqrt(lambda/(N+1))`, `c2` held fixed.
    A,
    /// Right boundary grows with the width: `a = N^-(theta+1)`,
    /// `c2 = lambda N^theta`, `c1` held fixed.
    B,
}

/// Finite-width generating ratio at Poisson scaling, with its limit.
#[derive(Debug, Clone, Copy)]
pub struct PoissonOutcome {
    /// Multipoint generating function divided by the partition function.
    pub ratio: f64,
    /// Poisson-process prediction at the floor-discretized grid.
    pub target: f64,
}

/// Model parameters for width `n_sites` under the given scaling. `fixed` is
/// the boundary parameter the scaling leaves constant (`c2` for the first,
/// `c1` for the second); `theta` is only read by the second scaling.
pub fn poisson_config(
    scaling: PoissonScaling,
    lambda: f64,
    theta: f64,
    fixed: f64,
    n_sites: u32,
) -> Result<LppConfig> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::constraint("lambda must be positive and finite"));
    }
    if n_sites == 0 {
        return Err(Error::constraint("strip width must be at least 1"));
    }
    let n = n_sites as f64;
    match scaling {
        PoissonScaling::A => {
            LppConfig::new((lambda / (n + 1.0)).sqrt(), (n / lambda).sqrt(), fixed)
        }
        PoissonScaling::B => {
            if !(theta.is_finite() && theta > 0.0) {
                return Err(Error::constraint("theta must be positive and finite"));
            }
            LppConfig::new(n.powf(-(theta + 1.0)), fixed, lambda * n.powf(theta))
        }
    }
}

/// Evaluates the multipoint generating ratio of the height increments over
/// the blocks cut by `xs` (fractions of the width, ending at 1), each block
/// weighted by the matching entry of `ts`, and the Poisson prediction
/// `exp(lambda * sum (x_j - x_{j-1})(t_j^2 - 1))` at the floor-discretized
/// grid. Returns both so callers can compare them.
pub fn poisson_check(
    scaling: PoissonScaling,
    lambda: f64,
    theta: f64,
    fixed: f64,
    n_sites: u32,
    ts: &[f64],
    xs: &[f64],
) -> Result<PoissonOutcome> {
    let d = ts.len();
    if d == 0 || d > 3 || xs.len() != d {
        return Err(Error::constraint(
            "needs between 1 and 3 grid points with matching times",
        ));
    }
    let mut prev = 0.0f64;
    for &x in xs {
        if !(x.is_finite() && x > prev && x <= 1.0) {
            return Err(Error::constraint(
                "grid points must increase strictly within (0, 1]",
            ));
        }
        prev = x;
    }
    if xs[d - 1] != 1.0 {
        return Err(Error::constraint(
            "the grid must end at 1 so the blocks cover the whole strip",
        ));
    }
    let cfg = poisson_config(scaling, lambda, theta, fixed, n_sites)?;
    let n = n_sites as f64;
    let mut cuts = Vec::with_capacity(d);
    let mut blocks = Vec::with_capacity(d);
    let mut last = 0u64;
    for &x in xs {
        let cut = (x * n).floor() as u64;
        if cut <= last {
            return Err(Error::constraint(
                "grid points are too close: every block needs at least one site",
            ));
        }
        blocks.push(cut - last);
        cuts.push(cut);
        last = cut;
    }
    let num = gen_measure_log(&cfg, ts, &blocks, 1e-9)?.0;
    let den = gen_measure_log(&cfg, &[1.0], &[n_sites as u64], 1e-9)?.0;
    let ratio = finite((num * den.powi(-1)).to_f64())?;
    let mut expo = 0.0;
    let mut prev_hat = 0.0;
    for (j, &cut) in cuts.iter().enumerate() {
        let x_hat = cut as f64 / n;
        expo += (x_hat - prev_hat) * (ts[j] * ts[j] - 1.0);
        prev_hat = x_hat;
    }
    Ok(PoissonOutcome {
        ratio,
        target: (lambda * expo).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg(a: f64, c1: f64, c2: f64) -> LppConfig {
        LppConfig::new(a, c1, c2).unwrap()
    }

    fn reals(vals: &[f64]) -> AwParams {
        AwParams::from_reals(vals).unwrap()
    }

    #[test]
    fn b_root_recovers_parameter_at_zero() {
        for v in [0.1, 0.3, 0.5, 0.8, 0.95] {
            let b = b_root(C64::new(0.0, 0.0), v).unwrap();
            assert_relative_eq!(b.re, v, max_relative = 1e-14);
            assert!(b.im.abs() < 1e-15);
        }
    }

    #[test]
    fn b_root_known_value() {
        // v = 0.5, z = 0.1: the equation is B + 1/B = 2.3, so the smaller
        // branch is (2.3 - sqrt(2.3^2 - 4)) / 2.
        let b = b_root(C64::new(0.1, 0.0), 0.5).unwrap();
        let oracle = (2.3 - (2.3f64 * 2.3 - 4.0).sqrt()) / 2.0;
        assert_relative_eq!(b.re, oracle, max_relative = 1e-13);
        assert_relative_eq!(b.re, 0.582109165419, max_relative = 1e-9);
    }

    #[test]
    fn b_root_rejects_branch_point_and_beyond() {
        let v = 0.4;
        let edge = (1.0 - v) * (1.0 - v);
        assert!(b_root(C64::new(edge, 0.0), v).is_err());
        assert!(b_root(C64::new(0.0, edge), v).is_err());
        assert!(b_root(C64::new(0.1, 0.0), 0.0).is_err());
        assert!(b_root(C64::new(0.1, 0.0), 1.0).is_err());
    }

    proptest! {
        #[test]
        fn b_root_back_substitution(
            v in 0.05f64..0.95,
            frac in 0.0f64..0.99,
            angle in 0.0f64..(2.0 * PI),
        ) {
            let radius = frac * (1.0 - v) * (1.0 - v);
            let z = C64::from_polar(radius, angle);
            let b = b_root(z, v).unwrap();
            let s = (C64::new(1.0, 0.0) - z) / v + v;
            let resid = (b + 1.0 / b - s).norm();
            prop_assert!(resid <= 1e-11 * s.norm().max(1.0), "residual {resid}");
            prop_assert!(b.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn generating_function_matches_power_kernel_partial_sums() {
        let p = reals(&[0.3, -0.2, 0.5]);
        let v = 0.4;
        let z = C64::new(0.05, 0.0);
        let closed = h_generating(z, &p, v).unwrap();
        let mut sum = C64::new(0.0, 0.0);
        let mut zk = C64::new(1.0, 0.0);
        for n in 1..=80u32 {
            let term = power_kernel_eval(&p, C64::new(v, 0.0), n).unwrap().value;
            sum += zk * term;
            zk *= z;
        }
        assert!((closed - sum).norm() <= 1e-8 * sum.norm());
    }

    #[test]
    fn generating_function_with_large_parameter_matches_partial_sums() {
        let p = reals(&[1.25, 0.3, -0.2]);
        let v = 0.4;
        let z = C64::new(0.1, 0.0);
        let closed = h_generating(z, &p, v).unwrap();
        let mut sum = C64::new(0.0, 0.0);
        let mut zk = C64::new(1.0, 0.0);
        for n in 1..=120u32 {
            let term = power_kernel_eval(&p, C64::new(v, 0.0), n).unwrap().value;
            sum += zk * term;
            zk *= z;
        }
        assert!((closed - sum).norm() <= 1e-8 * sum.norm());
    }

    #[test]
    fn generating_function_at_zero_is_the_first_term() {
        let p = reals(&[0.3, -0.2, 0.5]);
        let v = 0.4;
        let closed = h_generating(C64::new(0.0, 0.0), &p, v).unwrap();
        let first = power_kernel_eval(&p, C64::new(v, 0.0), 1).unwrap().value;
        assert!((closed - first).norm() <= 1e-12 * first.norm());
    }

    #[test]
    fn generating_function_rejects_z_past_the_first_pole() {
        // With a = 1.25 and v = 0.4 the nearest singularity sits at
        // z = (a - v)(1 - a v)/a = 0.34, inside the branch disk 0.36.
        let p = reals(&[1.25, 0.3, -0.2]);
        assert!(h_generating(C64::new(0.33, 0.0), &p, 0.4).is_ok());
        assert!(h_generating(C64::new(0.35, 0.0), &p, 0.4).is_err());
    }

    #[test]
    fn series_matches_truncated_width_sum() {
        let c = cfg(0.3, 0.5, 0.4);
        let t = 1.0;
        let z = 0.05;
        let closed = series_in_z(&c, t, z).unwrap();
        let mut sum = 0.0;
        let mut zk = 1.0;
        for n in 1..=60u32 {
            sum += zk * strip_gen_fn(&c, t, n).unwrap();
            zk *= z;
        }
        assert_relative_eq!(closed, sum, max_relative = 1e-8);
    }

    #[test]
    fn series_leading_term_is_the_single_site_value() {
        let c = cfg(0.3, 0.5, 0.4);
        for t in [0.8, 1.0, 1.3] {
            let lead = series_in_z(&c, t, 0.0).unwrap();
            let exact = 1.0 / ((1.0 - c.a * c.c1) * (1.0 - c.a * c.c2 * t * t));
            assert_relative_eq!(lead, exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn series_rejects_out_of_window_inputs() {
        let c = cfg(0.3, 0.5, 0.4);
        let edge = (1.0 - 0.3f64) * (1.0 - 0.3);
        assert!(series_in_z(&c, 1.0, edge).is_err());
        assert!(series_in_z(&c, 1.0, -0.1).is_err());
        // A strong left boundary makes B*c1 < t fail well inside the disk.
        let strong = cfg(0.3, 3.0, 0.1);
        assert!(series_in_z(&strong, 1.0, 0.2).is_err());
        assert!(series_in_z(&strong, 1.0, 0.05).is_ok());
    }

    fn exact_power_value(vals: &[f64], v: f64, n: u32) -> f64 {
        let p = reals(vals);
        power_kernel_eval(&p, C64::new(v, 0.0), n).unwrap().value.re
    }

    #[test]
    fn asymptotic_ratio_all_inside_disk() {
        let vals = [0.3, 0.4, 0.5];
        let v = 0.5;
        let p = reals(&vals);
        let exact = exact_power_value(&vals, v, 400);
        let pred = asymptotic_value(AsymptoticCase::AllInsideDisk, &p, v, 400).unwrap();
        let ratio = exact / pred;
        assert!((ratio - 1.0).abs() < 0.03, "ratio {ratio}");
    }

    #[test]
    fn asymptotic_ratio_one_large() {
        let vals = [1.6, 0.5, 0.3];
        let v = 0.3;
        let p = reals(&vals);
        let exact = exact_power_value(&vals, v, 400);
        let pred = asymptotic_value(AsymptoticCase::OneLarge, &p, v, 400).unwrap();
        let ratio = exact / pred;
        assert!((ratio - 1.0).abs() < 0.03, "ratio {ratio}");
    }

    #[test]
    fn asymptotic_ratio_double_large() {
        let vals = [1.6, 1.6, 0.5];
        let v = 0.3;
        let p = reals(&vals);
        let exact = exact_power_value(&vals, v, 400);
        let pred = asymptotic_value(AsymptoticCase::DoubleLarge, &p, v, 400).unwrap();
        let ratio = exact / pred;
        assert!((ratio - 1.0).abs() < 0.03, "ratio {ratio}");
    }

    #[test]
    fn asymptotic_ratio_unit_parameter() {
        let vals = [1.0, 0.5, 0.3];
        let v = 0.3;
        let p = reals(&vals);
        let exact = exact_power_value(&vals, v, 400);
        let pred = asymptotic_value(AsymptoticCase::UnitParam, &p, v, 400).unwrap();
        let ratio = exact / pred;
        assert!((ratio - 1.0).abs() < 0.03, "ratio {ratio}");
    }

    #[test]
    fn asymptotic_ratios_approach_one() {
        let vals = [0.3, 0.4, 0.5];
        let v = 0.5;
        let p = reals(&vals);
        let mut errs = Vec::new();
        for n in [100u32, 200, 400] {
            let exact = exact_power_value(&vals, v, n);
            let pred = asymptotic_value(AsymptoticCase::AllInsideDisk, &p, v, n).unwrap();
            errs.push((exact / pred - 1.0).abs());
        }
        assert!(errs[1] <= errs[0] + 1e-3 && errs[2] <= errs[1] + 1e-3, "{errs:?}");
    }

    #[test]
    fn asymptotic_cases_reject_mismatched_parameters() {
        let inside = reals(&[0.3, 0.4, 0.5]);
        let one = reals(&[1.6, 0.5, 0.3]);
        let double = reals(&[1.6, 1.6, 0.5]);
        let unit = reals(&[1.0, 0.5, 0.3]);
        let triple = reals(&[2.0, 2.0, 2.0]);
        assert!(asymptotic_value(AsymptoticCase::AllInsideDisk, &one, 0.3, 10).is_err());
        assert!(asymptotic_value(AsymptoticCase::AllInsideDisk, &unit, 0.3, 10).is_err());
        assert!(asymptotic_value(AsymptoticCase::OneLarge, &inside, 0.3, 10).is_err());
        assert!(asymptotic_value(AsymptoticCase::OneLarge, &unit, 0.3, 10).is_err());
        assert!(asymptotic_value(AsymptoticCase::OneLarge, &double, 0.3, 10).is_err());
        assert!(asymptotic_value(AsymptoticCase::DoubleLarge, &one, 0.3, 10).is_err());
        assert!(asymptotic_value(AsymptoticCase::UnitParam, &one, 0.3, 10).is_err());
        for case in [
            AsymptoticCase::AllInsideDisk,
            AsymptoticCase::OneLarge,
            AsymptoticCase::DoubleLarge,
            AsymptoticCase::UnitParam,
        ] {
            assert!(asymptotic_value(case, &triple, 0.3, 10).is_err());
        }
        // v outside (0, 1/R) is rejected regardless of the case.
        assert!(asymptotic_value(AsymptoticCase::OneLarge, &one, 0.7, 10).is_err());
    }

    fn assert_point(d: Density, want: f64) {
        match d {
            Density::Point(rho) => assert_relative_eq!(rho, want, max_relative = 1e-12),
            other => panic!("expected a point density, got {other:?}"),
        }
    }

    #[test]
    fn phase_classifier_covers_the_plane() {
        let p = phase_limit(0.4, 0.5, 0.5).unwrap();
        assert_eq!(p.region, Region::MaxCurrent);
        assert_point(p.density, 2.0 / 3.0);
        assert!(!p.boundary);

        let p = phase_limit(0.4, 2.0, 0.5).unwrap();
        assert_eq!(p.region, Region::LowDensity);
        assert_point(p.density, 0.25);

        let p = phase_limit(0.4, 0.5, 2.0).unwrap();
        assert_eq!(p.region, Region::HighDensity);
        assert_point(p.density, 4.0);

        let p = phase_limit(0.4, 2.0, 2.0).unwrap();
        assert_eq!(p.region, Region::Coexistence);
        match p.density {
            Density::Mixture { low, high } => {
                assert_relative_eq!(low, 0.25, max_relative = 1e-12);
                assert_relative_eq!(high, 4.0, max_relative = 1e-12);
            }
            other => panic!("expected a mixture, got {other:?}"),
        }
        assert!(!p.boundary);
    }

    #[test]
    fn phase_classifier_flags_tolerance_calls() {
        let p = phase_limit(0.4, 1.0, 0.5).unwrap();
        assert_eq!(p.region, Region::MaxCurrent);
        assert!(p.boundary);

        let p = phase_limit(0.4, 2.0, 2.0 + 5e-13).unwrap();
        assert_eq!(p.region, Region::Coexistence);
        assert!(p.boundary);

        assert!(phase_limit(1.2, 0.5, 0.5).is_err());
        assert!(phase_limit(0.4, 2.5, 0.5).is_err());
    }

    #[test]
    fn laplace_transform_is_a_generating_ratio() {
        let c = cfg(0.4, 0.5, 0.5);
        assert_eq!(laplace_transform(&c, 50, 0.0).unwrap(), 1.0);
        let up = laplace_transform(&c, 50, 0.5).unwrap();
        let down = laplace_transform(&c, 50, -0.5).unwrap();
        assert!(up > 1.0 && down < 1.0);
        // Log-convexity at the 3-point stencil {-0.5, 0, 0.5}.
        assert!(up * down >= 1.0 - 1e-12);
    }

    #[test]
    fn laplace_transform_approaches_the_max_current_limit() {
        let c = cfg(0.4, 0.5, 0.5);
        let phi = laplace_transform(&c, 400, 1.0).unwrap();
        let limit = (2.0f64 * 0.4 / 0.6).exp();
        assert!((phi / limit - 1.0).abs() < 0.03, "phi {phi}, limit {limit}");
    }

    #[test]
    fn laplace_transform_on_the_coexistence_diagonal_matches_raw_ratio() {
        // the normalizing value sits exactly on the coincident-atom point
        // c1 = c2 t^2 at t = 1; cross-check against the functional route,
        // which has no collision to resolve
        let c = cfg(0.4, 2.0, 2.0);
        let n = 50u32;
        let phi = laplace_transform(&c, n as u64, 1.0).unwrap();
        let raw = |t: f64| {
            let p = AwParams::from_reals(&[c.c2 * t, c.c1 / t]).unwrap();
            power_kernel_eval(&p, C64::new(c.a * t, 0.0), n).unwrap().value.re
        };
        let want = raw((1.0f64 / n as f64).exp()) / raw(1.0);
        assert_relative_eq!(phi, want, max_relative = 1e-7);
    }

    #[test]
    fn coexistence_transform_is_approached_by_wide_strips() {
        // the finite-width correction is close to 41.4/N at these
        // parameters, so the 5% window needs widths near 2000
        let c = cfg(0.4, 2.0, 2.0);
        let want = coexistence_transform(0.4, 2.0, 1.0).unwrap();
        let rel_at = |n: u64| {
            let phi = laplace_transform(&c, n, 1.0).unwrap();
            (phi - want).abs() / want
        };
        let coarse = rel_at(200);
        let fine = rel_at(2000);
        assert!(fine < 0.05, "width 2000: rel {fine:.4}");
        assert!(
            coarse > fine && coarse < 0.30,
            "corrections should shrink with width: {coarse:.4} vs {fine:.4}"
        );
    }

    #[test]
    fn mean_density_matches_enumeration_at_small_width() {
        let c = cfg(0.4, 0.8, 1.2);
        let rho = mean_density(&c, 4).unwrap();
        let h = DENSITY_STEP;
        let tp = (h / 4.0).exp();
        let tm = (-h / 4.0).exp();
        let gp = gibbs::gen_fn_truncated(&c, &[tp; 4], 70).unwrap().value;
        let gm = gibbs::gen_fn_truncated(&c, &[tm; 4], 70).unwrap().value;
        let oracle = (gp.ln() - gm.ln()) / (4.0 * h);
        assert_relative_eq!(rho, oracle, max_relative = 1e-4);
    }

    #[test]
    fn mean_density_approaches_the_phase_prediction() {
        let rho = mean_density(&cfg(0.4, 0.5, 0.5), 200).unwrap();
        assert!((rho / (2.0 / 3.0) - 1.0).abs() < 0.05, "rho {rho}");
    }

    #[test]
    fn mean_density_crosses_the_phase_edge_smoothly() {
        let lo = mean_density(&cfg(0.4, 0.95, 0.5), 200).unwrap();
        let hi = mean_density(&cfg(0.4, 1.05, 0.5), 200).unwrap();
        assert!(lo > hi, "density decreases into the low-density region");
        assert!((lo - hi).abs() < 0.12, "finite width keeps the crossover smooth");
    }

    #[test]
    fn coexistence_transform_matches_a_quadrature_of_the_mixture() {
        let (a, c, s) = (0.4, 2.0, 1.0);
        let closed = coexistence_transform(a, c, s).unwrap();
        let low = a / (c - a);
        let high = a * c / (1.0 - a * c);
        let m = 20_000;
        let mut sum = 0.0;
        for k in 0..m {
            let u = (k as f64 + 0.5) / m as f64;
            sum += (2.0 * s * (low * u + high * (1.0 - u))).exp();
        }
        assert_relative_eq!(closed, sum / m as f64, max_relative = 1e-6);
        assert_eq!(coexistence_transform(a, c, 0.0).unwrap(), 1.0);
        assert!(coexistence_transform(0.4, 0.9, 1.0).is_err());
    }

    #[test]
    fn poisson_ratio_is_one_at_unit_times() {
        let out = poisson_check(PoissonScaling::B, 2.0, 1.0, 1.0, 500, &[1.0], &[1.0]).unwrap();
        assert_eq!(out.ratio, 1.0);
        assert_eq!(out.target, 1.0);
    }

    #[test]
    fn poisson_right_boundary_scaling_approaches_the_limit() {
        let out = poisson_check(PoissonScaling::B, 2.0, 1.0, 1.0, 2000, &[1.2], &[1.0]).unwrap();
        let rel = (out.ratio - out.target).abs() / out.target;
        assert!(rel < 0.02, "ratio {}, target {}", out.ratio, out.target);
        assert_relative_eq!(out.target, (2.0f64 * 0.44).exp(), max_relative = 1e-12);
    }

    #[test]
    fn poisson_left_boundary_scaling_approaches_the_limit() {
        let out = poisson_check(
            PoissonScaling::A,
            1.0,
            0.0,
            0.5,
            1500,
            &[1.1, 1.3],
            &[0.5, 1.0],
        )
        .unwrap();
        let rel = (out.ratio - out.target).abs() / out.target;
        assert!(rel < 0.05, "ratio {}, target {}", out.ratio, out.target);
    }

    #[test]
    fn poisson_check_rejects_bad_grids() {
        let b = PoissonScaling::B;
        assert!(poisson_check(b, 2.0, 1.0, 1.0, 500, &[1.1], &[0.5]).is_err());
        assert!(poisson_check(b, 2.0, 1.0, 1.0, 500, &[1.1, 1.2], &[1.0, 0.5]).is_err());
        assert!(poisson_check(b, 2.0, 1.0, 1.0, 500, &[1.1, 1.2], &[1.0]).is_err());
        assert!(poisson_check(b, 2.0, 1.0, 1.0, 500, &[], &[]).is_err());
        assert!(
            poisson_check(b, 2.0, 1.0, 1.0, 500, &[1.1, 1.2, 1.3, 1.4], &[0.2, 0.4, 0.6, 1.0])
                .is_err()
        );
        // Grid points closer than one site collapse a block.
        assert!(poisson_check(b, 2.0, 1.0, 1.0, 500, &[1.1, 1.2], &[1e-4, 1.0]).is_err());
        assert!(poisson_check(b, -1.0, 1.0, 1.0, 500, &[1.1], &[1.0]).is_err());
        assert!(poisson_check(b, 2.0, -1.0, 1.0, 500, &[1.1], &[1.0]).is_err());
    }
}
