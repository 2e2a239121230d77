//! Evaluation of the three-parameter linear functional on analytic kernels.
//!
//! Two independent routes are provided. `contour_eval` integrates over a
//! circle in the resolvent variable and works for any admissible parameter
//! triple, real or complex. `representation_eval` uses the explicit
//! measure: an absolutely continuous part supported on `[-2, 2]` plus atoms
//! contributed by parameters outside the closed unit disk. Agreement of the
//! two routes on their common domain is a key cross-check.

use std::fmt;
use std::sync::Arc;

use crate::cheb::{joukowsky, kernel_h};
use crate::error::{Error, Result};
use crate::moment::{AwParams, ChebPoly};
use crate::quad::{halfperiod_integral, periodic_mean, KahanC64};
use crate::C64;

const UNIT_CIRCLE_TOL: f64 = 1e-9;
const PAIR_MATCH_TOL: f64 = 1e-9;

/// Kernel admitted by the evaluators: a function of the spectral variable
/// `y` that is analytic on a neighbourhood of the support of the measure.
#[derive(Clone)]
pub enum AnalyticKernel {
    /// `y -> h_v(y)^{-n}` with `|v| < 1`, analytic for `u_inverse(y)` outside
    /// the circle of radius `|v|`.
    Power { v: C64, n: u32 },
    /// A polynomial in the Chebyshev basis; entire.
    Cheb(ChebPoly),
    /// Caller-supplied evaluator together with the inner radius of the
    /// annulus (in the resolvent variable) on which it is analytic.
    /// Derivatives are taken by central difference.
    Generic {
        f: Arc<dyn Fn(C64) -> C64 + Send + Sync>,
        analyticity_rho: f64,
    },
}

impl fmt::Debug for AnalyticKernel {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticKernel::Power { v, n } => fm.debug_struct("Power").field("v", v).field("n", n).finish(),
            AnalyticKernel::Cheb(p) => fm.debug_tuple("Cheb").field(p).finish(),
            AnalyticKernel::Generic { analyticity_rho, .. } => fm
                .debug_struct("Generic")
                .field("analyticity_rho", analyticity_rho)
                .finish(),
        }
    }
}

impl AnalyticKernel {
    pub fn power(v: C64, n: u32) -> Result<Self> {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::non_finite("power kernel parameter v"));
        }
        if v.norm() >= 1.0 {
            return Err(Error::constraint(format!(
                "power kernel requires |v| < 1, got |v| = {}",
                v.norm()
            )));
        }
        if n == 0 {
            return Err(Error::constraint("power kernel exponent must be positive"));
        }
        Ok(AnalyticKernel::Power { v, n })
    }

    pub fn cheb(p: ChebPoly) -> Self {
        AnalyticKernel::Cheb(p)
    }

    pub fn generic<F>(f: F, analyticity_rho: f64) -> Result<Self>
    where
        F: Fn(C64) -> C64 + Send + Sync + 'static,
    {
        if !(0.0..1.0).contains(&analyticity_rho) {
            return Err(Error::constraint(
                "generic kernel analyticity radius must lie in [0, 1)",
            ));
        }
        Ok(AnalyticKernel::Generic {
            f: Arc::new(f),
            analyticity_rho,
        })
    }

    /// Inner radius of analyticity in the resolvent variable: the kernel is
    /// analytic as a function of `w` on `inner_rho < |w| < 1/inner_rho`.
    pub fn inner_rho(&self) -> f64 {
        match self {
            AnalyticKernel::Power { v, .. } => v.norm(),
            AnalyticKernel::Cheb(_) => 0.0,
            AnalyticKernel::Generic { analyticity_rho, .. } => *analyticity_rho,
        }
    }

    pub fn eval(&self, y: C64) -> C64 {
        match self {
            AnalyticKernel::Power { v, n } => {
                let h = kernel_h(*v, y);
                (-(*n as f64) * h.ln()).exp()
            }
            AnalyticKernel::Cheb(p) => p.eval(y),
            AnalyticKernel::Generic { f, .. } => f(y),
        }
    }

    /// Derivative in `y`. Exact for power and polynomial kernels; central
    /// difference with step `1e-6 * max(1, |y|)` for generic ones.
    pub fn eval_derivative(&self, y: C64) -> C64 {
        match self {
            AnalyticKernel::Power { v, n } => {
                let h = kernel_h(*v, y);
                let nn = *n as f64;
                *v * nn * (-(nn + 1.0) * h.ln()).exp()
            }
            AnalyticKernel::Cheb(p) => p.eval_derivative(y),
            AnalyticKernel::Generic { f, .. } => {
                let step = 1e-6 * y.norm().max(1.0);
                (f(y + step) - f(y - step)) / (2.0 * step)
            }
        }
    }
}

/// How a value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Contour,
    Representation,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOutcome {
    pub value: C64,
    pub est_error: f64,
    pub method: Method,
}

/// Controls for the contour route.
#[derive(Debug, Clone, Copy)]
pub struct ContourSpec {
    /// Contour radius; `None` selects one automatically from the kernel's
    /// annulus of analyticity and the parameter moduli.
    pub rho: Option<f64>,
    /// Initial node count.
    pub nodes_m: usize,
    /// Whether node doubling is allowed.
    pub adaptive: bool,
    pub rel_tol: f64,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec {
            rho: None,
            nodes_m: 64,
            adaptive: true,
            rel_tol: 1e-10,
        }
    }
}

const NODES_MAX: usize = 1 << 16;

/// Extracts at most three parameters for the triple functional, padding
/// with zeros. Errors if all four slots of `p` are nonzero.
fn triple(p: &AwParams) -> Result<[C64; 3]> {
    let nz = p.nonzero();
    if nz.len() > 3 {
        return Err(Error::constraint(
            "the contour and representation routes take at most three nonzero parameters",
        ));
    }
    let mut t = [C64::new(0.0, 0.0); 3];
    for (slot, &z) in t.iter_mut().zip(nz.iter()) {
        *slot = z;
    }
    Ok(t)
}

fn max_param_radius(t: &[C64; 3]) -> f64 {
    t.iter().map(|z| z.norm()).fold(1.0f64, f64::max)
}

/// Automatic contour radius. The annulus of admissible radii is
/// `(rho_inner, 1/R)` where `rho_inner` comes from the kernel and `R` is the
/// largest of 1 and the parameter moduli. Power kernels favour a radius
/// near the outer edge, where the integrand magnitude (and hence the
/// floating-point cancellation for concentrated kernels) is smallest;
/// entire kernels use a fixed fraction of the outer edge; otherwise the
/// geometric midpoint balances the distance to both singularity rings.
fn auto_rho(kernel: &AnalyticKernel, t: &[C64; 3]) -> Result<f64> {
    let r = max_param_radius(t);
    let inner = kernel.inner_rho();
    let outer = 0.999 / r;
    if inner >= outer {
        return Err(Error::constraint(format!(
            "no admissible contour radius: kernel analytic for |w| > {inner}, parameters force |w| < {outer}"
        )));
    }
    let rho = match kernel {
        AnalyticKernel::Cheb(_) => 0.95 * outer,
        AnalyticKernel::Power { .. } => (0.99 / r).max(1.01 * inner).min(0.999 * outer),
        AnalyticKernel::Generic { .. } => {
            if inner == 0.0 {
                0.9 * outer
            } else {
                (inner / r).sqrt().clamp(1.01 * inner, 0.999 * outer)
            }
        }
    };
    Ok(rho)
}

fn validate_rho(rho: f64, kernel: &AnalyticKernel, t: &[C64; 3]) -> Result<()> {
    let r = max_param_radius(t);
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::constraint("contour radius must be positive"));
    }
    if rho <= kernel.inner_rho() || rho >= 1.0 / r {
        return Err(Error::constraint(format!(
            "contour radius {rho} outside the admissible annulus ({}, {})",
            kernel.inner_rho(),
            1.0 / r
        )));
    }
    Ok(())
}

/// Contour route: the functional as the mean over `|w| = rho` of
/// `f(w + 1/w) (1 - w^2)(1 - abc w) / ((1 - aw)(1 - bw)(1 - cw))`.
pub fn contour_eval(p: &AwParams, kernel: &AnalyticKernel, spec: &ContourSpec) -> Result<EvalOutcome> {
    let t = triple(p)?;
    let rho = match spec.rho {
        Some(r) => {
            validate_rho(r, kernel, &t)?;
            r
        }
        None => auto_rho(kernel, &t)?,
    };
    let abc = t[0] * t[1] * t[2];
    let one = C64::new(1.0, 0.0);
    let g = |theta: f64| -> C64 {
        let w = C64::from_polar(rho, theta);
        let y = joukowsky(w);
        let numer = kernel.eval(y) * (one - w * w) * (one - abc * w);
        let denom = (one - t[0] * w) * (one - t[1] * w) * (one - t[2] * w);
        numer / denom
    };
    let m_max = if spec.adaptive { NODES_MAX } else { spec.nodes_m };
    let q = periodic_mean(g, spec.nodes_m, m_max, spec.rel_tol)?;
    Ok(EvalOutcome {
        value: q.value,
        est_error: q.est_error,
        method: Method::Contour,
    })
}

/// One atom of the representing measure.
#[derive(Debug, Clone, Copy)]
pub struct AtomTerm {
    /// Spectral location `p + 1/p`.
    pub location: C64,
    /// Coefficient of `f(location)`.
    pub mass: C64,
    /// Coefficient of `f'(location)`; nonzero only for a repeated parameter
    /// outside the unit disk.
    pub derivative_mass: C64,
}

/// Decomposition of the representing measure as applied to a kernel.
#[derive(Debug, Clone)]
pub struct RepresentationParts {
    /// Contribution of the absolutely continuous part on `[-2, 2]`.
    pub density_value: C64,
    pub density_error: f64,
    pub atoms: Vec<AtomTerm>,
}

impl RepresentationParts {
    pub fn total(&self) -> C64 {
        let mut acc = KahanC64::default();
        acc.add(self.density_value);
        for a in &self.atoms {
            acc.add(a.mass);
            if a.derivative_mass != C64::new(0.0, 0.0) {
                acc.add(a.derivative_mass);
            }
        }
        acc.value()
    }
}

enum MeasureCase {
    /// Some pair multiplies to exactly 1: the functional is evaluation at
    /// `a + 1/a` for the paired parameter.
    UnitPair { p: C64 },
    /// Density plus simple atoms for each parameter outside the unit disk.
    /// Covers distinct parameters and the all-inside case (where repeats
    /// are also harmless because no atom denominators arise).
    Simple { atoms_outside: Vec<usize> },
    /// A repeated parameter outside the unit disk paired with a distinct
    /// third: density, an atom with a derivative term at the repeat, and
    /// possibly a simple atom at the third.
    RepeatedOutside { rep: usize, other: usize },
}

fn realness_ok(t: &[C64; 3]) -> bool {
    let im_tol = |z: &C64| z.im.abs() <= 1e-14 * z.norm().max(1.0);
    if t.iter().all(im_tol) {
        return true;
    }
    // one real parameter plus a conjugate pair, in any slot order
    for k in 0..3 {
        let (a, b, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
        if im_tol(&a) && (b - c.conj()).norm() <= 1e-12 * b.norm().max(1.0) {
            return true;
        }
    }
    false
}

fn classify(t: &[C64; 3]) -> Result<MeasureCase> {
    if !realness_ok(t) {
        return Err(Error::unsupported(
            "representation requires real parameters or one real parameter with a conjugate pair",
        ));
    }
    let one = C64::new(1.0, 0.0);
    // reciprocal pair first: the measure collapses to a point mass
    for i in 0..3 {
        for j in (i + 1)..3 {
            let prod = t[i] * t[j];
            if (prod - one).norm() <= PAIR_MATCH_TOL {
                let p = if t[i].norm() >= t[j].norm() { t[i] } else { t[j] };
                return Ok(MeasureCase::UnitPair { p });
            }
        }
    }
    for z in t.iter() {
        if (z.norm() - 1.0).abs() < UNIT_CIRCLE_TOL && z.norm() != 0.0 {
            return Err(Error::unsupported(
                "representation undefined for parameters on (or within 1e-9 of) the unit circle",
            ));
        }
    }
    let outside: Vec<usize> = (0..3).filter(|&i| t[i].norm() > 1.0).collect();
    if outside.is_empty() {
        return Ok(MeasureCase::Simple { atoms_outside: vec![] });
    }
    // look for exact repeats among the outside parameters
    let close = |a: C64, b: C64| (a - b).norm() <= PAIR_MATCH_TOL * a.norm().max(1.0);
    for i in 0..3 {
        for j in (i + 1)..3 {
            if t[i].norm() > 1.0 && close(t[i], t[j]) {
                let k = 3 - i - j;
                if close(t[i], t[k]) {
                    return Err(Error::unsupported(
                        "three coincident parameters outside the unit disk",
                    ));
                }
                return Ok(MeasureCase::RepeatedOutside { rep: i, other: k });
            }
        }
    }
    Ok(MeasureCase::Simple { atoms_outside: outside })
}

/// Density factor common to every absolutely continuous case:
/// `(1-ab)(1-ac)(1-bc) sqrt(4-y^2) / (2 pi h_a(y) h_b(y) h_c(y))`,
/// with zero-padded parameters contributing factors of one.
fn density_integral(
    t: &[C64; 3],
    kernel: &AnalyticKernel,
    rel_tol: f64,
) -> Result<(C64, f64)> {
    let one = C64::new(1.0, 0.0);
    let pref = (one - t[0] * t[1]) * (one - t[0] * t[2]) * (one - t[1] * t[2]);
    let two_over_pi = 2.0 / std::f64::consts::PI;
    let g = |theta: f64| -> C64 {
        let y = C64::new(2.0 * theta.cos(), 0.0);
        let s = theta.sin();
        let denom = kernel_h(t[0], y) * kernel_h(t[1], y) * kernel_h(t[2], y);
        kernel.eval(y) * pref * (two_over_pi * s * s) / denom
    };
    let q = halfperiod_integral(g, 64, NODES_MAX, rel_tol)?;
    Ok((q.value, q.est_error))
}

/// Simple atom mass at parameter `p` against partners `q`, `r`:
/// `(p^2 - 1)(1 - q r) / ((p - q)(p - r))`.
fn simple_atom_mass(p: C64, q: C64, r: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    (p * p - one) * (one - q * r) / ((p - q) * (p - r))
}

/// Representation route, returning the density and atom contributions
/// separately. `rel_tol` controls the density quadrature.
pub fn representation_parts(
    p: &AwParams,
    kernel: &AnalyticKernel,
    rel_tol: f64,
) -> Result<RepresentationParts> {
    let t = triple(p)?;
    match classify(&t)? {
        MeasureCase::UnitPair { p: paired } => {
            let loc = joukowsky(paired);
            Ok(RepresentationParts {
                density_value: C64::new(0.0, 0.0),
                density_error: 0.0,
                atoms: vec![AtomTerm {
                    location: loc,
                    mass: kernel.eval(loc),
                    derivative_mass: C64::new(0.0, 0.0),
                }],
            })
        }
        MeasureCase::Simple { atoms_outside } => {
            let (density_value, density_error) = density_integral(&t, kernel, rel_tol)?;
            let atoms = atoms_outside
                .into_iter()
                .map(|i| {
                    let (p, q, r) = (t[i], t[(i + 1) % 3], t[(i + 2) % 3]);
                    let loc = joukowsky(p);
                    AtomTerm {
                        location: loc,
                        mass: simple_atom_mass(p, q, r) * kernel.eval(loc),
                        derivative_mass: C64::new(0.0, 0.0),
                    }
                })
                .collect();
            Ok(RepresentationParts {
                density_value,
                density_error,
                atoms,
            })
        }
        MeasureCase::RepeatedOutside { rep, other } => {
            let a = t[rep];
            let c = t[other];
            let one = C64::new(1.0, 0.0);
            // density with the repeated parameter entering twice
            let td = [a, a, c];
            let (density_value, density_error) = density_integral(&td, kernel, rel_tol)?;
            let loc_a = joukowsky(a);
            let am = a - c;
            let mass_a = ((am * am) + (one - a * c) * (one - a * c)) / (am * am);
            let dmass_a = (a * a - one) * (a * a - one) * (one - a * c) / (a * a * am);
            let mut atoms = vec![AtomTerm {
                location: loc_a,
                mass: mass_a * kernel.eval(loc_a),
                derivative_mass: dmass_a * kernel.eval_derivative(loc_a),
            }];
            if c.norm() > 1.0 {
                let loc_c = joukowsky(c);
                let cm = c - a;
                let mass_c = (c * c - one) * (one - a * a) / (cm * cm);
                atoms.push(AtomTerm {
                    location: loc_c,
                    mass: mass_c * kernel.eval(loc_c),
                    derivative_mass: C64::new(0.0, 0.0),
                });
            }
            Ok(RepresentationParts {
                density_value,
                density_error,
                atoms,
            })
        }
    }
}

/// Representation route as a single value.
pub fn representation_eval(p: &AwParams, kernel: &AnalyticKernel) -> Result<EvalOutcome> {
    let parts = representation_parts(p, kernel, 1e-11)?;
    Ok(EvalOutcome {
        value: parts.total(),
        est_error: parts.density_error,
        method: Method::Representation,
    })
}

/// Whether the representation route applies to these parameters.
pub fn representation_supported(p: &AwParams) -> bool {
    match triple(p) {
        Ok(t) => classify(&t).is_ok(),
        Err(_) => false,
    }
}

/// Evaluates through the representation when its hypotheses hold,
/// otherwise through the contour with default settings.
pub fn eval_auto(p: &AwParams, kernel: &AnalyticKernel) -> Result<EvalOutcome> {
    if representation_supported(p) {
        representation_eval(p, kernel)
    } else {
        contour_eval(p, kernel, &ContourSpec::default())
    }
}

/// The functional applied to `h_v^{-n}`. Dispatches to the representation
/// when available (exact atoms, spectrally convergent density), otherwise
/// to the contour.
pub fn power_kernel_eval(p: &AwParams, v: C64, n: u32) -> Result<EvalOutcome> {
    let t = triple(p)?;
    let r = max_param_radius(&t);
    if v.norm() * r >= 1.0 {
        return Err(Error::constraint(format!(
            "power kernel requires |v| < 1/R with R = {r}, got |v| = {}",
            v.norm()
        )));
    }
    let kernel = AnalyticKernel::power(v, n)?;
    if representation_supported(p) {
        representation_eval(p, &kernel)
    } else {
        contour_eval(p, &kernel, &ContourSpec::default())
    }
}
