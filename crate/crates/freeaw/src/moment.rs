//! Polynomial-level moment functional of the free Askey-Wilson family.
//!
//! The functional is determined by `L[1] = 1` together with `L[W_n] = 0` for
//! all `n >= 1`, where `W_n` are the free Askey-Wilson polynomials written in
//! the Chebyshev-U basis through the elementary symmetric functions of the
//! four parameters. On the Chebyshev basis this pins down the moment sequence
//! `lambda_n = L[U_n]` through a four-term linear recurrence, which is the
//! primary evaluation path; closed forms for special parameter patterns serve
//! as independent oracles in the tests.

use crate::error::{Error, Result};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Ordered tuple of up to four complex functional parameters; unset trailing
/// slots are zero. The product of all four must differ from 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwParams {
    params: [C64; 4],
}

impl AwParams {
    /// Builds a parameter tuple, rejecting non-finite entries and the
    /// degenerate case `a*b*c*d = 1` for which the functional is undefined.
    pub fn new(params: &[C64]) -> Result<Self> {
        if params.len() > 4 {
            return Err(Error::constraint(format!(
                "at most 4 parameters allowed, got {}",
                params.len()
            )));
        }
        let mut p = [ZERO; 4];
        for (i, v) in params.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::non_finite(format!("parameter {i}")));
            }
            p[i] = *v;
        }
        let s4 = p[0] * p[1] * p[2] * p[3];
        if (s4 - ONE).norm() == 0.0 {
            return Err(Error::constraint(
                "parameter product a*b*c*d = 1 is excluded".to_string(),
            ));
        }
        Ok(AwParams { params: p })
    }

    /// Convenience constructor from real parameters.
    pub fn from_reals(params: &[f64]) -> Result<Self> {
        let cs: Vec<C64> = params.iter().map(|&x| C64::new(x, 0.0)).collect();
        AwParams::new(&cs)
    }

    /// All four slots, trailing zeros included.
    pub fn params(&self) -> [C64; 4] {
        self.params
    }

    /// The nonzero parameters in order.
    pub fn nonzero(&self) -> Vec<C64> {
        self.params
            .iter()
            .copied()
            .filter(|p| p.norm_sqr() > 0.0)
            .collect()
    }

    /// `max{1, |a|, |b|, |c|, |d|}`, the outer radius governing contour
    /// placement and generating-function convergence.
    pub fn radius_r(&self) -> f64 {
        self.params
            .iter()
            .map(|p| p.norm())
            .fold(1.0f64, f64::max)
    }
}

/// Elementary symmetric functions `(s1, s2, s3, s4)` of the four parameters.
pub fn elementary_symmetric(p: &AwParams) -> (C64, C64, C64, C64) {
    let [a, b, c, d] = p.params();
    let s1 = a + b + c + d;
    let s2 = a * b + a * c + a * d + b * c + b * d + c * d;
    let s3 = a * b * c + a * b * d + a * c * d + b * c * d;
    let s4 = a * b * c * d;
    (s1, s2, s3, s4)
}

/// Polynomial in the Chebyshev-U basis; `coeffs[k]` multiplies `U_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebPoly {
    pub coeffs: Vec<C64>,
}

impl ChebPoly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        let mut p = ChebPoly { coeffs };
        p.trim();
        p
    }

    pub fn from_reals(coeffs: &[f64]) -> Self {
        ChebPoly::new(coeffs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// The single basis element `U_n`.
    pub fn unit(n: usize) -> Self {
        let mut coeffs = vec![ZERO; n + 1];
        coeffs[n] = ONE;
        ChebPoly { coeffs }
    }

    pub fn constant(c: C64) -> Self {
        ChebPoly::new(vec![c])
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last().map_or(false, |c| c.norm_sqr() == 0.0) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(ZERO);
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Evaluation at `y` through the basis recurrence.
    pub fn eval(&self, y: C64) -> C64 {
        let mut prev = ZERO;
        let mut cur = ONE;
        let mut acc = self.coeffs[0];
        for k in 1..self.coeffs.len() {
            let next = y * cur - prev;
            prev = cur;
            cur = next;
            acc += self.coeffs[k] * cur;
        }
        acc
    }

    /// Derivative value at `y`, summing the basis derivative recurrence.
    pub fn eval_derivative(&self, y: C64) -> C64 {
        let mut u_prev = ZERO;
        let mut u_cur = ONE;
        let mut d_prev = ZERO;
        let mut d_cur = ZERO;
        let mut acc = ZERO;
        for k in 1..self.coeffs.len() {
            let d_next = u_cur + y * d_cur - d_prev;
            let u_next = y * u_cur - u_prev;
            d_prev = d_cur;
            d_cur = d_next;
            u_prev = u_cur;
            u_cur = u_next;
            acc += self.coeffs[k] * d_cur;
        }
        acc
    }

    /// Multiplication by `y` in the Chebyshev basis: `y*U_k = U_{k+1} + U_{k-1}`
    /// with `U_{-1} = 0`.
    pub fn mul_y(&self) -> ChebPoly {
        let n = self.coeffs.len();
        let mut out = vec![ZERO; n + 1];
        for (k, &q) in self.coeffs.iter().enumerate() {
            out[k + 1] += q;
            if k >= 1 {
                out[k - 1] += q;
            }
        }
        ChebPoly::new(out)
    }

    /// Multiplication by the kernel `h_alpha(y) = 1 + alpha^2 - alpha*y`,
    /// staying in the Chebyshev basis.
    pub fn mul_h(&self, alpha: C64) -> ChebPoly {
        let shifted = self.mul_y();
        let lead = ONE + alpha * alpha;
        let n = shifted.coeffs.len().max(self.coeffs.len());
        let mut out = vec![ZERO; n];
        for (k, &q) in self.coeffs.iter().enumerate() {
            out[k] += lead * q;
        }
        for (k, &q) in shifted.coeffs.iter().enumerate() {
            out[k] -= alpha * q;
        }
        ChebPoly::new(out)
    }

    pub fn scale(&self, factor: C64) -> ChebPoly {
        ChebPoly::new(self.coeffs.iter().map(|&c| factor * c).collect())
    }
}

/// Free Askey-Wilson polynomial `W_n` in the Chebyshev basis. The `n = 1, 2`
/// cases carry the wrapped-around corrections from negative-index Chebyshev
/// polynomials; from `n = 3` on the pattern is the plain signed window of
/// elementary symmetric functions.
pub fn aw_poly_coeffs(p: &AwParams, n: usize) -> ChebPoly {
    let (s1, s2, s3, s4) = elementary_symmetric(p);
    match n {
        0 => ChebPoly::new(vec![ONE]),
        1 => ChebPoly::new(vec![s3 - s1, ONE - s4]),
        2 => ChebPoly::new(vec![s2 - s4, -s1, ONE]),
        _ => {
            let mut coeffs = vec![ZERO; n + 1];
            coeffs[n] = ONE;
            coeffs[n - 1] = -s1;
            coeffs[n - 2] = s2;
            coeffs[n - 3] = -s3;
            if n >= 4 {
                coeffs[n - 4] = s4;
            }
            ChebPoly::new(coeffs)
        }
    }
}

/// Moment `lambda_n = L[U_n]` from the four-term recurrence
/// `lambda_n = s1*l_{n-1} - s2*l_{n-2} + s3*l_{n-3} - s4*l_{n-4}` seeded by
/// `lambda_{-2} = -1`, `lambda_{-1} = 0`, `lambda_0 = 1`,
/// `lambda_1 = (s1 - s3)/(1 - s4)`.
pub fn moment_u(p: &AwParams, n: usize) -> C64 {
    moment_sequence(p, n)[n]
}

/// Moments `lambda_0..=lambda_n` in one recurrence sweep.
pub fn moment_sequence(p: &AwParams, n: usize) -> Vec<C64> {
    let (s1, s2, s3, s4) = elementary_symmetric(p);
    let mut lam = Vec::with_capacity(n + 1);
    lam.push(ONE);
    if n >= 1 {
        lam.push((s1 - s3) / (ONE - s4));
    }
    // Window holding (lambda_{k-4}, ..., lambda_{k-1}); the two virtual
    // pre-initial terms are lambda_{-2} = -1 and lambda_{-1} = 0.
    let mut w = [-ONE, ZERO, lam[0], *lam.last().unwrap()];
    for _ in 2..=n {
        let next = s1 * w[3] - s2 * w[2] + s3 * w[1] - s4 * w[0];
        lam.push(next);
        w = [w[1], w[2], w[3], next];
    }
    lam.truncate(n + 1);
    lam
}

/// Linear extension of the moment sequence to a Chebyshev-basis polynomial.
pub fn moment_poly(p: &AwParams, q: &ChebPoly) -> C64 {
    let lam = moment_sequence(p, q.degree());
    q.coeffs
        .iter()
        .zip(lam.iter())
        .map(|(c, l)| c * l)
        .sum()
}

/// Closed form of the moment generating function
/// `sum_n z^n lambda_n = [z(s1*s4 - s3)/(1 - s4) + 1 + s4*z^2] / prod(1 - p*z)`,
/// valid for `|z| < 1/radius_r`.
pub fn moment_generating(p: &AwParams, z: C64) -> Result<C64> {
    if z.norm() * p.radius_r() >= 1.0 {
        return Err(Error::constraint(format!(
            "|z| = {} is outside the convergence disk of radius {}",
            z.norm(),
            1.0 / p.radius_r()
        )));
    }
    let (s1, _, s3, s4) = elementary_symmetric(p);
    let mut denom = ONE;
    for q in p.params() {
        denom *= ONE - q * z;
    }
    Ok((z * (s1 * s4 - s3) / (ONE - s4) + ONE + s4 * z * z) / denom)
}

/// Strips the last nonzero parameter `c` from a three-parameter tuple,
/// returning `(reduced params (a, b), r)` with `r = (1 - a*c)(1 - b*c) * q`,
/// so that `L^{a,b,c}[h_c * q] = L^{a,b}[r]`.
pub fn reduce_parameter(p: &AwParams, q: &ChebPoly) -> Result<(AwParams, ChebPoly)> {
    let nz = p.nonzero();
    if nz.len() != 3 {
        return Err(Error::constraint(format!(
            "reduction needs exactly 3 nonzero parameters, got {}",
            nz.len()
        )));
    }
    let (a, b, c) = (nz[0], nz[1], nz[2]);
    let reduced = AwParams::new(&[a, b])?;
    let factor = (ONE - a * c) * (ONE - b * c);
    Ok((reduced, q.scale(factor)))
}

/// Value of the kernel `h_alpha` as a degree-1 Chebyshev polynomial.
pub fn h_as_chebpoly(alpha: C64) -> ChebPoly {
    ChebPoly::new(vec![ONE + alpha * alpha, -alpha])
}
