//! Adaptive trapezoid quadrature for periodic analytic integrands, plus
//! compensated summation. Shared by the contour and density evaluators.

use crate::error::{Error, Result};
use crate::C64;

/// Compensated (Kahan) accumulator for complex values, summed in call order.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanC64 {
    sum: C64,
    comp: C64,
}

impl KahanC64 {
    pub fn add(&mut self, x: C64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> C64 {
        self.sum
    }
}

/// Compensated accumulator for real values.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanF64 {
    sum: f64,
    comp: f64,
}

impl KahanF64 {
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadOutcome {
    pub value: C64,
    pub est_error: f64,
}

/// Mean of `g` over one full period at equispaced angles `2*pi*k/m`,
/// doubling the node count (reusing previous nodes) until two successive
/// estimates agree. The absolute floor `1e-14 * max|g|` keeps near-zero
/// results from stalling on pure relative agreement.
pub(crate) fn periodic_mean<F: FnMut(f64) -> C64>(
    mut g: F,
    m0: usize,
    m_max: usize,
    rel_tol: f64,
) -> Result<QuadOutcome> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut m = m0.max(4);
    let mut max_mag = 0.0f64;
    let mut acc = KahanC64::default();
    for k in 0..m {
        let v = g(two_pi * k as f64 / m as f64);
        max_mag = max_mag.max(v.norm());
        acc.add(v);
    }
    let mut est = acc.value() / m as f64;
    let mut delta = f64::INFINITY;
    while m < m_max {
        let mut odd = KahanC64::default();
        for k in 0..m {
            let v = g(two_pi * (2 * k + 1) as f64 / (2 * m) as f64);
            max_mag = max_mag.max(v.norm());
            odd.add(v);
        }
        let refined = (est + odd.value() / m as f64) / 2.0;
        delta = (refined - est).norm();
        est = refined;
        m *= 2;
        if delta <= rel_tol * est.norm() + 1e-14 * max_mag {
            return Ok(QuadOutcome {
                value: est,
                est_error: delta,
            });
        }
    }
    Err(Error::QuadratureFailure {
        best: est,
        last_delta: delta,
        nodes: m,
    })
}

/// Integral of an even periodic integrand over the half period `[0, pi]`,
/// sampled at midpoint angles `(k + 1/2)*pi/m`. Node counts double (without
/// reuse; midpoints do not nest) until two successive estimates agree.
pub(crate) fn halfperiod_integral<F: FnMut(f64) -> C64>(
    mut g: F,
    m0: usize,
    m_max: usize,
    rel_tol: f64,
) -> Result<QuadOutcome> {
    let pi = std::f64::consts::PI;
    let mut m = m0.max(4);
    let mut max_mag = 0.0f64;
    let eval_level = |g: &mut F, m: usize, max_mag: &mut f64| -> C64 {
        let mut acc = KahanC64::default();
        let h = pi / m as f64;
        for k in 0..m {
            let v = g(h * (k as f64 + 0.5));
            *max_mag = max_mag.max(v.norm());
            acc.add(v);
        }
        acc.value() * h
    };
    let mut est = eval_level(&mut g, m, &mut max_mag);
    let mut delta = f64::INFINITY;
    while m < m_max {
        m *= 2;
        let refined = eval_level(&mut g, m, &mut max_mag);
        delta = (refined - est).norm();
        est = refined;
        if delta <= rel_tol * est.norm() + 1e-14 * max_mag * pi {
            return Ok(QuadOutcome {
                value: est,
                est_error: delta,
            });
        }
    }
    Err(Error::QuadratureFailure {
        best: est,
        last_delta: delta,
        nodes: m,
    })
}
