//! Chebyshev polynomials of the second kind, the quadratic kernel
//! `h_v(y) = 1 + v^2 - v*y`, the Joukowsky map `w -> w + 1/w`, its inverse on
//! the slit plane, and predicates for the ellipse domains swept out by
//! circles under the Joukowsky map.

use crate::C64;

/// Monic Chebyshev polynomial of the second kind, `U_n(2 cos t) = sin((n+1)t)/sin t`,
/// evaluated by the forward three-term recurrence `U_{n+1} = y*U_n - U_{n-1}`
/// with `U_0 = 1`, `U_{-1} = 0`. Negative indices follow `U_{-n} = -U_{n-2}`.
pub fn chebyshev_u(n: i64, y: C64) -> C64 {
    if n < -1 {
        return -chebyshev_u(-n - 2, y);
    }
    if n == -1 {
        return C64::new(0.0, 0.0);
    }
    let mut prev = C64::new(0.0, 0.0);
    let mut cur = C64::new(1.0, 0.0);
    for _ in 0..n {
        let next = y * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Derivative `U_n'(y)`, from differentiating the three-term recurrence:
/// `U'_{n+1} = U_n + y*U'_n - U'_{n-1}` with `U'_0 = 0`, `U'_{-1} = 0`.
pub fn chebyshev_u_derivative(n: i64, y: C64) -> C64 {
    if n <= 0 {
        return C64::new(0.0, 0.0);
    }
    let mut u_prev = C64::new(0.0, 0.0);
    let mut u_cur = C64::new(1.0, 0.0);
    let mut d_prev = C64::new(0.0, 0.0);
    let mut d_cur = C64::new(0.0, 0.0);
    for _ in 0..n {
        let d_next = u_cur + y * d_cur - d_prev;
        let u_next = y * u_cur - u_prev;
        d_prev = d_cur;
        d_cur = d_next;
        u_prev = u_cur;
        u_cur = u_next;
    }
    d_cur
}

/// The kernel `h_alpha(y) = 1 + alpha^2 - alpha*y`, which factors as
/// `(1 - alpha*w)(1 - alpha/w)` under `y = w + 1/w`.
pub fn kernel_h(alpha: C64, y: C64) -> C64 {
    C64::new(1.0, 0.0) + alpha * alpha - alpha * y
}

/// Joukowsky map `w + 1/w`. Requires `w != 0`.
pub fn joukowsky(w: C64) -> C64 {
    assert!(w.norm_sqr() > 0.0, "joukowsky requires w != 0");
    w + w.inv()
}

/// Inverse Joukowsky map: the root `r` of `r^2 - z*r + 1 = 0` with `|r| <= 1`.
/// For `z = 2 cos t` on the real segment `[-2, 2]` returns `e^{it}` with
/// `t` in `[0, pi]` (so `u_inverse(0) = i`).
///
/// The root is obtained from a sign-aligned quadratic solve rather than a
/// direct square root of `z^2 - 4`, which keeps the branch cut pinned to the
/// segment `[-2, 2]`.
pub fn u_inverse(z: C64) -> C64 {
    if z.im == 0.0 && z.re.abs() <= 2.0 {
        let x = z.re / 2.0;
        return C64::new(x, (1.0 - x * x).max(0.0).sqrt());
    }
    let mut d = (z * z - C64::new(4.0, 0.0)).sqrt();
    if (z.conj() * d).re < 0.0 {
        d = -d;
    }
    let big = (z + d) / 2.0;
    big.inv()
}

/// Open region enclosed by the ellipse that is the Joukowsky image of the
/// circle `|w| = rho`, `rho` in `(0, 1]`. Smaller `rho` means a larger
/// region; `rho = 1` degenerates to the segment `[-2, 2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseDomain {
    pub rho: f64,
}

impl EllipseDomain {
    /// Panics unless `rho` lies in `(0, 1]`.
    pub fn new(rho: f64) -> Self {
        assert!(
            rho > 0.0 && rho <= 1.0 && rho.is_finite(),
            "ellipse parameter must lie in (0, 1], got {rho}"
        );
        EllipseDomain { rho }
    }
}

/// Strict interior test: `z` lies inside the ellipse iff `|u_inverse(z)| > rho`.
/// Boundary points return false. No tolerance is applied; callers needing a
/// margin shrink `rho` themselves.
pub fn in_domain(z: C64, d: EllipseDomain) -> bool {
    u_inverse(z).norm() > d.rho
}
