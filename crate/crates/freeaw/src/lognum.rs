//! Signed logarithmic scalars: a sign together with the natural log of the
//! magnitude. Products and sums (via log-sum-exp) stay well defined for
//! values far outside `f64` range, which the iterated-measure route needs
//! when kernel powers reach magnitudes like `exp(6000)`.

use std::ops::{Add, Mul, Neg, Sub};

/// A real number stored as `sign * exp(log_abs)`. Zero is represented by
/// `sign == 0` and `log_abs == -inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: i8,
    pub log_abs: f64,
}

pub const ZERO: SignedLog = SignedLog {
    sign: 0,
    log_abs: f64::NEG_INFINITY,
};

pub const ONE: SignedLog = SignedLog {
    sign: 1,
    log_abs: 0.0,
};

impl SignedLog {
    pub fn from_f64(x: f64) -> SignedLog {
        if x == 0.0 {
            ZERO
        } else {
            SignedLog {
                sign: if x > 0.0 { 1 } else { -1 },
                log_abs: x.abs().ln(),
            }
        }
    }

    pub fn from_log(sign: i8, log_abs: f64) -> SignedLog {
        debug_assert!(matches!(sign, -1 | 0 | 1));
        if sign == 0 || log_abs == f64::NEG_INFINITY {
            ZERO
        } else {
            SignedLog { sign, log_abs }
        }
    }

    /// Converts back to `f64`; magnitudes beyond range overflow to
    /// `+-inf` or underflow to zero, as with ordinary float arithmetic.
    pub fn to_f64(self) -> f64 {
        self.sign as f64 * self.log_abs.exp()
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn abs(self) -> SignedLog {
        SignedLog {
            sign: self.sign.abs(),
            log_abs: self.log_abs,
        }
    }

    /// `self * x` for a plain float factor.
    pub fn scale(self, x: f64) -> SignedLog {
        self * SignedLog::from_f64(x)
    }

    /// Integer power; `powi(0)` is one.
    pub fn powi(self, k: i64) -> SignedLog {
        if k == 0 {
            return ONE;
        }
        if self.is_zero() {
            return ZERO;
        }
        let sign = if self.sign < 0 && k % 2 != 0 { -1 } else { 1 };
        SignedLog::from_log(sign, self.log_abs * k as f64)
    }

    /// Compares magnitudes only.
    pub fn abs_cmp(self, other: SignedLog) -> std::cmp::Ordering {
        self.log_abs
            .partial_cmp(&other.log_abs)
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

impl Add for SignedLog {
    type Output = SignedLog;

    fn add(self, rhs: SignedLog) -> SignedLog {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        // anchor at the larger magnitude: result = big * (1 +- exp(small - big))
        let (big, small) = if self.log_abs >= rhs.log_abs {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let d = (small.log_abs - big.log_abs).exp();
        let factor = if big.sign == small.sign { 1.0 + d } else { 1.0 - d };
        if factor == 0.0 {
            return ZERO;
        }
        SignedLog::from_log(big.sign, big.log_abs + factor.ln())
    }
}

impl Sub for SignedLog {
    type Output = SignedLog;

    fn sub(self, rhs: SignedLog) -> SignedLog {
        self + (-rhs)
    }
}

impl Mul for SignedLog {
    type Output = SignedLog;

    fn mul(self, rhs: SignedLog) -> SignedLog {
        if self.is_zero() || rhs.is_zero() {
            return ZERO;
        }
        SignedLog::from_log(self.sign * rhs.sign, self.log_abs + rhs.log_abs)
    }
}

impl Neg for SignedLog {
    type Output = SignedLog;

    fn neg(self) -> SignedLog {
        SignedLog {
            sign: -self.sign,
            log_abs: self.log_abs,
        }
    }
}
