//! The two-layer ensemble behind the strip stationary measure: exact
//! configuration weights, truncated partition and generating functions with
//! certified geometric tail bounds, a brute-force enumeration oracle, an
//! independent lattice-sum route, the size-step recurrence check, and the
//! one-point real-line integral form.
//!
//! A configuration is a pair of increment vectors `(m, n)` of equal length
//! `N`. Its weight couples the layers through the largest gap between the
//! running sums, `maxgap = max_j (n_1 + .. + n_j - m_1 - .. - m_{j-1})`.

use crate::error::{Error, Result};
use crate::quad::{halfperiod_integral, KahanF64};
use crate::LppConfig;

/// Largest prefix-sum gap between the layers, always at least `n[0]` and
/// at least `sum(n) - sum(m) + m[last]`.
fn max_gap(m: &[u64], n: &[u64]) -> i64 {
    let mut best = i64::MIN;
    let mut gap = 0i64;
    for j in 0..n.len() {
        gap += n[j] as i64;
        best = best.max(gap);
        gap -= m[j] as i64;
    }
    best
}

/// Weight of one two-layer configuration:
/// `a^(sum m + sum n) * (c1 c2)^maxgap * c2^(sum m - sum n)`.
pub fn weight(cfg: &LppConfig, m: &[u64], n: &[u64]) -> Result<f64> {
    if m.is_empty() || m.len() != n.len() {
        return Err(Error::constraint(
            "weight needs matching, nonempty increment lists",
        ));
    }
    let sum_m: i64 = m.iter().map(|&v| v as i64).sum();
    let sum_n: i64 = n.iter().map(|&v| v as i64).sum();
    let gap = max_gap(m, n);
    Ok(cfg.a.powi((sum_m + sum_n) as i32)
        * (cfg.c1 * cfg.c2).powi(gap as i32)
        * cfg.c2.powi((sum_m - sum_n) as i32))
}

/// A truncated positive sum together with a certified upper bound on the
/// omitted mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedSum {
    pub value: f64,
    pub tail_bound: f64,
}

fn validate_times(cfg: &LppConfig, ts: &[f64]) -> Result<()> {
    if ts.is_empty() {
        return Err(Error::constraint("generating function needs at least one time"));
    }
    for &t in ts {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::constraint(format!("times must be positive, got {t}")));
        }
        if cfg.a * t >= 1.0 {
            return Err(Error::constraint(format!("a * t = {} must be below 1", cfg.a * t)));
        }
    }
    let t_max = ts.iter().cloned().fold(0.0f64, f64::max);
    if cfg.a * cfg.c2 * t_max * t_max >= 1.0 {
        return Err(Error::constraint(format!(
            "a * c2 * t_max^2 = {} must be below 1",
            cfg.a * cfg.c2 * t_max * t_max
        )));
    }
    Ok(())
}

/// Per-coordinate geometric ratios dominating the weight: one ratio for
/// each `m_j` (order of `ts`) and one shared ratio for every `n_i`. For
/// `c1 c2 >= 1` the max term is bounded by the full second-layer sum; for
/// `c1 c2 < 1` a fractional exponent `gamma` splits the max term so that
/// both families of ratios drop below one.
fn coordinate_ratios(cfg: &LppConfig, ts: &[f64]) -> Result<(Vec<f64>, f64)> {
    let (a, c1, c2) = (cfg.a, cfg.c1, cfg.c2);
    let prod = c1 * c2;
    let (rho_m, rho_n): (Vec<f64>, f64) = if prod >= 1.0 {
        (ts.iter().map(|&t| a * c2 * t * t).collect(), a * c1)
    } else {
        let t_max = ts.iter().cloned().fold(0.0f64, f64::max);
        let log_l = prod.ln().abs();
        let gamma_lo = 1.0 - (a * c1).ln().abs() / log_l;
        let gamma_hi = (a * c2 * t_max * t_max).ln().abs() / log_l;
        let gamma = (0.5 * (gamma_lo + gamma_hi)).clamp(0.0, 1.0);
        (
            ts.iter().map(|&t| a * c2 * t * t * prod.powf(-gamma)).collect(),
            (a / c2) * prod.powf(gamma),
        )
    };
    for &r in rho_m.iter().chain(std::iter::once(&rho_n)) {
        if !(r.is_finite() && r < 1.0) {
            return Err(Error::constraint(format!(
                "tail-bound ratio {r} is not below 1; truncation cannot be certified"
            )));
        }
    }
    Ok((rho_m, rho_n))
}

/// Union-of-tails majorant: the weight is dominated coordinatewise by
/// `prod rho_i^{x_i}`, so the mass with any coordinate above `cap` is at
/// most `F * sum_i rho_i^{cap+1}` with `F = prod 1/(1-rho_i)`.
fn truncation_tail(rho_m: &[f64], rho_n: f64, n_sites: usize, cap: u64) -> f64 {
    let full: f64 = rho_m
        .iter()
        .map(|&r| 1.0 / (1.0 - r))
        .product::<f64>()
        * (1.0 / (1.0 - rho_n)).powi(n_sites as i32);
    let tails: f64 = rho_m.iter().map(|&r| r.powi(cap as i32 + 1)).sum::<f64>()
        + n_sites as f64 * rho_n.powi(cap as i32 + 1);
    full * tails
}

/// Truncated generating function `sum over configs with all increments
/// <= cap of prod_j t_j^{2 m_j} * weight`, evaluated exactly by dynamic
/// programming over the gap slack `r_j = maxgap-so-far - current gap`
/// (identical value to full enumeration, polynomial cost).
pub fn gen_fn_truncated(cfg: &LppConfig, ts: &[f64], cap: u64) -> Result<TruncatedSum> {
    validate_times(cfg, ts)?;
    let n_sites = ts.len();
    let (a, c1, c2) = (cfg.a, cfg.c1, cfg.c2);
    let states = (n_sites - 1) as u64 * cap + 1;
    let steps = n_sites as u64 * states * (cap + 1) * (cap + 1);
    if steps > 2_000_000_000 {
        return Err(Error::size_guard(format!(
            "dynamic program would take {steps} elementary steps (limit 2e9)"
        )));
    }
    let (rho_m, rho_n) = coordinate_ratios(cfg, ts)?;

    // slack-indexed partial sums; slack starts at zero for every n_1
    let mut dp: Vec<KahanF64> = vec![KahanF64::default(); states as usize];
    let mut init = KahanF64::default();
    let mut pw = 1.0;
    for _ in 0..=cap {
        init.add(pw);
        pw *= a * c1;
    }
    dp[0] = init;

    for j in 0..n_sites - 1 {
        let mut next: Vec<KahanF64> = vec![KahanF64::default(); states as usize];
        let m_base: Vec<f64> = (0..=cap)
            .map(|m| (a * c2 * ts[j] * ts[j]).powi(m as i32))
            .collect();
        let n_base: Vec<f64> = (0..=cap).map(|n| (a / c2).powi(n as i32)).collect();
        for r in 0..states {
            let v = dp[r as usize].value();
            if v == 0.0 {
                continue;
            }
            for m in 0..=cap {
                for n in 0..=cap {
                    let inc = (n as i64 - m as i64 - r as i64).max(0);
                    let r_new = (r as i64 + m as i64 - n as i64).max(0) as usize;
                    next[r_new].add(
                        v * m_base[m as usize]
                            * n_base[n as usize]
                            * (c1 * c2).powi(inc as i32),
                    );
                }
            }
        }
        dp = next;
    }

    let t_last = ts[n_sites - 1];
    let mut last = KahanF64::default();
    let mut pw = 1.0;
    for _ in 0..=cap {
        last.add(pw);
        pw *= a * c2 * t_last * t_last;
    }
    let mut total = KahanF64::default();
    for cell in &dp {
        total.add(cell.value() * last.value());
    }
    Ok(TruncatedSum {
        value: total.value(),
        tail_bound: truncation_tail(&rho_m, rho_n, n_sites, cap),
    })
}

/// Truncated partition function: the generating function at all times one.
pub fn partition_truncated(cfg: &LppConfig, n_sites: usize, cap: u64) -> Result<TruncatedSum> {
    gen_fn_truncated(cfg, &vec![1.0; n_sites], cap)
}

/// Brute-force enumeration of the truncated generating function by an
/// odometer over all `2N` increments. Exponential cost; this is the
/// ground-truth oracle for the dynamic program on tiny instances.
pub fn gen_fn_enumerated(cfg: &LppConfig, ts: &[f64], cap: u64) -> Result<f64> {
    validate_times(cfg, ts)?;
    let n_sites = ts.len();
    let combos = ((cap + 1) as f64).powi(2 * n_sites as i32);
    if combos > 1e9 {
        return Err(Error::size_guard(format!(
            "enumeration would visit {combos:.3e} configurations (limit 1e9)"
        )));
    }
    let mut m = vec![0u64; n_sites];
    let mut n = vec![0u64; n_sites];
    let mut total = KahanF64::default();
    loop {
        let t_pow: f64 = ts
            .iter()
            .zip(&m)
            .map(|(&t, &mj)| t.powi(2 * mj as i32))
            .product();
        total.add(t_pow * weight(cfg, &m, &n)?);
        // odometer over the concatenated digit vector (m, n), base cap+1
        let mut idx = 0;
        loop {
            if idx == 2 * n_sites {
                return Ok(total.value());
            }
            let digit = if idx < n_sites { &mut m[idx] } else { &mut n[idx - n_sites] };
            if *digit < cap {
                *digit += 1;
                break;
            }
            *digit = 0;
            idx += 1;
        }
    }
}

/// Independent lattice-sum route: prefactor
/// `1/((1-a c1)(1-a c2 t_N^2) prod_{j<N}(1-a^2 t_j^2))` times the sum over
/// `k` in `Z^{N-1}` of `(c1 c2)^{S*} prod (a t_j)^{|k_j|} / (c2 t_j)^{k_j}`,
/// where `S*` is the largest prefix sum of `k` capped below at zero. The
/// summation lattice is truncated at `|k_j| <= k_cap`.
pub fn gen_fn_explicit_sum(cfg: &LppConfig, ts: &[f64], k_cap: u64) -> Result<TruncatedSum> {
    validate_times(cfg, ts)?;
    let n_sites = ts.len();
    let (a, c1, c2) = (cfg.a, cfg.c1, cfg.c2);
    let dims = n_sites - 1;
    let combos = ((2 * k_cap + 1) as f64).powi(dims as i32);
    if combos > 1e8 {
        return Err(Error::size_guard(format!(
            "lattice sum would visit {combos:.3e} points (limit 1e8)"
        )));
    }
    let mut prefactor = 1.0 / ((1.0 - a * c1) * (1.0 - a * c2 * ts[dims] * ts[dims]));
    for &t in &ts[..dims] {
        prefactor /= 1.0 - a * a * t * t;
    }

    let mut total = KahanF64::default();
    let mut k = vec![-(k_cap as i64); dims];
    loop {
        let mut s = 0i64;
        let mut s_star = 0i64;
        let mut term = 1.0;
        for (j, &kj) in k.iter().enumerate() {
            s += kj;
            s_star = s_star.max(s);
            term *= (a * ts[j]).powi(kj.unsigned_abs() as i32) * (c2 * ts[j]).powi(-kj as i32);
        }
        total.add(term * (c1 * c2).powi(s_star as i32));
        let mut idx = 0;
        loop {
            if idx == dims {
                let (rho_m, rho_n) = coordinate_ratios(cfg, ts)?;
                // two-sided geometric majorant per lattice coordinate
                let per_full: Vec<f64> = rho_m[..dims]
                    .iter()
                    .map(|&lo| 1.0 + rho_n / (1.0 - rho_n) + lo / (1.0 - lo))
                    .collect();
                let all_full: f64 = per_full.iter().product();
                let mut tail = 0.0;
                for (j, &lo) in rho_m[..dims].iter().enumerate() {
                    let own = rho_n.powi(k_cap as i32 + 1) / (1.0 - rho_n)
                        + lo.powi(k_cap as i32 + 1) / (1.0 - lo);
                    tail += own * all_full / per_full[j];
                }
                return Ok(TruncatedSum {
                    value: prefactor * total.value(),
                    tail_bound: prefactor * tail,
                });
            }
            if k[idx] < k_cap as i64 {
                k[idx] += 1;
                break;
            }
            k[idx] = -(k_cap as i64);
            idx += 1;
        }
    }
}

/// Relative residual of the size-step recurrence: the generating function
/// on `N+1` sites against its expression through the `N`-site functions at
/// boundary parameters `c2` and `a`. Requires `c2` away from `a`.
pub fn recurrence_check(cfg: &LppConfig, ts: &[f64], cap: u64) -> Result<f64> {
    if ts.len() < 2 {
        return Err(Error::constraint("recurrence check needs at least two times"));
    }
    let (a, c1, c2) = (cfg.a, cfg.c1, cfg.c2);
    if (c2 - a).abs() <= 1e-9 * c2.abs().max(a) {
        return Err(Error::unsupported(
            "recurrence is singular at c2 = a; use direct summation there",
        ));
    }
    let t_ext = ts[ts.len() - 1];
    let head = &ts[..ts.len() - 1];
    let lhs = gen_fn_truncated(cfg, ts, cap)?.value;
    let g_c2 = gen_fn_truncated(cfg, head, cap)?.value;
    let swapped = LppConfig::new(a, c1, a)?;
    let g_a = gen_fn_truncated(&swapped, head, cap)?.value;
    let denom = (c2 - a) * (1.0 - a * c2 * t_ext * t_ext);
    let rhs = c2 / denom * g_c2 + a * (c1 * c2 - 1.0) / (denom * (1.0 - a * c1)) * g_a;
    Ok((lhs - rhs).abs() / lhs.abs().max(rhs.abs()))
}

/// One-point generating function as a real-line integral:
/// `G_N(t) = (1 - c1 c2)/(2 pi) * integral of sqrt(4 - y^2) /
/// (h_{a t}^N h_{c1/t} h_{c2 t}) over [-2, 2]`, valid for `c1, c2 < 1`
/// and `c1 < t < 1/c2`.
pub fn one_point_integral(cfg: &LppConfig, t: f64, n_sites: u32) -> Result<f64> {
    let (a, c1, c2) = (cfg.a, cfg.c1, cfg.c2);
    if !(c1 < 1.0 && c2 < 1.0) {
        return Err(Error::constraint(format!(
            "integral form needs c1, c2 below 1, got ({c1}, {c2})"
        )));
    }
    if !(c1 < t && t < 1.0 / c2 && a * t < 1.0) {
        return Err(Error::constraint(format!(
            "integral form needs c1 < t < 1/c2 and a t < 1, got t = {t}"
        )));
    }
    let h = |alpha: f64, y: f64| 1.0 + alpha * alpha - alpha * y;
    let g = |theta: f64| {
        let y = 2.0 * theta.cos();
        let s = theta.sin();
        let val = (1.0 - c1 * c2) * 2.0 * s * s
            / (std::f64::consts::PI
                * h(a * t, y).powi(n_sites as i32)
                * h(c1 / t, y)
                * h(c2 * t, y));
        crate::C64::new(val, 0.0)
    };
    let out = halfperiod_integral(g, 64, 1 << 16, 1e-11)?;
    Ok(out.value.re)
}
