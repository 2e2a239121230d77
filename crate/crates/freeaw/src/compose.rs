//! Transfer operators of the stationary strip measure and their composition
//! over a nondecreasing time sequence.
//!
//! `pi_t` is the single-time boundary measure, `p_step` the one-step
//! transfer kernel between two times; both reduce to the three-parameter
//! functional. `compose` evaluates a full multi-time pairing by nested
//! contour quadrature, sweeping one circle per distinct time and memoizing
//! partial means on the previous level's nodes, so a `d`-level composition
//! costs `d * M^2` kernel evaluations rather than `M^d`.

use crate::cheb::{kernel_h, u_inverse};
use crate::error::{Error, Result};
use crate::functional::{eval_auto, AnalyticKernel, EvalOutcome, Method};
use crate::moment::AwParams;
use crate::quad::KahanC64;
use crate::{C64, LppConfig};

const ONE: C64 = C64::new(1.0, 0.0);

/// Boundary measure at time `t` applied to a kernel: the two-parameter
/// functional with parameters `c2*t` and `c1/t`.
pub fn pi_t(cfg: &LppConfig, t: f64, kernel: &AnalyticKernel) -> Result<EvalOutcome> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::constraint(format!("time must be positive, got {t}")));
    }
    let p = AwParams::new(&[C64::new(cfg.c2 * t, 0.0), C64::new(cfg.c1 / t, 0.0)])?;
    eval_auto(&p, kernel)
}

/// Transfer kernel from time `s` to time `t >= s`, started at spectral
/// point `x`: the three-parameter functional with parameters
/// `c2*t`, `s*u/t`, `s/(t*u)` where `u = u_inverse(x)`. At `s == t` the
/// kernel is the identity and the value is exactly `f(x)`.
pub fn p_step(cfg: &LppConfig, s: f64, t: f64, x: C64, kernel: &AnalyticKernel) -> Result<EvalOutcome> {
    if !(s.is_finite() && t.is_finite() && 0.0 < s && s <= t) {
        return Err(Error::constraint(format!(
            "times must satisfy 0 < s <= t, got s = {s}, t = {t}"
        )));
    }
    if s == t {
        return Ok(EvalOutcome {
            value: kernel.eval(x),
            est_error: 0.0,
            method: Method::Representation,
        });
    }
    let u = u_inverse(x);
    let r = C64::new(s / t, 0.0);
    let p = AwParams::new(&[C64::new(cfg.c2 * t, 0.0), r * u, r / u])?;
    eval_auto(&p, kernel)
}

/// Pointwise product of kernels, analytic on the intersection of their
/// annuli.
pub fn kernel_product(kernels: &[AnalyticKernel]) -> Result<AnalyticKernel> {
    match kernels.len() {
        0 => Err(Error::constraint("kernel product needs at least one factor")),
        1 => Ok(kernels[0].clone()),
        _ => {
            let rho = kernels.iter().map(|k| k.inner_rho()).fold(0.0f64, f64::max);
            let owned = kernels.to_vec();
            AnalyticKernel::generic(move |y| owned.iter().map(|k| k.eval(y)).product(), rho)
        }
    }
}

fn validate_radii(cfg: &LppConfig, ts: &[f64], radii: &[f64]) -> Result<()> {
    let d = ts.len();
    for j in 0..d {
        let rho = radii[j];
        if !(rho.is_finite() && 0.0 < rho && rho < 1.0) {
            return Err(Error::constraint(format!(
                "contour radius {rho} at level {} outside (0, 1)",
                j + 1
            )));
        }
        if rho <= cfg.a * ts[j] {
            return Err(Error::constraint(format!(
                "contour radius {rho} at level {} does not clear the kernel ring a*t = {}",
                j + 1,
                cfg.a * ts[j]
            )));
        }
        if cfg.c2 * ts[j] * rho >= 1.0 {
            return Err(Error::constraint(format!(
                "contour radius {rho} at level {} hits the pole ring 1/(c2*t)",
                j + 1
            )));
        }
        if j > 0 {
            if radii[j] <= radii[j - 1] {
                return Err(Error::constraint("contour radii must increase level to level"));
            }
            if ts[j - 1] * rho >= ts[j] * radii[j - 1] {
                return Err(Error::constraint(format!(
                    "levels {j} and {} violate the coupling bound t_prev*rho < t*rho_prev",
                    j + 1
                )));
            }
        }
    }
    if cfg.c1 * radii[0] >= ts[0] {
        return Err(Error::constraint(
            "innermost radius hits the pole ring t1/c1",
        ));
    }
    Ok(())
}

/// Chooses contour radii `rho_1 < ... < rho_d` for the nested composition.
///
/// The radii are written as `rho_j = m_j * t_j`. Two schedules are tried:
/// a geometric descent of `m_j` from the largest admissible value down
/// toward `a`, then a square-root-of-time descent that automatically
/// satisfies the pairwise coupling bounds when the first schedule's ratio
/// is too coarse for closely spaced times. Fails if neither schedule meets
/// every constraint.
pub fn radii_plan(cfg: &LppConfig, ts: &[f64]) -> Result<Vec<f64>> {
    if ts.is_empty() {
        return Err(Error::constraint("radii plan needs at least one time"));
    }
    for &t in ts {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::constraint(format!("times must be positive, got {t}")));
        }
    }
    if ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::constraint("radii plan needs strictly increasing times"));
    }
    let d = ts.len();
    let (a, c1, c2) = (cfg.a, cfg.c1, cfg.c2);
    let t_last = ts[d - 1];
    if a * t_last >= 1.0 {
        return Err(Error::constraint(format!(
            "a * t_max = {} must be below 1",
            a * t_last
        )));
    }
    if a * c2 * t_last * t_last >= 1.0 {
        return Err(Error::constraint(format!(
            "a * c2 * t_max^2 = {} must be below 1",
            a * c2 * t_last * t_last
        )));
    }

    let m1 = 0.99
        * (1.0 / c1)
            .min(1.0 / t_last)
            .min(1.0 / (c2 * t_last * t_last));
    if m1 > a {
        let ms: Vec<f64> = (1..=d)
            .map(|j| a * (m1 / a).powf((d + 1 - j) as f64 / d as f64))
            .collect();
        let radii: Vec<f64> = ms.iter().zip(ts).map(|(m, t)| m * t).collect();
        if validate_radii(cfg, ts, &radii).is_ok() {
            return Ok(radii);
        }
    }

    // a 5% margin keeps the trapezoid convergence ratio at or below 0.95
    let t1 = ts[0];
    let k = 0.95
        * (1.0 / c1)
            .min(1.0 / (t1 * t_last).sqrt())
            .min(1.0 / (c2 * t_last * (t1 * t_last).sqrt()));
    if k > a * (t_last / t1).sqrt() {
        let radii: Vec<f64> = ts.iter().map(|&t| k * (t1 * t).sqrt()).collect();
        validate_radii(cfg, ts, &radii)?;
        return Ok(radii);
    }
    Err(Error::constraint(
        "no admissible contour radii found for this configuration; margins to the \
         constraint surfaces a*t < 1, a*c1 < 1, a*c2*t^2 < 1 are too thin",
    ))
}

/// Collapses repeated adjacent times by multiplying their kernels, using
/// the fact that the transfer kernel between equal times is the identity.
fn collapse(ts: &[f64], kernels: &[AnalyticKernel]) -> Result<(Vec<f64>, Vec<AnalyticKernel>)> {
    let mut out_t: Vec<f64> = Vec::new();
    let mut out_k: Vec<AnalyticKernel> = Vec::new();
    let mut group: Vec<AnalyticKernel> = Vec::new();
    for (i, (&t, k)) in ts.iter().zip(kernels).enumerate() {
        if i > 0 && t == *out_t.last().unwrap() {
            group.push(k.clone());
        } else {
            if !group.is_empty() {
                out_k.push(kernel_product(&group)?);
                group.clear();
            }
            out_t.push(t);
            group.push(k.clone());
        }
    }
    out_k.push(kernel_product(&group)?);
    Ok((out_t, out_k))
}

const COMPOSE_NODES_START: usize = 64;
const COMPOSE_NODES_MAX: usize = 4096;

/// One pass of the nested quadrature at a fixed node count per level.
/// Returns the value and the largest magnitude seen in the outermost sum
/// (used as the floor for the convergence test).
fn nested_pass(
    cfg: &LppConfig,
    ts: &[f64],
    kernels: &[AnalyticKernel],
    radii: &[f64],
    m: usize,
) -> (C64, f64) {
    let d = ts.len();
    let two_pi = 2.0 * std::f64::consts::PI;
    // per-level nodes and their x-independent integrand factors
    let mut ws: Vec<Vec<C64>> = Vec::with_capacity(d);
    let mut xs: Vec<Vec<C64>> = Vec::with_capacity(d);
    let mut pref: Vec<Vec<C64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut wj = Vec::with_capacity(m);
        let mut xj = Vec::with_capacity(m);
        let mut pj = Vec::with_capacity(m);
        for k in 0..m {
            let w = C64::from_polar(radii[j], two_pi * k as f64 / m as f64);
            let x = w + w.inv();
            let t_prev = if j == 0 { 0.0 } else { ts[j - 1] };
            let mut p = kernels[j].eval(x) * (ONE - w * w)
                * (ONE - C64::new(cfg.c2 * t_prev * t_prev / ts[j], 0.0) * w)
                / (ONE - C64::new(cfg.c2 * ts[j], 0.0) * w);
            if j == 0 {
                p /= ONE - C64::new(cfg.c1 / ts[0], 0.0) * w;
            }
            wj.push(w);
            xj.push(x);
            pj.push(p);
        }
        ws.push(wj);
        xs.push(xj);
        pref.push(pj);
    }
    // backward sweep: v holds the partial mean as a function of the
    // previous level's node
    let mut v = vec![ONE; m];
    for j in (1..d).rev() {
        let r = C64::new(ts[j - 1] / ts[j], 0.0);
        let mut newv = vec![C64::new(0.0, 0.0); m];
        for (i, nv) in newv.iter_mut().enumerate() {
            let xi = xs[j - 1][i];
            let mut acc = KahanC64::default();
            for k in 0..m {
                acc.add(pref[j][k] * v[k] / kernel_h(r * ws[j][k], xi));
            }
            *nv = acc.value() / m as f64;
        }
        v = newv;
    }
    let mut acc = KahanC64::default();
    let mut max_mag = 0.0f64;
    for k in 0..m {
        let term = pref[0][k] * v[k];
        max_mag = max_mag.max(term.norm());
        acc.add(term);
    }
    (acc.value() / m as f64, max_mag)
}

/// Multi-time pairing `pi^{t_1..t_d}[f_1 (x) ... (x) f_d]` over a
/// nondecreasing time sequence. Repeated times are collapsed exactly; a
/// single surviving time delegates to `pi_t`; otherwise the value comes
/// from nested contour quadrature on the radii plan, doubling all levels'
/// node counts together until two passes agree to `rel_tol`.
pub fn compose(
    cfg: &LppConfig,
    ts: &[f64],
    kernels: &[AnalyticKernel],
    rel_tol: f64,
) -> Result<EvalOutcome> {
    if ts.is_empty() || ts.len() != kernels.len() {
        return Err(Error::constraint(
            "composition needs matching, nonempty time and kernel lists",
        ));
    }
    if ts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::constraint("composition times must be nondecreasing"));
    }
    let (ts, kernels) = collapse(ts, kernels)?;
    if ts.len() == 1 {
        return pi_t(cfg, ts[0], &kernels[0]);
    }
    if ts.len() > 3 {
        return Err(Error::unsupported(
            "nested contour composition supports at most three distinct times; \
             use the iterated-measure route for deeper compositions",
        ));
    }
    let radii = radii_plan(cfg, &ts)?;
    for (j, k) in kernels.iter().enumerate() {
        if radii[j] <= k.inner_rho() {
            return Err(Error::constraint(format!(
                "kernel at level {} is not analytic on its contour (inner radius {}, contour {})",
                j + 1,
                k.inner_rho(),
                radii[j]
            )));
        }
    }
    let mut m = COMPOSE_NODES_START;
    let (mut best, mut floor) = nested_pass(cfg, &ts, &kernels, &radii, m);
    let mut delta = f64::INFINITY;
    while m < COMPOSE_NODES_MAX {
        m *= 2;
        let (next, mag) = nested_pass(cfg, &ts, &kernels, &radii, m);
        floor = floor.max(mag);
        delta = (next - best).norm();
        best = next;
        if delta <= rel_tol * best.norm() + 1e-14 * floor {
            return Ok(EvalOutcome {
                value: best,
                est_error: delta,
                method: Method::Contour,
            });
        }
    }
    Err(Error::QuadratureFailure {
        best,
        last_delta: delta,
        nodes: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::ContourSpec;
    use crate::moment::ChebPoly;

    fn cfg(a: f64, c1: f64, c2: f64) -> LppConfig {
        LppConfig::new(a, c1, c2).unwrap()
    }

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn power(v: f64, n: u32) -> AnalyticKernel {
        AnalyticKernel::power(re(v), n).unwrap()
    }

    fn unit() -> AnalyticKernel {
        AnalyticKernel::cheb(ChebPoly::unit(0))
    }

    fn rel_close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * a.norm().max(b.norm()).max(1e-30)
    }

    #[test]
    fn boundary_measure_has_unit_mass() {
        let c = cfg(0.4, 0.8, 1.2);
        for t in [0.7, 1.0, 1.4] {
            let out = pi_t(&c, t, &unit()).unwrap();
            assert!(rel_close(out.value, re(1.0), 1e-10), "t = {t}: {}", out.value);
        }
    }

    #[test]
    fn transfer_kernel_has_unit_mass() {
        let c = cfg(0.4, 0.8, 1.2);
        for x in [re(0.3), re(-1.9), re(2.6), C64::new(0.4, 0.1)] {
            let out = p_step(&c, 1.0, 1.3, x, &unit()).unwrap();
            assert!(rel_close(out.value, re(1.0), 1e-9), "x = {x}: {}", out.value);
        }
    }

    #[test]
    fn equal_times_transfer_is_identity() {
        let c = cfg(0.4, 0.8, 1.2);
        let f = power(0.3, 2);
        let x = re(1.1);
        let out = p_step(&c, 1.2, 1.2, x, &f).unwrap();
        assert_eq!(out.value, f.eval(x));
        assert_eq!(out.est_error, 0.0);
    }

    #[test]
    fn single_time_composition_is_the_boundary_measure() {
        let c = cfg(0.4, 0.8, 1.2);
        let f = power(0.3, 3);
        let a = compose(&c, &[1.1], &[f.clone()], 1e-10).unwrap();
        let b = pi_t(&c, 1.1, &f).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn repeated_times_collapse_to_pointwise_products() {
        let c = cfg(0.4, 0.8, 1.2);
        let f = power(0.41, 1);
        let g = power(0.44, 2);
        let h = power(0.52, 1);
        let merged = kernel_product(&[f.clone(), g.clone()]).unwrap();
        let a = compose(&c, &[1.0, 1.0, 1.3], &[f, g, h.clone()], 1e-10).unwrap();
        let b = compose(&c, &[1.0, 1.3], &[merged, h], 1e-10).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn unit_kernel_slots_drop_out_of_compositions() {
        let c = cfg(0.35, 0.9, 1.1);
        let f = power(0.42, 2);
        // pairing 1 (x) f over (t1, t2) marginalizes to the t2 measure
        let two = compose(&c, &[1.0, 1.2], &[unit(), f.clone()], 1e-9).unwrap();
        let direct = pi_t(&c, 1.2, &f).unwrap();
        assert!(
            rel_close(two.value, direct.value, 1e-8),
            "{} vs {}",
            two.value,
            direct.value
        );
        // pairing f (x) 1 marginalizes to the t1 measure
        let left = compose(&c, &[1.0, 1.2], &[f.clone(), unit()], 1e-9).unwrap();
        let direct1 = pi_t(&c, 1.0, &f).unwrap();
        assert!(rel_close(left.value, direct1.value, 1e-8));
        // three levels, kernels only on the outermost
        let three = compose(&c, &[1.0, 1.1, 1.2], &[unit(), unit(), f.clone()], 1e-9).unwrap();
        assert!(rel_close(three.value, direct.value, 1e-7));
    }

    #[test]
    fn nested_route_matches_pointwise_transfer_composition() {
        let c = cfg(0.4, 0.8, 1.2);
        let f = power(0.40, 1);
        let g = power(0.44, 2);
        let nested = compose(&c, &[1.0, 1.1], &[f.clone(), g.clone()], 1e-9).unwrap();
        // independent route: pi^{t1}[ f * P^{t1,t2} g ] with the transfer
        // value recomputed from scratch at every outer node
        let cc = c;
        let gg = g.clone();
        let composite = AnalyticKernel::generic(
            move |y| p_step(&cc, 1.0, 1.1, y, &gg).unwrap().value,
            c.a * 1.0,
        )
        .unwrap();
        let pointwise = pi_t(&c, 1.0, &kernel_product(&[f, composite]).unwrap()).unwrap();
        assert!(
            rel_close(nested.value, pointwise.value, 1e-7),
            "{} vs {}",
            nested.value,
            pointwise.value
        );
    }

    #[test]
    fn three_level_composition_reduces_when_inner_kernels_are_trivial() {
        let c = cfg(0.3, 0.7, 1.05);
        let f = power(0.34, 1);
        let g = power(0.40, 1);
        let a = compose(&c, &[1.0, 1.15, 1.3], &[f.clone(), g.clone(), unit()], 1e-9).unwrap();
        let b = compose(&c, &[1.0, 1.15], &[f, g], 1e-9).unwrap();
        assert!(rel_close(a.value, b.value, 1e-7), "{} vs {}", a.value, b.value);
    }

    #[test]
    fn swapping_the_top_rate_rescales_the_measure() {
        // pairing f * h_{c2 t} / h_{a t} under the c2 measure equals the a
        // measure of f scaled by (1 - c1 c2)/(1 - a c1)
        let c = cfg(0.4, 0.8, 1.2);
        let swapped = LppConfig::new(c.a, c.c1, c.a).unwrap();
        let t = 1.1;
        let factor = (1.0 - c.c1 * c.c2) / (1.0 - c.a * c.c1);
        let f = power(c.a * t, 2);
        let (a, c2v) = (c.a, c.c2);
        let lhs_kernel = AnalyticKernel::generic(
            {
                let f = f.clone();
                move |y| f.eval(y) * kernel_h(re(c2v * t), y) / kernel_h(re(a * t), y)
            },
            a * t,
        )
        .unwrap();
        let lhs = pi_t(&c, t, &lhs_kernel).unwrap();
        let rhs = pi_t(&swapped, t, &f).unwrap();
        assert!(
            rel_close(lhs.value, rhs.value * factor, 1e-9),
            "{} vs {}",
            lhs.value,
            rhs.value * factor
        );
    }

    #[test]
    fn swapping_the_top_rate_rescales_two_level_compositions() {
        let c = cfg(0.4, 0.8, 1.2);
        let swapped = LppConfig::new(c.a, c.c1, c.a).unwrap();
        let (t1, t2) = (1.0, 1.25);
        let factor = (1.0 - c.c1 * c.c2) / (1.0 - c.a * c.c1);
        let f1 = power(c.a * t1, 1);
        let f2 = power(c.a * t2, 2);
        let (a, c2v) = (c.a, c.c2);
        let last = AnalyticKernel::generic(
            {
                let f2 = f2.clone();
                move |y| f2.eval(y) * kernel_h(re(c2v * t2), y) / kernel_h(re(a * t2), y)
            },
            a * t2,
        )
        .unwrap();
        let lhs = compose(&c, &[t1, t2], &[f1.clone(), last], 1e-9).unwrap();
        let rhs = compose(&swapped, &[t1, t2], &[f1, f2], 1e-9).unwrap();
        assert!(
            rel_close(lhs.value, rhs.value * factor, 1e-7),
            "{} vs {}",
            lhs.value,
            rhs.value * factor
        );
    }

    #[test]
    fn radii_plans_satisfy_every_constraint() {
        let cases = [
            (cfg(0.4, 0.8, 1.2), vec![1.0, 1.1, 1.3]),
            (cfg(0.3, 2.5, 0.4), vec![0.9, 1.0]),
            (cfg(0.5, 0.5, 0.5), vec![1.0, 1.000001, 1.3]),
            (cfg(0.6, 1.2, 0.9), vec![0.8]),
        ];
        for (c, ts) in cases {
            let radii = radii_plan(&c, &ts).unwrap();
            validate_radii(&c, &ts, &radii).unwrap();
        }
    }

    #[test]
    fn radii_plan_rejects_margins_too_thin_to_thread() {
        let c = cfg(0.712, 1.4, 1.0);
        let ts = vec![0.99, 1.0];
        assert!(radii_plan(&c, &ts).is_err());
    }

    #[test]
    fn radii_plan_rejects_out_of_range_times() {
        let c = cfg(0.5, 0.8, 0.9);
        assert!(radii_plan(&c, &[1.0, 2.1]).is_err(), "a*t >= 1");
        assert!(radii_plan(&c, &[1.3, 1.0]).is_err(), "decreasing");
        assert!(radii_plan(&c, &[]).is_err(), "empty");
    }

    #[test]
    fn compose_rejects_shape_errors() {
        let c = cfg(0.4, 0.8, 1.2);
        let f = power(0.3, 1);
        assert!(compose(&c, &[1.0, 1.2], &[f.clone()], 1e-9).is_err());
        assert!(compose(&c, &[1.2, 1.0], &[f.clone(), f.clone()], 1e-9).is_err());
        let deep = compose(
            &c,
            &[1.0, 1.1, 1.2, 1.3],
            &[f.clone(), f.clone(), f.clone(), f],
            1e-9,
        );
        assert!(matches!(deep, Err(Error::Unsupported(_))));
    }

    #[test]
    fn composition_against_contour_with_explicit_radius() {
        // one level: the nested machinery at d >= 2 should agree with a
        // plain contour evaluation of the same functional when the second
        // slot carries the unit kernel and the times coincide after collapse
        let c = cfg(0.4, 0.8, 1.2);
        let f = power(0.45, 2);
        let merged = compose(&c, &[1.1, 1.1], &[f.clone(), unit()], 1e-10).unwrap();
        let p = AwParams::new(&[re(c.c2 * 1.1), re(c.c1 / 1.1)]).unwrap();
        let spec = ContourSpec {
            rho: Some(0.6),
            ..ContourSpec::default()
        };
        let direct = crate::functional::contour_eval(&p, &f, &spec).unwrap();
        assert!(rel_close(merged.value, direct.value, 1e-9));
    }
}
