//! Identity-check suites. Each suite draws seeded random admissible cases,
//! evaluates an identity through two independent routes, and reports one
//! CSV row per case with the observed residual and its tolerance. The
//! command exits 0 only if every case passes.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use freeaw::cheb::kernel_h;
use freeaw::compose::compose;
use freeaw::functional::{contour_eval, AnalyticKernel, ContourSpec};
use freeaw::gibbs::{gen_fn_explicit_sum, gen_fn_truncated, one_point_integral, recurrence_check};
use freeaw::moment::{moment_poly, moment_sequence, reduce_parameter, AwParams, ChebPoly};
use freeaw::{C64, LppConfig};

use crate::{defaults, emit};

#[derive(clap::ValueEnum, Clone, Copy)]
pub enum Suite {
    /// Contour route against the moment recurrence on the Chebyshev basis.
    Extension,
    /// Parameter-stripping identity for kernel-multiplied polynomials.
    Reduction,
    /// Top-rate swap identity for compositions (depths 1..=d).
    Swap,
    /// Size-step recurrence of the ensemble generating function.
    Recurrence,
    /// Oracle triangle: dynamic program, lattice sum, and composition.
    #[value(name = "theorem14")]
    Theorem14,
    /// One-point generating function against its real-line integral form.
    GbIntegral,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Extension => "extension",
            Suite::Reduction => "reduction",
            Suite::Swap => "swap",
            Suite::Recurrence => "recurrence",
            Suite::Theorem14 => "theorem14",
            Suite::GbIntegral => "gb-integral",
        }
    }
}

#[derive(Args)]
pub struct CheckArgs {
    /// Suite to run.
    #[arg(value_enum)]
    pub suite: Suite,
    /// Number of random cases.
    #[arg(long)]
    pub trials: Option<u32>,
    /// Largest strip width for the ensemble suites.
    #[arg(long = "max-N")]
    pub max_n: Option<u32>,
    /// Largest composition depth for the swap suite (1..=3).
    #[arg(long)]
    pub d: Option<u32>,
    /// Seed for the case sampler.
    #[arg(long, default_value_t = defaults::SEED)]
    pub seed: u64,
    /// Residual tolerance override.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Case {
    label: String,
    residual: f64,
    tol: f64,
}

impl Case {
    fn pass(&self) -> bool {
        self.residual.is_finite() && self.residual <= self.tol
    }
}

pub fn run(args: &CheckArgs) -> anyhow::Result<u8> {
    let trials = args.trials.unwrap_or(match args.suite {
        Suite::Extension => 200,
        Suite::Reduction => 100,
        Suite::Swap => 3,
        Suite::Recurrence => 10,
        Suite::Theorem14 => 20,
        Suite::GbIntegral => 12,
    });
    let max_n = args.max_n.unwrap_or(4);
    let depth = args.d.unwrap_or(3);
    if trials == 0 {
        anyhow::bail!("check needs at least one trial");
    }
    if !(1..=3).contains(&depth) {
        anyhow::bail!("swap depth must lie in 1..=3, got {depth}");
    }
    if !(1..=6).contains(&max_n) {
        anyhow::bail!("max-N must lie in 1..=6, got {max_n}");
    }
    let tol = args.tol.unwrap_or(match args.suite {
        Suite::Extension => defaults::EXTENSION_TOL,
        Suite::Reduction => defaults::REDUCTION_TOL,
        Suite::Swap => defaults::SWAP_TOL,
        Suite::Recurrence => defaults::RECURRENCE_TOL,
        Suite::Theorem14 => defaults::TRIANGLE_TOL,
        Suite::GbIntegral => defaults::INTEGRAL_TOL,
    });
    let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
    let cases = match args.suite {
        Suite::Extension => extension(&mut rng, trials, tol),
        Suite::Reduction => reduction(&mut rng, trials, tol),
        Suite::Swap => swap(&mut rng, trials, depth, tol)?,
        Suite::Recurrence => recurrence(&mut rng, trials, tol)?,
        Suite::Theorem14 => triangle(&mut rng, trials, max_n, tol)?,
        Suite::GbIntegral => gb_integral(&mut rng, trials, max_n, tol)?,
    };
    let passed = cases.iter().filter(|c| c.pass()).count();
    let mut table = String::new();
    writeln!(
        table,
        "# freeaw {} check suite={} seed={} trials={} max-N={} d={} tol={:e}",
        freeaw::VERSION,
        args.suite.name(),
        args.seed,
        trials,
        max_n,
        depth,
        tol
    )?;
    writeln!(table, "case,residual,tolerance,status")?;
    for case in &cases {
        writeln!(
            table,
            "{},{:.3e},{:.3e},{}",
            case.label,
            case.residual,
            case.tol,
            if case.pass() { "pass" } else { "fail" }
        )?;
    }
    writeln!(table, "# result: {passed}/{} passed", cases.len())?;
    emit(&args.out, &table)?;
    Ok(if passed == cases.len() { 0 } else { 1 })
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn failed_case(label: String, err: &freeaw::Error, tol: f64) -> Case {
    Case {
        label: format!("{label};error={err}").replace(',', ";"),
        residual: f64::INFINITY,
        tol,
    }
}

/// Three parameter tuples alternating between all-real draws, a conjugate
/// pair with a real, and a tuple containing one parameter outside the unit
/// disk.
fn draw_tuple(rng: &mut ChaCha12Rng, kind: u32) -> Vec<C64> {
    match kind % 3 {
        0 => (0..3).map(|_| re(rng.gen_range(-0.85..0.85))).collect(),
        1 => {
            let r = rng.gen_range(0.1..0.85);
            let phi = rng.gen_range(0.15..std::f64::consts::PI - 0.15);
            let z = C64::from_polar(r, phi);
            vec![z, z.conj(), re(rng.gen_range(-0.85..0.85))]
        }
        _ => {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            vec![
                re(sign * rng.gen_range(1.05..1.4)),
                re(rng.gen_range(-0.8..0.8)),
                re(rng.gen_range(-0.8..0.8)),
            ]
        }
    }
}

fn tuple_label(t: &[C64]) -> String {
    t.iter()
        .map(|z| {
            if z.im == 0.0 {
                format!("{:.4}", z.re)
            } else {
                format!("{:.4}{:+.4}i", z.re, z.im)
            }
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn extension(rng: &mut ChaCha12Rng, trials: u32, tol: f64) -> Vec<Case> {
    let mut cases = Vec::new();
    for i in 0..trials {
        let tuple = draw_tuple(rng, i);
        let label = tuple_label(&tuple);
        let p = AwParams::new(&tuple).expect("drawn tuples fit the parameter layout");
        let moments = moment_sequence(&p, 15);
        let scale = moments.iter().map(|m| m.norm()).fold(1.0f64, f64::max);
        let mut worst = 0.0f64;
        let mut failure = None;
        for (n, want) in moments.iter().enumerate() {
            let k = AnalyticKernel::cheb(ChebPoly::unit(n));
            match contour_eval(&p, &k, &ContourSpec::default()) {
                Ok(out) => worst = worst.max((out.value - want).norm() / scale),
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        cases.push(match failure {
            Some(e) => failed_case(label, &e, tol),
            None => Case {
                label,
                residual: worst,
                tol,
            },
        });
    }
    cases
}

fn reduction(rng: &mut ChaCha12Rng, trials: u32, tol: f64) -> Vec<Case> {
    let mut cases = Vec::new();
    for _ in 0..trials {
        let draw = |rng: &mut ChaCha12Rng| {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            sign * rng.gen_range(0.05..0.9)
        };
        let (a, b, c) = (draw(rng), draw(rng), draw(rng));
        let degree = rng.gen_range(0..=6usize);
        let coeffs: Vec<f64> = (0..=degree).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = ChebPoly::from_reals(&coeffs);
        let label = format!("a={a:.4};b={b:.4};c={c:.4};deg={degree}");
        let p3 = AwParams::from_reals(&[a, b, c]).expect("three nonzero reals");
        let lhs = moment_poly(&p3, &q.mul_h(re(c)));
        let case = match reduce_parameter(&p3, &q) {
            Ok((p2, r)) => {
                let rhs = moment_poly(&p2, &r);
                Case {
                    label,
                    residual: (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1.0),
                    tol,
                }
            }
            Err(e) => failed_case(label, &e, tol),
        };
        cases.push(case);
    }
    cases
}

fn swap(rng: &mut ChaCha12Rng, trials: u32, depth: u32, tol: f64) -> anyhow::Result<Vec<Case>> {
    let mut cases = Vec::new();
    for d in 1..=depth as usize {
        for _ in 0..trials {
            let (cfg, swapped, ts) = draw_composition(rng, d)?;
            let kernels: Vec<AnalyticKernel> = ts
                .iter()
                .map(|&t| {
                    AnalyticKernel::power(re(cfg.a * t), rng.gen_range(1..=2u32))
                        .expect("a*t is inside the unit disk")
                })
                .collect();
            let t_last = ts[d - 1];
            let f_last = kernels[d - 1].clone();
            let (a, c2) = (cfg.a, cfg.c2);
            let modified = AnalyticKernel::generic(
                move |y| f_last.eval(y) * kernel_h(re(c2 * t_last), y) / kernel_h(re(a * t_last), y),
                a * t_last,
            )?;
            let mut lhs_kernels = kernels.clone();
            lhs_kernels[d - 1] = modified;
            let factor = (1.0 - cfg.c1 * cfg.c2) / (1.0 - cfg.a * cfg.c1);
            let label = format!(
                "d={d};a={:.4};c1={:.4};c2={:.4};t={}",
                cfg.a,
                cfg.c1,
                cfg.c2,
                ts.iter().map(|t| format!("{t:.4}")).collect::<Vec<_>>().join("|")
            );
            let lhs = compose(&cfg, &ts, &lhs_kernels, 1e-9);
            let rhs = compose(&swapped, &ts, &kernels, 1e-9);
            let case = match (lhs, rhs) {
                (Ok(l), Ok(r)) => {
                    let want = r.value * factor;
                    Case {
                        label,
                        residual: (l.value - want).norm()
                            / l.value.norm().max(want.norm()).max(1.0),
                        tol,
                    }
                }
                (Err(e), _) | (_, Err(e)) => failed_case(label, &e, tol),
            };
            cases.push(case);
        }
    }
    Ok(cases)
}

/// Draws an ensemble configuration and strictly increasing times admitting
/// contour plans for both the original and the top-rate-swapped ensembles.
fn draw_composition(
    rng: &mut ChaCha12Rng,
    d: usize,
) -> anyhow::Result<(LppConfig, LppConfig, Vec<f64>)> {
    for _ in 0..10_000 {
        let a = rng.gen_range(0.3..0.45);
        let c1 = rng.gen_range(0.5..1.4);
        let c2 = rng.gen_range(0.6..1.3);
        let mut ts: Vec<f64> = (0..d).map(|_| rng.gen_range(0.85..1.25)).collect();
        ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        if ts.windows(2).any(|w| w[1] - w[0] < 0.03) {
            continue;
        }
        let cfg = match LppConfig::new(a, c1, c2) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let swapped = match LppConfig::new(a, c1, a) {
            Ok(c) => c,
            Err(_) => continue,
        };
        if freeaw::compose::radii_plan(&cfg, &ts).is_ok()
            && freeaw::compose::radii_plan(&swapped, &ts).is_ok()
        {
            return Ok((cfg, swapped, ts));
        }
    }
    anyhow::bail!("could not draw an admissible composition after 10000 attempts");
}

fn recurrence(rng: &mut ChaCha12Rng, trials: u32, tol: f64) -> anyhow::Result<Vec<Case>> {
    let mut cases = Vec::new();
    for _ in 0..trials {
        let (cfg, ts) = draw_ensemble_point(rng, 3)?;
        for len in [2usize, 3] {
            let label = format!(
                "N={}to{};a={:.4};c1={:.4};c2={:.4};t={}",
                len - 1,
                len,
                cfg.a,
                cfg.c1,
                cfg.c2,
                ts[..len]
                    .iter()
                    .map(|t| format!("{t:.4}"))
                    .collect::<Vec<_>>()
                    .join("|")
            );
            let case = match recurrence_check(&cfg, &ts[..len], 60) {
                Ok(residual) => Case {
                    label,
                    residual,
                    tol,
                },
                Err(e) => failed_case(label, &e, tol),
            };
            cases.push(case);
        }
    }
    Ok(cases)
}

/// Draws an ensemble configuration with `count` nondecreasing times far
/// from the truncation and collision degeneracies: the geometric tail
/// ratios stay below 0.65 and every `c2 t` keeps a margin from 1.
fn draw_ensemble_point(
    rng: &mut ChaCha12Rng,
    count: usize,
) -> anyhow::Result<(LppConfig, Vec<f64>)> {
    for _ in 0..10_000 {
        let a: f64 = rng.gen_range(0.25..0.4);
        let c1: f64 = rng.gen_range(0.45..1.35);
        let c2: f64 = rng.gen_range(0.45..1.35);
        if (c2 - a).abs() <= 0.1 {
            continue;
        }
        let mut ts: Vec<f64> = (0..count).map(|_| rng.gen_range(0.85..1.1)).collect();
        ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let t_max = ts[count - 1];
        if a * c2 * t_max * t_max >= 0.65 || a * c1 >= 0.7 {
            continue;
        }
        if ts.iter().any(|t| (c2 * t - 1.0).abs() < 0.05) {
            continue;
        }
        if let Ok(cfg) = LppConfig::new(a, c1, c2) {
            return Ok((cfg, ts));
        }
    }
    anyhow::bail!("could not draw an admissible ensemble point after 10000 attempts");
}

fn triangle(
    rng: &mut ChaCha12Rng,
    trials: u32,
    max_n: u32,
    tol: f64,
) -> anyhow::Result<Vec<Case>> {
    let mut cases = Vec::new();
    for _ in 0..trials {
        let n_total = rng.gen_range(1..=max_n) as usize;
        let d = rng.gen_range(1..=n_total.min(3));
        let mut mults = vec![1usize; d];
        for _ in 0..n_total - d {
            let j = rng.gen_range(0..d);
            mults[j] += 1;
        }
        let (cfg, distinct) = draw_triangle_point(rng, d)?;
        let full: Vec<f64> = distinct
            .iter()
            .zip(mults.iter())
            .flat_map(|(&t, &m)| std::iter::repeat(t).take(m))
            .collect();
        let kernels: Vec<AnalyticKernel> = distinct
            .iter()
            .zip(mults.iter())
            .map(|(&t, &m)| {
                AnalyticKernel::power(re(cfg.a * t), m as u32)
                    .expect("a*t is inside the unit disk")
            })
            .collect();
        let label = format!(
            "N={n_total};d={d};a={:.4};c1={:.4};c2={:.4};t={}",
            cfg.a,
            cfg.c1,
            cfg.c2,
            full.iter().map(|t| format!("{t:.4}")).collect::<Vec<_>>().join("|")
        );
        let outcome = (|| -> freeaw::Result<(f64, f64)> {
            let g1 = gen_fn_truncated(&cfg, &full, 40)?;
            let g2 = gen_fn_explicit_sum(&cfg, &full, 80)?;
            let g3 = compose(&cfg, &distinct, &kernels, 1e-8)?.value.re;
            let r1 = g1.tail_bound / g1.value.abs();
            let r2 = g2.tail_bound / g2.value.abs();
            let pairs = [
                (rel_diff(g1.value, g2.value), tol.max(3.0 * (r1 + r2))),
                (rel_diff(g1.value, g3), tol.max(3.0 * r1)),
                (rel_diff(g2.value, g3), tol.max(3.0 * r2)),
            ];
            // Report the pair closest to (or beyond) its allowance.
            let worst = pairs
                .iter()
                .max_by(|x, y| (x.0 / x.1).partial_cmp(&(y.0 / y.1)).unwrap())
                .copied()
                .unwrap();
            Ok(worst)
        })();
        cases.push(match outcome {
            Ok((residual, allowed)) => Case {
                label,
                residual,
                tol: allowed,
            },
            Err(e) => failed_case(label, &e, tol),
        });
    }
    Ok(cases)
}

/// Like `draw_ensemble_point` but with strictly separated times and a
/// contour plan, so the composition route applies alongside the sums.
fn draw_triangle_point(
    rng: &mut ChaCha12Rng,
    d: usize,
) -> anyhow::Result<(LppConfig, Vec<f64>)> {
    for _ in 0..10_000 {
        let a = rng.gen_range(0.25..0.4);
        let c1 = rng.gen_range(0.45..1.3);
        let c2 = rng.gen_range(0.45..1.3);
        let mut ts: Vec<f64> = (0..d).map(|_| rng.gen_range(0.85..1.1)).collect();
        ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        if ts.windows(2).any(|w| w[1] - w[0] < 0.04) {
            continue;
        }
        let t_max = ts[d - 1];
        if a * c2 * t_max * t_max >= 0.62 || a * c1 >= 0.65 {
            continue;
        }
        if ts.iter().any(|t| (c2 * t - 1.0).abs() < 0.05) {
            continue;
        }
        let cfg = match LppConfig::new(a, c1, c2) {
            Ok(c) => c,
            Err(_) => continue,
        };
        if freeaw::compose::radii_plan(&cfg, &ts).is_ok() {
            return Ok((cfg, ts));
        }
    }
    anyhow::bail!("could not draw an admissible triangle point after 10000 attempts");
}

fn gb_integral(
    rng: &mut ChaCha12Rng,
    trials: u32,
    max_n: u32,
    tol: f64,
) -> anyhow::Result<Vec<Case>> {
    let mut cases = Vec::new();
    for _ in 0..trials {
        let (cfg, t, n) = draw_integral_point(rng, max_n)?;
        let label = format!(
            "N={n};a={:.4};c1={:.4};c2={:.4};t={t:.4}",
            cfg.a, cfg.c1, cfg.c2
        );
        let outcome = (|| -> freeaw::Result<f64> {
            let lhs = one_point_integral(&cfg, t, n)?;
            let rhs = gen_fn_truncated(&cfg, &vec![t; n as usize], 60)?.value;
            Ok(rel_diff(lhs, rhs))
        })();
        cases.push(match outcome {
            Ok(residual) => Case {
                label,
                residual,
                tol,
            },
            Err(e) => failed_case(label, &e, tol),
        });
    }
    Ok(cases)
}

/// Draws a configuration in the window where the integral form applies:
/// both boundary parameters below 1 and a time between them.
fn draw_integral_point(
    rng: &mut ChaCha12Rng,
    max_n: u32,
) -> anyhow::Result<(LppConfig, f64, u32)> {
    for _ in 0..10_000 {
        let a: f64 = rng.gen_range(0.25..0.5);
        let c1: f64 = rng.gen_range(0.2..0.85);
        let c2: f64 = rng.gen_range(0.2..0.85);
        let hi = (0.95 / c2).min(1.15);
        let lo = c1 + 0.05;
        if lo >= hi {
            continue;
        }
        let t = rng.gen_range(lo..hi);
        if a * t >= 0.9 || (c2 * t - 1.0).abs() < 0.05 {
            continue;
        }
        let n = rng.gen_range(1..=max_n.min(4));
        if let Ok(cfg) = LppConfig::new(a, c1, c2) {
            return Ok((cfg, t, n));
        }
    }
    anyhow::bail!("could not draw an admissible integral point after 10000 attempts");
}
