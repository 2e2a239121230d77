//! Single-record commands: eval, simulate, poisson, series. Each emits one
//! JSON document whose `meta` object echoes the library version, the
//! command, and every input, so reruns with identical flags are
//! byte-identical.

use std::path::PathBuf;

use anyhow::bail;
use clap::Args;
use serde::Serialize;

use freeaw::asympt::{self, PoissonScaling};
use freeaw::functional::{contour_eval, representation_eval, representation_supported, ContourSpec, Method};
use freeaw::moment::AwParams;
use freeaw::sim::{stationarity_test, InitialLaw};
use freeaw::{C64, LppConfig};

use crate::{defaults, emit, json_doc, kernel};

#[derive(Serialize)]
pub struct Meta {
    pub version: &'static str,
    pub command: &'static str,
    pub args: serde_json::Value,
}

fn meta(command: &'static str, args: serde_json::Value) -> Meta {
    Meta {
        version: freeaw::VERSION,
        command,
        args,
    }
}

#[derive(Args)]
pub struct EvalArgs {
    /// First functional parameter.
    #[arg(long)]
    pub a: Option<f64>,
    /// Second functional parameter.
    #[arg(long)]
    pub b: Option<f64>,
    /// Third functional parameter.
    #[arg(long)]
    pub c: Option<f64>,
    /// Kernel spec: power:V:N or cheb:c0,c1,...
    #[arg(long)]
    pub kernel: String,
    /// Explicit contour radius; forces the contour route.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Use the contour route even when the measure representation applies.
    #[arg(long)]
    pub force_contour: bool,
    /// Relative tolerance for adaptive contour quadrature.
    #[arg(long, default_value_t = defaults::QUAD_REL_TOL)]
    pub rel_tol: f64,
    /// Write the record here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvalDoc {
    meta: Meta,
    value_re: f64,
    value_im: f64,
    method: &'static str,
    est_error: f64,
}

pub fn eval(args: &EvalArgs) -> anyhow::Result<u8> {
    let vals: Vec<C64> = [args.a, args.b, args.c]
        .iter()
        .flatten()
        .map(|&x| C64::new(x, 0.0))
        .collect();
    let p = AwParams::new(&vals)?;
    let (parsed, kern) = kernel::parse(&args.kernel)?;
    if let kernel::ParsedKernel::Power { v, .. } = parsed {
        let r = p.radius_r();
        if v.abs() * r >= 1.0 {
            bail!(freeaw::Error::constraint(format!(
                "power kernel requires |v| < 1/R with R = {r}, got |v| = {}",
                v.abs()
            )));
        }
    }
    let spec = ContourSpec {
        rho: args.rho,
        rel_tol: args.rel_tol,
        ..ContourSpec::default()
    };
    let outcome = if args.force_contour || args.rho.is_some() || !representation_supported(&p) {
        contour_eval(&p, &kern, &spec)?
    } else {
        representation_eval(&p, &kern)?
    };
    let doc = EvalDoc {
        meta: meta(
            "eval",
            serde_json::json!({
                "a": args.a,
                "b": args.b,
                "c": args.c,
                "kernel": parsed.canonical(),
                "rho": args.rho,
                "force_contour": args.force_contour,
                "rel_tol": args.rel_tol,
            }),
        ),
        value_re: outcome.value.re,
        value_im: outcome.value.im,
        method: match outcome.method {
            Method::Contour => "contour",
            Method::Representation => "representation",
        },
        est_error: outcome.est_error,
    };
    emit(&args.out, &json_doc(&doc)?)?;
    Ok(0)
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Bulk rate parameter.
    #[arg(long)]
    pub a: f64,
    /// Bottom boundary parameter.
    #[arg(long)]
    pub c1: f64,
    /// Top boundary parameter.
    #[arg(long)]
    pub c2: f64,
    /// Number of increment coordinates (strip width).
    #[arg(long = "N")]
    pub n: usize,
    /// Number of replicas.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Per-coordinate truncation of the exact stationary table.
    #[arg(long, default_value_t = defaults::SIM_CAP)]
    pub cap: u64,
    /// Base seed; replicas derive independent streams from it.
    #[arg(long, default_value_t = defaults::SEED)]
    pub seed: u64,
    /// Skip the zero-initial-row negative control.
    #[arg(long)]
    pub no_control: bool,
    /// Write the record here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ControlDoc {
    tv: f64,
    overflow_fraction: f64,
    /// Control TV divided by the stationary-start TV.
    tv_ratio: f64,
}

#[derive(Serialize)]
struct SimulateDoc {
    meta: Meta,
    tv: f64,
    overflow_fraction: f64,
    truncation_correction: f64,
    samples: u64,
    control: Option<ControlDoc>,
}

pub fn simulate(args: &SimulateArgs) -> anyhow::Result<u8> {
    let cfg = LppConfig::new(args.a, args.c1, args.c2)?;
    let base = stationarity_test(
        &cfg,
        args.n,
        args.samples,
        args.cap,
        args.seed,
        InitialLaw::Stationary,
    )?;
    let control = if args.no_control {
        None
    } else {
        let ctrl = stationarity_test(
            &cfg,
            args.n,
            args.samples,
            args.cap,
            args.seed,
            InitialLaw::AllZero,
        )?;
        Some(ControlDoc {
            tv: ctrl.tv,
            overflow_fraction: ctrl.overflow_fraction,
            tv_ratio: ctrl.tv / base.tv,
        })
    };
    let doc = SimulateDoc {
        meta: meta(
            "simulate",
            serde_json::json!({
                "a": args.a,
                "c1": args.c1,
                "c2": args.c2,
                "N": args.n,
                "samples": args.samples,
                "cap": args.cap,
                "seed": args.seed,
                "no_control": args.no_control,
            }),
        ),
        tv: base.tv,
        overflow_fraction: base.overflow_fraction,
        truncation_correction: base.truncation_correction,
        samples: base.samples,
        control,
    };
    emit(&args.out, &json_doc(&doc)?)?;
    Ok(0)
}

#[derive(clap::ValueEnum, Clone, Copy)]
pub enum ScalingArg {
    /// Left boundary grows with the width; c2 held fixed.
    A,
    /// Right boundary grows with the width; c1 held fixed.
    B,
}

#[derive(Args)]
pub struct PoissonArgs {
    /// Scaling regime: a (left boundary grows) or b (right boundary grows).
    #[arg(long, value_enum)]
    pub scaling: ScalingArg,
    /// Poisson rate of the limiting process.
    #[arg(long)]
    pub lambda: f64,
    /// Growth exponent; read only by scaling b.
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    /// Boundary parameter the scaling holds fixed (c2 for scaling a, c1
    /// for scaling b). Defaults: 0.5 for a, 1.0 for b.
    #[arg(long)]
    pub fixed: Option<f64>,
    /// Strip width.
    #[arg(long = "N")]
    pub n: u32,
    /// Comma-separated evaluation times, one per grid block.
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    /// Comma-separated grid points in (0, 1], strictly increasing, ending
    /// at 1. Defaults to an equally spaced grid matching the times.
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<f64>>,
    /// Write the record here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct PoissonDoc {
    meta: Meta,
    config: ConfigEcho,
    ratio: f64,
    target: f64,
    abs_dev: f64,
    rel_dev: f64,
}

#[derive(Serialize)]
struct ConfigEcho {
    a: f64,
    c1: f64,
    c2: f64,
}

pub fn poisson(args: &PoissonArgs) -> anyhow::Result<u8> {
    let scaling = match args.scaling {
        ScalingArg::A => PoissonScaling::A,
        ScalingArg::B => PoissonScaling::B,
    };
    let fixed = args.fixed.unwrap_or(match scaling {
        PoissonScaling::A => 0.5,
        PoissonScaling::B => 1.0,
    });
    let d = args.t.len();
    let xs: Vec<f64> = match &args.x {
        Some(xs) => xs.clone(),
        None => (1..=d).map(|j| j as f64 / d as f64).collect(),
    };
    let out = asympt::poisson_check(scaling, args.lambda, args.theta, fixed, args.n, &args.t, &xs)?;
    let cfg = asympt::poisson_config(scaling, args.lambda, args.theta, fixed, args.n)?;
    let abs_dev = (out.ratio - out.target).abs();
    let doc = PoissonDoc {
        meta: meta(
            "poisson",
            serde_json::json!({
                "scaling": match scaling { PoissonScaling::A => "a", PoissonScaling::B => "b" },
                "lambda": args.lambda,
                "theta": args.theta,
                "fixed": fixed,
                "N": args.n,
                "t": args.t,
                "x": xs,
            }),
        ),
        config: ConfigEcho {
            a: cfg.a,
            c1: cfg.c1,
            c2: cfg.c2,
        },
        ratio: out.ratio,
        target: out.target,
        abs_dev,
        rel_dev: abs_dev / out.target,
    };
    emit(&args.out, &json_doc(&doc)?)?;
    Ok(0)
}

#[derive(Args)]
pub struct SeriesArgs {
    /// Bulk rate parameter.
    #[arg(long)]
    pub a: f64,
    /// Bottom boundary parameter.
    #[arg(long)]
    pub c1: f64,
    /// Top boundary parameter.
    #[arg(long)]
    pub c2: f64,
    /// Evaluation time of the one-time generating functions.
    #[arg(long)]
    pub t: f64,
    /// Series variable; needs 0 <= z < (1 - a t)^2 inside the closed form's
    /// validity window.
    #[arg(long)]
    pub z: f64,
    /// Number of width terms summed on the truncated side.
    #[arg(long, default_value_t = defaults::SERIES_TRUNCATE)]
    pub truncate: u32,
    /// Write the record here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SeriesDoc {
    meta: Meta,
    closed_form: f64,
    truncated_sum: f64,
    terms: u32,
    abs_dev: f64,
    rel_dev: f64,
}

pub fn series(args: &SeriesArgs) -> anyhow::Result<u8> {
    if args.truncate == 0 {
        bail!(freeaw::Error::constraint("series needs at least one term"));
    }
    let cfg = LppConfig::new(args.a, args.c1, args.c2)?;
    let closed = asympt::series_in_z(&cfg, args.t, args.z)?;
    let mut sum = 0.0;
    let mut zk = 1.0;
    for n in 1..=args.truncate {
        sum += zk * asympt::strip_gen_fn(&cfg, args.t, n)?;
        zk *= args.z;
    }
    let abs_dev = (closed - sum).abs();
    let doc = SeriesDoc {
        meta: meta(
            "series",
            serde_json::json!({
                "a": args.a,
                "c1": args.c1,
                "c2": args.c2,
                "t": args.t,
                "z": args.z,
                "truncate": args.truncate,
            }),
        ),
        closed_form: closed,
        truncated_sum: sum,
        terms: args.truncate,
        abs_dev,
        rel_dev: abs_dev / closed.abs().max(sum.abs()),
    };
    emit(&args.out, &json_doc(&doc)?)?;
    Ok(0)
}
