//! Phase-diagram sweep: for each grid cell `(c1, c2)` the classifier's
//! predicted density is compared against the numerically measured mean
//! density at finite width. Cells are evaluated in parallel; rows are
//! emitted in row-major grid order, so the output does not depend on the
//! worker count.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;

use freeaw::asympt::{mean_density, phase_limit, Density, Region};
use freeaw::LppConfig;

use crate::{emit, thread_count};

#[derive(Args)]
pub struct PhaseArgs {
    /// Bulk rate parameter.
    #[arg(long)]
    pub a: f64,
    /// Strip width for the numerical density.
    #[arg(long = "N", default_value_t = 200)]
    pub n: u64,
    /// Bottom-boundary grid: a single value X or a range LO:HI:COUNT.
    #[arg(long)]
    pub c1: String,
    /// Top-boundary grid: a single value X or a range LO:HI:COUNT.
    #[arg(long)]
    pub c2: String,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `X` or `LO:HI:COUNT` into grid values.
fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [single] => {
            let x: f64 = single
                .parse()
                .with_context(|| format!("bad grid value {single:?}"))?;
            Ok(vec![x])
        }
        [lo, hi, count] => {
            let lo: f64 = lo.parse().with_context(|| format!("bad grid start {lo:?}"))?;
            let hi: f64 = hi.parse().with_context(|| format!("bad grid end {hi:?}"))?;
            let count: usize = count
                .parse()
                .with_context(|| format!("bad grid count {count:?}"))?;
            if count == 0 {
                anyhow::bail!("grid count must be positive");
            }
            if count == 1 {
                return Ok(vec![lo]);
            }
            if !(hi > lo) {
                anyhow::bail!("grid range needs LO < HI, got {lo}:{hi}");
            }
            let step = (hi - lo) / (count - 1) as f64;
            Ok((0..count).map(|i| lo + step * i as f64).collect())
        }
        _ => anyhow::bail!("grid spec must be X or LO:HI:COUNT, got {spec:?}"),
    }
}

struct CellData {
    region: &'static str,
    boundary: bool,
    predicted: Vec<f64>,
    comparison: f64,
    numeric: f64,
}

fn region_name(region: Region) -> &'static str {
    match region {
        Region::MaxCurrent => "max-current",
        Region::LowDensity => "low-density",
        Region::HighDensity => "high-density",
        Region::Coexistence => "coexistence",
    }
}

fn eval_cell(a: f64, n: u64, c1: f64, c2: f64) -> Result<CellData, String> {
    let classified = phase_limit(a, c1, c2).map_err(|e| e.to_string())?;
    let cfg = LppConfig::new(a, c1, c2).map_err(|e| e.to_string())?;
    let numeric = mean_density(&cfg, n).map_err(|e| e.to_string())?;
    let (predicted, comparison) = match classified.density {
        Density::Point(rho) => (vec![rho], rho),
        // On the coexistence line the finite-width density approaches the
        // mean of the uniform mixture, so both endpoint rows compare the
        // numeric value against that mean.
        Density::Mixture { low, high } => (vec![low, high], 0.5 * (low + high)),
    };
    Ok(CellData {
        region: region_name(classified.region),
        boundary: classified.boundary,
        predicted,
        comparison,
        numeric,
    })
}

pub fn run(args: &PhaseArgs) -> anyhow::Result<u8> {
    let threads = thread_count()?;
    let c1s = parse_grid(&args.c1)?;
    let c2s = parse_grid(&args.c2)?;
    if !(args.a > 0.0 && args.a < 1.0) {
        anyhow::bail!(freeaw::Error::constraint(format!(
            "a must lie in (0, 1), got {}",
            args.a
        )));
    }
    if args.n == 0 {
        anyhow::bail!(freeaw::Error::constraint("N must be positive"));
    }
    let limit = 1.0 / args.a;
    for &c in c1s.iter().chain(c2s.iter()) {
        if !(c > 0.0 && c < limit) {
            anyhow::bail!(freeaw::Error::constraint(format!(
                "grid value {c} outside (0, 1/a) = (0, {limit})"
            )));
        }
    }
    let cells: Vec<(usize, f64, f64)> = c1s
        .iter()
        .flat_map(|&c1| c2s.iter().map(move |&c2| (c1, c2)))
        .enumerate()
        .map(|(i, (c1, c2))| (i, c1, c2))
        .collect();
    let mut results: Vec<Option<Result<CellData, String>>> = Vec::new();
    results.resize_with(cells.len(), || None);
    std::thread::scope(|scope| {
        let cells = &cells;
        let (a, n) = (args.a, args.n);
        let handles: Vec<_> = (0..threads.min(cells.len()).max(1))
            .map(|w| {
                scope.spawn(move || {
                    cells
                        .iter()
                        .skip(w)
                        .step_by(threads)
                        .map(|&(i, c1, c2)| (i, eval_cell(a, n, c1, c2)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for handle in handles {
            for (i, out) in handle.join().expect("phase-diagram worker panicked") {
                results[i] = Some(out);
            }
        }
    });
    let mut table = String::new();
    writeln!(
        table,
        "# freeaw {} phase-diagram a={} N={} c1={} c2={}",
        freeaw::VERSION,
        args.a,
        args.n,
        args.c1,
        args.c2
    )?;
    writeln!(
        table,
        "# coexistence cells emit one row per mixture endpoint; abs_err compares the numeric density with the mixture mean"
    )?;
    writeln!(table, "c1,c2,region,rho_predicted,rho_numeric_N,abs_err")?;
    for ((_, c1, c2), result) in cells.iter().zip(results.into_iter()) {
        match result.expect("every cell is assigned to a worker") {
            Ok(cell) => {
                for &pred in &cell.predicted {
                    writeln!(
                        table,
                        "{},{},{},{},{},{:.3e}",
                        c1,
                        c2,
                        cell.region,
                        pred,
                        cell.numeric,
                        (cell.numeric - cell.comparison).abs()
                    )?;
                }
                if cell.boundary {
                    writeln!(
                        table,
                        "# cell ({c1},{c2}): classified within the boundary tolerance"
                    )?;
                }
            }
            Err(msg) => {
                writeln!(table, "# cell ({c1},{c2}) failed: {}", msg.replace('\n', " "))?;
            }
        }
    }
    emit(&args.out, &table)?;
    Ok(0)
}
