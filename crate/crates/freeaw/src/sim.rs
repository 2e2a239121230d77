//! Forward simulation of geometric last-passage percolation on the strip and
//! an empirical check that the two-layer increment law is stationary.
//!
//! A strip of width `N` holds heights `G(j, n)` for `n <= j <= n + N`. One
//! level-advance step draws an independent geometric weight at every vertex
//! of the new level (parameter `a * c1` at the left edge, `a * c2` at the
//! right edge, `a^2` in the bulk) and applies
//! `G(j, n) = w + max(G(j - 1, n), G(j, n - 1))`, treating out-of-strip
//! neighbors as zero. Rows are stored as increments relative to their left
//! edge, so absolute height drift is discarded.
//!
//! All randomness flows through [`rand_chacha::ChaCha12Rng`], a fixed
//! counter-based generator, so seeded runs are reproducible across platforms.
//! Replicated experiments derive one seed per replica with a SplitMix64
//! scramble, making the aggregate independent of replica execution order.

use crate::error::{Error, Result};
use crate::gibbs;
use crate::quad::KahanF64;
use crate::LppConfig;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// One row of the strip in increment coordinates: `values[j]` is the height
/// at horizontal offset `j` minus the height at offset `0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripRow {
    /// Level index of the row (number of advance steps applied so far).
    pub level: u64,
    /// Nondecreasing heights relative to the left edge; `values[0] == 0`.
    pub values: Vec<u64>,
}

impl StripRow {
    /// Builds a row after checking the increment-coordinate invariants.
    pub fn new(level: u64, values: Vec<u64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::constraint(
                "a strip row needs at least two vertices (strip width >= 1)",
            ));
        }
        if values[0] != 0 {
            return Err(Error::constraint("strip row values must start at 0"));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::constraint("strip row values must be nondecreasing"));
        }
        Ok(Self { level, values })
    }

    /// The all-zero row at level 0 for a strip of width `n_sites`.
    pub fn zero(n_sites: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::constraint("strip width must be at least 1"));
        }
        Ok(Self {
            level: 0,
            values: vec![0; n_sites + 1],
        })
    }

    /// Strip width: the number of unit increments in the row.
    pub fn n_sites(&self) -> usize {
        self.values.len() - 1
    }

    /// Consecutive differences `values[j + 1] - values[j]`.
    pub fn increments(&self) -> Vec<u64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Draws from `P(X = n) = p^n (1 - p)` by inverting the CDF: with `U`
/// uniform on `[0, 1)`, returns `floor(ln(1 - U) / ln(p))`.
pub fn geo_sample<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<u64> {
    if !p.is_finite() || !(0.0..1.0).contains(&p) {
        return Err(Error::constraint(
            "geometric parameter must satisfy 0 <= p < 1",
        ));
    }
    if p == 0.0 {
        return Ok(0);
    }
    let u: f64 = rng.gen();
    Ok(((1.0 - u).ln() / p.ln()).floor() as u64)
}

/// Advances absolute heights one level. `old[j]` is the height at offset `j`
/// of the previous level; the result is the new level's heights on the same
/// absolute scale. Weights are drawn left to right, one per new vertex.
fn step_absolute<R: Rng + ?Sized>(
    cfg: &LppConfig,
    old: &[u64],
    rng: &mut R,
) -> Result<Vec<u64>> {
    let n = old.len() - 1;
    let mut new = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let p = if j == 0 {
            cfg.a * cfg.c1
        } else if j == n {
            cfg.a * cfg.c2
        } else {
            cfg.a * cfg.a
        };
        let w = geo_sample(p, rng)?;
        // The new level is shifted one step right, so offset j of the new
        // level sits above offset j + 1 of the old one. Out-of-strip
        // neighbors count as height 0.
        let below = if j + 1 <= n { old[j + 1] } else { 0 };
        let left = if j == 0 { 0 } else { new[j - 1] };
        new.push(w + below.max(left));
    }
    Ok(new)
}

/// Applies one level-advance step to a row in increment coordinates and
/// re-centers the result so its left edge is 0 again.
pub fn lpp_step<R: Rng + ?Sized>(
    cfg: &LppConfig,
    row: &StripRow,
    rng: &mut R,
) -> Result<StripRow> {
    if row.values.len() < 2 || row.values[0] != 0 {
        return Err(Error::constraint(
            "input row must have values[0] == 0 and width >= 1",
        ));
    }
    let new_abs = step_absolute(cfg, &row.values, rng)?;
    let base = new_abs[0];
    Ok(StripRow {
        level: row.level + 1,
        values: new_abs.into_iter().map(|v| v - base).collect(),
    })
}

/// Exact sampler for the truncated stationary increment law. Enumerates all
/// two-layer configurations with entries up to `cap`, accumulates the
/// marginal weight of each visible increment vector, and stores cumulative
/// sums for inverse-CDF draws.
#[derive(Debug, Clone)]
pub struct StationaryTable {
    n_sites: usize,
    cap: u64,
    cumulative: Vec<f64>,
    total: f64,
}

fn lattice_index(m: &[u64], cap: u64) -> usize {
    let radix = cap as usize + 1;
    let mut idx = 0usize;
    for &mj in m.iter().rev() {
        idx = idx * radix + mj as usize;
    }
    idx
}

fn lattice_decode(mut idx: usize, cap: u64, n_sites: usize) -> Vec<u64> {
    let radix = cap as usize + 1;
    let mut m = Vec::with_capacity(n_sites);
    for _ in 0..n_sites {
        m.push((idx % radix) as u64);
        idx /= radix;
    }
    m
}

fn advance_odometer(v: &mut [u64], cap: u64) -> bool {
    for entry in v.iter_mut() {
        if *entry < cap {
            *entry += 1;
            return true;
        }
        *entry = 0;
    }
    false
}

impl StationaryTable {
    /// Tabulates the marginal weights of the visible layer for a strip of
    /// width `n_sites` with per-entry cutoff `cap`.
    pub fn new(cfg: &LppConfig, n_sites: usize, cap: u64) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::constraint("strip width must be at least 1"));
        }
        let radix = cap as f64 + 1.0;
        let states = radix.powi(n_sites as i32);
        if states * states > 1e9 {
            return Err(Error::size_guard(
                "stationary table enumeration exceeds 1e9 configurations",
            ));
        }
        let len = (cap as usize + 1).pow(n_sites as u32);
        let mut marginal = vec![0.0f64; len];
        let mut m = vec![0u64; n_sites];
        loop {
            let mut cell = KahanF64::default();
            let mut n = vec![0u64; n_sites];
            loop {
                cell.add(gibbs::weight(cfg, &m, &n)?);
                if !advance_odometer(&mut n, cap) {
                    break;
                }
            }
            marginal[lattice_index(&m, cap)] = cell.value();
            if !advance_odometer(&mut m, cap) {
                break;
            }
        }
        let mut running = KahanF64::default();
        let cumulative: Vec<f64> = marginal
            .iter()
            .map(|&w| {
                running.add(w);
                running.value()
            })
            .collect();
        let total = *cumulative.last().unwrap();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::non_finite("stationary table total weight"));
        }
        Ok(Self {
            n_sites,
            cap,
            cumulative,
            total,
        })
    }

    /// Probability of an increment vector under the truncated law.
    pub fn prob_of(&self, m: &[u64]) -> Result<f64> {
        if m.len() != self.n_sites || m.iter().any(|&mj| mj > self.cap) {
            return Err(Error::constraint(
                "increment vector outside the tabulated lattice",
            ));
        }
        let idx = lattice_index(m, self.cap);
        let lower = if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        };
        Ok((self.cumulative[idx] - lower) / self.total)
    }

    /// Draws an increment vector and returns it as a level-0 row of prefix
    /// sums.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StripRow {
        let u: f64 = rng.gen::<f64>() * self.total;
        let idx = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1);
        let m = lattice_decode(idx, self.cap, self.n_sites);
        let mut values = Vec::with_capacity(self.n_sites + 1);
        let mut acc = 0u64;
        values.push(0);
        for mj in m {
            acc += mj;
            values.push(acc);
        }
        StripRow { level: 0, values }
    }
}

/// Draws one row from the truncated stationary law.
pub fn sample_stationary<R: Rng + ?Sized>(
    cfg: &LppConfig,
    n_sites: usize,
    cap: u64,
    rng: &mut R,
) -> Result<StripRow> {
    Ok(StationaryTable::new(cfg, n_sites, cap)?.sample(rng))
}

/// Initial law for the stationarity experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialLaw {
    /// Draw the initial row from the truncated stationary table.
    Stationary,
    /// Start every replica from the all-zero row (negative control).
    AllZero,
}

/// Result of a one-step stationarity experiment.
#[derive(Debug, Clone, Copy)]
pub struct StationarityOutcome {
    /// Total-variation distance between the empirical post-step increment
    /// law and the truncated stationary law, with samples that leave the
    /// truncated lattice charged at full weight.
    pub tv: f64,
    /// Fraction of post-step samples outside the truncated lattice.
    pub overflow_fraction: f64,
    /// Upper bound on the stationary mass missing from the truncated table,
    /// as a fraction of the tabulated mass; additional TV error from
    /// truncation is at most this.
    pub truncation_correction: f64,
    /// Number of replicas drawn.
    pub samples: u64,
}

const SPLITMIX64_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(SPLITMIX64_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for replica `index` of a run keyed by `seed`. Scrambling both inputs
/// keeps nearby seeds and indices uncorrelated.
fn replica_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// Draws `samples` independent rows from `initial`, advances each by one
/// level, and measures the total-variation distance between the empirical
/// law of the resulting increments and the truncated stationary law.
///
/// Each replica runs on its own generator seeded by [`replica_seed`], so the
/// outcome does not depend on execution order.
pub fn stationarity_test(
    cfg: &LppConfig,
    n_sites: usize,
    samples: u64,
    cap: u64,
    seed: u64,
    initial: InitialLaw,
) -> Result<StationarityOutcome> {
    if samples == 0 {
        return Err(Error::constraint("need at least one sample"));
    }
    let table = StationaryTable::new(cfg, n_sites, cap)?;
    let mut counts = vec![0u64; table.cumulative.len()];
    let mut overflow = 0u64;
    for i in 0..samples {
        let mut rng = ChaCha12Rng::seed_from_u64(replica_seed(seed, i));
        let row = match initial {
            InitialLaw::Stationary => table.sample(&mut rng),
            InitialLaw::AllZero => StripRow::zero(n_sites)?,
        };
        let stepped = lpp_step(cfg, &row, &mut rng)?;
        let inc = stepped.increments();
        if inc.iter().all(|&d| d <= cap) {
            counts[lattice_index(&inc, cap)] += 1;
        } else {
            overflow += 1;
        }
    }
    let inv = 1.0 / samples as f64;
    let mut l1 = KahanF64::default();
    for (idx, &c) in counts.iter().enumerate() {
        let exact = {
            let lower = if idx == 0 {
                0.0
            } else {
                table.cumulative[idx - 1]
            };
            (table.cumulative[idx] - lower) / table.total
        };
        l1.add((c as f64 * inv - exact).abs());
    }
    l1.add(overflow as f64 * inv);
    let tail = gibbs::partition_truncated(cfg, n_sites, cap)?;
    Ok(StationarityOutcome {
        tv: 0.5 * l1.value(),
        overflow_fraction: overflow as f64 * inv,
        truncation_correction: tail.tail_bound / tail.value,
        samples,
    })
}
