//! A/B tests that apply reserves to part of the market: k of n bidders
//! (bidder split) or a fraction of the auctions (auction split).
//!
//! Monte Carlo trials are split into [`PARTITIONS`] fixed partitions, each with
//! its own ChaCha8 stream derived from `(seed, partition)`, and merged in
//! partition order, so results do not depend on the thread count. A trial
//! consumes the same random numbers whatever `k` is, which gives common random
//! numbers across the points of a sweep.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auction::{run_dense, BidderId, Mechanism, ReserveVector};
use crate::dist::ContinuousDist;
use crate::error::{input, Error, Result};
use crate::log::BidLog;
use crate::quadrature::integrate;

pub const PARTITIONS: u64 = 64;

const QUAD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SplitMode {
    BidderSplit { k: usize },
    AuctionSplit { fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Assignment {
    /// Bidders `0..k` are always the treated ones.
    FixedSubset,
    /// A fresh uniformly random k-subset in every auction.
    RandomPerAuction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReserveSource {
    /// The distribution's Myerson reserve for every treated bidder.
    Myerson,
    /// Per-bidder reserves keyed by the simulated bidder ids `"1".."n"`.
    Vector(ReserveVector),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentPlan {
    pub mode: SplitMode,
    pub assignment: Assignment,
    pub source: ReserveSource,
}

impl TreatmentPlan {
    pub fn bidder_split(k: usize) -> Self {
        Self {
            mode: SplitMode::BidderSplit { k },
            assignment: Assignment::RandomPerAuction,
            source: ReserveSource::Myerson,
        }
    }

    pub fn auction_split(fraction: f64) -> Self {
        Self {
            mode: SplitMode::AuctionSplit { fraction },
            assignment: Assignment::RandomPerAuction,
            source: ReserveSource::Myerson,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self.mode {
            SplitMode::BidderSplit { k } if k > n => input(format!("treated count {k} exceeds n = {n}")),
            SplitMode::AuctionSplit { fraction } if !(0.0..=1.0).contains(&fraction) => {
                input(format!("treated fraction {fraction} is outside [0, 1]"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// `k` for bidder splits, the fraction otherwise.
    pub x: f64,
    pub mechanism: Mechanism,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`.
    pub stderr: f64,
    pub trials: u64,
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# seed={}\nx\tmechanism\tmean\tstderr\ttrials\treference\n", self.seed);
        for r in &self.rows {
            let reference = r.reference.map_or_else(|| "NA".to_string(), |v| v.to_string());
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.x, r.mechanism, r.mean, r.stderr, r.trials, reference
            );
        }
        out
    }
}

/// Streaming mean and variance (Welford), mergeable (Chan et al.).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *o;
            return;
        }
        let n = (self.count + o.count) as f64;
        let d = o.mean - self.mean;
        self.mean += d * o.count as f64 / n;
        self.m2 += o.m2 + d * d * self.count as f64 * o.count as f64 / n;
        self.count += o.count;
    }

    fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.m2 / (self.count - 1) as f64).sqrt() / (self.count as f64).sqrt()
    }
}

fn partition_rng(seed: u64, partition: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(partition);
    rng
}

fn reserve_table(dist: &ContinuousDist, n: usize, source: &ReserveSource) -> Result<Vec<f64>> {
    match source {
        ReserveSource::Myerson => Ok(vec![dist.myerson_reserve()?; n]),
        ReserveSource::Vector(v) => Ok((1..=n).map(|i| v.get(&BidderId::from(i))).collect()),
    }
}

/// Monte Carlo revenue of `mechanism` with `n` iid bidders from `dist`
/// under `plan`. Each trial draws `n` values, then a permutation of the
/// bidders (bidder split) or a coin (auction split) to pick the treated set.
pub fn simulate_treatment(
    dist: &ContinuousDist,
    n: usize,
    plan: &TreatmentPlan,
    mechanism: Mechanism,
    trials: u64,
    seed: u64,
) -> Result<SweepRow> {
    if trials == 0 {
        return input("trials must be at least 1");
    }
    if n == 0 {
        return input("need at least one bidder");
    }
    let dist = dist.validated()?;
    plan.validate(n)?;
    let reserves = reserve_table(&dist, n, &plan.source)?;
    let partials: Vec<Moments> = (0..PARTITIONS)
        .into_par_iter()
        .map(|p| {
            let count = trials / PARTITIONS + u64::from(p < trials % PARTITIONS);
            let mut rng = partition_rng(seed, p);
            let mut m = Moments::default();
            let mut bids: Vec<(u32, f64)> = (0..n as u32).map(|i| (i, 0.0)).collect();
            let mut order: Vec<usize> = (0..n).collect();
            let mut treated = vec![false; n];
            for _ in 0..count {
                for b in bids.iter_mut() {
                    b.1 = dist.sample(&mut rng);
                }
                match plan.mode {
                    SplitMode::BidderSplit { k } => {
                        if plan.assignment == Assignment::RandomPerAuction {
                            order.shuffle(&mut rng);
                        }
                        treated.fill(false);
                        for &i in &order[..k] {
                            treated[i] = true;
                        }
                    }
                    SplitMode::AuctionSplit { fraction } => {
                        let on = rng.gen::<f64>() < fraction;
                        treated.fill(on);
                    }
                }
                let o = run_dense(mechanism, &bids, |i| {
                    if treated[i as usize] {
                        reserves[i as usize]
                    } else {
                        0.0
                    }
                });
                m.push(o.payment);
            }
            m
        })
        .collect();
    let mut total = Moments::default();
    for m in &partials {
        total.merge(m);
    }
    let x = match plan.mode {
        SplitMode::BidderSplit { k } => k as f64,
        SplitMode::AuctionSplit { fraction } => fraction,
    };
    Ok(SweepRow {
        x,
        mechanism,
        mean: total.mean,
        stderr: total.stderr(),
        trials,
        reference: None,
    })
}

/// `(n + 2^-n - 1)/(n + 1) - 1{k<n} 2^-n/(n - k + 1)`: eager revenue with the
/// Myerson reserve 1/2 on k of n iid uniform[0,1] bidders.
pub fn rev_e_k_closed_uniform(n: usize, k: usize) -> Result<f64> {
    if k > n {
        return input(format!("k = {k} exceeds n = {n}"));
    }
    let nf = n as f64;
    let tail = 0.5f64.powi(n as i32);
    let base = (nf + tail - 1.0) / (nf + 1.0);
    Ok(if k < n {
        base - tail / (nf - k as f64 + 1.0)
    } else {
        base
    })
}

/// Lazy revenue is linear in the number of treated bidders.
pub fn rev_l_k_closed(n: usize, k: usize, rev0: f64, revn: f64) -> Result<f64> {
    if k > n || n == 0 {
        return input(format!("need 0 <= k <= n and n >= 1, got k = {k}, n = {n}"));
    }
    let t = k as f64 / n as f64;
    Ok(t * revn + (1.0 - t) * rev0)
}

/// `∫_from^hi phi n F^{n-1} f`: expected virtual surplus of the winner when
/// only values above `from` can win.
fn virtual_surplus_above(dist: &ContinuousDist, n: usize, from: f64) -> Result<f64> {
    let hi = dist.integration_upper();
    let nf = n as f64;
    integrate(
        |x| {
            let f = dist.pdf(x);
            if f <= 0.0 {
                return 0.0;
            }
            let phi = x - (1.0 - dist.cdf(x)) / f;
            phi * nf * dist.cdf(x).powi(n as i32 - 1) * f
        },
        from,
        hi,
        QUAD_TOL,
    )
}

/// Eager revenue with the Myerson reserve on k of n iid bidders, by
/// quadrature:
/// `∫_r^hi phi n F^{n-1} f - 1{k<n} F(r)^n ∫_lo^r (F/F(r))^{n-k} phi'`.
pub fn rev_e_k_quadrature(dist: &ContinuousDist, n: usize, k: usize) -> Result<f64> {
    if k > n || n == 0 {
        return input(format!("need 0 <= k <= n and n >= 1, got k = {k}, n = {n}"));
    }
    let dist = dist.validated()?;
    if dist.atom_at_upper() > 0.0 {
        return Err(Error::Domain("quadrature form needs an atomless distribution".into()));
    }
    let r = dist.myerson_reserve()?;
    let main = virtual_surplus_above(&dist, n, r)?;
    if k == n {
        return Ok(main);
    }
    let (lo, _) = dist.support();
    let fr = dist.cdf(r);
    let correction = integrate(
        |x| (dist.cdf(x) / fr).powi((n - k) as i32) * dist.virtual_value_slope(x),
        lo,
        r,
        QUAD_TOL / fr.powi(n as i32).max(1e-300),
    )?;
    Ok(main - fr.powi(n as i32) * correction)
}

/// Lazy revenue of k Myerson-treated bidders, interpolating between the
/// zero-reserve revenue and the all-treated revenue (both by quadrature).
pub fn rev_l_k_quadrature(dist: &ContinuousDist, n: usize, k: usize) -> Result<f64> {
    let dist = dist.validated()?;
    let (lo, _) = dist.support();
    let rev0 = virtual_surplus_above(&dist, n, lo)?;
    let revn = rev_e_k_quadrature(&dist, n, n)?;
    rev_l_k_closed(n, k, rev0, revn)
}

fn reference_value(dist: &ContinuousDist, n: usize, k: usize, mechanism: Mechanism) -> Option<f64> {
    match mechanism {
        Mechanism::Eager => match *dist {
            ContinuousDist::Uniform { lo, hi } if lo == 0.0 && hi == 1.0 => rev_e_k_closed_uniform(n, k).ok(),
            _ => rev_e_k_quadrature(dist, n, k).ok(),
        },
        Mechanism::Lazy => rev_l_k_quadrature(dist, n, k).ok(),
    }
}

/// Simulates `k = 0..=n` Myerson-treated bidders (random per auction) with
/// the same seed at every point, attaching the analytic value where one
/// is available.
pub fn sweep_theoretical(
    dist: &ContinuousDist,
    n: usize,
    mechanism: Mechanism,
    trials: u64,
    seed: u64,
) -> Result<SweepResult> {
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut row = simulate_treatment(dist, n, &TreatmentPlan::bidder_split(k), mechanism, trials, seed)?;
        row.reference = reference_value(dist, n, k, mechanism);
        rows.push(row);
    }
    Ok(SweepResult { seed, rows })
}

/// For each fraction `f`, treats `round(f n)` bidders of the log (keeping
/// their reserve from `reserves`, 0 for the rest) and averages the log's
/// mean revenue over `assignments` random subsets. Subsets are nested
/// across fractions within one assignment.
pub fn empirical_treatment_sweep(
    log: &BidLog,
    reserves: &ReserveVector,
    fractions: &[f64],
    mechanism: Mechanism,
    assignments: u64,
    seed: u64,
) -> Result<SweepResult> {
    if fractions.is_empty() {
        return input("fraction grid is empty");
    }
    if let Some(f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return input(format!("fraction {f} is outside [0, 1]"));
    }
    if log.is_empty() {
        return input("bid log is empty");
    }
    if assignments == 0 {
        return input("need at least one assignment per point");
    }
    let n = log.bidders().len();
    let full = log.dense_reserves(reserves);
    let per_assignment: Vec<Vec<f64>> = (0..assignments)
        .into_par_iter()
        .map(|a| {
            let mut rng = partition_rng(seed, a);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            fractions
                .iter()
                .map(|&f| {
                    let k = (f * n as f64).round() as usize;
                    let mut dense = vec![0.0; n];
                    for &i in &order[..k] {
                        dense[i] = full[i];
                    }
                    log.total_revenue_dense(&dense, mechanism).value() / log.len() as f64
                })
                .collect()
        })
        .collect();
    let rows = fractions
        .iter()
        .enumerate()
        .map(|(j, &f)| {
            let mut m = Moments::default();
            for values in &per_assignment {
                m.push(values[j]);
            }
            SweepRow {
                x: f,
                mechanism,
                mean: m.mean,
                stderr: m.stderr(),
                trials: assignments,
                reference: None,
            }
        })
        .collect();
    Ok(SweepResult { seed, rows })
}
