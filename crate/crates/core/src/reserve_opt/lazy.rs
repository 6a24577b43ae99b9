//! Optimal lazy reserves.
//!
//! With lazy reserves only the zero-reserve winner `w_t` of an auction can
//! ever win it, so the log revenue splits into independent per-bidder terms
//!
//! ```text
//! R_i(r) = sum over t in Q_i of 1{b1_t >= r} * max(r, b2_t)
//! ```
//!
//! where `Q_i` are the auctions `i` wins without reserves. An optimal `r`
//! is always `0`, some `b1_t` or some `b2_t`. [`optimal_lazy`] sorts those
//! values once and sweeps them keeping `R(r) = r * k + s`; the brute-force
//! oracle re-runs the auctions of `Q_i` at every candidate.
//!
//! Revenue sums are kept exact, so both routes produce bit-identical
//! revenues and make identical tie decisions.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{BidderDiagnostics, CandidateSource, OptimizationResult};
use crate::auction::{lazy_dense, top_two, Mechanism};
use crate::error::{input, Result};
use crate::exact::ExactSum;
use crate::log::BidLog;

#[derive(Clone, Copy)]
struct Won {
    auction: usize,
    first: f64,
    second: f64,
}

/// Groups auctions by their zero-reserve winner.
fn group_by_winner(log: &BidLog) -> Vec<Vec<Won>> {
    let mut groups = vec![Vec::new(); log.bidders().len()];
    for (t, a) in log.auctions().iter().enumerate() {
        let top = top_two(&a.bids).expect("auctions are non-empty");
        groups[top.first_idx as usize].push(Won {
            auction: t,
            first: top.first,
            second: top.second,
        });
    }
    groups
}

struct Choice {
    reserve: f64,
    revenue: ExactSum,
    candidates: usize,
    source: CandidateSource,
}

impl Choice {
    fn none() -> Self {
        Choice {
            reserve: 0.0,
            revenue: ExactSum::new(),
            candidates: 0,
            source: CandidateSource::Zero,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    // FIRST sorts before SECOND so a value carrying both reports FIRST_BID.
    First,
    Second,
}

fn scan_bidder(won: &[Won]) -> Choice {
    if won.is_empty() {
        return Choice::none();
    }
    let mut entries: Vec<(f64, Kind)> = Vec::with_capacity(2 * won.len());
    let mut s = ExactSum::new();
    for w in won {
        entries.push((w.first, Kind::First));
        entries.push((w.second, Kind::Second));
        s.add(w.second);
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // r = 0: every auction sells at its second price.
    let mut k: i64 = 0;
    let mut best = Choice {
        reserve: 0.0,
        revenue: s.clone(),
        candidates: 1,
        source: CandidateSource::Zero,
    };
    let mut best_value = best.revenue.value();

    let mut j = 0;
    while j < entries.len() {
        let v = entries[j].0;
        let source = entries[j].1;
        if v > 0.0 {
            let mut rev = s.clone();
            rev.add_product(v, k as f64);
            let value = rev.value();
            best.candidates += 1;
            if value > best_value {
                best_value = value;
                best.reserve = v;
                best.revenue = rev;
                best.source = match source {
                    Kind::First => CandidateSource::FirstBid,
                    Kind::Second => CandidateSource::SecondBid,
                };
            }
        }
        // Move the reserve past v: apply every update of this value group.
        while j < entries.len() && entries[j].0 == v {
            match entries[j].1 {
                Kind::First => k -= 1,
                Kind::Second => {
                    k += 1;
                    s.add(-v);
                }
            }
            j += 1;
        }
    }
    best
}

fn bruteforce_bidder(log: &BidLog, bidder: u32, won: &[Won]) -> Choice {
    if won.is_empty() {
        return Choice::none();
    }
    let mut candidates: Vec<f64> = std::iter::once(0.0)
        .chain(won.iter().flat_map(|w| [w.first, w.second]))
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let mut best = Choice::none();
    let mut best_value = f64::NEG_INFINITY;
    for &c in &candidates {
        let rev: ExactSum = won
            .iter()
            .map(|w| {
                let a = &log.auctions()[w.auction];
                lazy_dense(&a.bids, |i| if i == bidder { c } else { 0.0 }).payment
            })
            .collect();
        let value = rev.value();
        if value > best_value {
            best_value = value;
            best.reserve = c;
            best.revenue = rev;
            best.source = if c == 0.0 {
                CandidateSource::Zero
            } else if won.iter().any(|w| w.first == c) {
                CandidateSource::FirstBid
            } else {
                CandidateSource::SecondBid
            };
        }
    }
    best.candidates = candidates.len();
    best
}

fn assemble(log: &BidLog, choices: Vec<Choice>, total: ExactSum) -> OptimizationResult {
    let dense: Vec<f64> = choices.iter().map(|c| c.reserve).collect();
    let per_bidder: BTreeMap<_, _> = log
        .bidders()
        .iter()
        .cloned()
        .zip(choices.iter().map(|c| BidderDiagnostics {
            candidates: c.candidates,
            source: c.source,
        }))
        .collect();
    let total_revenue = total.value();
    OptimizationResult {
        reserves: log.reserve_vector(&dense),
        expected_revenue: total_revenue / log.len() as f64,
        total_revenue,
        mechanism: Mechanism::Lazy,
        per_bidder,
    }
}

/// Revenue-optimal lazy reserves via the sorted `(k, s)` sweep,
/// `O(sum_i |Q_i| log |Q_i|)`. Ties go to the smallest reserve.
pub fn optimal_lazy(log: &BidLog) -> Result<OptimizationResult> {
    if log.is_empty() {
        return input("cannot optimize reserves on an empty log");
    }
    let groups = group_by_winner(log);
    let choices: Vec<Choice> = groups.par_iter().map(|won| scan_bidder(won)).collect();
    let mut total = ExactSum::new();
    for c in &choices {
        total += &c.revenue;
    }
    Ok(assemble(log, choices, total))
}

/// Same contract as [`optimal_lazy`], evaluated by re-running every auction
/// of `Q_i` at every candidate (`O(sum_i |Q_i|^2)`). Meant as an oracle.
pub fn optimal_lazy_bruteforce(log: &BidLog) -> Result<OptimizationResult> {
    if log.is_empty() {
        return input("cannot optimize reserves on an empty log");
    }
    let groups = group_by_winner(log);
    let choices: Vec<Choice> = groups
        .iter()
        .enumerate()
        .map(|(i, won)| bruteforce_bidder(log, i as u32, won))
        .collect();
    let dense: Vec<f64> = choices.iter().map(|c| c.reserve).collect();
    let total = log.total_revenue_dense(&dense, Mechanism::Lazy);
    Ok(assemble(log, choices, total))
}
