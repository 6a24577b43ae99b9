//! Eager reserve search.
//!
//! Optimizing eager reserves is NP-hard (independent set reduces to it), so
//! the exact optimizer enumerates the candidate grid and refuses oversized
//! instances. Every bidder's candidates are `0` plus all distinct bid values
//! of the log; eager outcomes only change at those thresholds.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{source_of, BidderDiagnostics, CandidateSource, OptimizationResult};
use crate::auction::{Mechanism, ReserveVector};
use crate::error::{input, Error, Result};
use crate::log::BidLog;

/// Relative improvement below which a full coordinate pass counts as converged.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-12;

fn candidate_grid(log: &BidLog) -> Vec<f64> {
    let mut grid = log.distinct_bids();
    if grid.first() != Some(&0.0) {
        grid.insert(0, 0.0);
    }
    grid
}

fn result(log: &BidLog, dense: &[f64], sources: Vec<CandidateSource>, candidates: usize) -> OptimizationResult {
    let total_revenue = log.total_revenue_dense(dense, Mechanism::Eager).value();
    let per_bidder = log
        .bidders()
        .iter()
        .cloned()
        .zip(
            sources
                .into_iter()
                .map(|source| BidderDiagnostics { candidates, source }),
        )
        .collect::<BTreeMap<_, _>>();
    OptimizationResult {
        reserves: log.reserve_vector(dense),
        expected_revenue: total_revenue / log.len() as f64,
        total_revenue,
        mechanism: Mechanism::Eager,
        per_bidder,
    }
}

/// Exhaustive eager optimum over the candidate product. Ties resolve to the
/// lexicographically smallest reserve vector (bidders in id order).
pub fn optimal_eager_exact(log: &BidLog, max_product_size: u128) -> Result<OptimizationResult> {
    if log.is_empty() {
        return input("cannot optimize reserves on an empty log");
    }
    let grid = candidate_grid(log);
    let n = log.bidders().len();
    let size = (0..n)
        .try_fold(1u128, |acc, _| acc.checked_mul(grid.len() as u128))
        .unwrap_or(u128::MAX);
    if size > max_product_size {
        return Err(Error::SizeBound {
            size,
            bound: max_product_size,
        });
    }
    let size = size as u64;

    let decode = |mut index: u64, out: &mut [f64]| {
        for slot in out.iter_mut().rev() {
            *slot = grid[(index % grid.len() as u64) as usize];
            index /= grid.len() as u64;
        }
    };

    const CHUNK: u64 = 256;
    let chunks = size.div_ceil(CHUNK);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut dense = vec![0.0; n];
            let mut best: Option<(f64, u64)> = None;
            for index in c * CHUNK..((c + 1) * CHUNK).min(size) {
                decode(index, &mut dense);
                let v = log.total_revenue_dense(&dense, Mechanism::Eager).value();
                if best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, index));
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .fold(None::<(f64, u64)>, |acc, x| match acc {
            Some(a) if a.0 >= x.0 => Some(a),
            _ => Some(x),
        })
        .expect("grid is non-empty");

    let mut dense = vec![0.0; n];
    decode(best.1, &mut dense);
    let sources = dense.iter().map(|&r| source_of(r)).collect();
    Ok(result(log, &dense, sources, grid.len()))
}

/// Coordinate ascent on eager revenue from `init`.
///
/// Bidders are revisited in id order; each reserve is re-optimized over the
/// candidate grid with the others fixed, keeping the current value unless a
/// candidate is strictly better. Stops after a pass whose relative gain is
/// below [`CONVERGENCE_TOLERANCE`] or after `max_rounds` passes.
pub fn eager_coordinate_ascent(log: &BidLog, init: &ReserveVector, max_rounds: usize) -> Result<OptimizationResult> {
    if log.is_empty() {
        return input("cannot optimize reserves on an empty log");
    }
    let grid = candidate_grid(log);
    let mut dense = log.dense_reserves(init);
    let mut sources = vec![CandidateSource::Initial; dense.len()];
    let mut current = log.total_revenue_dense(&dense, Mechanism::Eager).value();

    for _ in 0..max_rounds {
        let start = current;
        for i in 0..dense.len() {
            let keep = dense[i];
            let mut best = (current, keep);
            for &c in &grid {
                if c == keep {
                    continue;
                }
                dense[i] = c;
                let v = log.total_revenue_dense(&dense, Mechanism::Eager).value();
                if v > best.0 {
                    best = (v, c);
                }
            }
            dense[i] = best.1;
            if best.1 != keep {
                current = best.0;
                sources[i] = source_of(best.1);
            }
        }
        let gain = current - start;
        if gain <= CONVERGENCE_TOLERANCE * start.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(result(log, &dense, sources, grid.len()))
}
