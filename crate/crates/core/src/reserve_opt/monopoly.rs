use std::collections::BTreeMap;

use super::{source_of, BidderDiagnostics, OptimizationResult};
use crate::auction::Mechanism;
use crate::error::{input, Result};
use crate::log::BidLog;

/// Per-bidder monopoly reserves: `argmax_r r * #{t : b_it >= r}` over the
/// bidder's own distinct bids, ties to the smallest maximizer. Bidders that
/// never bid get 0. The reported revenue is that of the eager auction.
pub fn monopoly_reserves(log: &BidLog) -> Result<OptimizationResult> {
    if log.is_empty() {
        return input("cannot optimize reserves on an empty log");
    }
    let mut bids: Vec<Vec<f64>> = vec![Vec::new(); log.bidders().len()];
    for a in log.auctions() {
        for &(i, b) in &a.bids {
            bids[i as usize].push(b);
        }
    }
    let mut dense = vec![0.0; bids.len()];
    let mut per_bidder = BTreeMap::new();
    for (i, mut own) in bids.into_iter().enumerate() {
        own.sort_by(|a, b| b.total_cmp(a));
        // Descending sweep: `at_least` counts bids >= the current value.
        let mut best = (0.0f64, 0.0f64); // (revenue, reserve)
        let mut candidates = 0;
        let mut j = 0;
        while j < own.len() {
            let v = own[j];
            while j < own.len() && own[j] == v {
                j += 1;
            }
            candidates += 1;
            let rev = v * j as f64;
            // Descending order: ">=" lets the smaller maximizer win ties.
            if rev >= best.0 && rev > 0.0 {
                best = (rev, v);
            }
        }
        dense[i] = best.1;
        per_bidder.insert(
            log.bidders()[i].clone(),
            BidderDiagnostics {
                candidates,
                source: source_of(best.1),
            },
        );
    }
    let total_revenue = log.total_revenue_dense(&dense, Mechanism::Eager).value();
    Ok(OptimizationResult {
        reserves: log.reserve_vector(&dense),
        expected_revenue: total_revenue / log.len() as f64,
        total_revenue,
        mechanism: Mechanism::Eager,
        per_bidder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::BidProfile;

    fn solo_log(bids: &[f64]) -> BidLog {
        BidLog::from_profiles(
            bids.iter()
                .enumerate()
                .map(|(t, &b)| BidProfile::from_pairs(t.to_string(), [("i", b), ("other", 0.5)]).unwrap()),
        )
        .unwrap()
    }

    fn reserve_of(bids: &[f64]) -> f64 {
        monopoly_reserves(&solo_log(bids)).unwrap().reserves.get(&"i".into())
    }

    #[test]
    fn enumerated_cases() {
        assert_eq!(reserve_of(&[1.0, 1.0, 1.0, 5.0]), 5.0); // 5*1 > 1*4
        assert_eq!(reserve_of(&[2.0, 3.0]), 2.0); // 2*2 > 3*1
        assert_eq!(reserve_of(&[1.0, 2.0, 4.0]), 2.0); // 2*2 == 4*1, smaller wins
    }

    #[test]
    fn brute_force_agrees() {
        let bids = [0.5, 3.0, 3.0, 7.0, 1.25, 9.0, 3.0];
        let best = bids
            .iter()
            .map(|&r| (r * bids.iter().filter(|&&b| b >= r).count() as f64, r))
            .fold((0.0, 0.0), |acc, x| {
                if x.0 > acc.0 || (x.0 == acc.0 && x.1 < acc.1) {
                    x
                } else {
                    acc
                }
            });
        assert_eq!(reserve_of(&bids), best.1);
    }

    #[test]
    fn silent_bidders_get_zero() {
        let log = BidLog::from_profiles([
            BidProfile::from_pairs("a", [("x", 2.0)]).unwrap(),
            BidProfile::from_pairs("b", [("y", 0.0)]).unwrap(),
        ])
        .unwrap();
        let res = monopoly_reserves(&log).unwrap();
        assert_eq!(res.reserves.get(&"y".into()), 0.0);
        assert_eq!(res.reserves.get(&"x".into()), 2.0);
    }
}
