//! Historical bid logs.
//!
//! A [`BidLog`] interns bidder ids: every auction stores `(index, bid)` pairs
//! sorted by index, where `index` points into [`BidLog::bidders`] (itself in
//! ascending [`BidderId`] order). Dense indices therefore preserve the
//! tie-breaking order of the mechanisms.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::auction::{check_money, run_dense, BidProfile, BidderId, DenseOutcome, Mechanism, ReserveVector};
use crate::error::{input, Result};
use crate::exact::ExactSum;

#[derive(Debug, Clone, PartialEq)]
pub struct LoggedAuction {
    pub auction_id: String,
    pub bids: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BidLog {
    bidders: Vec<BidderId>,
    auctions: Vec<LoggedAuction>,
}

impl BidLog {
    pub fn from_profiles(profiles: impl IntoIterator<Item = BidProfile>) -> Result<Self> {
        let profiles: Vec<BidProfile> = profiles.into_iter().collect();
        let bidders: Vec<BidderId> = profiles
            .iter()
            .flat_map(|p| p.bids().keys().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: BTreeMap<&BidderId, u32> = bidders.iter().enumerate().map(|(i, b)| (b, i as u32)).collect();
        let auctions = profiles
            .iter()
            .map(|p| LoggedAuction {
                auction_id: p.auction_id().to_string(),
                bids: p.bids().iter().map(|(k, &b)| (index[k], b)).collect(),
            })
            .collect();
        Self::from_dense(bidders.clone(), auctions)
    }

    /// Builds a log directly from interned auctions. Bidders must be sorted and
    /// distinct; each auction's indices are sorted here.
    pub fn from_dense(bidders: Vec<BidderId>, mut auctions: Vec<LoggedAuction>) -> Result<Self> {
        if bidders.windows(2).any(|w| w[0] >= w[1]) {
            return input("bidder index must be strictly increasing");
        }
        let mut seen = HashSet::with_capacity(auctions.len());
        for a in &mut auctions {
            if a.bids.is_empty() {
                return input(format!("auction {} has no bids", a.auction_id));
            }
            a.bids.sort_by_key(|&(i, _)| i);
            if a.bids.windows(2).any(|w| w[0].0 == w[1].0) {
                return input(format!("auction {} lists a bidder twice", a.auction_id));
            }
            for &(i, b) in &a.bids {
                if i as usize >= bidders.len() {
                    return input(format!("auction {} references unknown bidder index {i}", a.auction_id));
                }
                check_money(&format!("bid in auction {}", a.auction_id), b)?;
            }
            if !seen.insert(a.auction_id.as_str()) {
                return input(format!("duplicate auction id {}", a.auction_id));
            }
        }
        Ok(Self { bidders, auctions })
    }

    pub fn len(&self) -> usize {
        self.auctions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.auctions.is_empty()
    }

    pub fn bidders(&self) -> &[BidderId] {
        &self.bidders
    }

    pub fn auctions(&self) -> &[LoggedAuction] {
        &self.auctions
    }

    pub fn profile(&self, t: usize) -> BidProfile {
        let a = &self.auctions[t];
        BidProfile::from_pairs(
            a.auction_id.clone(),
            a.bids.iter().map(|&(i, b)| (self.bidders[i as usize].clone(), b)),
        )
        .expect("log entries are validated on construction")
    }

    pub fn profiles(&self) -> impl Iterator<Item = BidProfile> + '_ {
        (0..self.len()).map(|t| self.profile(t))
    }

    pub fn index_of(&self, bidder: &BidderId) -> Option<u32> {
        self.bidders.binary_search(bidder).ok().map(|i| i as u32)
    }

    /// Reserves laid out by dense bidder index.
    pub fn dense_reserves(&self, reserves: &ReserveVector) -> Vec<f64> {
        self.bidders.iter().map(|b| reserves.get(b)).collect()
    }

    pub fn reserve_vector(&self, dense: &[f64]) -> ReserveVector {
        ReserveVector::from_pairs(self.bidders.iter().cloned().zip(dense.iter().copied()))
            .expect("dense reserves are non-negative")
    }

    /// All distinct bid values in ascending order.
    pub fn distinct_bids(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .auctions
            .iter()
            .flat_map(|a| a.bids.iter().map(|&(_, b)| b))
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    pub fn outcomes<'a>(
        &'a self,
        dense_reserves: &'a [f64],
        mechanism: Mechanism,
    ) -> impl Iterator<Item = DenseOutcome> + 'a {
        self.auctions
            .iter()
            .map(move |a| run_dense(mechanism, &a.bids, |i| dense_reserves[i as usize]))
    }

    /// Exact total payment over the log.
    pub(crate) fn total_revenue_dense(&self, dense_reserves: &[f64], mechanism: Mechanism) -> ExactSum {
        self.outcomes(dense_reserves, mechanism).map(|o| o.payment).collect()
    }

    pub(crate) fn total_welfare_dense(&self, dense_reserves: &[f64], mechanism: Mechanism) -> ExactSum {
        self.outcomes(dense_reserves, mechanism).map(|o| o.welfare).collect()
    }
}

/// Mean payment per auction of `mechanism` with `reserves` over the log.
pub fn empirical_revenue(log: &BidLog, reserves: &ReserveVector, mechanism: Mechanism) -> Result<f64> {
    if log.is_empty() {
        return input("empirical revenue of an empty log");
    }
    let dense = log.dense_reserves(reserves);
    Ok(log.total_revenue_dense(&dense, mechanism).value() / log.len() as f64)
}

/// Mean allocated welfare per auction.
pub fn empirical_welfare(log: &BidLog, reserves: &ReserveVector, mechanism: Mechanism) -> Result<f64> {
    if log.is_empty() {
        return input("empirical welfare of an empty log");
    }
    let dense = log.dense_reserves(reserves);
    Ok(log.total_welfare_dense(&dense, mechanism).value() / log.len() as f64)
}

/// Exact total payment (not averaged).
pub fn total_revenue(log: &BidLog, reserves: &ReserveVector, mechanism: Mechanism) -> ExactSum {
    log.total_revenue_dense(&log.dense_reserves(reserves), mechanism)
}

pub fn total_welfare(log: &BidLog, reserves: &ReserveVector, mechanism: Mechanism) -> ExactSum {
    log.total_welfare_dense(&log.dense_reserves(reserves), mechanism)
}
