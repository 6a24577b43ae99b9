//! Reserve vectors computed from bid logs and finite product distributions.

mod eager;
mod lazy;
mod monopoly;
mod product;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::auction::{BidderId, Mechanism, ReserveVector};

pub use eager::{eager_coordinate_ascent, optimal_eager_exact, CONVERGENCE_TOLERANCE};
pub use lazy::{optimal_lazy, optimal_lazy_bruteforce};
pub use monopoly::monopoly_reserves;
pub use product::{
    best_reserves_on_grid, expected_revenue_product, trim_lift, FiniteDist, ProductDist, MAX_ENUMERATION,
};

/// Where a chosen reserve came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CandidateSource {
    Zero,
    /// The highest bid of an auction the bidder wins without reserves.
    FirstBid,
    /// The second-highest bid of such an auction.
    SecondBid,
    /// Any other bid value seen in the log (monopoly and eager searches).
    LogBid,
    /// Supplied by the caller and kept unchanged.
    Initial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BidderDiagnostics {
    pub candidates: usize,
    pub source: CandidateSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub reserves: ReserveVector,
    /// Mean revenue per auction over the log under `mechanism`.
    pub expected_revenue: f64,
    /// Total revenue over the log (exactly rounded).
    pub total_revenue: f64,
    pub mechanism: Mechanism,
    pub per_bidder: BTreeMap<BidderId, BidderDiagnostics>,
}

pub(crate) fn source_of(value: f64) -> CandidateSource {
    if value == 0.0 {
        CandidateSource::Zero
    } else {
        CandidateSource::LogBid
    }
}
