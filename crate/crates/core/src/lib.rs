//! Second-price auctions with personalized reserve prices.
//!
//! Reserves can be applied *lazily* (after picking the highest bidder) or
//! *eagerly* (before, by removing bidders below their reserve). The crate
//! covers the mechanics of both rules, reserve optimization from bid logs
//! and finite product distributions, value distributions with their
//! virtual values, adversarial bid generators, and A/B test simulation.

pub mod ab;
pub mod auction;
pub mod dist;
pub mod error;
pub mod exact;
pub mod log;
pub mod quadrature;
pub mod reserve_opt;

pub use auction::{
    critical_bid, eager_dense, lazy_dense, run_auction, run_dense, run_eager, run_lazy, AuctionOutcome, BidProfile,
    BidderId, DenseOutcome, Mechanism, ReserveVector,
};
pub use error::{Error, Result};
pub use exact::ExactSum;
pub use log::{empirical_revenue, empirical_welfare, total_revenue, total_welfare, BidLog, LoggedAuction};
