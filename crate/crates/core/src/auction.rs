//! Single-item second-price auctions with personalized reserves.
//!
//! Two ways of applying a reserve vector are supported:
//!
//! * **lazy**: pick the highest bidder first, then check her reserve. If she
//!   misses it the item goes unsold; otherwise she pays the larger of her
//!   reserve and the second-highest bid.
//! * **eager**: drop every bidder below her own reserve, then run a
//!   second-price auction among the survivors, charging the winner the larger
//!   of her reserve and the best surviving competing bid.
//!
//! A bid meets its reserve iff `bid >= reserve`. Equal bids are broken in
//! favour of the smaller [`BidderId`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Identity of a bidder.
///
/// Ids made only of ASCII digits order numerically (so `"2" < "10"`) and sort
/// before all other ids, which order lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub struct BidderId {
    name: String,
    numeric: Option<u64>,
}

impl BidderId {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        let numeric = if !name.is_empty() && name.bytes().all(|b| b.is_ascii_digit()) {
            name.parse().ok()
        } else {
            None
        };
        Self { name, numeric }
    }

    pub fn as_str(&self) -> &str {
        &self.name
    }
}

impl From<String> for BidderId {
    fn from(s: String) -> Self {
        Self::new(s)
    }
}

impl From<&str> for BidderId {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

impl From<BidderId> for String {
    fn from(id: BidderId) -> Self {
        id.name
    }
}

impl From<usize> for BidderId {
    fn from(i: usize) -> Self {
        Self::new(i.to_string())
    }
}

impl Ord for BidderId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.numeric, other.numeric) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| self.name.cmp(&other.name)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.name.cmp(&other.name),
        }
    }
}

impl PartialOrd for BidderId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BidderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl fmt::Debug for BidderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Lazy,
    Eager,
}

impl Mechanism {
    pub const BOTH: [Mechanism; 2] = [Mechanism::Lazy, Mechanism::Eager];

    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::Lazy => "lazy",
            Mechanism::Eager => "eager",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub(crate) fn check_money(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        input(format!("{what} must be a finite non-negative number, got {v}"))
    }
}

/// One auction's bids. Bidders missing from the map did not participate.
#[derive(Debug, Clone, PartialEq)]
pub struct BidProfile {
    auction_id: String,
    bids: BTreeMap<BidderId, f64>,
}

impl BidProfile {
    pub fn new(auction_id: impl Into<String>, bids: BTreeMap<BidderId, f64>) -> Result<Self> {
        if bids.is_empty() {
            return input("a bid profile needs at least one bidder");
        }
        for (who, &b) in &bids {
            check_money(&format!("bid of {who}"), b)?;
        }
        Ok(Self {
            auction_id: auction_id.into(),
            bids,
        })
    }

    /// Convenience constructor from `(bidder, bid)` pairs.
    pub fn from_pairs<I, K>(auction_id: impl Into<String>, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, f64)>,
        K: Into<BidderId>,
    {
        let mut bids = BTreeMap::new();
        for (k, v) in pairs {
            let k = k.into();
            if bids.insert(k.clone(), v).is_some() {
                return input(format!("bidder {k} appears twice"));
            }
        }
        Self::new(auction_id, bids)
    }

    pub fn auction_id(&self) -> &str {
        &self.auction_id
    }

    pub fn bids(&self) -> &BTreeMap<BidderId, f64> {
        &self.bids
    }

    pub fn bid(&self, bidder: &BidderId) -> Option<f64> {
        self.bids.get(bidder).copied()
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }

    /// Highest bid.
    pub fn first_price(&self) -> f64 {
        self.bids.values().copied().fold(0.0, f64::max)
    }

    /// Second-highest bid; 0 with a single participant.
    pub fn second_price(&self) -> f64 {
        let dense: Vec<(u32, f64)> = self.dense_bids();
        top_two(&dense).map(|t| t.second).unwrap_or(0.0)
    }

    pub(crate) fn dense_bids(&self) -> Vec<(u32, f64)> {
        self.bids.values().enumerate().map(|(i, &b)| (i as u32, b)).collect()
    }

    fn dense_reserves(&self, reserves: &ReserveVector) -> Vec<f64> {
        self.bids.keys().map(|k| reserves.get(k)).collect()
    }

    fn bidder_at(&self, idx: u32) -> BidderId {
        self.bids
            .keys()
            .nth(idx as usize)
            .cloned()
            .expect("index from this profile")
    }
}

/// Per-bidder reserve prices; bidders not listed face a reserve of 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReserveVector {
    reserves: BTreeMap<BidderId, f64>,
}

impl ReserveVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(reserves: BTreeMap<BidderId, f64>) -> Result<Self> {
        for (who, &r) in &reserves {
            check_money(&format!("reserve of {who}"), r)?;
        }
        Ok(Self { reserves })
    }

    pub fn from_pairs<I, K>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, f64)>,
        K: Into<BidderId>,
    {
        Self::new(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    /// The same reserve for every listed bidder.
    pub fn uniform<'a>(bidders: impl IntoIterator<Item = &'a BidderId>, reserve: f64) -> Result<Self> {
        Self::new(bidders.into_iter().map(|b| (b.clone(), reserve)).collect())
    }

    pub fn get(&self, bidder: &BidderId) -> f64 {
        self.reserves.get(bidder).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, bidder: BidderId, reserve: f64) -> Result<()> {
        check_money(&format!("reserve of {bidder}"), reserve)?;
        self.reserves.insert(bidder, reserve);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BidderId, f64)> {
        self.reserves.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.reserves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reserves.is_empty()
    }

    /// True when every reserve is zero (or none is set).
    pub fn is_zero(&self) -> bool {
        self.reserves.values().all(|&r| r == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome {
    pub winner: Option<BidderId>,
    pub payment: f64,
    pub welfare: f64,
    pub mechanism: Mechanism,
}

/// Outcome over dense bidder indices; used by the hot loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseOutcome {
    pub winner: Option<u32>,
    pub payment: f64,
    pub welfare: f64,
}

impl DenseOutcome {
    const UNSOLD: DenseOutcome = DenseOutcome {
        winner: None,
        payment: 0.0,
        welfare: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TopTwo {
    pub first_idx: u32,
    pub first: f64,
    pub second: f64,
}

/// Highest bid (ties to the earliest entry) and the best other bid.
/// `bids` must be ordered by bidder index.
pub(crate) fn top_two(bids: &[(u32, f64)]) -> Option<TopTwo> {
    let mut it = bids.iter();
    let &(i0, b0) = it.next()?;
    let mut t = TopTwo {
        first_idx: i0,
        first: b0,
        second: 0.0,
    };
    for &(i, b) in it {
        if b > t.first {
            t.second = t.first;
            t.first = b;
            t.first_idx = i;
        } else if b > t.second {
            t.second = b;
        }
    }
    Some(t)
}

/// Lazy reserves over dense bids ordered by bidder index.
pub fn lazy_dense(bids: &[(u32, f64)], reserve: impl Fn(u32) -> f64) -> DenseOutcome {
    let Some(t) = top_two(bids) else {
        return DenseOutcome::UNSOLD;
    };
    let r = reserve(t.first_idx);
    if t.first < r {
        return DenseOutcome::UNSOLD;
    }
    DenseOutcome {
        winner: Some(t.first_idx),
        payment: r.max(t.second),
        welfare: t.first,
    }
}

/// Eager reserves over dense bids ordered by bidder index.
pub fn eager_dense(bids: &[(u32, f64)], reserve: impl Fn(u32) -> f64) -> DenseOutcome {
    let mut best: Option<(u32, f64, f64)> = None; // (index, bid, reserve)
    let mut second = 0.0f64;
    for &(i, b) in bids {
        let r = reserve(i);
        if b < r {
            continue;
        }
        match best {
            Some((_, bb, _)) if b <= bb => second = second.max(b),
            Some((_, bb, _)) => {
                second = second.max(bb);
                best = Some((i, b, r));
            }
            None => best = Some((i, b, r)),
        }
    }
    match best {
        Some((i, b, r)) => DenseOutcome {
            winner: Some(i),
            payment: r.max(second),
            welfare: b,
        },
        None => DenseOutcome::UNSOLD,
    }
}

pub fn run_dense(mechanism: Mechanism, bids: &[(u32, f64)], reserve: impl Fn(u32) -> f64) -> DenseOutcome {
    match mechanism {
        Mechanism::Lazy => lazy_dense(bids, reserve),
        Mechanism::Eager => eager_dense(bids, reserve),
    }
}

fn run(profile: &BidProfile, reserves: &ReserveVector, mechanism: Mechanism) -> Result<AuctionOutcome> {
    if profile.is_empty() {
        return input("empty bid profile");
    }
    let dense = profile.dense_bids();
    let r = profile.dense_reserves(reserves);
    let out = run_dense(mechanism, &dense, |i| r[i as usize]);
    Ok(AuctionOutcome {
        winner: out.winner.map(|i| profile.bidder_at(i)),
        payment: out.payment,
        welfare: out.welfare,
        mechanism,
    })
}

pub fn run_lazy(profile: &BidProfile, reserves: &ReserveVector) -> Result<AuctionOutcome> {
    run(profile, reserves, Mechanism::Lazy)
}

pub fn run_eager(profile: &BidProfile, reserves: &ReserveVector) -> Result<AuctionOutcome> {
    run(profile, reserves, Mechanism::Eager)
}

pub fn run_auction(profile: &BidProfile, reserves: &ReserveVector, mechanism: Mechanism) -> Result<AuctionOutcome> {
    run(profile, reserves, mechanism)
}

/// Infimum of the bids with which `bidder` wins, all other bids held fixed.
///
/// Under both mechanisms this is `max(r_bidder, m)` where `m` is the best
/// competing bid that can still win (every other bid for lazy, only bids
/// meeting their reserve for eager). `None` only when no finite bid wins.
pub fn critical_bid(
    profile: &BidProfile,
    reserves: &ReserveVector,
    bidder: &BidderId,
    mechanism: Mechanism,
) -> Result<Option<f64>> {
    if !profile.bids.contains_key(bidder) {
        return Err(Error::Input(format!(
            "bidder {bidder} does not participate in auction {}",
            profile.auction_id
        )));
    }
    let competing = profile
        .bids
        .iter()
        .filter(|(k, _)| *k != bidder)
        .filter(|(k, &b)| mechanism == Mechanism::Lazy || b >= reserves.get(k))
        .map(|(_, &b)| b)
        .fold(0.0, f64::max);
    let crit = reserves.get(bidder).max(competing);
    Ok(crit.is_finite().then_some(crit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn abc(a: f64, b: f64, c: f64) -> BidProfile {
        BidProfile::from_pairs("t", [("A", a), ("B", b), ("C", c)]).unwrap()
    }

    fn res(pairs: &[(&str, f64)]) -> ReserveVector {
        ReserveVector::from_pairs(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn eager_dominates_lazy_example() {
        let p = abc(7.0, 5.0, 3.0);
        let r = res(&[("A", 8.0), ("B", 1.0), ("C", 2.0)]);
        let lazy = run_lazy(&p, &r).unwrap();
        assert_eq!(lazy.winner, None);
        assert_eq!(lazy.payment, 0.0);
        assert_eq!(lazy.welfare, 0.0);
        let eager = run_eager(&p, &r).unwrap();
        assert_eq!(eager.winner, Some("B".into()));
        assert_eq!(eager.payment, 3.0);
        assert_eq!(eager.welfare, 5.0);
    }

    #[test]
    fn lazy_dominates_eager_example() {
        let p = abc(7.0, 5.0, 3.0);
        let r = res(&[("A", 2.0), ("B", 6.0), ("C", 1.0)]);
        let lazy = run_lazy(&p, &r).unwrap();
        assert_eq!((lazy.winner, lazy.payment), (Some("A".into()), 5.0));
        let eager = run_eager(&p, &r).unwrap();
        assert_eq!((eager.winner, eager.payment), (Some("A".into()), 3.0));
    }

    #[test]
    fn zero_reserves_is_second_price() {
        let p = abc(7.0, 5.0, 3.0);
        let out = run_lazy(&p, &ReserveVector::zero()).unwrap();
        assert_eq!((out.winner, out.payment), (Some("A".into()), 5.0));
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let p = BidProfile::from_pairs("t", [("A", 5.0), ("B", 5.0)]).unwrap();
        for m in Mechanism::BOTH {
            let out = run_auction(&p, &ReserveVector::zero(), m).unwrap();
            assert_eq!((out.winner, out.payment), (Some("A".into()), 5.0));
        }
        // numeric ids order numerically
        let p = BidProfile::from_pairs("t", [("10", 5.0), ("2", 5.0)]).unwrap();
        let out = run_eager(&p, &ReserveVector::zero()).unwrap();
        assert_eq!(out.winner, Some("2".into()));
    }

    #[test]
    fn single_survivor_pays_reserve() {
        let p = BidProfile::from_pairs("t", [("A", 9.0)]).unwrap();
        let r = res(&[("A", 4.0)]);
        assert_eq!(run_eager(&p, &r).unwrap().payment, 4.0);
        assert_eq!(run_lazy(&p, &r).unwrap().payment, 4.0);
        assert_eq!(p.second_price(), 0.0);
    }

    #[test]
    fn bid_exactly_at_reserve_qualifies() {
        let p = BidProfile::from_pairs("t", [("A", 4.0), ("B", 1.0)]).unwrap();
        let r = res(&[("A", 4.0)]);
        assert_eq!(run_lazy(&p, &r).unwrap().payment, 4.0);
        assert_eq!(run_eager(&p, &r).unwrap().payment, 4.0);
    }

    #[test]
    fn critical_bids() {
        let p = abc(7.0, 5.0, 3.0);
        let r = res(&[("A", 8.0), ("B", 1.0), ("C", 2.0)]);
        assert_eq!(critical_bid(&p, &r, &"A".into(), Mechanism::Lazy).unwrap(), Some(8.0));
        assert_eq!(critical_bid(&p, &r, &"B".into(), Mechanism::Eager).unwrap(), Some(3.0));
        assert_eq!(
            critical_bid(&p, &ReserveVector::zero(), &"B".into(), Mechanism::Eager).unwrap(),
            Some(7.0)
        );
        assert!(critical_bid(&p, &r, &"Z".into(), Mechanism::Lazy).is_err());
    }

    #[test]
    fn critical_bid_matches_grid_scan() {
        // A wins lazily iff b_A >= max(r_A, 5): scan a fine grid for the first winning bid.
        let r = res(&[("A", 8.0), ("B", 1.0), ("C", 2.0)]);
        let first_win = (0..=2000)
            .map(|i| i as f64 * 0.01)
            .find(|&b| run_lazy(&abc(b, 5.0, 3.0), &r).unwrap().winner == Some("A".into()))
            .unwrap();
        assert_eq!(first_win, 8.0);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(BidProfile::from_pairs::<_, &str>("t", []).is_err());
        assert!(BidProfile::from_pairs("t", [("A", -1.0)]).is_err());
        assert!(BidProfile::from_pairs("t", [("A", f64::NAN)]).is_err());
        assert!(ReserveVector::from_pairs([("A", f64::INFINITY)]).is_err());
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..6).prop_flat_map(|n| {
            let v = prop_oneof![(0u8..6).prop_map(f64::from), 0.0f64..10.0];
            (prop::collection::vec(v.clone(), n), prop::collection::vec(v, n))
        })
    }

    fn build(bids: &[f64], reserves: &[f64]) -> (BidProfile, ReserveVector) {
        let p = BidProfile::from_pairs("p", bids.iter().enumerate().map(|(i, &b)| (i, b))).unwrap();
        let r = ReserveVector::from_pairs(reserves.iter().enumerate().map(|(i, &b)| (i, b))).unwrap();
        (p, r)
    }

    proptest! {
        #[test]
        fn eager_welfare_dominates((bids, reserves) in instance()) {
            let (p, r) = build(&bids, &reserves);
            prop_assert!(run_eager(&p, &r).unwrap().welfare >= run_lazy(&p, &r).unwrap().welfare);
        }

        #[test]
        fn equal_reserves_agree((bids, _) in instance(), level in 0.0f64..10.0) {
            let (p, _) = build(&bids, &[]);
            let r = ReserveVector::uniform(p.bids().keys(), level).unwrap();
            prop_assert_eq!(run_eager(&p, &r).unwrap(), AuctionOutcome { mechanism: Mechanism::Eager, ..run_lazy(&p, &r).unwrap() });
        }

        #[test]
        fn outcome_invariants((bids, reserves) in instance()) {
            let (p, r) = build(&bids, &reserves);
            for m in Mechanism::BOTH {
                let o = run_auction(&p, &r, m).unwrap();
                prop_assert!(o.payment <= o.welfare);
                if o.winner.is_none() {
                    prop_assert!(o.payment == 0.0 && o.welfare == 0.0);
                }
                if let Some(w) = &o.winner {
                    prop_assert_eq!(o.welfare, p.bid(w).unwrap());
                    prop_assert_eq!(Some(o.payment), critical_bid(&p, &r, w, m).unwrap());
                }
            }
        }

        #[test]
        fn zero_reserves_second_price((bids, _) in instance()) {
            let (p, _) = build(&bids, &[]);
            for m in Mechanism::BOTH {
                let o = run_auction(&p, &ReserveVector::zero(), m).unwrap();
                prop_assert_eq!(o.payment, p.second_price());
                prop_assert_eq!(o.welfare, p.first_price());
            }
        }
    }
}
