//! Exact expectations over independent finite bid distributions, and the
//! trim construction that turns lazy reserves into eager reserves without
//! losing revenue.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auction::{check_money, run_dense, BidderId, Mechanism, ReserveVector};
use crate::error::{input, Error, Result};
use crate::exact::ExactSum;

/// Largest number of joint atoms an exact enumeration will visit.
pub const MAX_ENUMERATION: u128 = 1 << 22;

/// A finite distribution: distinct values with positive probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDist {
    atoms: Vec<(f64, f64)>,
}

impl FiniteDist {
    /// Atoms with equal values are merged; zero-probability atoms dropped.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut merged: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
        let mut total = 0.0;
        for (v, p) in atoms {
            check_money("atom value", v)?;
            if !(p.is_finite() && p >= 0.0) {
                return input(format!("atom probability must be in [0, 1], got {p}"));
            }
            total += p;
            if p > 0.0 {
                // non-negative finite doubles order like their bit patterns
                merged.entry((v + 0.0).to_bits()).or_insert((v, 0.0)).1 += p;
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return input(format!("atom probabilities sum to {total}, not 1"));
        }
        Ok(Self {
            atoms: merged.into_values().collect(),
        })
    }

    pub fn point(value: f64) -> Result<Self> {
        Self::new([(value, 1.0)])
    }

    /// Atoms in ascending value order.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Distribution of `X * 1{X >= r}`: mass below `r` moves to an atom at 0.
    pub fn trim(&self, r: f64) -> Self {
        let below: f64 = self.atoms.iter().filter(|a| a.0 < r).map(|a| a.1).sum();
        if below == 0.0 {
            return self.clone();
        }
        let mut atoms = vec![(0.0, below)];
        atoms.extend(self.atoms.iter().copied().filter(|a| a.0 >= r));
        Self::new(atoms).expect("trimmed atoms keep total mass")
    }

    /// Probability of a value strictly between 0 and `r`.
    pub fn mass_strictly_between_zero_and(&self, r: f64) -> f64 {
        self.atoms.iter().filter(|a| a.0 > 0.0 && a.0 < r).map(|a| a.1).sum()
    }
}

/// Independent bidders, each with a finite value distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDist {
    marginals: BTreeMap<BidderId, FiniteDist>,
}

impl ProductDist {
    pub fn new(marginals: BTreeMap<BidderId, FiniteDist>) -> Result<Self> {
        if marginals.is_empty() {
            return input("a product distribution needs at least one bidder");
        }
        Ok(Self { marginals })
    }

    pub fn from_pairs<I, K>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, FiniteDist)>,
        K: Into<BidderId>,
    {
        Self::new(pairs.into_iter().map(|(k, d)| (k.into(), d)).collect())
    }

    pub fn marginals(&self) -> &BTreeMap<BidderId, FiniteDist> {
        &self.marginals
    }

    pub fn marginal(&self, bidder: &BidderId) -> Option<&FiniteDist> {
        self.marginals.get(bidder)
    }

    pub fn bidders(&self) -> impl Iterator<Item = &BidderId> {
        self.marginals.keys()
    }

    /// Number of joint atoms.
    pub fn support_size(&self) -> u128 {
        self.marginals
            .values()
            .try_fold(1u128, |acc, d| acc.checked_mul(d.len() as u128))
            .unwrap_or(u128::MAX)
    }

    fn guard(&self) -> Result<()> {
        let size = self.support_size();
        if size > MAX_ENUMERATION {
            return Err(Error::SizeBound {
                size,
                bound: MAX_ENUMERATION,
            });
        }
        Ok(())
    }

    fn dense(&self) -> Vec<&FiniteDist> {
        self.marginals.values().collect()
    }
}

/// Visits every joint atom `(bids by dense index, probability)`. Bidder
/// `fixed.0` is pinned to value `fixed.1` with probability one when given.
fn enumerate(marginals: &[&FiniteDist], fixed: Option<(usize, f64)>, mut visit: impl FnMut(&[(u32, f64)], f64)) {
    let n = marginals.len();
    let mut digits = vec![0usize; n];
    let mut bids: Vec<(u32, f64)> = (0..n as u32).map(|i| (i, 0.0)).collect();
    let len = |i: usize| {
        if fixed.is_some_and(|f| f.0 == i) {
            1
        } else {
            marginals[i].len()
        }
    };
    loop {
        let mut p = 1.0;
        for i in 0..n {
            match fixed {
                Some((f, v)) if f == i => bids[i].1 = v,
                _ => {
                    let (v, q) = marginals[i].atoms()[digits[i]];
                    bids[i].1 = v;
                    p *= q;
                }
            }
        }
        visit(&bids, p);
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < len(i) {
                break;
            }
            digits[i] = 0;
        }
    }
}

fn expectation(marginals: &[&FiniteDist], reserves: &[f64], mechanism: Mechanism, fixed: Option<(usize, f64)>) -> f64 {
    let mut acc = ExactSum::new();
    enumerate(marginals, fixed, |bids, p| {
        let pay = run_dense(mechanism, bids, |i| reserves[i as usize]).payment;
        if pay != 0.0 {
            acc.add_product(p, pay);
        }
    });
    acc.value()
}

/// Exact `E[Rev(b; r)]` for `b` drawn from the product distribution.
pub fn expected_revenue_product(dist: &ProductDist, reserves: &ReserveVector, mechanism: Mechanism) -> Result<f64> {
    dist.guard()?;
    let dense: Vec<f64> = dist.bidders().map(|b| reserves.get(b)).collect();
    Ok(expectation(&dist.dense(), &dense, mechanism, None))
}

/// Best reserve vector for `mechanism` when every bidder's reserve ranges
/// over `{0}` plus all atom values of all bidders. Exhaustive; ties to the
/// lexicographically smallest vector. Returns `(reserves, revenue)`.
pub fn best_reserves_on_grid(dist: &ProductDist, mechanism: Mechanism) -> Result<(ReserveVector, f64)> {
    let mut grid: Vec<f64> = std::iter::once(0.0)
        .chain(dist.marginals.values().flat_map(|d| d.atoms().iter().map(|a| a.0)))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let n = dist.marginals.len();
    let vectors = (0..n)
        .try_fold(1u128, |acc, _| acc.checked_mul(grid.len() as u128))
        .unwrap_or(u128::MAX);
    let work = vectors.saturating_mul(dist.support_size());
    if work > MAX_ENUMERATION * 16 {
        return Err(Error::SizeBound {
            size: work,
            bound: MAX_ENUMERATION * 16,
        });
    }
    let marginals = dist.dense();
    let vectors = vectors as u64;
    let decode = |mut index: u64| {
        let mut out = vec![0.0; n];
        for slot in out.iter_mut().rev() {
            *slot = grid[(index % grid.len() as u64) as usize];
            index /= grid.len() as u64;
        }
        out
    };
    let values: Vec<f64> = (0..vectors)
        .into_par_iter()
        .map(|idx| expectation(&marginals, &decode(idx), mechanism, None))
        .collect();
    let (best_idx, best) =
        values.iter().enumerate().fold(
            (0usize, f64::NEG_INFINITY),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
    let dense = decode(best_idx as u64);
    let reserves = ReserveVector::from_pairs(dist.bidders().cloned().zip(dense)).expect("grid values are valid");
    Ok((reserves, best))
}

/// Lifts lazy reserves `r` to `(D', r')` with `D'_i = trim(D_i, r'_i)`,
/// `Rev_L(D, r) <= Rev_L(D', r') = Rev_E(D', r')`.
///
/// Bidders are processed in non-increasing reserve order (ties by id). For
/// bidder `i`, `x` is the atom of `D_i` strictly below `r_i` maximizing the
/// conditional lazy revenue `E[Rev_L | b_i = x]` (0 if there is none); then
/// `D_i` is trimmed at `r_i` and every unprocessed reserve is raised to at
/// least `x`.
pub fn trim_lift(dist: &ProductDist, lazy_reserves: &ReserveVector) -> Result<(ProductDist, ReserveVector)> {
    dist.guard()?;
    let ids: Vec<BidderId> = dist.bidders().cloned().collect();
    let mut marginals: Vec<FiniteDist> = dist.marginals.values().cloned().collect();
    let mut reserves: Vec<f64> = ids.iter().map(|b| lazy_reserves.get(b)).collect();

    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| reserves[b].total_cmp(&reserves[a]).then(a.cmp(&b)));

    for (pos, &i) in order.iter().enumerate() {
        let r_i = reserves[i];
        let below: Vec<f64> = marginals[i].atoms().iter().map(|a| a.0).filter(|&v| v < r_i).collect();
        let mut x = 0.0;
        if !below.is_empty() {
            let refs: Vec<&FiniteDist> = marginals.iter().collect();
            let mut best = f64::NEG_INFINITY;
            for &v in &below {
                let cond = expectation(&refs, &reserves, Mechanism::Lazy, Some((i, v)));
                if cond > best {
                    best = cond;
                    x = v;
                }
            }
        }
        marginals[i] = marginals[i].trim(r_i);
        for &j in &order[pos + 1..] {
            reserves[j] = reserves[j].max(x);
        }
    }

    let lifted = ProductDist::new(ids.iter().cloned().zip(marginals).collect())?;
    let r = ReserveVector::from_pairs(ids.into_iter().zip(reserves))?;
    Ok((lifted, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> ProductDist {
        ProductDist::from_pairs([
            ("1", FiniteDist::new([(1.0, 0.5), (3.0, 0.5)]).unwrap()),
            ("2", FiniteDist::point(2.0).unwrap()),
        ])
        .unwrap()
    }

    fn r(a: f64, b: f64) -> ReserveVector {
        ReserveVector::from_pairs([("1", a), ("2", b)]).unwrap()
    }

    #[test]
    fn hand_enumerated_lazy() {
        // .5 * 3 (bidder 1 wins at 3) + .5 * 1 (bidder 2 wins, pays 1's bid)
        assert_eq!(
            expected_revenue_product(&fixture(), &r(3.0, 0.0), Mechanism::Lazy).unwrap(),
            2.0
        );
    }

    #[test]
    fn trimmed_eager() {
        let trimmed = ProductDist::from_pairs([
            ("1", FiniteDist::new([(0.0, 0.5), (3.0, 0.5)]).unwrap()),
            ("2", FiniteDist::point(2.0).unwrap()),
        ])
        .unwrap();
        assert_eq!(
            expected_revenue_product(&trimmed, &r(3.0, 1.0), Mechanism::Eager).unwrap(),
            2.0
        );
    }

    #[test]
    fn zero_reserves_give_expected_second_price() {
        // second price: min(b1, 2) → .5 * 1 + .5 * 2
        for m in Mechanism::BOTH {
            assert_eq!(
                expected_revenue_product(&fixture(), &ReserveVector::zero(), m).unwrap(),
                1.5
            );
        }
    }

    #[test]
    fn lift_of_fixture() {
        let (d, rr) = trim_lift(&fixture(), &r(3.0, 0.0)).unwrap();
        assert_eq!(d.marginal(&"1".into()).unwrap().atoms(), &[(0.0, 0.5), (3.0, 0.5)]);
        assert_eq!(d.marginal(&"2".into()).unwrap().atoms(), &[(2.0, 1.0)]);
        assert_eq!(rr, r(3.0, 1.0));
        assert_eq!(expected_revenue_product(&d, &rr, Mechanism::Lazy).unwrap(), 2.0);
        assert_eq!(expected_revenue_product(&d, &rr, Mechanism::Eager).unwrap(), 2.0);
    }

    #[test]
    fn zero_reserves_lift_is_identity() {
        let (d, rr) = trim_lift(&fixture(), &ReserveVector::zero()).unwrap();
        assert_eq!(d, fixture());
        assert!(rr.is_zero());
    }

    #[test]
    fn trim_merges_into_zero_atom() {
        let d = FiniteDist::new([(0.0, 0.2), (1.0, 0.3), (4.0, 0.5)]).unwrap();
        assert_eq!(d.trim(2.0).atoms(), &[(0.0, 0.5), (4.0, 0.5)]);
        assert_eq!(d.trim(2.0).mass_strictly_between_zero_and(2.0), 0.0);
    }

    #[test]
    fn bad_distributions_rejected() {
        assert!(FiniteDist::new([(1.0, 0.5)]).is_err());
        assert!(FiniteDist::new([(-1.0, 1.0)]).is_err());
        assert!(ProductDist::new(BTreeMap::new()).is_err());
    }

    #[test]
    fn grid_optimum_on_fixture() {
        let (_, lazy) = best_reserves_on_grid(&fixture(), Mechanism::Lazy).unwrap();
        let (_, eager) = best_reserves_on_grid(&fixture(), Mechanism::Eager).unwrap();
        assert!(eager >= lazy);
        // r = (3, 2): eager sells at 3 or 2 → 2.5
        assert_eq!(eager, 2.5);
    }
}
