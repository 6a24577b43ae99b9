use proptest::prelude::*;
use reserve_core::ab::{empirical_treatment_sweep, rev_e_k_closed_uniform};
use reserve_core::dist::{gen_iid, gen_symmetric_one_high, sample_log, ContinuousDist};
use reserve_core::reserve_opt::{eager_coordinate_ascent, monopoly_reserves, optimal_eager_exact, optimal_lazy};
use reserve_core::{empirical_revenue, total_revenue, BidLog, BidProfile, Mechanism, ReserveVector};

fn log_from(rows: Vec<Vec<(usize, f64)>>) -> BidLog {
    BidLog::from_profiles(
        rows.into_iter()
            .enumerate()
            .map(|(t, bids)| BidProfile::from_pairs(t.to_string(), bids).unwrap())
            .collect::<Vec<_>>(),
    )
    .unwrap()
}

fn arb_small_log() -> impl Strategy<Value = BidLog> {
    let bid = (0u8..8).prop_map(|v| v as f64 * 0.5);
    prop::collection::vec(prop::collection::btree_map(0usize..4, bid, 1..=4), 1..25)
        .prop_map(|rows| log_from(rows.into_iter().map(|m| m.into_iter().collect()).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimal_revenues_within_factor_two(log in arb_small_log()) {
        let l = optimal_lazy(&log).unwrap().expected_revenue;
        let e = optimal_eager_exact(&log, 1 << 20).unwrap().expected_revenue;
        prop_assert!(l <= 2.0 * e + 1e-9);
        prop_assert!(e <= 2.0 * l + 1e-9);
    }

    #[test]
    fn lazy_reserves_never_lose_to_zero_reserves(log in arb_small_log()) {
        let zero = empirical_revenue(&log, &ReserveVector::zero(), Mechanism::Lazy).unwrap();
        prop_assert!(optimal_lazy(&log).unwrap().expected_revenue >= zero);
    }

    #[test]
    fn local_search_never_beats_exact(log in arb_small_log()) {
        let exact = optimal_eager_exact(&log, 1 << 20).unwrap().total_revenue;
        let init = optimal_lazy(&log).unwrap().reserves;
        let local = eager_coordinate_ascent(&log, &init, 50).unwrap();
        prop_assert!(local.total_revenue <= exact);
        prop_assert!(local.total_revenue >= total_revenue(&log, &init, Mechanism::Eager).value());
    }
}

/// Applying the optimal lazy reserves eagerly can lose more than half of
/// the optimal eager revenue: bidder 2's reserve, set for the one auction it
/// wins, knocks it out of the auctions where it sets bidder 1's price.
#[test]
fn eager_at_lazy_optimum_can_fall_below_half() {
    let mut rows = vec![vec![(1, 10.0), (2, 9.0)]; 4];
    rows.push(vec![(2, 10.0)]);
    rows.extend(vec![vec![(1, 2.0)]; 3]);
    let log = log_from(rows);
    let lazy = optimal_lazy(&log).unwrap();
    assert_eq!(
        lazy.reserves,
        ReserveVector::from_pairs([(1usize, 2.0), (2, 10.0)]).unwrap()
    );
    assert_eq!(lazy.total_revenue, 52.0);
    let eager = optimal_eager_exact(&log, 1 << 20).unwrap();
    assert_eq!(eager.total_revenue, 51.0);
    let eager_at_lazy = total_revenue(&log, &lazy.reserves, Mechanism::Eager).value();
    assert_eq!(eager_at_lazy, 24.0);
    assert!(eager_at_lazy < eager.total_revenue / 2.0);
}

#[test]
fn symmetric_support_log_eager_at_least_lazy() {
    let gen = gen_symmetric_one_high(4, 3.0, 2.0).unwrap();
    let log = gen.support_log().unwrap();
    let l = optimal_lazy(&log).unwrap().expected_revenue;
    let e = optimal_eager_exact(&log, 1 << 20).unwrap().expected_revenue;
    assert!(e >= l, "eager {e} < lazy {l}");
}

#[test]
fn monopoly_on_iid_uniform_near_myerson() {
    let gen = gen_iid(ContinuousDist::uniform(0.0, 1.0).unwrap(), 3).unwrap();
    let log = sample_log(&gen, 50_000, 4).unwrap();
    let mono = monopoly_reserves(&log).unwrap();
    for (_, r) in mono.reserves.iter() {
        assert!((r - 0.5).abs() < 0.02, "monopoly reserve {r}");
    }
}

/// Bidder-split sweep on a large iid uniform log with the Myerson reserve:
/// lazy revenue grows with the treated fraction while eager revenue dips
/// before jumping at full treatment.
#[test]
fn empirical_sweep_shapes() {
    let n = 5;
    let gen = gen_iid(ContinuousDist::uniform(0.0, 1.0).unwrap(), n).unwrap();
    let log = sample_log(&gen, 1_000_000, 21).unwrap();
    let reserves = ReserveVector::uniform(log.bidders(), 0.5).unwrap();
    let fractions = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

    let eager = empirical_treatment_sweep(&log, &reserves, &fractions, Mechanism::Eager, 4, 1).unwrap();
    let means: Vec<f64> = eager.rows.iter().map(|r| r.mean).collect();
    assert!(means[4] < means[0], "no dip: {means:?}");
    assert!(means[5] > means[4]);
    for (k, m) in means.iter().enumerate() {
        assert!((m - rev_e_k_closed_uniform(n, k).unwrap()).abs() < 3e-3, "k={k}: {m}");
    }

    let lazy = empirical_treatment_sweep(&log, &reserves, &fractions, Mechanism::Lazy, 4, 1).unwrap();
    let zero = empirical_revenue(&log, &ReserveVector::zero(), Mechanism::Lazy).unwrap();
    assert_eq!(lazy.rows[0].mean, zero);
    for w in lazy.rows.windows(2) {
        assert!(w[1].mean >= w[0].mean - 3.0 * w[0].stderr.hypot(w[1].stderr));
    }
}

#[test]
fn sweep_endpoints() {
    let log = log_from(vec![vec![(1, 5.0), (2, 3.0)], vec![(1, 2.0), (2, 4.0)]]);
    let r = ReserveVector::from_pairs([(1usize, 5.0), (2, 4.0)]).unwrap();
    for m in Mechanism::BOTH {
        let s = empirical_treatment_sweep(&log, &r, &[0.0, 1.0], m, 3, 9).unwrap();
        assert_eq!(
            s.rows[0].mean,
            empirical_revenue(&log, &ReserveVector::zero(), m).unwrap()
        );
        assert_eq!(s.rows[1].mean, empirical_revenue(&log, &r, m).unwrap());
        assert_eq!(s.rows[0].stderr, 0.0);
    }
    assert!(empirical_treatment_sweep(&log, &r, &[], Mechanism::Lazy, 3, 9).is_err());
}
