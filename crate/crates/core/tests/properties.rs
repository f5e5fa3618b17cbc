use proptest::prelude::*;

use edgesched::dqs::{dqs_step, DqsParams, DqsState, PlaybackEvent, QOE_MAX, QOE_MIN};
use edgesched::kernel::{fit_kernel, TransitionRecord};
use edgesched::market::{
    clearing_price, expected_payment, run_auction, update_belief, win_probability, BidDistribution, BidSet,
};
use edgesched::model::{ClientAction, ClientState, DiscretizationConfig};
use edgesched::planner::{canonical, feasible_actions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pmf(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("all-zero pmf", |w| {
        let t: f64 = w.iter().sum();
        (t > 1e-6).then(|| w.into_iter().map(|x| x / t).collect())
    })
}

proptest! {
    #[test]
    fn win_probability_monotone(p in pmf(21), m in 2usize..7, n in 1usize..3, i in 0usize..20) {
        let rho = BidDistribution::new(BidSet::default(), p).unwrap();
        let vals = BidSet::default().values().to_vec();
        let (lo, hi) = (vals[i], vals[i + 1]);
        prop_assert!(win_probability(lo, &rho, m, n) <= win_probability(hi, &rho, m, n) + 1e-12);
        prop_assert!(win_probability(lo, &rho, m + 1, n) <= win_probability(lo, &rho, m, n) + 1e-12);
        let pay = expected_payment(hi, &rho, m, n);
        prop_assert!((0.0..=hi + 1e-12).contains(&pay));
    }

    #[test]
    fn auction_price_bounded_by_winners(bids in prop::collection::vec(0usize..21, 1..8), n in 1usize..4, seed: u64) {
        let vals: Vec<f64> = bids.iter().map(|&i| BidSet::default().values()[i]).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tagged: Vec<(usize, f64)> = vals.iter().copied().enumerate().collect();
        let out = run_auction(&tagged, n, &mut rng);
        prop_assert_eq!(out.winners.len(), n.min(vals.len()));
        prop_assert_eq!(out.price, clearing_price(&vals, n));
        for &w in &out.winners {
            prop_assert!(out.price <= vals[w]);
            // nobody outside the winners bid strictly more than a winner
            prop_assert!(vals.iter().enumerate().all(|(c, &v)| out.winners.contains(&c) || v <= vals[w]));
        }
    }

    #[test]
    fn belief_update_stays_a_distribution(p in pmf(21), draws in prop::collection::vec(0usize..21, 1..10), lambda in 0.0f64..=1.0) {
        let set = BidSet::default();
        let rho = BidDistribution::new(set.clone(), p).unwrap();
        let observed: Vec<f64> = draws.iter().map(|&i| set.values()[i]).collect();
        let next = update_belief(&rho, &observed, lambda);
        prop_assert!((next.pmf().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(next.pmf().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn discretize_is_consistent(buffer in 0.0f64..200.0, qoe in QOE_MIN..=QOE_MAX, stalls in 0u32..20) {
        let cfg = DiscretizationConfig::default();
        let d = cfg.discretize(&ClientState { buffer, stalls, qoe });
        prop_assert!(d.label < cfg.num_labels());
        prop_assert_eq!(cfg.decode(d.label).unwrap(), d);
    }

    #[test]
    fn dqs_stays_in_range(events in prop::collection::vec(0u8..3, 1..300)) {
        let p = DqsParams::default();
        let mut s = DqsState::new();
        let mut stalled = false;
        for e in events {
            let event = match (stalled, e) {
                (false, 0) => PlaybackEvent::StallBegin,
                (false, _) => PlaybackEvent::Playing,
                (true, 0) => PlaybackEvent::Playing,
                (true, _) => PlaybackEvent::Stalling,
            };
            stalled = event != PlaybackEvent::Playing;
            s = dqs_step(&s, event, 1.0, &p);
            prop_assert!((QOE_MIN..=QOE_MAX).contains(&s.qoe));
        }
    }

    #[test]
    fn fitted_rows_are_distributions(steps in prop::collection::vec((0usize..5, any::<bool>(), 0usize..5), 1..200)) {
        let records: Vec<TransitionRecord> = steps
            .iter()
            .enumerate()
            .map(|(t, &(s, win, s_next))| TransitionRecord {
                t: t as u64,
                client_id: 0,
                s,
                a: if win { ClientAction::Win } else { ClientAction::Lose },
                s_next,
            })
            .collect();
        let k = fit_kernel(&records, 5).unwrap();
        for s in 0..5 {
            for a in ClientAction::ALL {
                let total: f64 = k.lookup(s, a).unwrap().iter().map(|r| r.1).sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn canonical_is_a_sorting_permutation(labels in prop::collection::vec(0usize..352, 1..8)) {
        let (sorted, perm) = canonical(&labels);
        prop_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
        let back: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
        prop_assert_eq!(back, sorted);
    }

    #[test]
    fn feasible_actions_respect_limit(n in 1usize..7, limit in 0usize..4) {
        let acts = feasible_actions(n, limit);
        prop_assert!(acts.iter().all(|a| a.len() <= limit && a.iter().all(|&c| c < n)));
        prop_assert!(acts.iter().all(|a| a.windows(2).all(|w| w[0] < w[1])));
        prop_assert!(acts.contains(&Vec::new()));
    }
}
