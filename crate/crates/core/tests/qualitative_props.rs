mod common;

use common::*;
use csg::mdp::is_proper;
use csg::model::{Player, StateSet, Valuation};
use csg::qualitative::{
    almost_sure_safe_concurrent, almost_sure_safe_turn_based, attractor_selector, zero_reach_states_concurrent,
    zero_reach_states_turn_based,
};
use csg::reach::{reach_vi_step, safe_upper_step};
use csg::Rational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn mask(set: &StateSet) -> Vec<bool> {
    (0..set.universe()).map(|s| set.contains(s)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn almost_sure_witness_stays_inside(seed in any::<u64>()) {
        let mut g = rng(seed);
        let game = random_concurrent(&mut g, 6, 3, 2);
        let safe = random_subset(&mut g, game.num_states());
        let (w1, witness) = almost_sure_safe_concurrent(&game, &safe);
        prop_assert!(w1.is_subset(&safe));
        for s in w1.iter() {
            let a = witness.get(s).expect("witness defined on W1");
            for b in 0..game.moves2(s).len() {
                prop_assert!(game.transition(s, a, b).support().all(|t| w1.contains(t)));
            }
        }
    }

    #[test]
    fn almost_sure_set_matches_value_iteration(seed in any::<u64>()) {
        let mut g = rng(seed);
        let game = random_concurrent(&mut g, 5, 2, 2);
        let n = game.num_states();
        let safe = random_subset(&mut g, n);
        let (w1, _) = almost_sure_safe_concurrent(&game, &safe);
        let mut v = Valuation::indicator(&safe);
        let mut below = safe.complement();
        // Dyadic probabilities of at most 2 bits: a drop shows within n * 3 rounds.
        for _ in 0..n * 3 {
            v = Valuation::new(safe_upper_step(&game, &safe, &v)).unwrap();
            for s in 0..n {
                if v[s] < Rational::one() {
                    below.insert(s);
                }
            }
        }
        prop_assert!(w1.iter().all(|s| v[s] == Rational::one()));
        prop_assert_eq!(below, w1.complement());
    }

    #[test]
    fn turn_based_qualitative_sets_match_brute_force(seed in any::<u64>()) {
        let mut g = rng(seed);
        let tb = random_turn_based(&mut g, 6, 3, 2);
        let n = tb.num_states();
        let set = random_subset(&mut g, n);
        let (w1, _) = almost_sure_safe_turn_based(&tb, &set);
        let safety = brute_force_tb_safety(&tb, &mask(&set));
        let reach = brute_force_tb_reach(&tb, &mask(&set));
        let zero = zero_reach_states_turn_based(&tb, &set, Player::One);
        for s in 0..n {
            prop_assert_eq!(w1.contains(s), safety[s].is_one());
            prop_assert_eq!(zero.contains(s), reach[s].is_zero());
        }
    }

    #[test]
    fn concurrent_zero_reach_matches_value_iteration(seed in any::<u64>()) {
        let mut g = rng(seed);
        let game = random_concurrent(&mut g, 5, 3, 2);
        let n = game.num_states();
        let target = random_subset(&mut g, n);
        for player in [Player::One, Player::Two] {
            let zero = zero_reach_states_concurrent(&game, &target, player);
            let mut u = Valuation::indicator(&target);
            for _ in 0..n {
                u = Valuation::new(reach_vi_step(&game, &target, player, &u)).unwrap();
            }
            for s in 0..n {
                prop_assert_eq!(zero.contains(s), u[s].is_zero(), "player {:?} state {}", player, s);
            }
        }
    }

    #[test]
    fn attractor_stages_grow_and_selector_is_proper(seed in any::<u64>()) {
        let mut g = rng(seed);
        let tb = random_turn_based(&mut g, 8, 3, 2);
        let n = tb.num_states();
        let target = random_subset(&mut g, n);
        let w2 = zero_reach_states_turn_based(&tb, &target, Player::One);
        let goal = w2.union(&target);
        let attr = attractor_selector(&tb, &goal).unwrap();
        prop_assert_eq!(&attr.stages[0], &goal);
        prop_assert_eq!(attr.stages.last().unwrap(), &StateSet::full(n));
        prop_assert!(attr.stages.len() <= n + 1);
        for w in attr.stages.windows(2) {
            prop_assert!(w[0].is_subset(&w[1]) && w[0] != w[1]);
        }
        let sel = tb.selector_from(Player::One, &attr.selector);
        prop_assert!(is_proper(&tb.to_concurrent(), &sel, &target, &w2).unwrap());
    }
}
