mod common;

use common::*;
use csg::model::StateSet;
use csg::reach::{value_iteration_safe_upper, Precision};
use csg::safety::{solve_safety, SafetyOptions, StepKind, StopReason};
use num_traits::{One, Zero};
use proptest::prelude::*;

// Denominators can double with every iteration on concurrent games, so the
// exact runs are kept short.
fn options() -> SafetyOptions {
    SafetyOptions {
        max_iterations: 8,
        ..SafetyOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn terminal_valuations_are_fixpoints(seed in any::<u64>()) {
        let mut g = rng(seed);
        let (game, safe) = random_safety_game(&mut g, 5, 2, 3);
        let n = game.num_states();
        let report = solve_safety(&game, &safe, &options()).unwrap();
        if report.stop_reason != StopReason::ExactTermination {
            return Ok(());
        }
        prop_assert_eq!(report.records.last().unwrap().kind, StepKind::Terminal);
        let v = &report.final_valuation;
        for s in 0..n {
            if !safe.contains(s) {
                prop_assert!(v[s].is_zero());
            } else if report.w1.contains(s) {
                prop_assert!(v[s].is_one());
            } else {
                prop_assert_eq!(&v[s], &oracle_pre1(&game, s, v.values()));
            }
        }
        // A value: no pure strategy beats it, and no upper bound is below it.
        let pure = brute_force_pure_safety(&game, &safe);
        let upper = value_iteration_safe_upper(&game, &safe, 60, Precision::Dyadic(64));
        for s in 0..n {
            prop_assert!(pure[s] <= v[s]);
            prop_assert!(v[s] <= upper.last().unwrap()[s]);
        }
    }

    #[test]
    fn iterates_are_lower_bounds_and_climb(seed in any::<u64>()) {
        let mut g = rng(seed);
        let (game, safe) = random_safety_game(&mut g, 5, 2, 3);
        let n = game.num_states();
        let report = solve_safety(&game, &safe, &options()).unwrap();
        let upper = value_iteration_safe_upper(&game, &safe, 40, Precision::Dyadic(64));
        let mut seq: Vec<_> = report.records.iter().map(|r| &r.valuation).collect();
        seq.push(&report.final_valuation);
        for v in &seq {
            for u in &upper {
                prop_assert!(v.le(u));
            }
        }
        let w1 = &report.w1;
        for (rec, next) in report.records.iter().zip(seq.iter().skip(1)) {
            let v = &rec.valuation;
            prop_assert!(v.le(next));
            match rec.kind {
                StepKind::PreStep => {
                    let improved: StateSet = StateSet::from_indices(n, rec.improved_states.iter().copied());
                    for s in (0..n).filter(|&s| safe.contains(s) && !w1.contains(s)) {
                        let pre = oracle_pre1(&game, s, v.values());
                        prop_assert!(next[s] >= pre);
                        prop_assert_eq!(improved.contains(s), pre > v[s]);
                    }
                }
                StepKind::TbStep => {
                    prop_assert!(rec.improved_states.iter().any(|&s| next[s] > v[s]));
                }
                StepKind::Terminal => {}
            }
        }
    }
}
