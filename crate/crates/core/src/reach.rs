//! Reachability side: value iteration in both directions, strategy
//! improvement for turn-based reachability, the anytime sandwich, binary
//! games and termination bounds.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{usage, Result};
use crate::matrix::pre_value;
use crate::mdp::min_reach_value;
use crate::model::{
    fix_selector, ConcurrentGame, Distribution, Owner, PartialSelector, Player, StateSet,
    TurnBasedGame, Valuation,
};
use crate::qualitative::{attractor_selector, zero_reach_states_turn_based};
use crate::rational::{round_down_dyadic, round_up_dyadic, Rational};
use crate::safety::{solve_safety, SafetyOptions, SolveReport, StopReason, UpperBoundSource};

/// Arithmetic used between value-iteration rounds. Dyadic rounding keeps
/// iterates sound: reach iterates round down, safety upper iterates round up.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Exact,
    Dyadic(u32),
}

/// Default for iterations that would otherwise double their bit size each round.
pub const DEFAULT_VI_PRECISION: Precision = Precision::Dyadic(64);

/// One exact reachability round: 1 on the target, the one-shot value for
/// `player` elsewhere.
pub fn reach_vi_step(
    game: &ConcurrentGame,
    target: &StateSet,
    player: Player,
    u: &Valuation,
) -> Vec<Rational> {
    (0..game.num_states())
        .map(|s| {
            if target.contains(s) {
                Rational::one()
            } else {
                pre_value(game, s, u, player)
            }
        })
        .collect()
}

/// One exact safety round from above: 0 off the safe set, `Pre_1` on it.
pub fn safe_upper_step(game: &ConcurrentGame, safe: &StateSet, v: &Valuation) -> Vec<Rational> {
    (0..game.num_states())
        .map(|s| {
            if safe.contains(s) {
                pre_value(game, s, v, Player::One)
            } else {
                Rational::zero()
            }
        })
        .collect()
}

pub(crate) fn round_all(values: Vec<Rational>, precision: Precision, up: bool) -> Valuation {
    match precision {
        Precision::Exact => Valuation::from_raw(values),
        Precision::Dyadic(bits) => Valuation::from_raw(
            values
                .iter()
                .map(|x| {
                    if up {
                        round_up_dyadic(x, bits)
                    } else {
                        round_down_dyadic(x, bits)
                    }
                })
                .collect(),
        ),
    }
}

/// `u_0 = 1_T`, `u_{k+1} = reach_vi_step(u_k)`; returns `rounds + 1` iterates,
/// nondecreasing and below the reach value of `player`.
pub fn value_iteration_reach(
    game: &ConcurrentGame,
    target: &StateSet,
    player: Player,
    rounds: usize,
    precision: Precision,
) -> Vec<Valuation> {
    let mut out = vec![Valuation::indicator(target)];
    for _ in 0..rounds {
        let next = reach_vi_step(game, target, player, out.last().expect("iterate"));
        out.push(round_all(next, precision, false));
    }
    out
}

/// `v_0 = 1_F`, `v_{k+1} = safe_upper_step(v_k)`; returns `rounds + 1` iterates,
/// nonincreasing and above the safety value.
pub fn value_iteration_safe_upper(
    game: &ConcurrentGame,
    safe: &StateSet,
    rounds: usize,
    precision: Precision,
) -> Vec<Valuation> {
    let mut out = vec![Valuation::indicator(safe)];
    for _ in 0..rounds {
        let next = safe_upper_step(game, safe, out.last().expect("iterate"));
        out.push(round_all(next, precision, true));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachReport {
    pub values: Valuation,
    /// Chosen edge at every player-1 state.
    pub strategy: PartialSelector,
    /// Number of strategy evaluations.
    pub iterations: usize,
    /// Values after each evaluation.
    pub history: Vec<Valuation>,
    pub strategies: Vec<PartialSelector>,
}

/// Strategy improvement for player 1 reaching `T` in a turn-based game,
/// started from the attractor selector to `W2 u T`.
pub fn tb_reach_strategy_improvement(game: &TurnBasedGame, target: &StateSet) -> Result<ReachReport> {
    let n = game.num_states();
    if target.universe() != n {
        return usage("target set does not match the game");
    }
    let w2 = zero_reach_states_turn_based(game, target, Player::One);
    let mut strategy = attractor_selector(game, &w2.union(target))?.selector;
    let cg = game.to_concurrent();
    let mut history = Vec::new();
    let mut strategies = Vec::new();
    loop {
        let sel = game.selector_from(Player::One, &strategy);
        let u = min_reach_value(&fix_selector(&cg, &sel)?, target)?;
        history.push(u.clone());
        strategies.push(strategy.clone());
        let mut switched = false;
        for s in game.states_owned_by(Owner::Player1) {
            if target.contains(s) {
                continue;
            }
            let current = strategy.get(s).unwrap_or(0);
            let here = &u[game.edges(s)[current]];
            if let Some(e) = game.edges(s).iter().position(|&t| &u[t] > here) {
                strategy.set(s, e);
                switched = true;
            }
        }
        if !switched {
            return Ok(ReachReport {
                values: u,
                strategy,
                iterations: history.len(),
                history,
                strategies,
            });
        }
    }
}

/// Lower and upper bound sequences of an anytime solve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SandwichReport {
    /// Strategy-improvement valuations `v_i`, ending with the final one.
    pub lower: Vec<Valuation>,
    /// Upper bounds `1 - u_j`.
    pub upper: Vec<Valuation>,
    /// `max_s (upper - lower)` at the stop.
    pub gap: Rational,
    pub stop_reason: StopReason,
    pub report: SolveReport,
}

impl SandwichReport {
    pub fn final_lower(&self) -> &Valuation {
        self.lower.last().expect("at least one lower iterate")
    }

    pub fn final_upper(&self) -> &Valuation {
        self.upper.last().expect("at least one upper iterate")
    }
}

/// Interleaves strategy-improvement iterations with player-2 reach value iteration on
/// `S \ F` until the bounds meet within `epsilon`, either side is exact, or
/// the iteration cap is hit.
pub fn anytime_solve(
    game: &ConcurrentGame,
    safe: &StateSet,
    epsilon: &Rational,
    options: &SafetyOptions,
) -> Result<SandwichReport> {
    if epsilon <= &Rational::zero() {
        return usage("epsilon must be positive");
    }
    let mut opts = options.clone();
    opts.epsilon_gap = Some(epsilon.clone());
    opts.upper_bound_source = UpperBoundSource::ValueIteration;
    let report = solve_safety(game, safe, &opts)?;
    let mut lower: Vec<Valuation> = report.records.iter().map(|r| r.valuation.clone()).collect();
    if lower.last() != Some(&report.final_valuation) {
        lower.push(report.final_valuation.clone());
    }
    let upper = report.upper.clone();
    let gap = report
        .gap
        .clone()
        .unwrap_or_else(|| report.final_valuation.max_gap_to(upper.last().expect("upper")));
    Ok(SandwichReport {
        lower,
        upper,
        gap,
        stop_reason: report.stop_reason,
        report,
    })
}

/// A binary turn-based game and the original state behind every state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryGame {
    pub game: TurnBasedGame,
    /// `root[s]` is the original state whose lottery `s` belongs to.
    pub root: Vec<usize>,
}

impl BinaryGame {
    /// Extends a set of original states to the auxiliary states.
    pub fn lift_set(&self, set: &StateSet) -> StateSet {
        StateSet::from_mask(self.root.iter().map(|&r| set.contains(r)).collect())
    }

    pub fn auxiliary_count(&self) -> usize {
        self.root.len() - self.root.iter().enumerate().filter(|(i, r)| i == *r).count()
    }
}

/// Rewrites every random state into a tree of fair coin flips. Outcome `i`
/// owns a contiguous block of `n_i` codewords out of `2^m >= q`; leftover
/// codewords jump back to the root state. Subtrees whose codewords agree
/// collapse to a single edge, and original states keep their indices.
pub fn binary_transform(game: &TurnBasedGame) -> BinaryGame {
    let n = game.num_states();
    let half = Rational::new(1.into(), 2.into());
    let mut ids: Vec<String> = game.states().to_vec();
    let mut owner: Vec<Owner> = (0..n).map(|s| game.owner(s)).collect();
    let mut edges: Vec<Vec<usize>> = (0..n).map(|s| game.edges(s).to_vec()).collect();
    let mut dist: Vec<Option<Distribution>> = (0..n).map(|s| game.distribution(s).cloned()).collect();
    let mut root: Vec<usize> = (0..n).collect();
    let mut used: std::collections::HashSet<String> = ids.iter().cloned().collect();

    for s in 0..n {
        let Some(d) = game.distribution(s) else { continue };
        let entries = d.entries();
        let already = entries.len() == 1 || (entries.len() == 2 && entries.iter().all(|(_, p)| *p == half));
        if already {
            continue;
        }
        let q = entries
            .iter()
            .fold(num_bigint::BigInt::one(), |acc, (_, p)| acc.lcm(p.denom()));
        let counts: Vec<num_bigint::BigInt> = entries
            .iter()
            .map(|(_, p)| (p * Rational::from_integer(q.clone())).to_integer())
            .collect();
        let mut m = 0u64;
        while (num_bigint::BigInt::one() << m) < q {
            m += 1;
        }
        // Codeword c belongs to the first outcome whose cumulative count exceeds c.
        let mut bounds = Vec::new();
        let mut acc = num_bigint::BigInt::zero();
        for c in &counts {
            acc += c;
            bounds.push(acc.clone());
        }
        // Single target of every codeword in [lo, hi), if there is one.
        let leaf_of = |lo: &num_bigint::BigInt, hi: &num_bigint::BigInt| -> Option<usize> {
            let mut target: Option<usize> = None;
            let mut start = num_bigint::BigInt::zero();
            let ranges = entries
                .iter()
                .zip(&bounds)
                .map(|((t, _), b)| (*t, b.clone()))
                .chain(std::iter::once((s, num_bigint::BigInt::one() << m)));
            for (t, end) in ranges {
                if &start < hi && lo < &end {
                    match target {
                        None => target = Some(t),
                        Some(prev) if prev != t => return None,
                        Some(_) => {}
                    }
                }
                start = end;
            }
            target
        };
        let mut counter = 0usize;
        // Build top-down; `node` is the state id whose two edges we fill.
        let mut stack: Vec<(usize, num_bigint::BigInt, u64)> = vec![(s, num_bigint::BigInt::zero(), m)];
        edges[s].clear();
        while let Some((node, lo, depth)) = stack.pop() {
            let size = num_bigint::BigInt::one() << (depth - 1);
            let halves = [(lo.clone(), &lo + &size), (&lo + &size, &lo + &size + &size)];
            let mut succ = Vec::with_capacity(2);
            for (hlo, hhi) in halves {
                let target = match leaf_of(&hlo, &hhi) {
                    Some(t) => t,
                    None => {
                        counter += 1;
                        let mut id = format!("{}~bin{}", game.state_id(s), counter);
                        while used.contains(&id) {
                            id.push('\'');
                        }
                        used.insert(id.clone());
                        let aux = ids.len();
                        ids.push(id);
                        owner.push(Owner::Random);
                        edges.push(Vec::new());
                        dist.push(None);
                        root.push(s);
                        stack.push((aux, hlo, depth - 1));
                        aux
                    }
                };
                succ.push(target);
            }
            if succ[0] == succ[1] {
                succ.pop();
            }
            dist[node] = Some(Distribution::uniform(&succ));
            edges[node] = succ;
        }
    }
    let game = TurnBasedGame::new(ids, owner, edges, dist).expect("binary transform keeps the game valid");
    BinaryGame { game, root }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminationBound {
    /// `|S| * 4^(max(|S_R| - 1, 0))`.
    pub step_bound: BigUint,
    /// Product of `|E(s)|` over player-1 states.
    pub strategy_bound: BigUint,
    /// True when the sizes come from the binary transform of the input.
    pub transformed: bool,
    pub states: usize,
    pub random_states: usize,
}

impl TerminationBound {
    pub fn min(&self) -> BigUint {
        self.step_bound.clone().min(self.strategy_bound.clone())
    }
}

pub fn termination_bound(game: &TurnBasedGame) -> TerminationBound {
    let (g, transformed) = if game.is_binary() {
        (game.clone(), false)
    } else {
        (binary_transform(game).game, true)
    };
    let states = g.num_states();
    let random_states = g.states_owned_by(Owner::Random).count();
    let exp = random_states.saturating_sub(1);
    let step_bound = BigUint::from(states) * (BigUint::from(4u32).pow(exp.to_u32().unwrap_or(u32::MAX)));
    let strategy_bound = g
        .states_owned_by(Owner::Player1)
        .map(|s| BigUint::from(g.edges(s).len()))
        .product();
    TerminationBound {
        step_bound,
        strategy_bound,
        transformed,
        states,
        random_states,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::max_reach_value;
    use crate::rational::{one, ratio, zero};

    fn chain() -> ConcurrentGame {
        let mut b = ConcurrentGame::builder();
        b.state("s", &["_"], &["_"])
            .transition("s", "_", "_", &[("t", ratio(1, 2)), ("sink", ratio(1, 2))])
            .absorbing("t")
            .absorbing("sink");
        b.build().unwrap()
    }

    fn safety_pennies() -> ConcurrentGame {
        let mut b = ConcurrentGame::builder();
        b.state("s", &["a", "b"], &["c", "d"])
            .transition("s", "a", "c", &[("s", one())])
            .transition("s", "a", "d", &[("bad", one())])
            .transition("s", "b", "c", &[("bad", one())])
            .transition("s", "b", "d", &[("s", one())])
            .absorbing("bad");
        b.build().unwrap()
    }

    #[test]
    fn reach_iteration() {
        let g = chain();
        let t = StateSet::from_indices(3, [1]);
        let it = value_iteration_reach(&g, &t, Player::One, 3, Precision::Exact);
        assert_eq!(it[1][0], ratio(1, 2));
        assert_eq!(it[3][0], ratio(1, 2));
        let all = value_iteration_reach(&g, &StateSet::full(3), Player::One, 2, Precision::Exact);
        assert!(all.iter().all(|v| v.values().iter().all(|x| x.is_one())));
    }

    #[test]
    fn safety_upper_iteration() {
        let g = safety_pennies();
        let f = StateSet::from_indices(2, [0]);
        let it = value_iteration_safe_upper(&g, &f, 5, Precision::Exact);
        for (k, v) in it.iter().enumerate() {
            assert_eq!(v[0], Rational::new(1.into(), (1i64 << k).into()));
        }
        let it = value_iteration_safe_upper(&g, &StateSet::full(2), 3, Precision::Dyadic(8));
        assert!(it.iter().all(|v| v.values().iter().all(|x| x.is_one())));
    }

    #[test]
    fn reach_improvement_direct_edge() {
        let mut b = TurnBasedGame::builder();
        b.p1("s", &["t"]).p1("t", &["t"]);
        let g = b.build().unwrap();
        let r = tb_reach_strategy_improvement(&g, &StateSet::from_indices(2, [1])).unwrap();
        assert_eq!(r.values.values(), &[one(), one()]);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn reach_improvement_switches() {
        // p: edges to a lottery r (1/2 t) or straight to q; q can go to t.
        let mut b = TurnBasedGame::builder();
        b.p1("p", &["r", "q"])
            .random("r", &[("t", ratio(1, 2)), ("z", ratio(1, 2))])
            .p1("q", &["z", "t"])
            .p1("t", &["t"])
            .p1("z", &["z"]);
        let g = b.build().unwrap();
        let r = tb_reach_strategy_improvement(&g, &StateSet::from_indices(5, [3])).unwrap();
        assert_eq!(r.values[0], one());
        assert_eq!(r.strategy.get(0), Some(1));
        assert_eq!(r.values[4], zero());
    }

    #[test]
    fn binary_shapes() {
        let mut b = TurnBasedGame::builder();
        b.random("s", &[("t", ratio(1, 2)), ("u", ratio(1, 2))])
            .p1("t", &["t"])
            .p1("u", &["u"]);
        let g = b.build().unwrap();
        assert_eq!(binary_transform(&g).game, g);

        let mut b = TurnBasedGame::builder();
        b.random("s", &[("t", ratio(1, 3)), ("u", ratio(2, 3))])
            .p1("t", &["t"])
            .p1("u", &["u"]);
        let g = b.build().unwrap();
        let bg = binary_transform(&g);
        assert!(bg.game.is_binary());
        assert_eq!(bg.auxiliary_count(), 2);
        let v = max_reach_value(&bg.game.to_concurrent(), &StateSet::from_indices(bg.game.num_states(), [1])).unwrap();
        assert_eq!(v[0], ratio(1, 3));

        let mut b = TurnBasedGame::builder();
        b.random("s", &[("t", ratio(1, 4)), ("u", ratio(3, 4))])
            .p1("t", &["t"])
            .p1("u", &["u"]);
        let bg = binary_transform(&b.build().unwrap());
        assert_eq!(bg.auxiliary_count(), 1);
        let v = max_reach_value(&bg.game.to_concurrent(), &StateSet::from_indices(bg.game.num_states(), [1])).unwrap();
        assert_eq!(v[0], ratio(1, 4));
    }

    #[test]
    fn bounds_plug_in() {
        let mut b = TurnBasedGame::builder();
        b.p1("a", &["b", "r"])
            .p2("b", &["a"])
            .random("r", &[("a", ratio(1, 2)), ("c", ratio(1, 2))])
            .p1("c", &["c"]);
        let tb = termination_bound(&b.build().unwrap());
        assert_eq!(tb.step_bound, BigUint::from(4u32));
        assert_eq!(tb.strategy_bound, BigUint::from(2u32));
        assert!(!tb.transformed);

        let mut b = TurnBasedGame::builder();
        b.p2("a", &["a"]);
        assert_eq!(termination_bound(&b.build().unwrap()).strategy_bound, BigUint::from(1u32));

        let mut b = TurnBasedGame::builder();
        b.p1("p", &["r1", "r2"])
            .p1("q", &["r2", "r3"])
            .random("r1", &[("p", ratio(1, 2)), ("q", ratio(1, 2))])
            .random("r2", &[("p", ratio(1, 2)), ("x", ratio(1, 2))])
            .random("r3", &[("q", ratio(1, 2)), ("x", ratio(1, 2))])
            .p2("x", &["x"]);
        let tb = termination_bound(&b.build().unwrap());
        assert_eq!(tb.step_bound, BigUint::from(96u32));
        assert_eq!(tb.strategy_bound, BigUint::from(4u32));
    }
}
