//! Analysis of games where one player has no choice: end components,
//! optimal reachability values and strategy evaluation.

use num_traits::{One, Zero};

use crate::error::{usage, Result};
use crate::graph;
use crate::lp::{solve_lp, Direction, LinearProgram, Relation};
use crate::model::{fix_selector, ConcurrentGame, Distribution, Player, Selector, StateSet, Valuation};
use crate::rational::Rational;

/// A concurrent game seen as an MDP for the player that still has choices.
struct Mdp<'a> {
    game: &'a ConcurrentGame,
    acting: Player,
}

impl<'a> Mdp<'a> {
    fn new(game: &'a ConcurrentGame) -> Result<Self> {
        let acting = if game.is_singleton_for(Player::One) {
            Player::Two
        } else if game.is_singleton_for(Player::Two) {
            Player::One
        } else {
            return usage("not an MDP: both players have a choice at some state");
        };
        Ok(Mdp { game, acting })
    }

    fn n(&self) -> usize {
        self.game.num_states()
    }

    fn actions(&self, s: usize) -> usize {
        self.game.moves(self.acting, s).len()
    }

    fn dist(&self, s: usize, a: usize) -> &Distribution {
        match self.acting {
            Player::One => self.game.transition(s, a, 0),
            Player::Two => self.game.transition(s, 0, a),
        }
    }

    fn successor_graph(&self) -> Vec<Vec<usize>> {
        (0..self.n())
            .map(|s| {
                let mut succ: Vec<usize> = (0..self.actions(s))
                    .flat_map(|a| self.dist(s, a).support().collect::<Vec<_>>())
                    .collect();
                succ.sort_unstable();
                succ.dedup();
                succ
            })
            .collect()
    }
}

/// Maximal end component: states plus the retained actions of each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndComponent {
    pub states: Vec<usize>,
    /// `moves[i]` belongs to `states[i]`.
    pub moves: Vec<Vec<usize>>,
}

impl EndComponent {
    pub fn state_set(&self, n: usize) -> StateSet {
        StateSet::from_indices(n, self.states.iter().copied())
    }
}

/// Maximal end components, sorted by smallest member.
pub fn mec_decomposition(mdp: &ConcurrentGame) -> Result<Vec<EndComponent>> {
    mecs_within(mdp, &StateSet::full(mdp.num_states()))
}

/// Maximal end components of the sub-MDP restricted to `region`.
pub fn mecs_within(mdp: &ConcurrentGame, region: &StateSet) -> Result<Vec<EndComponent>> {
    let m = Mdp::new(mdp)?;
    let n = m.n();
    let mut alive: Vec<bool> = (0..n).map(|s| region.contains(s)).collect();
    let mut allowed: Vec<Vec<bool>> = (0..n).map(|s| vec![true; m.actions(s)]).collect();

    loop {
        // Drop actions that may leave the live region, then dead states.
        let mut changed = true;
        while changed {
            changed = false;
            for s in 0..n {
                if !alive[s] {
                    continue;
                }
                for a in 0..m.actions(s) {
                    if allowed[s][a] && m.dist(s, a).support().any(|t| !alive[t]) {
                        allowed[s][a] = false;
                    }
                }
                if !allowed[s].iter().any(|&b| b) {
                    alive[s] = false;
                    changed = true;
                }
            }
        }

        let adj: Vec<Vec<usize>> = (0..n)
            .map(|s| {
                if !alive[s] {
                    return Vec::new();
                }
                (0..m.actions(s))
                    .filter(|&a| allowed[s][a])
                    .flat_map(|a| m.dist(s, a).support().collect::<Vec<_>>())
                    .collect()
            })
            .collect();
        let comp = graph::scc(&adj, &alive);

        let mut removed = false;
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            for a in 0..m.actions(s) {
                if allowed[s][a] && m.dist(s, a).support().any(|t| comp[t] != comp[s]) {
                    allowed[s][a] = false;
                    removed = true;
                }
            }
            if !allowed[s].iter().any(|&b| b) {
                alive[s] = false;
                removed = true;
            }
        }
        if removed {
            continue;
        }

        let mut by_comp: std::collections::BTreeMap<usize, EndComponent> = Default::default();
        for s in 0..n {
            if let (true, Some(c)) = (alive[s], comp[s]) {
                let ec = by_comp.entry(c).or_insert_with(|| EndComponent {
                    states: Vec::new(),
                    moves: Vec::new(),
                });
                ec.states.push(s);
                ec.moves
                    .push((0..m.actions(s)).filter(|&a| allowed[s][a]).collect());
            }
        }
        let mut out: Vec<EndComponent> = by_comp.into_values().collect();
        out.sort_by_key(|ec| ec.states[0]);
        return Ok(out);
    }
}

/// Maximal probability of reaching `target`, solved exactly as the least
/// feasible point of `x(s) >= sum_t x(t) delta(s,a)(t)`, `x = 1` on the target.
/// States that cannot reach the target in the graph are fixed at 0 up front.
pub fn max_reach_value(mdp: &ConcurrentGame, target: &StateSet) -> Result<Valuation> {
    let m = Mdp::new(mdp)?;
    let n = m.n();
    let tmask: Vec<bool> = (0..n).map(|s| target.contains(s)).collect();
    let reach = graph::can_reach(&m.successor_graph(), &tmask);
    let maybe: Vec<usize> = (0..n).filter(|&s| reach[s] && !tmask[s]).collect();
    solve_reach_lp(&m, &tmask, &maybe, Direction::Minimize)
}

/// Minimal probability of reaching `target` over the acting player's strategies.
pub fn min_reach_value(mdp: &ConcurrentGame, target: &StateSet) -> Result<Valuation> {
    let m = Mdp::new(mdp)?;
    let n = m.n();
    // States where some strategy avoids the target surely (greatest fixpoint).
    let mut avoid: Vec<bool> = (0..n).map(|s| !target.contains(s)).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for s in 0..n {
            if avoid[s] && !(0..m.actions(s)).any(|a| m.dist(s, a).support().all(|t| avoid[t])) {
                avoid[s] = false;
                changed = true;
            }
        }
    }
    let tmask: Vec<bool> = (0..n).map(|s| target.contains(s)).collect();
    let maybe: Vec<usize> = (0..n).filter(|&s| !avoid[s] && !tmask[s]).collect();
    // Without sure-avoiding states every strategy reaches target or `avoid`
    // almost surely, so the fixpoint is unique and the greatest solution of
    // `x(s) <= sum_t x(t) delta` is the value.
    solve_reach_lp(&m, &tmask, &maybe, Direction::Maximize)
}

fn solve_reach_lp(
    m: &Mdp<'_>,
    target: &[bool],
    maybe: &[usize],
    direction: Direction,
) -> Result<Valuation> {
    let n = m.n();
    let mut values: Vec<Rational> = (0..n)
        .map(|s| if target[s] { Rational::one() } else { Rational::zero() })
        .collect();
    if maybe.is_empty() {
        return Ok(Valuation::from_raw(values));
    }
    let mut var = vec![usize::MAX; n];
    let mut lp = LinearProgram::new(direction);
    for &s in maybe {
        var[s] = lp.add_variable(
            format!("x{s}"),
            Some(Rational::zero()),
            Some(Rational::one()),
        );
        lp.set_objective(var[s], Rational::one());
    }
    let relation = match direction {
        Direction::Minimize => Relation::Ge,
        Direction::Maximize => Relation::Le,
    };
    for &s in maybe {
        for a in 0..m.actions(s) {
            // x(s) - sum_{t maybe} p x(t)  (rel)  sum_{t in target} p
            let mut coeffs = vec![(var[s], Rational::one())];
            let mut rhs = Rational::zero();
            for (t, p) in m.dist(s, a).entries() {
                if target[*t] {
                    rhs += p;
                } else if var[*t] != usize::MAX {
                    if *t == s {
                        coeffs[0].1 -= p;
                    } else {
                        coeffs.push((var[*t], -p.clone()));
                    }
                }
            }
            lp.add_constraint(coeffs, relation, rhs);
        }
    }
    let sol = solve_lp(&lp).expect("reachability LP is well formed");
    assert!(sol.is_optimal(), "reachability LP must be feasible and bounded");
    for &s in maybe {
        values[s] = sol.assignment[var[s]].clone();
    }
    Ok(Valuation::from_raw(values))
}

/// Value of `Safe(F)` when player 1 is fixed to `gamma1` and player 2
/// responds optimally: `1 - max_reach(fix(gamma1), S \ F)`.
pub fn safety_value_under(
    game: &ConcurrentGame,
    gamma1: &Selector,
    safe: &StateSet,
) -> Result<Valuation> {
    if gamma1.player() != Player::One {
        return usage("safety_value_under needs a player-1 selector");
    }
    let mdp = fix_selector(game, gamma1)?;
    Ok(max_reach_value(&mdp, &safe.complement())?.complement())
}

/// Value of `Reach(T)` when player 1 is fixed to `xi1` and player 2 minimizes.
pub fn reach_value_under(
    game: &ConcurrentGame,
    xi1: &Selector,
    target: &StateSet,
) -> Result<Valuation> {
    if xi1.player() != Player::One {
        return usage("reach_value_under needs a player-1 selector");
    }
    let mdp = fix_selector(game, xi1)?;
    min_reach_value(&mdp, target)
}

/// Whether fixing `xi1` leaves no end component inside `S \ (T u W2)`.
pub fn is_proper(
    game: &ConcurrentGame,
    xi1: &Selector,
    target: &StateSet,
    w2: &StateSet,
) -> Result<bool> {
    let mdp = fix_selector(game, xi1)?;
    let region = target.union(w2).complement();
    Ok(mecs_within(&mdp, &region)?.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{one, ratio, zero};

    fn split() -> ConcurrentGame {
        let mut b = ConcurrentGame::builder();
        b.state("s", &["_"], &["_"])
            .transition("s", "_", "_", &[("t", ratio(1, 2)), ("u", ratio(1, 2))])
            .absorbing("t")
            .absorbing("u");
        b.build().unwrap()
    }

    #[test]
    fn end_components() {
        let mut b = ConcurrentGame::builder();
        b.absorbing("s");
        let g = b.build().unwrap();
        let mecs = mec_decomposition(&g).unwrap();
        assert_eq!(mecs.len(), 1);
        assert_eq!(mecs[0].states, vec![0]);

        let mut b = ConcurrentGame::builder();
        b.state("s", &["_"], &["_"])
            .transition("s", "_", "_", &[("t", one())])
            .state("t", &["_"], &["_"])
            .transition("t", "_", "_", &[("s", one())]);
        let mecs = mec_decomposition(&b.build().unwrap()).unwrap();
        assert_eq!(mecs.len(), 1);
        assert_eq!(mecs[0].states, vec![0, 1]);

        let mecs = mec_decomposition(&split()).unwrap();
        let sets: Vec<Vec<usize>> = mecs.into_iter().map(|e| e.states).collect();
        assert_eq!(sets, vec![vec![1], vec![2]]);
    }

    #[test]
    fn non_mdp_is_rejected() {
        let mut b = ConcurrentGame::builder();
        b.state("s", &["a", "b"], &["c", "d"]);
        for m1 in ["a", "b"] {
            for m2 in ["c", "d"] {
                b.transition("s", m1, m2, &[("s", one())]);
            }
        }
        assert!(mec_decomposition(&b.build().unwrap()).is_err());
    }

    #[test]
    fn reach_values() {
        let g = split();
        let v = max_reach_value(&g, &StateSet::from_indices(3, [1])).unwrap();
        assert_eq!(v.values(), &[ratio(1, 2), one(), zero()]);
        let all = max_reach_value(&g, &StateSet::full(3)).unwrap();
        assert!(all.values().iter().all(|x| x.is_one()));

        // player-2 MDP: one action to the target, one to a sink
        let mut b = ConcurrentGame::builder();
        b.state("s", &["_"], &["good", "bad"])
            .transition("s", "_", "good", &[("t", one())])
            .transition("s", "_", "bad", &[("z", one())])
            .absorbing("t")
            .absorbing("z");
        let g = b.build().unwrap();
        let t = StateSet::from_indices(3, [1]);
        assert_eq!(max_reach_value(&g, &t).unwrap()[0], one());
        assert_eq!(min_reach_value(&g, &t).unwrap()[0], zero());
    }

    #[test]
    fn least_solution_with_self_loop() {
        // s: stay, or go to {t: 1/3, z: 2/3}
        let mut b = ConcurrentGame::builder();
        b.state("s", &["stay", "go"], &["_"])
            .transition("s", "stay", "_", &[("s", one())])
            .transition("s", "go", "_", &[("t", ratio(1, 3)), ("z", ratio(2, 3))])
            .absorbing("t")
            .absorbing("z");
        let g = b.build().unwrap();
        let t = StateSet::from_indices(3, [1]);
        assert_eq!(max_reach_value(&g, &t).unwrap()[0], ratio(1, 3));
        assert_eq!(min_reach_value(&g, &t).unwrap()[0], zero());
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
    fn safety_under_selector() {
        let g = safety_pennies();
        let uni = Selector::uniform(&g, Player::One);
        let f = StateSet::from_indices(2, [0]);
        assert_eq!(safety_value_under(&g, &uni, &f).unwrap().values(), &[zero(), zero()]);
        let v = safety_value_under(&g, &uni, &StateSet::full(2)).unwrap();
        assert!(v.values().iter().all(|x| x.is_one()));
        let mut b = ConcurrentGame::builder();
        b.absorbing("ok");
        let g = b.build().unwrap();
        let v = safety_value_under(&g, &Selector::uniform(&g, Player::One), &StateSet::full(1)).unwrap();
        assert_eq!(v[0], one());
    }

    #[test]
    fn properness() {
        let mut b = ConcurrentGame::builder();
        b.state("s", &["loop", "go"], &["_"])
            .transition("s", "loop", "_", &[("s", one())])
            .transition("s", "go", "_", &[("t", one())])
            .absorbing("t");
        let g = b.build().unwrap();
        let t = StateSet::from_indices(2, [1]);
        let none = StateSet::empty(2);
        assert!(!is_proper(&g, &Selector::pure(Player::One, &[0, 0]), &t, &none).unwrap());
        assert!(is_proper(&g, &Selector::pure(Player::One, &[1, 0]), &t, &none).unwrap());
        assert!(is_proper(&g, &Selector::pure(Player::One, &[0, 0]), &StateSet::full(2), &none).unwrap());
    }
}
