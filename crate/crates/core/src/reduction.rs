//! The turn-based reduction of a concurrent game at a valuation, and lifting
//! of reduced-game strategies back to selectors.
//!
//! Base states keep the original indices `0..n`. Each base state is followed
//! (in index order) by its pair states, each pair state by the choice states
//! it introduces. Choice states depend only on `(s, A, b)` and are shared by
//! pair states with the same support `A`.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{usage, Result};
use crate::matrix::opt_sel_count;
use crate::model::{
    ConcurrentGame, Distribution, Owner, PartialSelector, Player, Selector, StateSet,
    TurnBasedGame, Valuation,
};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Base(usize),
    Pair { state: usize, a: Vec<usize>, b: Vec<usize> },
    Choice { state: usize, a: Vec<usize>, b: usize },
}

impl Origin {
    /// The original state this reduced state belongs to.
    pub fn state(&self) -> usize {
        match self {
            Origin::Base(s) => *s,
            Origin::Pair { state, .. } | Origin::Choice { state, .. } => *state,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedGame {
    pub game: TurnBasedGame,
    pub safe_set: StateSet,
    pub origin: Vec<Origin>,
    /// Stored optimal selector for every pair state (dense over player-1 moves).
    pub witness: Vec<Option<Vec<Rational>>>,
}

impl ReducedGame {
    pub fn base_count(&self) -> usize {
        self.origin
            .iter()
            .filter(|o| matches!(o, Origin::Base(_)))
            .count()
    }
}

fn render(moves: &[String], idx: &[usize]) -> String {
    let names: Vec<&str> = idx.iter().map(|&i| moves[i].as_str()).collect();
    format!("{{{}}}", names.join(","))
}

struct Namer {
    used: HashSet<String>,
}

impl Namer {
    fn fresh(&mut self, base: String) -> String {
        let mut id = base.clone();
        let mut k = 1;
        while self.used.contains(&id) {
            id = format!("{base}~{k}");
            k += 1;
        }
        self.used.insert(id.clone());
        id
    }
}

/// Builds the reduced turn-based game for `v` and safe set `F`.
pub fn tb_reduce(
    game: &ConcurrentGame,
    v: &Valuation,
    safe: &StateSet,
    budget: u128,
) -> Result<ReducedGame> {
    let n = game.num_states();
    if v.len() != n {
        return usage("valuation does not cover every state");
    }
    let mut ids: Vec<String> = game.states().to_vec();
    let mut namer = Namer {
        used: ids.iter().cloned().collect(),
    };
    let mut owner = vec![Owner::Player1; n];
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dist: Vec<Option<Distribution>> = vec![None; n];
    let mut origin: Vec<Origin> = (0..n).map(Origin::Base).collect();
    let mut witness: Vec<Option<Vec<Rational>>> = vec![None; n];

    for s in 0..n {
        let pairs = opt_sel_count(game, s, v, budget)?;
        let mut choice_index: HashMap<(Vec<usize>, usize), usize> = HashMap::new();
        for pair in pairs {
            let p = ids.len();
            ids.push(namer.fresh(format!(
                "{}#{}#{}",
                game.state_id(s),
                render(game.moves1(s), &pair.a),
                render(game.moves2(s), &pair.b)
            )));
            owner.push(Owner::Player2);
            edges.push(Vec::new());
            dist.push(None);
            origin.push(Origin::Pair {
                state: s,
                a: pair.a.clone(),
                b: pair.b.clone(),
            });
            witness.push(Some(pair.witness));
            edges[s].push(p);

            for &b in &pair.b {
                let key = (pair.a.clone(), b);
                let c = match choice_index.get(&key) {
                    Some(&c) => c,
                    None => {
                        let c = ids.len();
                        ids.push(namer.fresh(format!(
                            "{}#{}#{}",
                            game.state_id(s),
                            render(game.moves1(s), &pair.a),
                            game.moves2(s)[b]
                        )));
                        let succ: Vec<usize> = pair
                            .a
                            .iter()
                            .flat_map(|&a| game.transition(s, a, b).support())
                            .collect::<BTreeSet<_>>()
                            .into_iter()
                            .collect();
                        owner.push(Owner::Random);
                        dist.push(Some(Distribution::uniform(&succ)));
                        edges.push(succ);
                        origin.push(Origin::Choice {
                            state: s,
                            a: pair.a.clone(),
                            b,
                        });
                        witness.push(None);
                        choice_index.insert(key, c);
                        c
                    }
                };
                edges[p].push(c);
            }
        }
    }

    let safe_set = StateSet::from_mask(origin.iter().map(|o| safe.contains(o.state())).collect());
    let game = TurnBasedGame::new(ids, owner, edges, dist)?;
    Ok(ReducedGame {
        game,
        safe_set,
        origin,
        witness,
    })
}

/// Installs, at every `s` in `U`, the stored witness of the pair state that
/// `pi_bar` picks at `s`; elsewhere `gamma_base` is kept.
pub fn lift_strategy(
    reduced: &ReducedGame,
    pi_bar: &PartialSelector,
    gamma_base: &Selector,
    u: &StateSet,
) -> Result<Selector> {
    if gamma_base.player() != Player::One {
        return usage("lift_strategy needs a player-1 base selector");
    }
    let mut out = gamma_base.clone();
    for s in u.iter() {
        if !matches!(reduced.origin.get(s), Some(Origin::Base(_))) {
            return usage(format!("state index {s} is not a base state"));
        }
        let Some(e) = pi_bar.get(s) else {
            return usage(format!(
                "reduced strategy undefined at {}",
                reduced.game.state_id(s)
            ));
        };
        let Some(&p) = reduced.game.edges(s).get(e) else {
            return usage(format!("edge {e} out of range at {}", reduced.game.state_id(s)));
        };
        match (&reduced.origin[p], &reduced.witness[p]) {
            (Origin::Pair { state, .. }, Some(w)) if *state == s => {
                let sparse: Vec<(usize, Rational)> = w
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| !num_traits::Zero::is_zero(*x))
                    .map(|(a, x)| (a, x.clone()))
                    .collect();
                out.set(s, sparse);
            }
            _ => {
                return usage(format!(
                    "reduced strategy at {} does not choose a pair state",
                    reduced.game.state_id(s)
                ))
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{count_opt, is_opt_sel, DEFAULT_ENUM_BUDGET};
    use crate::rational::{one, ratio, zero};

    fn pennies() -> (ConcurrentGame, Valuation) {
        let mut b = ConcurrentGame::builder();
        b.state("s", &["h", "t_"], &["H", "T"])
            .transition("s", "h", "H", &[("win", one())])
            .transition("s", "t_", "T", &[("win", one())])
            .transition("s", "h", "T", &[("lose", one())])
            .transition("s", "t_", "H", &[("lose", one())])
            .absorbing("win")
            .absorbing("lose");
        (b.build().unwrap(), Valuation::new(vec![zero(), one(), zero()]).unwrap())
    }

    #[test]
    fn pennies_reduction() {
        let (g, v) = pennies();
        let r = tb_reduce(&g, &v, &StateSet::full(3), DEFAULT_ENUM_BUDGET).unwrap();
        let s_pairs = r.game.edges(0);
        assert_eq!(s_pairs.len(), 1);
        let p = s_pairs[0];
        assert_eq!(r.game.state_id(p), "s#{h,t_}#{H,T}");
        assert_eq!(r.game.owner(p), Owner::Player2);
        assert_eq!(r.game.edges(p).len(), 2);
        for &c in r.game.edges(p) {
            assert_eq!(r.game.owner(c), Owner::Random);
            assert_eq!(r.game.edges(c), &[1, 2]);
            assert_eq!(r.game.distribution(c).unwrap().prob(1), ratio(1, 2));
        }
        assert_eq!(r.game.state_id(r.game.edges(p)[0]), "s#{h,t_}#H");
        assert_eq!(r.safe_set.len(), r.game.num_states());
    }

    #[test]
    fn singleton_moves_give_one_pair() {
        let mut b = ConcurrentGame::builder();
        b.state("s", &["a"], &["b"])
            .transition("s", "a", "b", &[("t", ratio(1, 2)), ("s", ratio(1, 2))])
            .absorbing("t");
        let g = b.build().unwrap();
        let v = Valuation::new(vec![ratio(1, 2), one()]).unwrap();
        let r = tb_reduce(&g, &v, &StateSet::from_indices(2, [0]), DEFAULT_ENUM_BUDGET).unwrap();
        assert_eq!(r.game.num_states(), 2 + 2 * 2);
        let p = r.game.edges(0)[0];
        let c = r.game.edges(p)[0];
        assert_eq!(r.game.edges(c), &[0, 1]);
        assert!(r.safe_set.contains(p) && !r.safe_set.contains(1));
    }

    #[test]
    fn lifting_installs_witness() {
        let (g, v) = pennies();
        let r = tb_reduce(&g, &v, &StateSet::full(3), DEFAULT_ENUM_BUDGET).unwrap();
        let base = Selector::pure(Player::One, &[0, 0, 0]);
        let pi = PartialSelector::from_choices(vec![Some(0), None, None]);
        assert_eq!(lift_strategy(&r, &pi, &base, &StateSet::empty(3)).unwrap(), base);
        let lifted = lift_strategy(&r, &pi, &base, &StateSet::from_indices(3, [0])).unwrap();
        assert_eq!(lifted.at(0), &[(0, ratio(1, 2)), (1, ratio(1, 2))]);
        assert!(is_opt_sel(&g, 0, &v, &lifted).unwrap());
        assert_eq!(count_opt(&g, 0, &v, &lifted).unwrap(), vec![0, 1]);
        let undefined = PartialSelector::undefined(3);
        assert!(lift_strategy(&r, &undefined, &base, &StateSet::from_indices(3, [0])).is_err());
    }
}
